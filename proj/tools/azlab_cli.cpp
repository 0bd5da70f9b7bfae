// azlab: train, decode, evaluate, collect, summarize and plot zone-masking
// experiments from the command line.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "azlab/checkpoint.hpp"
#include "azlab/harness.hpp"
#include "azlab/heatmap.hpp"
#include "azlab/metrics.hpp"
#include "azlab/pipeline.hpp"
#include "azlab/trainer.hpp"

namespace {

using namespace azlab;

constexpr int kUsageError = 2;

struct ModelFlags {
  ModelConfig model;
  FeaturizeConfig text;
  std::size_t vocab_size = 8000;
  bool cased = false;

  void add(CLI::App* cmd) {
    cmd->add_option("--layers", model.num_layers, "Encoder layers")->capture_default_str();
    cmd->add_option("--heads", model.num_heads, "Attention heads per layer")->capture_default_str();
    cmd->add_option("--d-model", model.d_model, "Hidden width")->capture_default_str();
    cmd->add_option("--d-ff", model.d_ff, "Feed-forward width")->capture_default_str();
    cmd->add_option("--max-seq-length", text.max_seq_length, "Tokens per window")->capture_default_str();
    cmd->add_option("--doc-stride", text.doc_stride, "Window start step")->capture_default_str();
    cmd->add_option("--max-query-length", text.max_query_length, "Question token budget")->capture_default_str();
    cmd->add_option("--vocab-size", vocab_size, "Vocabulary size including reserved tokens")->capture_default_str();
    cmd->add_flag("--cased", cased, "Keep letter case when tokenizing");
  }
  void finish() {
    text.lowercase = !cased;
    model.max_positions = text.max_seq_length;
  }
};

struct TrainFlags {
  TrainConfig train;
  std::size_t max_steps = 0;

  void add(CLI::App* cmd) {
    cmd->add_option("--epochs", train.epochs, "Training epochs")->capture_default_str();
    cmd->add_option("--batch-size", train.batch_size, "Examples per optimizer step")->capture_default_str();
    cmd->add_option("--learning-rate", train.learning_rate, "Adam step size")->capture_default_str();
    cmd->add_option("--seed", train.seed, "Initialization and shuffling seed")->capture_default_str();
    cmd->add_option("--max-steps", max_steps, "Stop after this many steps (0: no limit)");
  }
  void finish() {
    if (max_steps > 0) train.max_steps = max_steps;
  }
};

void print_line(const std::string& s) { std::cerr << s << std::endl; }

int run_train(const std::string& train_file, const std::string& out, const std::string& loss_csv, ModelFlags mf,
              TrainFlags tf) {
  mf.finish();
  tf.finish();
  const auto examples = load_squad_file(train_file);
  const Vocab vocab = vocab_from_examples(examples, mf.vocab_size, mf.text.lowercase);
  const auto features = featurize_all(examples, vocab, mf.text);
  const TrainResult r = train(features, mf.model, mf.text, vocab, tf.train);
  save_checkpoint(r.checkpoint, out);
  if (!loss_csv.empty()) write_loss_csv(r.loss_trace, loss_csv);
  std::fprintf(stderr, "trained %zu steps on %zu features; final loss %.6f; wrote %s\n",
               static_cast<std::size_t>(r.checkpoint.metadata.steps), features.size(),
               r.loss_trace.empty() ? 0.0 : r.loss_trace.back().loss, out.c_str());
  return 0;
}

struct DecodeFlags {
  std::string checkpoint;
  std::string dev_file;
  std::string out_dir = ".";
  std::string output;
  std::string mask_layer = "none";
  std::string mask_zone;
  bool sweep = false;
  bool resume = false;
  std::size_t workers = 1;
  DecodeOptions options;
};

int run_decode(const DecodeFlags& f) {
  const Checkpoint ckpt = load_checkpoint(f.checkpoint);
  const auto examples = load_squad_file(f.dev_file);
  const auto features = featurize_all(examples, ckpt.vocab, ckpt.text);
  if (f.sweep) {
    SweepPlan plan = default_plan(ckpt.model.num_layers, f.out_dir);
    plan.workers = f.workers;
    plan.resume = f.resume;
    const SweepReport report = run_ablation(ckpt, examples, features, plan, f.options);
    std::size_t failed = 0;
    for (const auto& c : report.cells) {
      if (!c.ok) {
        ++failed;
        std::fprintf(stderr, "cell %s failed: %s\n", c.file.c_str(), c.error.c_str());
      }
    }
    std::fprintf(stderr, "sweep: %zu cells, %zu failed, written to %s\n", report.cells.size(), failed,
                 f.out_dir.c_str());
    return failed == 0 ? 0 : 1;
  }
  ZoneSpec spec;
  if (!f.mask_zone.empty()) {
    spec.zone = parse_zone(f.mask_zone);
    spec.layer = parse_mask_layer(f.mask_layer);
  }
  const PredictionSet preds = decode_predictions(ckpt, examples, features, spec, f.options);
  std::filesystem::path out = f.output;
  if (out.empty()) out = std::filesystem::path(f.out_dir) / (f.mask_zone.empty() ? "predictions.json" : prediction_filename(spec));
  if (out.has_parent_path()) std::filesystem::create_directories(out.parent_path());
  write_file_atomic(out, predictions_to_json(preds));
  std::fprintf(stderr, "wrote %zu predictions to %s\n", preds.size(), out.string().c_str());
  return 0;
}

int run_stats(const std::vector<std::string>& files, const std::string& average_out, bool use_f1) {
  const Metric metric = use_f1 ? Metric::F1 : Metric::Exact;
  if (!average_out.empty()) {
    std::vector<ResultsTable> tables;
    for (const auto& f : files) tables.push_back(read_results_csv(f, metric));
    write_results_csv(average_runs(tables), average_out);
    std::fprintf(stderr, "averaged %zu tables into %s\n", tables.size(), average_out.c_str());
    return 0;
  }
  if (files.size() != 2) throw std::invalid_argument("stats needs exactly two results files (or --average)");
  const auto sd = stddev_of_difference(read_results_csv(files[0], metric), read_results_csv(files[1], metric));
  std::cout << kResultsHeader.substr(kResultsHeader.find(',') + 1) << "\n";
  for (std::size_t c = 0; c < sd.size(); ++c) std::cout << (c ? "," : "") << format3(sd[c]);
  std::cout << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Attention-zone masking experiments for span-extraction reading comprehension", "azlab"};
  app.set_config("--config", "", "key=value file supplying option defaults ([subcommand] sections)");
  app.require_subcommand(1);
  app.fallthrough(false);

  // train
  std::string train_file, train_out = "model.azlb", loss_csv;
  ModelFlags model_flags;
  TrainFlags train_flags;
  auto* train_cmd = app.add_subcommand("train", "Fine-tune a fresh model on a SQuAD v1.1 training file");
  train_cmd->add_option("--train-file", train_file, "SQuAD v1.1 JSON")->required();
  train_cmd->add_option("--out", train_out, "Checkpoint to write")->capture_default_str();
  train_cmd->add_option("--loss-csv", loss_csv, "Write the step,loss trace here");
  model_flags.add(train_cmd);
  train_flags.add(train_cmd);

  // decode
  DecodeFlags dec;
  auto* decode_cmd = app.add_subcommand("decode", "Predict answers, optionally with a masked zone or a full sweep");
  decode_cmd->add_option("--checkpoint", dec.checkpoint, "Trained checkpoint")->required();
  decode_cmd->add_option("--dev-file", dec.dev_file, "SQuAD v1.1 JSON to answer")->required();
  decode_cmd->add_option("--mask-layer", dec.mask_layer, "0-based layer, or none for every layer")->capture_default_str();
  decode_cmd->add_option("--mask-zone", dec.mask_zone, "q2, q2p, p2q, p2 or all")
      ->check(CLI::IsMember({"q2", "q2p", "p2q", "p2", "all", "none"}, CLI::ignore_case));
  decode_cmd->add_flag("--sweep", dec.sweep, "Decode every layer x zone cell");
  decode_cmd->add_flag("--resume", dec.resume, "With --sweep, skip cells already finished");
  decode_cmd->add_option("--workers", dec.workers, "Parallel sweep cells")->capture_default_str()->check(CLI::PositiveNumber);
  decode_cmd->add_option("--out-dir", dec.out_dir, "Output directory")->capture_default_str();
  decode_cmd->add_option("--output", dec.output, "Prediction file for a single decode");
  decode_cmd->add_option("--max-answer-length", dec.options.max_answer_length)->capture_default_str();
  decode_cmd->add_option("--n-best", dec.options.n_best)->capture_default_str();

  // eval
  std::string eval_data, eval_preds;
  auto* eval_cmd = app.add_subcommand("eval", "Score predictions; prints the metrics JSON");
  eval_cmd->add_option("dataset", eval_data, "SQuAD v1.1 JSON")->required();
  eval_cmd->add_option("predictions", eval_preds, "predictions.json")->required();

  // collect
  std::string collect_dir, collect_out, collect_data;
  bool collect_f1 = false;
  std::size_t collect_layers = 0;
  auto* collect_cmd = app.add_subcommand("collect", "Score a sweep directory into results.csv");
  collect_cmd->add_option("prediction_dir", collect_dir, "Directory of predictions_layer*_*.json")->required();
  collect_cmd->add_option("results", collect_out, "CSV to write")->required();
  collect_cmd->add_option("--dataset", collect_data, "SQuAD v1.1 JSON the predictions answer")->required();
  collect_cmd->add_flag("--use-f1", collect_f1, "Report F1 instead of exact match");
  collect_cmd->add_option("--layers", collect_layers, "Expected layer count (default: inferred)");

  // stats
  std::vector<std::string> stats_files;
  std::string average_out;
  bool stats_f1 = false;
  auto* stats_cmd = app.add_subcommand("stats", "Std-dev of per-layer differences, or --average of several runs");
  stats_cmd->add_option("results", stats_files, "results.csv files")->required();
  stats_cmd->add_option("--average", average_out, "Write the mean of all given tables here");
  stats_cmd->add_flag("--use-f1", stats_f1, "Tag tables as F1");

  // visualize
  std::string vis_in, vis_out, vis_title;
  double vis_baseline = 0.0;
  double vis_bound = 0.0;
  bool no_annotate = false, layers_as_rows = false;
  auto* vis_cmd = app.add_subcommand("visualize", "Render the layer x zone delta heatmap as SVG");
  vis_cmd->add_option("results", vis_in, "results.csv")->required();
  vis_cmd->add_option("baseline", vis_baseline, "Unmasked score")->required()->check(CLI::Range(0.0, 100.0));
  vis_cmd->add_option("output", vis_out, "SVG file to write")->required();
  vis_cmd->add_option("--scale-bound", vis_bound, "Fixed colour scale bound (default: largest |delta|, at least 1)");
  vis_cmd->add_flag("--no-annotate", no_annotate, "Omit cell values");
  vis_cmd->add_flag("--layers-as-rows", layers_as_rows, "Transpose the grid");
  vis_cmd->add_option("--title", vis_title);

  // demo
  DemoConfig demo;
  std::string demo_dir = demo.out_dir.string();
  std::vector<std::uint64_t> demo_seeds = demo.seeds;
  auto* demo_cmd = app.add_subcommand("demo", "Synthetic key-value corpus: train, sweep, collect and plot");
  demo_cmd->add_option("--out-dir", demo_dir, "Output directory")->capture_default_str();
  demo_cmd->add_option("--seeds", demo_seeds, "One run per seed")->capture_default_str()->delimiter(',');
  demo_cmd->add_option("--workers", demo.workers, "Parallel sweep cells")->capture_default_str()->check(CLI::PositiveNumber);
  demo_cmd->add_flag("--use-f1", demo.use_f1, "Collect F1 instead of exact match");
  demo_cmd->add_option("--epochs", demo.train.epochs)->capture_default_str();
  demo_cmd->add_option("--learning-rate", demo.train.learning_rate)->capture_default_str();
  demo_cmd->add_option("--train-passages", demo.train_data.num_passages)->capture_default_str();
  demo_cmd->add_option("--dev-passages", demo.dev_data.num_passages)->capture_default_str();
  demo_cmd->add_option("--layers", demo.model.num_layers)->capture_default_str();

  if (argc > 1 && argv[1][0] != '-') {
    const std::string name = argv[1];
    bool known = false;
    for (const auto* sub : app.get_subcommands({})) known = known || sub->get_name() == name;
    if (!known) {
      std::cerr << "azlab: unknown subcommand '" << name << "'\n\n" << app.help();
      return kUsageError;
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "azlab: " << e.what() << "\n\n" << app.help();
    return kUsageError;
  }

  try {
    if (*train_cmd) return run_train(train_file, train_out, loss_csv, model_flags, train_flags);
    if (*decode_cmd) return run_decode(dec);
    if (*eval_cmd) {
      const auto data = load_squad_file(eval_data);
      std::cout << evaluate(data, read_predictions(eval_preds)).to_json() << std::endl;
      return 0;
    }
    if (*collect_cmd) {
      const auto data = load_squad_file(collect_data);
      const auto table = collect_results(collect_dir, data, collect_f1,
                                         collect_layers ? std::optional<std::size_t>{collect_layers} : std::nullopt);
      write_results_csv(table, collect_out);
      std::cout << results_to_csv(table);
      return 0;
    }
    if (*stats_cmd) return run_stats(stats_files, average_out, stats_f1);
    if (*vis_cmd) {
      HeatmapSpec spec;
      spec.table = read_results_csv(vis_in);
      spec.baseline = vis_baseline;
      if (vis_bound > 0.0) spec.scale_bound = vis_bound;
      spec.annotate = !no_annotate;
      spec.zones_as_rows = !layers_as_rows;
      spec.title = vis_title;
      write_file_atomic(vis_out, render_heatmap(spec));
      std::fprintf(stderr, "wrote %s\n", vis_out.c_str());
      return 0;
    }
    if (*demo_cmd) {
      demo.out_dir = demo_dir;
      demo.seeds = demo_seeds;
      demo.log = print_line;
      const DemoResult r = run_demo(demo);
      std::cout << results_to_csv(r.table);
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "azlab: error: " << e.what() << std::endl;
    return 1;
  }
  return kUsageError;
}
