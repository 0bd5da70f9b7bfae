#include "azlab/pipeline.hpp"

#include <chrono>
#include <stdexcept>

namespace azlab {

Vocab vocab_from_examples(std::span<const SquadExample> examples, std::size_t max_size, bool lowercase) {
  std::vector<std::string> corpus;
  corpus.reserve(examples.size() * 2);
  for (const auto& ex : examples) {
    corpus.push_back(ex.question);
    corpus.push_back(ex.context);
  }
  return build_vocab(corpus, max_size, lowercase);
}

DemoResult run_demo(const DemoConfig& config) {
  if (config.seeds.empty()) throw std::invalid_argument("demo: at least one seed is required");
  auto log = [&](const std::string& msg) {
    if (config.log) config.log(msg);
  };
  std::filesystem::create_directories(config.out_dir);
  const auto train_json = generate_keyvalue_squad(config.train_data);
  const auto dev_json = generate_keyvalue_squad(config.dev_data);
  write_file_atomic(config.out_dir / "train.json", train_json.dump() + "\n");
  write_file_atomic(config.out_dir / "dev.json", dev_json.dump() + "\n");
  const auto train_examples = load_squad(train_json);
  const auto dev_examples = load_squad(dev_json);

  const Vocab vocab = vocab_from_examples(train_examples, config.vocab_size, config.text.lowercase);
  const auto train_features = featurize_all(train_examples, vocab, config.text);
  const auto dev_features = featurize_all(dev_examples, vocab, config.text);
  log("corpus: " + std::to_string(train_examples.size()) + " train / " + std::to_string(dev_examples.size()) +
      " dev questions, vocabulary " + std::to_string(vocab.size()));

  DemoResult result;
  std::vector<ResultsTable> tables;
  for (std::uint64_t seed : config.seeds) {
    DemoRun run;
    run.seed = seed;
    run.dir = config.seeds.size() == 1 ? config.out_dir : config.out_dir / ("seed" + std::to_string(seed));
    std::filesystem::create_directories(run.dir);

    TrainConfig tc = config.train;
    tc.seed = seed;
    const auto t0 = std::chrono::steady_clock::now();
    TrainResult trained = train(train_features, config.model, config.text, vocab, tc);
    run.train_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    run.loss_trace = trained.loss_trace;
    save_checkpoint(trained.checkpoint, run.dir / "checkpoint.azlb");
    write_loss_csv(trained.loss_trace, run.dir / "loss.csv");
    log("seed " + std::to_string(seed) + ": trained " + std::to_string(trained.checkpoint.metadata.steps) +
        " steps in " + format3(run.train_seconds) + " s, final loss " +
        format3(trained.loss_trace.empty() ? 0.0 : trained.loss_trace.back().loss));

    const PredictionSet baseline =
        decode_predictions(trained.checkpoint, dev_examples, dev_features, ZoneSpec::identity());
    write_file_atomic(run.dir / "predictions.json", predictions_to_json(baseline));
    run.baseline = evaluate(dev_examples, baseline);
    write_file_atomic(run.dir / "metrics.json", run.baseline.to_json() + "\n");
    log("seed " + std::to_string(seed) + ": baseline " + run.baseline.to_json());

    SweepPlan plan = default_plan(config.model.num_layers, run.dir / "prediction");
    plan.workers = config.workers;
    const SweepReport report = run_ablation(trained.checkpoint, dev_examples, dev_features, plan);
    if (!report.all_ok()) {
      for (const auto& c : report.cells)
        if (!c.ok) throw std::runtime_error("demo: sweep cell " + c.file + " failed: " + c.error);
    }
    run.table = collect_results(plan.output_dir, dev_examples, config.use_f1, config.model.num_layers);
    write_results_csv(run.table, run.dir / "results.csv");
    tables.push_back(run.table);
    result.baseline_score += config.use_f1 ? run.baseline.f1 : run.baseline.exact;
    result.runs.push_back(std::move(run));
  }
  result.baseline_score /= static_cast<double>(config.seeds.size());
  result.table = average_runs(tables);
  result.results_csv = config.out_dir / "results.csv";
  write_results_csv(result.table, result.results_csv);

  HeatmapSpec hs;
  hs.table = result.table;
  hs.baseline = round3(result.baseline_score);
  result.heatmap_svg = config.out_dir / "heatmap.svg";
  write_file_atomic(result.heatmap_svg, render_heatmap(hs));
  log("wrote " + result.results_csv.string() + " and " + result.heatmap_svg.string());
  return result;
}

}  // namespace azlab
