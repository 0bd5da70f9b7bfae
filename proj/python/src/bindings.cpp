#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "azlab/checkpoint.hpp"
#include "azlab/harness.hpp"
#include "azlab/heatmap.hpp"
#include "azlab/metrics.hpp"
#include "azlab/pipeline.hpp"
#include "azlab/trainer.hpp"
#include "azlab/zones.hpp"

namespace py = pybind11;
using namespace azlab;

namespace {

using Rows = std::vector<std::array<double, 5>>;

ResultsTable as_table(const Rows& rows, bool use_f1 = false) { return {use_f1 ? Metric::F1 : Metric::Exact, rows}; }

ZoneSpec make_spec(std::optional<std::size_t> layer, std::optional<std::string> zone) {
  ZoneSpec spec;
  if (zone) {
    spec.zone = parse_zone(*zone);
    spec.layer = layer;
  }
  return spec;
}

py::dict report_dict(const MetricsReport& r) {
  py::dict d;
  d["exact"] = r.exact;
  d["f1"] = r.f1;
  d["total"] = r.total;
  d["HasAns_exact"] = r.has_ans_exact;
  d["HasAns_f1"] = r.has_ans_f1;
  d["HasAns_total"] = r.has_ans_total;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "C++ core of azlab";

  py::enum_<Zone>(m, "Zone")
      .value("Q2", Zone::Q2)
      .value("Q2P", Zone::Q2P)
      .value("P2Q", Zone::P2Q)
      .value("P2", Zone::P2)
      .value("ALL", Zone::All)
      .value("NONE", Zone::None);

  m.def("normalize_answer", [](const std::string& s) { return normalize_answer(s); });
  m.def("exact_match", [](const std::string& pred, const std::vector<std::string>& golds) { return exact_match(pred, golds); },
        py::arg("prediction"), py::arg("golds"));
  m.def("f1_score", [](const std::string& pred, const std::vector<std::string>& golds) { return f1_score(pred, golds); },
        py::arg("prediction"), py::arg("golds"));
  m.def(
      "evaluate",
      [](const std::filesystem::path& dataset, const PredictionSet& predictions) {
        return report_dict(evaluate(load_squad_file(dataset), predictions));
      },
      py::arg("dataset"), py::arg("predictions"), "Score a qas_id -> answer mapping against a SQuAD v1.1 file.");

  m.def("read_results", [](const std::filesystem::path& p) { return read_results_csv(p).rows; });
  m.def("results_to_csv", [](const Rows& rows) { return results_to_csv(as_table(rows)); });
  m.def("average_runs", [](const std::vector<Rows>& runs) {
    std::vector<ResultsTable> tables;
    for (const auto& r : runs) tables.push_back(as_table(r));
    return average_runs(tables).rows;
  });
  m.def("stddev_of_difference", [](const Rows& a, const Rows& b) { return stddev_of_difference(as_table(a), as_table(b)); });
  m.def("prediction_filename", [](std::optional<std::size_t> layer, const std::string& zone) {
    return prediction_filename(ZoneSpec{layer, parse_zone(zone)});
  }, py::arg("layer"), py::arg("zone"));

  m.def(
      "zone_mask",
      [](std::size_t question_len, std::size_t passage_len, std::size_t max_seq_length, const std::string& zone) {
        const SequenceLayout layout = SequenceLayout::make(question_len, passage_len, max_seq_length);
        const Tensor mask = zone_mask(layout, parse_zone(zone));
        std::vector<std::vector<bool>> out(layout.length(), std::vector<bool>(layout.length()));
        for (std::size_t r = 0; r < layout.length(); ++r)
          for (std::size_t c = 0; c < layout.length(); ++c) out[r][c] = is_dropped(mask.at(r, c));
        return out;
      },
      py::arg("question_len"), py::arg("passage_len"), py::arg("max_seq_length"), py::arg("zone"),
      "Boolean matrix of the cells the zone drops.");

  m.def(
      "render_heatmap",
      [](const Rows& rows, double baseline, std::optional<double> scale_bound, bool annotate, bool zones_as_rows,
         const std::string& title) {
        HeatmapSpec spec{as_table(rows), baseline, scale_bound, annotate, zones_as_rows, title};
        return render_heatmap(spec);
      },
      py::arg("rows"), py::arg("baseline"), py::arg("scale_bound") = py::none(), py::arg("annotate") = true,
      py::arg("zones_as_rows") = true, py::arg("title") = "");

  m.def(
      "train",
      [](const std::filesystem::path& train_file, const std::filesystem::path& out, std::size_t layers, std::size_t heads,
         std::size_t d_model, std::size_t d_ff, std::size_t max_seq_length, std::size_t doc_stride,
         std::size_t max_query_length, std::size_t vocab_size, double epochs, std::size_t batch_size,
         double learning_rate, std::uint64_t seed, std::optional<std::size_t> max_steps) {
        py::gil_scoped_release release;
        const auto examples = load_squad_file(train_file);
        const FeaturizeConfig text{max_seq_length, doc_stride, max_query_length, true};
        const Vocab vocab = vocab_from_examples(examples, vocab_size, text.lowercase);
        const ModelConfig model{layers, heads, d_model, d_ff, 0, max_seq_length};
        const TrainResult r = train(featurize_all(examples, vocab, text), model, text, vocab,
                                    TrainConfig{epochs, batch_size, learning_rate, seed, max_steps});
        save_checkpoint(r.checkpoint, out);
        std::vector<double> losses;
        for (const auto& p : r.loss_trace) losses.push_back(p.loss);
        return losses;
      },
      py::arg("train_file"), py::arg("out"), py::kw_only(), py::arg("layers") = 4, py::arg("heads") = 4,
      py::arg("d_model") = 128, py::arg("d_ff") = 512, py::arg("max_seq_length") = 128, py::arg("doc_stride") = 32,
      py::arg("max_query_length") = 64, py::arg("vocab_size") = 8000, py::arg("epochs") = 3.0,
      py::arg("batch_size") = 16, py::arg("learning_rate") = 3e-5, py::arg("seed") = 0,
      py::arg("max_steps") = py::none(), "Train a fresh model, write the checkpoint, return the loss trace.");

  m.def(
      "decode",
      [](const std::filesystem::path& checkpoint, const std::filesystem::path& dev_file,
         std::optional<std::size_t> mask_layer, std::optional<std::string> mask_zone) {
        py::gil_scoped_release release;
        const Checkpoint ckpt = load_checkpoint(checkpoint);
        const auto examples = load_squad_file(dev_file);
        return decode_predictions(ckpt, examples, featurize_all(examples, ckpt.vocab, ckpt.text),
                                  make_spec(mask_layer, mask_zone));
      },
      py::arg("checkpoint"), py::arg("dev_file"), py::arg("mask_layer") = py::none(), py::arg("mask_zone") = py::none(),
      "Predictions (qas_id -> text); mask_layer None with a zone masks every layer.");

  m.def(
      "sweep",
      [](const std::filesystem::path& checkpoint, const std::filesystem::path& dev_file,
         const std::filesystem::path& out_dir, std::size_t workers) {
        py::gil_scoped_release release;
        const Checkpoint ckpt = load_checkpoint(checkpoint);
        const auto examples = load_squad_file(dev_file);
        SweepPlan plan = default_plan(ckpt.model.num_layers, out_dir);
        plan.workers = workers;
        const SweepReport report =
            run_ablation(ckpt, examples, featurize_all(examples, ckpt.vocab, ckpt.text), plan);
        std::vector<std::pair<std::string, bool>> out;
        for (const auto& c : report.cells) out.emplace_back(c.file, c.ok);
        return out;
      },
      py::arg("checkpoint"), py::arg("dev_file"), py::arg("out_dir"), py::arg("workers") = 1);

  m.def(
      "collect_results",
      [](const std::filesystem::path& dir, const std::filesystem::path& dataset, bool use_f1) {
        return collect_results(dir, load_squad_file(dataset), use_f1).rows;
      },
      py::arg("prediction_dir"), py::arg("dataset"), py::arg("use_f1") = false);
}
