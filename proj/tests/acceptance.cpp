// Acceptance runner: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <set>
#include <sstream>
#include <string>

#include "azlab/checkpoint.hpp"
#include "azlab/decode.hpp"
#include "azlab/harness.hpp"
#include "azlab/heatmap.hpp"
#include "azlab/metrics.hpp"
#include "azlab/pipeline.hpp"
#include "azlab/zones.hpp"
#include "support/evaluator_cases.hpp"
#include "support/op_cases.hpp"
#include "support/span_oracle.hpp"
#include "support/svg_cells.hpp"

using namespace azlab;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool ok = true;
  std::string detail;
  void fail(const std::string& why) {
    if (ok) detail = why;
    ok = false;
  }
};

fs::path workdir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("azlab-acceptance-" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

ResultsTable fixture(const std::string& name) { return read_results_csv(fs::path(AZLAB_FIXTURES) / name); }

Outcome table2_statistics() {
  Outcome o;
  const auto sd = stddev_of_difference(fixture("table1.csv"), fixture("table2.csv"));
  const std::array<double, 5> reference{0.819, 0.152, 0.131, 1.405, 0.815};
  std::ostringstream got;
  for (std::size_t c = 0; c < 5; ++c) {
    got << (c ? "," : "") << format3(sd[c]);
    if (std::abs(sd[c] - reference[c]) > 1e-3) o.fail("column " + std::to_string(c) + " = " + std::to_string(sd[c]));
  }
  if (o.ok) o.detail = "stddev " + got.str();
  return o;
}

Outcome evaluator_oracle() {
  Outcome o;
  const auto cases = testing::evaluator_cases();
  if (cases.size() < 15) o.fail("only " + std::to_string(cases.size()) + " cases");
  for (const auto& c : cases) {
    if (exact_match(c.prediction, c.golds) != c.exact || std::abs(f1_score(c.prediction, c.golds) - c.f1) > 1e-12)
      o.fail("case '" + c.prediction + "'");
  }
  MetricsReport r;
  r.exact = r.has_ans_exact = 80.56764427625355;
  r.f1 = r.has_ans_f1 = 88.11721947565059;
  r.total = r.has_ans_total = 10570;
  const std::string want =
      R"({"exact": 80.56764427625355, "f1": 88.11721947565059, "total": 10570, "HasAns_exact": 80.56764427625355, "HasAns_f1": 88.11721947565059, "HasAns_total": 10570})";
  if (r.to_json() != want) o.fail("metrics JSON: " + r.to_json());
  if (o.ok) o.detail = std::to_string(cases.size()) + " cases exact, six-key JSON matches";
  return o;
}

Outcome zone_algebra() {
  Outcome o;
  Rng rng(2024);
  for (int trial = 0; trial < 200 && o.ok; ++trial) {
    const std::size_t q = rng.below(6), p = 1 + rng.below(10);
    const SequenceLayout l = SequenceLayout::make(q, p, q + p + 3 + rng.below(5));
    const std::size_t n = l.length();
    const Tensor all = zone_mask(l, Zone::All);
    std::vector<int> hits(n * n, 0);
    for (Zone z : kSweepZones) {
      if (z == Zone::All) continue;
      const Tensor m = zone_mask(l, z);
      for (std::size_t i = 0; i < n * n; ++i) hits[i] += is_dropped(m[i]) ? 1 : 0;
    }
    for (std::size_t i = 0; i < n * n; ++i) {
      if (hits[i] > 1) o.fail("zones overlap at trial " + std::to_string(trial));
      if ((hits[i] == 1) != is_dropped(all[i])) o.fail("union differs from ALL at trial " + std::to_string(trial));
    }
  }
  const ModelConfig cfg = testing::tiny_model_config();
  for (std::uint64_t seed = 1; seed <= 20 && o.ok; ++seed) {
    Rng r(seed);
    const ParameterSet params = init_parameters(cfg, seed);
    const Feature feat = testing::tiny_feature(r, 1 + r.below(3), 1 + r.below(3), cfg.max_positions, cfg.vocab_size);
    auto run = [&](const ZoneSpec& spec) {
      Tape tape(false);
      return encode(tape, params, cfg, feat, spec).value();
    };
    const Tensor baseline = run(ZoneSpec::identity());
    for (std::size_t layer = 0; layer < cfg.num_layers; ++layer)
      if (!(run({layer, Zone::None}) == baseline)) o.fail("NONE encode differs, seed " + std::to_string(seed));
    if (!(run({std::nullopt, Zone::None}) == baseline)) o.fail("every-layer NONE differs");
  }
  if (o.ok) o.detail = "200 layouts partition ALL; NONE encode bit-identical";
  return o;
}

Outcome gradient_checks() {
  Outcome o;
  double worst = 0.0;
  std::size_t checks = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    for (const auto& c : testing::make_op_cases(seed)) {
      const auto r = testing::grad_check(c.build, c.inputs);
      ++checks;
      worst = std::max(worst, r.max_rel_error);
      if (r.max_rel_error >= 1e-4) o.fail(c.name + " seed " + std::to_string(seed) + ": " + r.worst);
    }
  }
  if (o.ok) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "%zu checks, max rel err %.2e", checks, worst);
    o.detail = buf;
  }
  return o;
}

Outcome decode_oracle() {
  Outcome o;
  Rng rng(9001);
  for (int trial = 0; trial < 500; ++trial) {
    const auto d = testing::random_decode_instance(rng);
    const auto got = predict_span(d.start, d.end, d.feature, d.context, d.max_len, d.n_best);
    const auto want = testing::brute_force_spans(d.start, d.end, d.feature, d.context, d.max_len, d.n_best);
    if (got != want) o.fail("instance " + std::to_string(trial));
  }
  if (o.ok) o.detail = "500 instances agree";
  return o;
}

Outcome end_to_end_demo() {
  Outcome o;
  DemoConfig config;
  config.out_dir = workdir("demo");
  const DemoResult r = run_demo(config);
  const double em = r.runs.at(0).baseline.exact;
  if (em < 95.0) o.fail("held-out EM " + std::to_string(em));
  std::set<std::string> want, got;
  for (const auto& c : default_plan(config.model.num_layers, "").cells) want.insert(prediction_filename(c));
  for (const auto& e : fs::directory_iterator(config.out_dir / "prediction"))
    if (e.path().extension() == ".json" && e.path().filename() != "manifest.json") got.insert(e.path().filename().string());
  if (want.size() != config.model.num_layers * 5 || got != want) o.fail("prediction file set differs");
  const std::string csv = read_file(r.results_csv);
  if (csv.rfind("layer,all,q2,q2p,p2q,p2\n", 0) != 0) o.fail("results.csv header");
  if (o.ok) {
    std::ostringstream s;
    s << "EM " << em << ", " << got.size() << " prediction files, train " << format3(r.runs[0].train_seconds) << " s";
    o.detail = s.str();
  }
  return o;
}

Outcome figure_regression() {
  Outcome o;
  HeatmapSpec spec{.table = fixture("table1.csv"), .baseline = 80.567};
  const std::string svg = render_heatmap(spec);
  if (svg != render_heatmap(spec)) o.fail("two renders differ");
  const auto cells = testing::svg_cells(svg);
  if (cells.size() != 60) o.fail("expected 60 cells, found " + std::to_string(cells.size()));
  const auto p2 = cells.find({1, "p2"});
  if (p2 == cells.end()) {
    o.fail("no (P2, layer 1) cell");
    return o;
  }
  if (p2->second.fill != kDeltaNegative.hex()) o.fail("(P2, layer 1) fill " + p2->second.fill);
  if (std::abs(p2->second.delta + 13.585) > 1e-9) o.fail("(P2, layer 1) delta " + std::to_string(p2->second.delta));
  std::size_t zeros = 0;
  for (const auto& [key, cell] : cells) {
    if (key != p2->first && cell.fill == kDeltaNegative.hex()) o.fail("second extreme cell at layer " + std::to_string(key.first));
    if (cell.delta == 0.0) {
      ++zeros;
      if (cell.fill != "#FFFFFF") o.fail("zero-delta cell not white");
    }
  }
  // The table1 fixture has no cell at exactly 80.567, so also plant baseline-valued cells in the last row.
  HeatmapSpec planted = spec;
  planted.table.rows.back() = {80.567, 80.567, 80.567, 80.567, 80.567};
  for (const auto& [key, cell] : testing::svg_cells(render_heatmap(planted))) {
    if (cell.delta != 0.0) continue;
    ++zeros;
    if (cell.fill != "#FFFFFF") o.fail("planted zero-delta cell not white");
  }
  if (zeros == 0) o.fail("no zero-delta cells checked");
  if (o.ok) o.detail = "P2/layer 1 " + p2->second.fill + ", " + std::to_string(zeros) + " zero-delta cells white";
  return o;
}

Outcome determinism() {
  Outcome o;
  DemoConfig base;
  SyntheticConfig train_cfg = base.train_data, dev_cfg = base.dev_data;
  train_cfg.num_passages = 200;
  dev_cfg.num_passages = 40;
  const auto train_ex = load_squad(generate_keyvalue_squad(train_cfg));
  const auto dev_ex = load_squad(generate_keyvalue_squad(dev_cfg));
  const Vocab vocab = vocab_from_examples(train_ex, base.vocab_size, base.text.lowercase);
  TrainConfig tc = base.train;
  tc.max_steps = 40;
  tc.seed = 17;
  std::string ckpt_bytes[2], pred_bytes[2], masked_bytes[2];
  for (int rep = 0; rep < 2; ++rep) {
    const fs::path dir = workdir("determinism" + std::to_string(rep));
    const TrainResult tr = train(featurize_all(train_ex, vocab, base.text), base.model, base.text, vocab, tc);
    save_checkpoint(tr.checkpoint, dir / "model.azlb");
    const Checkpoint ckpt = load_checkpoint(dir / "model.azlb");
    const auto dev_features = featurize_all(dev_ex, ckpt.vocab, ckpt.text);
    write_file_atomic(dir / "predictions.json",
                      predictions_to_json(decode_predictions(ckpt, dev_ex, dev_features, ZoneSpec::identity())));
    write_file_atomic(dir / "masked.json",
                      predictions_to_json(decode_predictions(ckpt, dev_ex, dev_features, {1, Zone::P2Q})));
    ckpt_bytes[rep] = read_file(dir / "model.azlb");
    pred_bytes[rep] = read_file(dir / "predictions.json");
    masked_bytes[rep] = read_file(dir / "masked.json");
  }
  if (ckpt_bytes[0] != ckpt_bytes[1]) o.fail("checkpoints differ");
  if (pred_bytes[0] != pred_bytes[1] || masked_bytes[0] != masked_bytes[1]) o.fail("prediction files differ");
  if (o.ok) o.detail = "checkpoint (" + std::to_string(ckpt_bytes[0].size()) + " bytes) and predictions byte-identical";
  return o;
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    double budget_seconds;
    std::function<Outcome()> run;
  };
  const Criterion criteria[] = {
      {"table2-statistics", 1.0, table2_statistics},
      {"evaluator-oracle", 1.0, evaluator_oracle},
      {"zone-algebra", 10.0, zone_algebra},
      {"gradient-checks", 60.0, gradient_checks},
      {"span-decode-oracle", 10.0, decode_oracle},
      {"end-to-end-demo", 600.0, end_to_end_demo},
      {"figure-regression", 1.0, figure_regression},
      {"determinism", 600.0, determinism},
  };
  int failures = 0;
  int index = 0;
  for (const auto& c : criteria) {
    ++index;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.fail(std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (o.ok && secs >= c.budget_seconds) o.fail("took " + format3(secs) + " s, budget " + format3(c.budget_seconds) + " s");
    failures += o.ok ? 0 : 1;
    std::printf("%s %d %s (%.2f s): %s\n", o.ok ? "PASS" : "FAIL", index, c.name, secs, o.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
