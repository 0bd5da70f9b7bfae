#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include "azlab/harness.hpp"
#include "azlab/pipeline.hpp"
#include "azlab/random.hpp"
#include "azlab/synthetic.hpp"
#include "azlab/trainer.hpp"
#include "doctest.h"

using namespace azlab;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("azlab-harness-" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

ResultsTable fixture(const std::string& name) { return read_results_csv(fs::path(AZLAB_FIXTURES) / name); }

struct SweepFixture {
  std::vector<SquadExample> examples;
  std::vector<Feature> features;
  Checkpoint ckpt;

  SweepFixture() {
    examples = load_squad(generate_keyvalue_squad({.num_passages = 12, .num_keys = 6, .num_values = 6, .min_pairs = 2, .max_pairs = 3, .seed = 9}));
    const Vocab vocab = vocab_from_examples(examples, 100, true);
    const ModelConfig model{.num_layers = 2, .num_heads = 2, .d_model = 8, .d_ff = 16, .max_positions = 16};
    // A short window forces several windows per question.
    const FeaturizeConfig text{.max_seq_length = 16, .doc_stride = 4, .max_query_length = 6};
    ckpt = initial_checkpoint(model, text, vocab, 5);
    ckpt.model.vocab_size = vocab.size();
    Rng rng(5);
    for (auto& [name, t] : ckpt.params)
      for (double& v : t.data()) v += 0.3 * (2.0 * rng.uniform() - 1.0);
    features = featurize_all(examples, vocab, text);
  }
};

std::string slurp(const fs::path& p) { return read_file(p); }

}  // namespace

TEST_CASE("stddev of the reference table differences") {
  const auto sd = stddev_of_difference(fixture("table1.csv"), fixture("table2.csv"));
  const std::array<double, 5> reference{0.819, 0.152, 0.131, 1.405, 0.815};
  for (std::size_t c = 0; c < 5; ++c) CHECK(std::abs(sd[c] - reference[c]) <= 1e-3);
}

TEST_CASE("stddev_of_difference properties") {
  const ResultsTable a = fixture("table1.csv"), b = fixture("table2.csv");
  CHECK(stddev_of_difference(a, a) == std::array<double, 5>{});
  const auto ab = stddev_of_difference(a, b);
  const auto ba = stddev_of_difference(b, a);
  for (std::size_t c = 0; c < 5; ++c) CHECK(ab[c] == doctest::Approx(ba[c]).epsilon(1e-14));
  ResultsTable shifted = b;
  for (auto& row : shifted.rows) row[3] += 7.25;
  CHECK(stddev_of_difference(a, shifted)[3] == doctest::Approx(ab[3]).epsilon(1e-12));
  ResultsTable short_table = b;
  short_table.rows.pop_back();
  CHECK_THROWS_AS(stddev_of_difference(a, short_table), std::invalid_argument);
}

TEST_CASE("average_runs examples") {
  const ResultsTable t = fixture("table1.csv");
  const ResultsTable twice[] = {t, t};
  CHECK(average_runs(twice) == t);

  ResultsTable x{Metric::Exact, {{80.0, 1, 2, 3, 4}}}, y{Metric::Exact, {{81.0, 1, 2, 3, 4}}};
  const ResultsTable pair[] = {x, y};
  CHECK(average_runs(pair).rows[0][0] == 80.5);

  Rng rng(2);
  std::vector<ResultsTable> five(5, ResultsTable{Metric::F1, std::vector<std::array<double, 5>>(4)});
  for (auto& table : five)
    for (auto& row : table.rows)
      for (double& v : row) v = round3(100.0 * rng.uniform());
  const ResultsTable mean = average_runs(five);
  for (std::size_t l = 0; l < 4; ++l) {
    for (std::size_t c = 0; c < 5; ++c) {
      double s = 0.0;
      for (int k = 0; k < 5; ++k) s += five[static_cast<std::size_t>(k)].rows[l][c];
      CHECK(std::abs(mean.rows[l][c] - s / 5.0) <= 0.0005 + 1e-12);
    }
  }
  CHECK(mean.metric == Metric::F1);
  const ResultsTable mixed[] = {t, ResultsTable{Metric::F1, t.rows}};
  CHECK_THROWS_AS(average_runs(mixed), std::invalid_argument);
  const ResultsTable ragged[] = {t, x};
  CHECK_THROWS_AS(average_runs(ragged), std::invalid_argument);
}

TEST_CASE("results CSV format") {
  const ResultsTable t{Metric::Exact, {{80.114, 80.36, 80.0, 0.0, 100.0}}};
  CHECK(results_to_csv(t) == "layer,all,q2,q2p,p2q,p2\n1,80.114,80.360,80.000,0.000,100.000\n");
  CHECK(parse_results_csv(results_to_csv(t)) == t);
  CHECK(format3(0.0005) == "0.001");  // 0.0005 is slightly above the tie in binary
  CHECK(format3(2.0625) == "2.062");  // exact binary tie rounds to even
  CHECK_THROWS(parse_results_csv("layer,all,q2,q2p,p2q\n1,1,2,3,4\n"));
  CHECK_THROWS(parse_results_csv("layer,all,q2,q2p,p2q,p2\n2,1,2,3,4,5\n"));
  CHECK_THROWS(parse_results_csv("layer,all,q2,q2p,p2q,p2\n1,1,2,3,4,101\n"));
  CHECK_THROWS(parse_results_csv("layer,all,q2,q2p,p2q,p2\n"));
}

TEST_CASE("prediction file names") {
  CHECK(prediction_filename({0, Zone::Q2}) == "predictions_layer0_q2.json");
  CHECK(prediction_filename({11, Zone::P2}) == "predictions_layer11_p2.json");
  CHECK(prediction_filename({std::nullopt, Zone::All}) == "predictions_layerall_all.json");
  const SweepPlan plan = default_plan(12, "x");
  CHECK(plan.cells.size() == 60);
  std::set<std::string> names;
  for (const auto& c : plan.cells) names.insert(prediction_filename(c));
  CHECK(names.size() == 60);
}

TEST_CASE("sweep over a two-layer model") {
  const SweepFixture f;
  const fs::path dir = scratch_dir("sweep");
  SweepPlan plan = default_plan(2, dir / "serial");
  plan.cells.push_back({std::nullopt, Zone::None});
  const SweepReport report = run_ablation(f.ckpt, f.examples, f.features, plan);
  CHECK(report.all_ok());

  std::set<std::string> files;
  for (const auto& e : fs::directory_iterator(dir / "serial")) files.insert(e.path().filename().string());
  const std::set<std::string> expected{
      "manifest.json",         "predictions_layer0_all.json", "predictions_layer0_q2.json",
      "predictions_layer0_q2p.json", "predictions_layer0_p2q.json", "predictions_layer0_p2.json",
      "predictions_layer1_all.json", "predictions_layer1_q2.json",  "predictions_layer1_q2p.json",
      "predictions_layer1_p2q.json", "predictions_layer1_p2.json",  "predictions_layerall_none.json"};
  CHECK(files == expected);

  SUBCASE("NONE cell equals the baseline decode") {
    const PredictionSet baseline = decode_predictions(f.ckpt, f.examples, f.features, ZoneSpec::identity());
    CHECK(slurp(dir / "serial" / "predictions_layerall_none.json") == predictions_to_json(baseline));
    CHECK(baseline.size() == f.examples.size());
  }
  SUBCASE("reruns, parallel workers and lone cells give byte-identical files") {
    SweepPlan again = plan;
    again.output_dir = dir / "parallel";
    again.workers = 3;
    CHECK(run_ablation(f.ckpt, f.examples, f.features, again).all_ok());
    SweepPlan lone{{ZoneSpec{1, Zone::P2Q}}, dir / "lone", 1, false};
    CHECK(run_ablation(f.ckpt, f.examples, f.features, lone).all_ok());
    for (const auto& c : plan.cells) {
      const std::string name = prediction_filename(c);
      CHECK(slurp(dir / "serial" / name) == slurp(dir / "parallel" / name));
    }
    CHECK(slurp(dir / "lone" / "predictions_layer1_p2q.json") == slurp(dir / "serial" / "predictions_layer1_p2q.json"));
  }
  SUBCASE("manifest records every cell") {
    const auto manifest = nlohmann::json::parse(slurp(dir / "serial" / "manifest.json"));
    REQUIRE(manifest["cells"].size() == 11);
    CHECK(manifest["cells"][0]["file"] == "predictions_layer0_all.json");
    CHECK(manifest["cells"][0]["status"] == "done");
    CHECK(manifest["cells"][10]["layer"] == "all");
    CHECK(manifest["cells"][0]["metrics"].contains("exact"));
  }
  SUBCASE("resume skips finished cells") {
    SweepPlan resume = plan;
    resume.resume = true;
    const SweepReport r = run_ablation(f.ckpt, f.examples, f.features, resume);
    for (const auto& c : r.cells) CHECK(c.skipped);
  }
  SUBCASE("a failing cell is recorded and the rest still run") {
    SweepPlan bad{{ZoneSpec{0, Zone::Q2}, ZoneSpec{7, Zone::Q2}}, dir / "bad", 1, false};
    const SweepReport r = run_ablation(f.ckpt, f.examples, f.features, bad);
    CHECK(r.cells[0].ok);
    CHECK_FALSE(r.cells[1].ok);
    CHECK_FALSE(r.cells[1].error.empty());
    const auto manifest = nlohmann::json::parse(slurp(dir / "bad" / "manifest.json"));
    CHECK(manifest["cells"][1]["status"] == "failed");
  }
  SUBCASE("an unwritable output directory is rejected") {
    std::ofstream(dir / "plainfile") << "x";
    SweepPlan blocked{{ZoneSpec{0, Zone::Q2}}, dir / "plainfile" / "sub", 1, false};
    CHECK_THROWS_AS(run_ablation(f.ckpt, f.examples, f.features, blocked), std::runtime_error);
  }
  SUBCASE("collect_results scores every cell and EM never exceeds F1") {
    const ResultsTable em = collect_results(dir / "serial", f.examples, false);
    const ResultsTable f1 = collect_results(dir / "serial", f.examples, true);
    REQUIRE(em.num_layers() == 2);
    CHECK(em.metric == Metric::Exact);
    CHECK(f1.metric == Metric::F1);
    for (std::size_t l = 0; l < 2; ++l)
      for (std::size_t c = 0; c < 5; ++c) CHECK(em.rows[l][c] <= f1.rows[l][c]);
    fs::remove(dir / "serial" / "predictions_layer1_q2p.json");
    try {
      collect_results(dir / "serial", f.examples, false);
      FAIL("expected an exception");
    } catch (const std::invalid_argument& e) {
      CHECK(std::string(e.what()).find("layer 1 zone q2p") != std::string::npos);
    }
  }
  fs::remove_all(dir);
}

TEST_CASE("collect_results formats hand-built prediction files") {
  const fs::path dir = scratch_dir("collect");
  std::vector<SquadExample> data;
  for (int i = 0; i < 2500; ++i) {
    SquadExample ex;
    ex.qas_id = "q" + std::to_string(i);
    ex.context = "gold";
    ex.answers.push_back({"gold", 0, 0, true});
    data.push_back(ex);
  }
  for (std::size_t l = 0; l < 2; ++l) {
    for (Zone z : kSweepZones) {
      PredictionSet p;
      // 2009 / 2500 = 80.36% for layer 2 (index 1), q2p; everything else perfect
      const int right = (l == 1 && z == Zone::Q2P) ? 2009 : 2500;
      for (int i = 0; i < 2500; ++i) p["q" + std::to_string(i)] = i < right ? "gold" : "other";
      write_file_atomic(dir / prediction_filename({l, z}), predictions_to_json(p));
    }
  }
  const std::string csv = results_to_csv(collect_results(dir, data, false));
  CHECK(csv == "layer,all,q2,q2p,p2q,p2\n1,100.000,100.000,100.000,100.000,100.000\n"
               "2,100.000,100.000,80.360,100.000,100.000\n");
  fs::remove_all(dir);
}
