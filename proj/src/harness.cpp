#include "azlab/harness.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <mutex>
#include <regex>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "azlab/decode.hpp"
#include "azlab/model.hpp"
#include "json.hpp"

namespace azlab {

std::string_view metric_name(Metric metric) { return metric == Metric::Exact ? "exact" : "f1"; }

std::string format3(double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3f", value);
  return buf;
}

double round3(double value) { return std::stod(format3(value)); }

std::string results_to_csv(const ResultsTable& table) {
  std::string out(kResultsHeader);
  out += '\n';
  for (std::size_t l = 0; l < table.rows.size(); ++l) {
    out += std::to_string(l + 1);
    for (double v : table.rows[l]) out += "," + format3(v);
    out += '\n';
  }
  return out;
}

ResultsTable parse_results_csv(std::string_view csv, Metric metric) {
  std::istringstream in{std::string(csv)};
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument("results CSV is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kResultsHeader) {
    throw std::invalid_argument("results CSV header is '" + line + "', expected '" + std::string(kResultsHeader) + "'");
  }
  ResultsTable table;
  table.metric = metric;
  std::size_t expected_layer = 1;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ls(line);
    for (std::string f; std::getline(ls, f, ',');) fields.push_back(f);
    if (fields.size() != 6) {
      throw std::invalid_argument("results CSV row '" + line + "' has " + std::to_string(fields.size()) +
                                  " fields, expected 6");
    }
    std::size_t pos = 0;
    std::size_t layer = 0;
    try {
      layer = std::stoul(fields[0], &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos != fields[0].size() || layer != expected_layer) {
      throw std::invalid_argument("results CSV row label '" + fields[0] + "', expected " +
                                  std::to_string(expected_layer));
    }
    std::array<double, 5> row{};
    for (std::size_t c = 0; c < 5; ++c) {
      try {
        row[c] = std::stod(fields[c + 1], &pos);
      } catch (const std::exception&) {
        pos = 0;
      }
      if (pos != fields[c + 1].size() || !(row[c] >= 0.0 && row[c] <= 100.0)) {
        throw std::invalid_argument("results CSV value '" + fields[c + 1] + "' in layer " + fields[0] +
                                    " is not a percentage");
      }
    }
    table.rows.push_back(row);
    ++expected_layer;
  }
  if (table.rows.empty()) throw std::invalid_argument("results CSV has no rows");
  return table;
}

ResultsTable read_results_csv(const std::filesystem::path& path, Metric metric) {
  return parse_results_csv(read_file(path), metric);
}

void write_results_csv(const ResultsTable& table, const std::filesystem::path& path) {
  write_file_atomic(path, results_to_csv(table));
}

ResultsTable average_runs(std::span<const ResultsTable> tables) {
  if (tables.empty()) throw std::invalid_argument("average_runs: no tables");
  ResultsTable out;
  out.metric = tables[0].metric;
  out.rows.assign(tables[0].rows.size(), {});
  for (const auto& t : tables) {
    if (t.metric != out.metric) throw std::invalid_argument("average_runs: tables mix exact and f1 metrics");
    if (t.rows.size() != out.rows.size()) {
      throw std::invalid_argument("average_runs: tables have " + std::to_string(t.rows.size()) + " and " +
                                  std::to_string(out.rows.size()) + " layers");
    }
    for (std::size_t l = 0; l < t.rows.size(); ++l)
      for (std::size_t c = 0; c < 5; ++c) out.rows[l][c] += t.rows[l][c];
  }
  for (auto& row : out.rows)
    for (double& v : row) v = round3(v / static_cast<double>(tables.size()));
  return out;
}

std::array<double, 5> stddev_of_difference(const ResultsTable& a, const ResultsTable& b) {
  if (a.rows.size() != b.rows.size()) {
    throw std::invalid_argument("stddev_of_difference: tables have " + std::to_string(a.rows.size()) + " and " +
                                std::to_string(b.rows.size()) + " layers");
  }
  const std::size_t n = a.rows.size();
  if (n < 2) throw std::invalid_argument("stddev_of_difference needs at least two layers");
  std::array<double, 5> out{};
  for (std::size_t c = 0; c < 5; ++c) {
    double mean = 0.0;
    for (std::size_t l = 0; l < n; ++l) mean += b.rows[l][c] - a.rows[l][c];
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (std::size_t l = 0; l < n; ++l) {
      const double d = b.rows[l][c] - a.rows[l][c] - mean;
      ss += d * d;
    }
    out[c] = std::sqrt(ss / static_cast<double>(n - 1));
  }
  return out;
}

std::string prediction_filename(const ZoneSpec& spec) {
  const std::string layer = spec.layer ? std::to_string(*spec.layer) : std::string("all");
  return "predictions_layer" + layer + "_" + std::string(zone_name(spec.zone)) + ".json";
}

SweepPlan default_plan(std::size_t num_layers, std::filesystem::path output_dir) {
  SweepPlan plan;
  plan.output_dir = std::move(output_dir);
  for (std::size_t l = 0; l < num_layers; ++l)
    for (Zone z : kSweepZones) plan.cells.push_back(ZoneSpec{l, z});
  return plan;
}

PredictionSet decode_predictions(const Checkpoint& ckpt, std::span<const SquadExample> examples,
                                 std::span<const Feature> features, const ZoneSpec& spec,
                                 const DecodeOptions& options) {
  spec.validate(ckpt.model.num_layers);
  std::vector<std::vector<std::vector<SpanPrediction>>> per_example(examples.size());
  for (const Feature& f : features) {
    if (f.example_index >= examples.size()) {
      throw std::invalid_argument("decode: feature refers to example " + std::to_string(f.example_index) +
                                  " of " + std::to_string(examples.size()));
    }
    Tape tape(false);
    const Var hidden = encode(tape, ckpt.params, ckpt.model, f, spec);
    const SpanLogits logits = span_logits(tape, hidden, ckpt.params, f.layout);
    per_example[f.example_index].push_back(predict_span(logits.start.value(), logits.end.value(), f,
                                                        examples[f.example_index].context, options.max_answer_length,
                                                        options.n_best));
  }
  PredictionSet out;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    if (per_example[i].empty()) throw std::invalid_argument("decode: no features for question " + examples[i].qas_id);
    out[examples[i].qas_id] = best_across_windows(per_example[i]).text;
  }
  return out;
}

bool SweepReport::all_ok() const {
  for (const auto& c : cells)
    if (!c.ok) return false;
  return true;
}

namespace {

nlohmann::json manifest_entry(const CellStatus& c) {
  nlohmann::json j{{"layer", c.spec.layer ? nlohmann::json(*c.spec.layer) : nlohmann::json("all")},
                   {"zone", zone_name(c.spec.zone)},
                   {"file", c.file},
                   {"status", c.ok ? (c.skipped ? "skipped" : "done") : "failed"},
                   {"seconds", c.seconds}};
  if (!c.error.empty()) j["error"] = c.error;
  if (c.metrics) j["metrics"] = {{"exact", c.metrics->exact}, {"f1", c.metrics->f1}, {"total", c.metrics->total}};
  return j;
}

std::map<std::string, bool> previous_manifest(const std::filesystem::path& dir) {
  std::map<std::string, bool> done;
  const auto path = dir / "manifest.json";
  if (!std::filesystem::exists(path)) return done;
  try {
    const auto j = nlohmann::json::parse(read_file(path));
    for (const auto& c : j.at("cells")) {
      const auto status = c.at("status").get<std::string>();
      done[c.at("file").get<std::string>()] = status == "done" || status == "skipped";
    }
  } catch (const std::exception&) {
    done.clear();
  }
  return done;
}

}  // namespace

SweepReport run_ablation(const Checkpoint& ckpt, std::span<const SquadExample> examples,
                         std::span<const Feature> features, const SweepPlan& plan, const DecodeOptions& options) {
  if (plan.cells.empty()) throw std::invalid_argument("run_ablation: empty sweep plan");
  std::error_code ec;
  std::filesystem::create_directories(plan.output_dir, ec);
  {
    const auto probe = plan.output_dir / ".azlab_write_probe";
    std::ofstream out(probe);
    if (ec || !out) throw std::runtime_error("run_ablation: cannot write to " + plan.output_dir.string());
    out.close();
    std::filesystem::remove(probe, ec);
  }
  const auto done_before = plan.resume ? previous_manifest(plan.output_dir) : std::map<std::string, bool>{};
  bool has_answers = true;
  for (const auto& ex : examples) has_answers = has_answers && !ex.answers.empty();

  SweepReport report;
  report.cells.resize(plan.cells.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t i = next++; i < plan.cells.size(); i = next++) {
      CellStatus& st = report.cells[i];
      st.spec = plan.cells[i];
      st.file = prediction_filename(st.spec);
      const auto path = plan.output_dir / st.file;
      const auto t0 = std::chrono::steady_clock::now();
      try {
        auto prev = done_before.find(st.file);
        if (prev != done_before.end() && prev->second && std::filesystem::exists(path)) {
          st.ok = st.skipped = true;
          continue;
        }
        const PredictionSet preds = decode_predictions(ckpt, examples, features, st.spec, options);
        write_file_atomic(path, predictions_to_json(preds));
        if (has_answers) st.metrics = evaluate(examples, preds);
        st.ok = true;
      } catch (const std::exception& e) {
        st.ok = false;
        st.error = e.what();
      }
      st.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
  };
  const std::size_t n_workers = std::max<std::size_t>(1, std::min(plan.workers, plan.cells.size()));
  if (n_workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < n_workers; ++w) pool.emplace_back(worker);
  }

  nlohmann::json manifest{{"cells", nlohmann::json::array()}};
  for (const auto& c : report.cells) manifest["cells"].push_back(manifest_entry(c));
  write_file_atomic(plan.output_dir / "manifest.json", manifest.dump(2) + "\n");
  return report;
}

ResultsTable collect_results(const std::filesystem::path& dir, std::span<const SquadExample> dataset, bool use_f1,
                             std::optional<std::size_t> num_layers) {
  if (!std::filesystem::is_directory(dir)) throw std::invalid_argument("prediction directory " + dir.string() + " not found");
  std::size_t layers = 0;
  if (num_layers) {
    layers = *num_layers;
  } else {
    static const std::regex pattern(R"(predictions_layer(\d+)_(all|q2|q2p|p2q|p2)\.json)");
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
      std::smatch m;
      const std::string name = entry.path().filename().string();
      if (std::regex_match(name, m, pattern)) layers = std::max<std::size_t>(layers, std::stoul(m[1].str()) + 1);
    }
  }
  if (layers == 0) throw std::invalid_argument("no predictions_layer*.json files in " + dir.string());
  ResultsTable table;
  table.metric = use_f1 ? Metric::F1 : Metric::Exact;
  table.rows.assign(layers, {});
  for (std::size_t l = 0; l < layers; ++l) {
    for (std::size_t c = 0; c < kSweepZones.size(); ++c) {
      const ZoneSpec spec{l, kSweepZones[c]};
      const auto path = dir / prediction_filename(spec);
      if (!std::filesystem::exists(path)) {
        throw std::invalid_argument("missing prediction file for layer " + std::to_string(l) + " zone " +
                                    std::string(zone_name(spec.zone)) + ": " + path.string());
      }
      const MetricsReport r = evaluate(dataset, read_predictions(path));
      table.rows[l][c] = round3(use_f1 ? r.f1 : r.exact);
    }
  }
  return table;
}

}  // namespace azlab
