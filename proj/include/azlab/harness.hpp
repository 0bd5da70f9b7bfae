#pragma once

// Layer × zone ablation sweep: decode under every ZoneSpec, write prediction
// files, score them into a results table, and summarize multiple runs.

#include <array>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "azlab/checkpoint.hpp"
#include "azlab/metrics.hpp"
#include "azlab/text.hpp"
#include "azlab/zones.hpp"

namespace azlab {

enum class Metric { Exact, F1 };

std::string_view metric_name(Metric metric);

/// One row per layer (row 0 is "layer 1"); columns follow kSweepZones:
/// all, q2, q2p, p2q, p2. Values are percentages rounded to 3 decimals.
struct ResultsTable {
  Metric metric = Metric::Exact;
  std::vector<std::array<double, 5>> rows;

  std::size_t num_layers() const { return rows.size(); }
  friend bool operator==(const ResultsTable&, const ResultsTable&) = default;
};

inline constexpr std::string_view kResultsHeader = "layer,all,q2,q2p,p2q,p2";

/// Round half-to-even on the exact binary value, 3 decimals (matches "%.3f").
double round3(double value);
std::string format3(double value);

std::string results_to_csv(const ResultsTable& table);
ResultsTable parse_results_csv(std::string_view csv, Metric metric = Metric::Exact);
ResultsTable read_results_csv(const std::filesystem::path& path, Metric metric = Metric::Exact);
void write_results_csv(const ResultsTable& table, const std::filesystem::path& path);

/// Elementwise mean, re-rounded to 3 decimals.
ResultsTable average_runs(std::span<const ResultsTable> tables);

/// Per column, the sample (n − 1) standard deviation over layers of b − a.
std::array<double, 5> stddev_of_difference(const ResultsTable& a, const ResultsTable& b);

/// predictions_layer{i}_{zone}.json with a 0-based layer, or
/// predictions_layerall_{zone}.json for an every-layer spec.
std::string prediction_filename(const ZoneSpec& spec);

struct SweepPlan {
  std::vector<ZoneSpec> cells;
  std::filesystem::path output_dir;
  std::size_t workers = 1;
  /// Skip cells whose prediction file exists and is recorded as done in manifest.json.
  bool resume = false;
};

/// Every layer × {all, q2, q2p, p2q, p2}, layer-major.
SweepPlan default_plan(std::size_t num_layers, std::filesystem::path output_dir);

struct DecodeOptions {
  std::size_t max_answer_length = 30;
  std::size_t n_best = 20;
};

/// Best answer per question of `examples` under `spec`.
/// `features` must be the featurization of `examples` (any order).
PredictionSet decode_predictions(const Checkpoint& ckpt, std::span<const SquadExample> examples,
                                 std::span<const Feature> features, const ZoneSpec& spec,
                                 const DecodeOptions& options = {});

struct CellStatus {
  ZoneSpec spec;
  std::string file;
  bool ok = false;
  bool skipped = false;
  std::string error;
  double seconds = 0.0;
  std::optional<MetricsReport> metrics;
};

struct SweepReport {
  std::vector<CellStatus> cells;
  bool all_ok() const;
};

/// Decodes every cell of `plan` and writes one prediction file per cell plus
/// manifest.json. A failing cell is recorded and does not stop the others.
/// Throws if the output directory cannot be written.
SweepReport run_ablation(const Checkpoint& ckpt, std::span<const SquadExample> examples,
                         std::span<const Feature> features, const SweepPlan& plan, const DecodeOptions& options = {});

/// Scores predictions_layer{i}_{zone}.json for every layer found in `dir`
/// (or exactly `num_layers` when given). Throws naming the first missing cell.
ResultsTable collect_results(const std::filesystem::path& dir, std::span<const SquadExample> dataset, bool use_f1,
                             std::optional<std::size_t> num_layers = std::nullopt);

}  // namespace azlab
