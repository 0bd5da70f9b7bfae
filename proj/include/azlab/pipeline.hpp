#pragma once

// End-to-end runs: synthetic corpus → train → decode → sweep → collect → heatmap.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "azlab/harness.hpp"
#include "azlab/heatmap.hpp"
#include "azlab/metrics.hpp"
#include "azlab/model.hpp"
#include "azlab/synthetic.hpp"
#include "azlab/trainer.hpp"

namespace azlab {

struct DemoConfig {
  std::filesystem::path out_dir = "azlab-demo";
  ModelConfig model{.num_layers = 4, .num_heads = 4, .d_model = 32, .d_ff = 64, .max_positions = 32};
  FeaturizeConfig text{.max_seq_length = 32, .doc_stride = 16, .max_query_length = 8};
  TrainConfig train{.epochs = 15.0, .batch_size = 8, .learning_rate = 1e-3, .seed = 0, .max_steps = std::nullopt};
  SyntheticConfig train_data{.num_passages = 2000, .num_keys = 10, .min_pairs = 2, .max_pairs = 4, .bind_values = true, .seed = 1, .id_prefix = "train"};
  SyntheticConfig dev_data{.num_passages = 100, .num_keys = 10, .min_pairs = 2, .max_pairs = 4, .bind_values = true, .seed = 2, .id_prefix = "dev"};
  std::size_t vocab_size = 1000;
  std::vector<std::uint64_t> seeds{0};
  std::size_t workers = 1;
  bool use_f1 = false;
  /// Receives one-line progress messages when set.
  std::function<void(const std::string&)> log;
};

struct DemoRun {
  std::uint64_t seed = 0;
  MetricsReport baseline;
  ResultsTable table;
  std::vector<LossPoint> loss_trace;
  double train_seconds = 0.0;
  std::filesystem::path dir;
};

struct DemoResult {
  std::vector<DemoRun> runs;
  /// Average over runs (the single run's table when there is one seed).
  ResultsTable table;
  double baseline_score = 0.0;  ///< mean baseline EM (or F1 with use_f1)
  std::filesystem::path results_csv;
  std::filesystem::path heatmap_svg;
};

/// Builds a vocabulary from the questions and contexts of `examples`.
Vocab vocab_from_examples(std::span<const SquadExample> examples, std::size_t max_size, bool lowercase);

DemoResult run_demo(const DemoConfig& config);

}  // namespace azlab
