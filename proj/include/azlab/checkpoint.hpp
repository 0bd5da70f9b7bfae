#pragma once

// Portable checkpoint file:
//   "AZLB" | version (1 byte) | header length (uint64 LE) | JSON header |
//   float64 LE payload, parameters in header order, row-major.

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "azlab/adam.hpp"
#include "azlab/model.hpp"
#include "azlab/text.hpp"

namespace azlab {

inline constexpr std::string_view kCheckpointMagic = "AZLB";
inline constexpr std::uint8_t kCheckpointVersion = 1;

struct TrainingMetadata {
  std::uint64_t seed = 0;
  std::uint64_t steps = 0;
  friend bool operator==(const TrainingMetadata&, const TrainingMetadata&) = default;
};

struct Checkpoint {
  ModelConfig model;
  FeaturizeConfig text;
  Vocab vocab;
  ParameterSet params;
  TrainingMetadata metadata;

  friend bool operator==(const Checkpoint& a, const Checkpoint& b);
};

std::string serialize_checkpoint(const Checkpoint& ckpt);
/// Throws std::runtime_error on a bad magic, version, truncation, trailing
/// bytes or a parameter set that disagrees with the model configuration.
Checkpoint parse_checkpoint(std::string_view bytes);

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Writes `contents` to a sibling temp file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);
std::string read_file(const std::filesystem::path& path);

}  // namespace azlab
