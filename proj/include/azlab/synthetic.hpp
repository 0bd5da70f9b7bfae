#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

#include "json.hpp"

namespace azlab {

/// Key-value reading task: passages "k3 is v7 . k11 is v2 . ..." with
/// questions "what is k11 ?" whose answer is the value bound to the key.
struct SyntheticConfig {
  std::size_t num_passages = 100;
  std::size_t questions_per_passage = 1;
  std::size_t num_keys = 20;
  std::size_t num_values = 20;
  std::size_t min_pairs = 3;
  std::size_t max_pairs = 5;
  /// When set, key k<i> always maps to v<i> and num_values is ignored.
  bool bind_values = false;
  std::uint64_t seed = 0;
  std::string id_prefix = "kv";
};

/// A SQuAD v1.1 document for the key-value task.
nlohmann::json generate_keyvalue_squad(const SyntheticConfig& config);

}  // namespace azlab
