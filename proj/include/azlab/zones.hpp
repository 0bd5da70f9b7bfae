#pragma once

// Attention zones of a [CLS] question [SEP] passage [SEP] sequence.
//
// The question block is {CLS} ∪ question ∪ {first SEP}; the passage block is
// passage ∪ {final SEP}. Rows are attending positions, columns attended ones:
//   Q2  question → question     Q2P question → passage
//   P2Q passage  → question     P2  passage  → passage
// The four zones partition the non-pad × non-pad cells; ALL is their union.

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>

#include "azlab/tensor.hpp"
#include "azlab/text.hpp"

namespace azlab {

enum class Zone { Q2, Q2P, P2Q, P2, All, None };

/// Column order of results tables and heatmaps.
inline constexpr std::array<Zone, 5> kSweepZones = {Zone::All, Zone::Q2, Zone::Q2P, Zone::P2Q, Zone::P2};

/// Lowercase flag/file name: "q2", "q2p", "p2q", "p2", "all", "none".
std::string_view zone_name(Zone zone);
/// Inverse of zone_name (case-insensitive); throws std::invalid_argument.
Zone parse_zone(std::string_view name);

/// Which layers a zone mask is injected into, plus the zone itself.
struct ZoneSpec {
  std::optional<std::size_t> layer;  ///< nullopt: every layer
  Zone zone = Zone::None;

  static ZoneSpec identity() { return {}; }
  bool applies_to(std::size_t layer_index) const { return zone != Zone::None && (!layer || *layer == layer_index); }
  /// Throws if a specific layer is outside [0, num_layers).
  void validate(std::size_t num_layers) const;
  friend bool operator==(const ZoneSpec&, const ZoneSpec&) = default;
};

/// Parses a --mask-layer value: a 0-based index, or "none"/"all" for every layer.
std::optional<std::size_t> parse_mask_layer(std::string_view text);

enum class Block { Question, Passage, Pad };
Block block_of(const SequenceLayout& layout, std::size_t index);
bool zone_contains(Zone zone, Block row, Block col);

/// n×n additive mask: kMaskSentinel on the cells of `zone`, 0 elsewhere.
Tensor zone_mask(const SequenceLayout& layout, Zone zone);
/// n×n additive mask dropping every cell whose row or column is padding.
Tensor padding_mask(const SequenceLayout& layout);

}  // namespace azlab
