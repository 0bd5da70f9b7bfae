#include "azlab/zones.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <stdexcept>

namespace azlab {

std::string_view zone_name(Zone zone) {
  switch (zone) {
    case Zone::Q2: return "q2";
    case Zone::Q2P: return "q2p";
    case Zone::P2Q: return "p2q";
    case Zone::P2: return "p2";
    case Zone::All: return "all";
    case Zone::None: return "none";
  }
  return "none";
}

Zone parse_zone(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
  for (Zone z : {Zone::Q2, Zone::Q2P, Zone::P2Q, Zone::P2, Zone::All, Zone::None})
    if (lower == zone_name(z)) return z;
  throw std::invalid_argument("unknown attention zone '" + std::string(name) + "' (expected q2, q2p, p2q, p2, all or none)");
}

void ZoneSpec::validate(std::size_t num_layers) const {
  if (layer && *layer >= num_layers) {
    throw std::invalid_argument("mask layer " + std::to_string(*layer) + " out of range for a " +
                                std::to_string(num_layers) + "-layer model");
  }
}

std::optional<std::size_t> parse_mask_layer(std::string_view text) {
  std::string lower(text);
  std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
  if (lower == "none" || lower == "all") return std::nullopt;
  std::size_t value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) {
    throw std::invalid_argument("invalid mask layer '" + std::string(text) + "' (expected a 0-based index or none)");
  }
  return value;
}

Block block_of(const SequenceLayout& layout, std::size_t index) {
  if (index == layout.cls_index || layout.question.contains(index) || index == layout.sep1_index) return Block::Question;
  if (layout.passage.contains(index) || index == layout.sep2_index) return Block::Passage;
  return Block::Pad;
}

bool zone_contains(Zone zone, Block row, Block col) {
  if (row == Block::Pad || col == Block::Pad) return false;
  const bool rq = row == Block::Question, cq = col == Block::Question;
  switch (zone) {
    case Zone::Q2: return rq && cq;
    case Zone::Q2P: return rq && !cq;
    case Zone::P2Q: return !rq && cq;
    case Zone::P2: return !rq && !cq;
    case Zone::All: return true;
    case Zone::None: return false;
  }
  return false;
}

Tensor zone_mask(const SequenceLayout& layout, Zone zone) {
  const std::size_t n = layout.length();
  Tensor mask(Shape{n, n});
  if (zone == Zone::None) return mask;
  for (std::size_t i = 0; i < n; ++i) {
    const Block row = block_of(layout, i);
    for (std::size_t j = 0; j < n; ++j)
      if (zone_contains(zone, row, block_of(layout, j))) mask.at(i, j) = kMaskSentinel;
  }
  return mask;
}

Tensor padding_mask(const SequenceLayout& layout) {
  const std::size_t n = layout.length();
  Tensor mask(Shape{n, n});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (layout.pad.contains(i) || layout.pad.contains(j)) mask.at(i, j) = kMaskSentinel;
  return mask;
}

}  // namespace azlab
