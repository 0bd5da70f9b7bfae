#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "azlab/harness.hpp"

namespace azlab {

struct Rgb {
  std::uint8_t r = 255, g = 255, b = 255;
  std::string hex() const;  ///< "#RRGGBB"
  friend bool operator==(const Rgb&, const Rgb&) = default;
};

/// Diverging ramp endpoints: worst degradation and largest improvement.
inline constexpr Rgb kDeltaNegative{8, 48, 107};   // #08306B
inline constexpr Rgb kDeltaPositive{103, 0, 13};   // #67000D

struct HeatmapSpec {
  ResultsTable table;
  double baseline = 0.0;
  /// Symmetric colour scale ±bound; nullopt uses max(max |delta|, 1.0).
  std::optional<double> scale_bound;
  bool annotate = true;
  /// true: zones as rows and layers as columns; false: transposed.
  bool zones_as_rows = true;
  std::string title;
};

/// delta[layer][zone] = table value − baseline.
std::vector<std::array<double, 5>> compute_deltas(const ResultsTable& table, double baseline);

double scale_bound_for(const HeatmapSpec& spec);

/// Linear white→blue for negative deltas and white→red for positive ones,
/// saturating at ±bound. Zero maps to #FFFFFF exactly.
Rgb delta_color(double delta, double bound);

/// Deterministic SVG document. Each cell is a <rect class="cell"> carrying
/// data-layer (1-based), data-zone and data-delta attributes.
std::string render_heatmap(const HeatmapSpec& spec);

}  // namespace azlab
