#include "azlab/heatmap.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace azlab {

std::string Rgb::hex() const {
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%02X%02X%02X", r, g, b);
  return buf;
}

std::vector<std::array<double, 5>> compute_deltas(const ResultsTable& table, double baseline) {
  std::vector<std::array<double, 5>> out(table.rows.size());
  for (std::size_t l = 0; l < table.rows.size(); ++l)
    for (std::size_t c = 0; c < 5; ++c) out[l][c] = table.rows[l][c] - baseline;
  return out;
}

double scale_bound_for(const HeatmapSpec& spec) {
  if (spec.scale_bound) return *spec.scale_bound;
  double bound = 1.0;
  for (const auto& row : compute_deltas(spec.table, spec.baseline))
    for (double d : row) bound = std::max(bound, std::abs(d));
  return bound;
}

Rgb delta_color(double delta, double bound) {
  if (!(bound > 0.0)) throw std::invalid_argument("colour scale bound must be positive");
  if (delta == 0.0) return Rgb{};
  const double t = std::min(std::abs(delta) / bound, 1.0);
  const Rgb end = delta < 0.0 ? kDeltaNegative : kDeltaPositive;
  auto ramp = [t](std::uint8_t target) {
    return static_cast<std::uint8_t>(std::lround(255.0 + t * (static_cast<double>(target) - 255.0)));
  };
  return Rgb{ramp(end.r), ramp(end.g), ramp(end.b)};
}

namespace {

constexpr int kCellW = 52;
constexpr int kCellH = 34;
constexpr int kLeft = 80;
constexpr int kTop = 50;
constexpr int kBarW = 18;
constexpr int kBarGap = 24;

const char* zone_label(Zone z) {
  switch (z) {
    case Zone::All: return "All";
    case Zone::Q2: return "Q²";
    case Zone::Q2P: return "Q2P";
    case Zone::P2Q: return "P2Q";
    case Zone::P2: return "P²";
    default: return "";
  }
}

std::string fmt(const char* pattern, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, pattern, v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

std::string render_heatmap(const HeatmapSpec& spec) {
  const std::size_t layers = spec.table.rows.size();
  if (layers == 0) throw std::invalid_argument("render_heatmap: empty results table");
  if (!(spec.baseline >= 0.0 && spec.baseline <= 100.0)) {
    throw std::invalid_argument("render_heatmap: baseline must be a percentage in [0, 100]");
  }
  if (spec.scale_bound && !(*spec.scale_bound > 0.0)) {
    throw std::invalid_argument("render_heatmap: colour scale bound must be positive");
  }
  const double bound = scale_bound_for(spec);
  const auto deltas = compute_deltas(spec.table, spec.baseline);
  const std::size_t n_cols = spec.zones_as_rows ? layers : 5;
  const std::size_t n_rows = spec.zones_as_rows ? 5 : layers;
  const int grid_w = static_cast<int>(n_cols) * kCellW;
  const int grid_h = static_cast<int>(n_rows) * kCellH;
  const int bar_x = kLeft + grid_w + kBarGap;
  const int width = bar_x + kBarW + 70;
  const int height = kTop + grid_h + 60;

  std::string svg;
  auto line = [&svg](const std::string& s) { svg += s + "\n"; };
  line("<?xml version=\"1.0\" encoding=\"UTF-8\"?>");
  line("<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(width) + "\" height=\"" +
       std::to_string(height) + "\" viewBox=\"0 0 " + std::to_string(width) + " " + std::to_string(height) +
       "\" font-family=\"Helvetica, Arial, sans-serif\" font-size=\"12\">");
  line("<rect x=\"0\" y=\"0\" width=\"" + std::to_string(width) + "\" height=\"" + std::to_string(height) +
       "\" fill=\"#FFFFFF\"/>");
  const std::string title = spec.title.empty()
                                ? "Attention zone ablation (" + std::string(metric_name(spec.table.metric)) +
                                      ", baseline " + format3(spec.baseline) + ")"
                                : spec.title;
  line("<text x=\"" + std::to_string(kLeft + grid_w / 2) + "\" y=\"24\" text-anchor=\"middle\" font-size=\"14\">" +
       escape(title) + "</text>");

  for (std::size_t l = 0; l < layers; ++l) {
    for (std::size_t z = 0; z < 5; ++z) {
      const std::size_t col = spec.zones_as_rows ? l : z;
      const std::size_t row = spec.zones_as_rows ? z : l;
      const int x = kLeft + static_cast<int>(col) * kCellW;
      const int y = kTop + static_cast<int>(row) * kCellH;
      const double d = deltas[l][z];
      const Rgb color = delta_color(d, bound);
      line("<rect class=\"cell\" data-layer=\"" + std::to_string(l + 1) + "\" data-zone=\"" +
           std::string(zone_name(kSweepZones[z])) + "\" data-delta=\"" + format3(d) + "\" x=\"" + std::to_string(x) +
           "\" y=\"" + std::to_string(y) + "\" width=\"" + std::to_string(kCellW) + "\" height=\"" +
           std::to_string(kCellH) + "\" fill=\"" + color.hex() + "\" stroke=\"#D0D0D0\" stroke-width=\"0.5\"/>");
      if (spec.annotate) {
        const bool dark = std::min(std::abs(d) / bound, 1.0) > 0.6;
        line("<text class=\"annotation\" x=\"" + std::to_string(x + kCellW / 2) + "\" y=\"" +
             std::to_string(y + kCellH / 2 + 4) + "\" text-anchor=\"middle\" font-size=\"10\" fill=\"" +
             (dark ? "#FFFFFF" : "#000000") + "\">" + fmt("%.2f", d) + "</text>");
      }
    }
  }

  // Axis labels.
  for (std::size_t c = 0; c < n_cols; ++c) {
    const std::string label = spec.zones_as_rows ? std::to_string(c + 1) : zone_label(kSweepZones[c]);
    line("<text x=\"" + std::to_string(kLeft + static_cast<int>(c) * kCellW + kCellW / 2) + "\" y=\"" +
         std::to_string(kTop + grid_h + 16) + "\" text-anchor=\"middle\">" + label + "</text>");
  }
  for (std::size_t r = 0; r < n_rows; ++r) {
    const std::string label = spec.zones_as_rows ? zone_label(kSweepZones[r]) : std::to_string(r + 1);
    line("<text x=\"" + std::to_string(kLeft - 8) + "\" y=\"" +
         std::to_string(kTop + static_cast<int>(r) * kCellH + kCellH / 2 + 4) + "\" text-anchor=\"end\">" + label +
         "</text>");
  }
  line("<text x=\"" + std::to_string(kLeft + grid_w / 2) + "\" y=\"" + std::to_string(kTop + grid_h + 36) +
       "\" text-anchor=\"middle\">" + (spec.zones_as_rows ? "Layer" : "Attention zone") + "</text>");
  line("<text x=\"16\" y=\"" + std::to_string(kTop + grid_h / 2) + "\" text-anchor=\"middle\" transform=\"rotate(-90 16 " +
       std::to_string(kTop + grid_h / 2) + ")\">" + (spec.zones_as_rows ? "Attention zone" : "Layer") + "</text>");

  // Colour bar: +bound at the top, −bound at the bottom.
  constexpr int kSteps = 41;
  const double step_h = static_cast<double>(grid_h) / kSteps;
  for (int i = 0; i < kSteps; ++i) {
    const double d = bound - 2.0 * bound * i / (kSteps - 1);
    line("<rect class=\"colorbar\" x=\"" + std::to_string(bar_x) + "\" y=\"" + fmt("%.2f", kTop + i * step_h) +
         "\" width=\"" + std::to_string(kBarW) + "\" height=\"" + fmt("%.2f", step_h + 0.5) + "\" fill=\"" +
         delta_color(d, bound).hex() + "\"/>");
  }
  line("<rect x=\"" + std::to_string(bar_x) + "\" y=\"" + std::to_string(kTop) + "\" width=\"" +
       std::to_string(kBarW) + "\" height=\"" + std::to_string(grid_h) +
       "\" fill=\"none\" stroke=\"#808080\" stroke-width=\"0.5\"/>");
  const int tx = bar_x + kBarW + 6;
  line("<text x=\"" + std::to_string(tx) + "\" y=\"" + std::to_string(kTop + 4) + "\">" + fmt("%+.2f", bound) +
       "</text>");
  line("<text x=\"" + std::to_string(tx) + "\" y=\"" + std::to_string(kTop + grid_h / 2 + 4) + "\">0</text>");
  line("<text x=\"" + std::to_string(tx) + "\" y=\"" + std::to_string(kTop + grid_h + 4) + "\">" + fmt("%+.2f", -bound) +
       "</text>");
  line("</svg>");
  return svg;
}

}  // namespace azlab
