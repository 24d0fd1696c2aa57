#include <cstdio>
#include <string>

#include "detcal/io.hpp"

namespace detcal::io {
namespace {

std::string fixed(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

std::string escape(std::string_view text) {
  std::string out;
  for (char c : text) {
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

std::string reliability_svg(std::span<const ReliabilityRecord> records,
                            std::string_view title, std::string_view outcome_label) {
  constexpr double kWidth = 420.0;
  constexpr double kHeight = 440.0;
  constexpr double kLeft = 60.0;
  constexpr double kTop = 40.0;
  constexpr double kPlot = 340.0;
  const double bottom = kTop + kPlot;

  auto px = [&](double v) { return kLeft + v * kPlot; };
  auto py = [&](double v) { return bottom - v * kPlot; };

  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fixed(kWidth) +
         "\" height=\"" + fixed(kHeight) + "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg += "<text x=\"" + fixed(kWidth / 2) + "\" y=\"24\" text-anchor=\"middle\" font-size=\"14\">" +
         escape(title) + "</text>\n";

  for (const ReliabilityRecord& rec : records) {
    if (rec.count == 0) continue;
    const double x = px(rec.bin_lo);
    const double w = px(rec.bin_hi) - x;
    const double outcome_top = py(rec.mean_outcome);
    svg += "<rect x=\"" + fixed(x) + "\" y=\"" + fixed(outcome_top) + "\" width=\"" + fixed(w) +
           "\" height=\"" + fixed(bottom - outcome_top) +
           "\" fill=\"#3b6fb6\" stroke=\"#1d3b66\"/>\n";
    // Gap between the bar and the bin's mean confidence.
    const double conf_y = py(rec.mean_conf);
    const double gap_top = conf_y < outcome_top ? conf_y : outcome_top;
    const double gap_h = conf_y < outcome_top ? outcome_top - conf_y : conf_y - outcome_top;
    svg += "<rect x=\"" + fixed(x) + "\" y=\"" + fixed(gap_top) + "\" width=\"" + fixed(w) +
           "\" height=\"" + fixed(gap_h) +
           "\" fill=\"#e0524a\" fill-opacity=\"0.45\" stroke=\"#b0302a\"/>\n";
  }

  svg += "<line x1=\"" + fixed(px(0)) + "\" y1=\"" + fixed(py(0)) + "\" x2=\"" + fixed(px(1)) +
         "\" y2=\"" + fixed(py(1)) + "\" stroke=\"#555\" stroke-dasharray=\"4 3\"/>\n";
  svg += "<rect x=\"" + fixed(kLeft) + "\" y=\"" + fixed(kTop) + "\" width=\"" + fixed(kPlot) +
         "\" height=\"" + fixed(kPlot) + "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 5; ++i) {
    const double v = i / 5.0;
    svg += "<text x=\"" + fixed(px(v)) + "\" y=\"" + fixed(bottom + 16) +
           "\" text-anchor=\"middle\">" + fixed(v) + "</text>\n";
    svg += "<text x=\"" + fixed(kLeft - 6) + "\" y=\"" + fixed(py(v) + 4) +
           "\" text-anchor=\"end\">" + fixed(v) + "</text>\n";
  }
  svg += "<text x=\"" + fixed(px(0.5)) + "\" y=\"" + fixed(bottom + 36) +
         "\" text-anchor=\"middle\">confidence</text>\n";
  svg += "<text x=\"16\" y=\"" + fixed(py(0.5)) + "\" text-anchor=\"middle\" transform=\"rotate(-90 16 " +
         fixed(py(0.5)) + ")\">" + escape(outcome_label) + "</text>\n";
  svg += "</svg>\n";
  return svg;
}

}  // namespace detcal::io
