#include "svg.hpp"

#include <array>

#include <fmt/format.h>

namespace oodgate::detail {
namespace {

constexpr double kWidth = 480.0;
constexpr double kHeight = 400.0;
constexpr double kLeft = 60.0;
constexpr double kRight = 20.0;
constexpr double kTop = 40.0;
constexpr double kBottom = 50.0;

constexpr std::array<const char*, 6> kPalette{"#1f77b4", "#d62728", "#2ca02c",
                                              "#ff7f0e", "#9467bd", "#8c564b"};

std::string escape(const std::string& text) {
  std::string out;
  for (char ch : text) {
    switch (ch) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += ch;
    }
  }
  return out;
}

}  // namespace

std::string LineChart::render() const {
  const double plot_w = kWidth - kLeft - kRight;
  const double plot_h = kHeight - kTop - kBottom;
  const double x_span = x_max > x_min ? x_max - x_min : 1.0;
  const double y_span = y_max > y_min ? y_max - y_min : 1.0;
  const auto px = [&](double x) { return kLeft + (x - x_min) / x_span * plot_w; };
  const auto py = [&](double y) { return kTop + plot_h - (y - y_min) / y_span * plot_h; };

  std::string svg = fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{1}\" "
      "viewBox=\"0 0 {0} {1}\">\n",
      kWidth, kHeight);
  svg += fmt::format("<rect width=\"{}\" height=\"{}\" fill=\"white\"/>\n", kWidth, kHeight);
  svg += fmt::format(
      "<text x=\"{:.2f}\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" "
      "font-size=\"15\">{}</text>\n",
      kWidth / 2, escape(title));
  svg += fmt::format(
      "<rect x=\"{:.2f}\" y=\"{:.2f}\" width=\"{:.2f}\" height=\"{:.2f}\" fill=\"none\" "
      "stroke=\"black\"/>\n",
      kLeft, kTop, plot_w, plot_h);

  for (int k = 0; k <= 4; ++k) {
    const double y = y_min + y_span * k / 4.0;
    svg += fmt::format(
        "<text x=\"{:.2f}\" y=\"{:.2f}\" text-anchor=\"end\" font-family=\"sans-serif\" "
        "font-size=\"11\">{:.2f}</text>\n",
        kLeft - 6, py(y) + 4, y);
  }
  if (x_tick_labels.empty()) {
    for (int k = 0; k <= 4; ++k) {
      const double x = x_min + x_span * k / 4.0;
      svg += fmt::format(
          "<text x=\"{:.2f}\" y=\"{:.2f}\" text-anchor=\"middle\" font-family=\"sans-serif\" "
          "font-size=\"11\">{:.2f}</text>\n",
          px(x), kTop + plot_h + 16, x);
    }
  } else {
    for (std::size_t k = 0; k < x_tick_labels.size(); ++k) {
      svg += fmt::format(
          "<text x=\"{:.2f}\" y=\"{:.2f}\" text-anchor=\"middle\" font-family=\"sans-serif\" "
          "font-size=\"11\">{}</text>\n",
          px(static_cast<double>(k)), kTop + plot_h + 16, escape(x_tick_labels[k]));
    }
  }
  svg += fmt::format(
      "<text x=\"{:.2f}\" y=\"{:.2f}\" text-anchor=\"middle\" font-family=\"sans-serif\" "
      "font-size=\"12\">{}</text>\n",
      kLeft + plot_w / 2, kHeight - 12, escape(x_label));
  svg += fmt::format(
      "<text x=\"16\" y=\"{0:.2f}\" text-anchor=\"middle\" font-family=\"sans-serif\" "
      "font-size=\"12\" transform=\"rotate(-90 16 {0:.2f})\">{1}</text>\n",
      kTop + plot_h / 2, escape(y_label));

  for (std::size_t s = 0; s < series.size(); ++s) {
    const auto& line = series[s];
    const char* color = line.dashed ? "#888888" : kPalette[s % kPalette.size()];
    std::string points;
    for (const auto& [x, y] : line.points) {
      if (!points.empty()) points += ' ';
      points += fmt::format("{:.2f},{:.2f}", px(x), py(y));
    }
    svg += fmt::format(
        "<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"{}\"{} points=\"{}\"/>\n", color,
        line.dashed ? 1 : 2, line.dashed ? " stroke-dasharray=\"4 4\"" : "", points);
    if (!line.label.empty() && !line.dashed) {
      svg += fmt::format(
          "<text x=\"{:.2f}\" y=\"{:.2f}\" font-family=\"sans-serif\" font-size=\"11\" "
          "fill=\"{}\">{}</text>\n",
          kLeft + 8, kTop + 14 + 14 * static_cast<double>(s), color, escape(line.label));
    }
  }
  svg += "</svg>\n";
  return svg;
}

}  // namespace oodgate::detail
