#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "ocpad/eval/metrics.hpp"

namespace ocpad::eval {

inline std::string format_threshold(double t) {
  if (t == kInf) return "inf";
  if (t == -kInf) return "-inf";
  return detail::format_double(t);
}

inline void write_det_csv(const DetCurve& c, std::ostream& out) {
  out << "threshold,apcer,bpcer\n";
  for (const auto& p : c.points)
    out << format_threshold(p.threshold) << ',' << detail::format_double(p.apcer) << ','
        << detail::format_double(p.bpcer) << '\n';
}

inline void write_det_csv(const DetCurve& c, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  write_det_csv(c, out);
}

struct NamedCurve {
  std::string name;
  const DetCurve* curve = nullptr;
};

/// Self-contained SVG with log-scaled axes from 0.1% to 100%. Rates below the
/// lower axis limit are drawn on the axis.
inline std::string det_svg(const std::vector<NamedCurve>& curves) {
  constexpr double size = 420, margin = 60, lo = -3.0;  // log10 of 0.1%
  auto pos = [&](double rate) {
    const double l = std::log10(std::max(rate, 1e-3));
    return (l - lo) / (0.0 - lo) * size;
  };
  static const char* colors[] = {"#d62728", "#1f77b4", "#2ca02c", "#9467bd", "#ff7f0e",
                                 "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf", "#000000"};
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << size + 2 * margin << "\" height=\""
     << size + 2 * margin << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  os << "<rect x=\"" << margin << "\" y=\"" << margin << "\" width=\"" << size << "\" height=\"" << size
     << "\" fill=\"none\" stroke=\"#000\"/>\n";
  const double ticks[] = {0.001, 0.01, 0.1, 1.0};
  const char* labels[] = {"0.1", "1", "10", "100"};
  for (int i = 0; i < 4; ++i) {
    const double x = margin + pos(ticks[i]), y = margin + size - pos(ticks[i]);
    os << "<line x1=\"" << x << "\" y1=\"" << margin << "\" x2=\"" << x << "\" y2=\"" << margin + size
       << "\" stroke=\"#ddd\"/>\n";
    os << "<line x1=\"" << margin << "\" y1=\"" << y << "\" x2=\"" << margin + size << "\" y2=\"" << y
       << "\" stroke=\"#ddd\"/>\n";
    os << "<text x=\"" << x << "\" y=\"" << margin + size + 15 << "\" text-anchor=\"middle\">" << labels[i]
       << "</text>\n";
    os << "<text x=\"" << margin - 6 << "\" y=\"" << y + 4 << "\" text-anchor=\"end\">" << labels[i] << "</text>\n";
  }
  os << "<text x=\"" << margin + size / 2 << "\" y=\"" << margin + size + 35
     << "\" text-anchor=\"middle\">APCER (%)</text>\n";
  os << "<text x=\"" << 15 << "\" y=\"" << margin + size / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 15 "
     << margin + size / 2 << ")\">BPCER (%)</text>\n";
  for (std::size_t k = 0; k < curves.size(); ++k) {
    const char* color = colors[k % std::size(colors)];
    os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    for (const auto& p : curves[k].curve->points)
      os << margin + pos(p.apcer) << ',' << margin + size - pos(p.bpcer) << ' ';
    os << "\"/>\n";
    os << "<text x=\"" << margin + size - 5 << "\" y=\"" << margin + 15 + 14 * static_cast<double>(k)
       << "\" text-anchor=\"end\" fill=\"" << color << "\">" << curves[k].name << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace ocpad::eval
