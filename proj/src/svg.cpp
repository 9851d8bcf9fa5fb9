#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <string>

#include "imgrid/errors.hpp"
#include "imgrid/runner.hpp"

namespace imgrid::runner {

namespace {

constexpr double kWidth = 800.0;
constexpr double kHeight = 500.0;
constexpr double kLeft = 70.0;
constexpr double kRight = 20.0;
constexpr double kTop = 20.0;
constexpr double kBottom = 50.0;
constexpr double kPlotW = kWidth - kLeft - kRight;
constexpr double kPlotH = kHeight - kTop - kBottom;

constexpr const char* kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c",
                                    "#d62728", "#9467bd", "#8c564b"};
constexpr std::size_t kPaletteSize = sizeof(kPalette) / sizeof(kPalette[0]);

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string fmt_tick(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

// Outward rounding to one significant digit keeps axis limits tidy without
// clipping data.
double round_down_1sig(double v) {
  if (v == 0.0) return 0.0;
  const double mag = std::pow(10.0, std::floor(std::log10(std::fabs(v))));
  return std::floor(v / mag) * mag;
}

double round_up_1sig(double v) {
  if (v == 0.0) return 0.0;
  const double mag = std::pow(10.0, std::floor(std::log10(std::fabs(v))));
  return std::ceil(v / mag) * mag;
}

}  // namespace

void write_svg_chart(const std::vector<AggregateCurve>& curves,
                     const std::filesystem::path& path) {
  if (curves.empty()) throw UsageError("write_svg_chart: no curves");
  std::size_t n = 0;
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const AggregateCurve& c : curves) {
    if (c.mean.empty())
      throw UsageError("write_svg_chart: curve \"" + c.name + "\" is empty");
    if (c.mean.size() != c.std_dev.size())
      throw UsageError("write_svg_chart: mean/std length mismatch in \"" +
                       c.name + "\"");
    n = std::max(n, c.mean.size());
    for (std::size_t i = 0; i < c.mean.size(); ++i) {
      lo = std::min(lo, c.mean[i] - c.std_dev[i]);
      hi = std::max(hi, c.mean[i] + c.std_dev[i]);
    }
  }
  lo = round_down_1sig(lo);
  hi = round_up_1sig(hi);
  if (hi <= lo) hi = lo + 1.0;

  const auto x_of = [n](std::size_t i) {
    if (n <= 1) return kLeft + kPlotW / 2.0;
    return kLeft + kPlotW * static_cast<double>(i) / static_cast<double>(n - 1);
  };
  const auto y_of = [lo, hi](double v) {
    return kTop + kPlotH - kPlotH * (v - lo) / (hi - lo);
  };

  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out.is_open()) throw ConfigError("cannot write svg: " + path.string());

  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"800\" "
         "height=\"500\" viewBox=\"0 0 800 500\">\n";
  out << "<rect width=\"800\" height=\"500\" fill=\"white\"/>\n";

  // Axes with 5 ticks each.
  out << "<g stroke=\"#333333\" stroke-width=\"1\">\n";
  out << "<line x1=\"" << fmt(kLeft) << "\" y1=\"" << fmt(kTop) << "\" x2=\""
      << fmt(kLeft) << "\" y2=\"" << fmt(kTop + kPlotH) << "\"/>\n";
  out << "<line x1=\"" << fmt(kLeft) << "\" y1=\"" << fmt(kTop + kPlotH)
      << "\" x2=\"" << fmt(kLeft + kPlotW) << "\" y2=\"" << fmt(kTop + kPlotH)
      << "\"/>\n";
  out << "</g>\n";
  out << "<g font-family=\"sans-serif\" font-size=\"12\" fill=\"#333333\">\n";
  for (int k = 0; k <= 4; ++k) {
    const double v = lo + (hi - lo) * k / 4.0;
    const double y = y_of(v);
    out << "<line x1=\"" << fmt(kLeft - 5) << "\" y1=\"" << fmt(y)
        << "\" x2=\"" << fmt(kLeft) << "\" y2=\"" << fmt(y)
        << "\" stroke=\"#333333\"/>\n";
    out << "<text x=\"" << fmt(kLeft - 9) << "\" y=\"" << fmt(y + 4)
        << "\" text-anchor=\"end\">" << fmt_tick(v) << "</text>\n";
  }
  for (int k = 0; k <= 4; ++k) {
    const std::size_t i =
        n <= 1 ? 0 : static_cast<std::size_t>(std::llround(
                         static_cast<double>(n - 1) * k / 4.0));
    const double x = x_of(i);
    out << "<line x1=\"" << fmt(x) << "\" y1=\"" << fmt(kTop + kPlotH)
        << "\" x2=\"" << fmt(x) << "\" y2=\"" << fmt(kTop + kPlotH + 5)
        << "\" stroke=\"#333333\"/>\n";
    out << "<text x=\"" << fmt(x) << "\" y=\"" << fmt(kTop + kPlotH + 18)
        << "\" text-anchor=\"middle\">" << i << "</text>\n";
    if (n <= 1) break;
  }
  out << "<text x=\"" << fmt(kLeft + kPlotW / 2) << "\" y=\""
      << fmt(kHeight - 12) << "\" text-anchor=\"middle\">episode</text>\n";
  out << "<text x=\"18\" y=\"" << fmt(kTop + kPlotH / 2)
      << "\" text-anchor=\"middle\" transform=\"rotate(-90 18 "
      << fmt(kTop + kPlotH / 2) << ")\">average total reward</text>\n";
  out << "</g>\n";

  // One band + one mean line per curve.
  for (std::size_t c = 0; c < curves.size(); ++c) {
    const AggregateCurve& curve = curves[c];
    const char* color = kPalette[c % kPaletteSize];
    const std::size_t m = curve.mean.size();

    out << "<polygon fill=\"" << color << "\" fill-opacity=\"0.2\" "
           "stroke=\"none\" points=\"";
    for (std::size_t i = 0; i < m; ++i)
      out << fmt(x_of(i)) << ',' << fmt(y_of(curve.mean[i] + curve.std_dev[i]))
          << ' ';
    for (std::size_t i = m; i-- > 0;)
      out << fmt(x_of(i)) << ',' << fmt(y_of(curve.mean[i] - curve.std_dev[i]))
          << (i == 0 ? "" : " ");
    out << "\"/>\n";

    out << "<polyline fill=\"none\" stroke=\"" << color
        << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < m; ++i)
      out << fmt(x_of(i)) << ',' << fmt(y_of(curve.mean[i]))
          << (i + 1 == m ? "" : " ");
    out << "\"/>\n";
  }

  // Legend, top-right corner of the plot area.
  out << "<g font-family=\"sans-serif\" font-size=\"12\" fill=\"#333333\">\n";
  for (std::size_t c = 0; c < curves.size(); ++c) {
    const double y = kTop + 14 + 18.0 * static_cast<double>(c);
    const double x = kLeft + kPlotW - 150;
    out << "<line x1=\"" << fmt(x) << "\" y1=\"" << fmt(y) << "\" x2=\""
        << fmt(x + 24) << "\" y2=\"" << fmt(y) << "\" stroke=\""
        << kPalette[c % kPaletteSize] << "\" stroke-width=\"2\"/>\n";
    out << "<text x=\"" << fmt(x + 30) << "\" y=\"" << fmt(y + 4) << "\">"
        << curves[c].name << "</text>\n";
  }
  out << "</g>\n";
  out << "</svg>\n";
}

}  // namespace imgrid::runner
