#include "pmdlab/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <vector>

namespace pmdlab {

namespace {

constexpr const char* kGapColor = "#1f77b4";
constexpr const char* kEtaColor = "#ff7f0e";
constexpr const char* kRefColor = "#2ca02c";

struct Panel {
  double x0, y0, x1, y1;  // plot rectangle, y0 = top
};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

std::string tick_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3g", v);
  return buf;
}

void draw_frame(std::ostringstream& out, const Panel& p) {
  out << "<rect x=\"" << num(p.x0) << "\" y=\"" << num(p.y0) << "\" width=\""
      << num(p.x1 - p.x0) << "\" height=\"" << num(p.y1 - p.y0)
      << "\" fill=\"none\" stroke=\"#333333\" stroke-width=\"1\"/>\n";
}

void draw_text(std::ostringstream& out, double x, double y,
               const std::string& text, const std::string& anchor = "middle") {
  out << "<text x=\"" << num(x) << "\" y=\"" << num(y)
      << "\" font-family=\"monospace\" font-size=\"12\" text-anchor=\"" << anchor
      << "\">" << text << "</text>\n";
}

void draw_polyline(std::ostringstream& out,
                   const std::vector<std::pair<double, double>>& pts,
                   const std::string& color) {
  if (pts.size() < 2) return;
  out << "<polyline fill=\"none\" stroke=\"" << color
      << "\" stroke-width=\"1.5\" points=\"";
  for (const auto& [x, y] : pts) out << num(x) << ',' << num(y) << ' ';
  out << "\"/>\n";
}

}  // namespace

std::string render_convergence_svg(const CsvTable& trace,
                                   const SvgOptions& options) {
  std::vector<double> iter, gap, eta, bound;
  if (trace.has_column("iter")) iter = trace.column("iter");
  if (trace.has_column("sup_gap")) gap = trace.column("sup_gap");
  if (trace.has_column("eta")) eta = trace.column("eta");
  if (trace.has_column("bound_theorem1")) bound = trace.column("bound_theorem1");
  const std::size_t n = iter.size();

  double x_max = 1.0;
  for (double x : iter) x_max = std::max(x_max, x);

  // Reference series over the iteration range.
  std::vector<double> ref(n, std::numeric_limits<double>::quiet_NaN());
  std::string ref_label;
  if (options.reference == SvgReference::GammaCurve) {
    ref_label = "reference " + tick_label(options.scale) + "*gamma^x";
    for (std::size_t i = 0; i < n; ++i) {
      ref[i] = options.scale * std::pow(options.gamma, iter[i]);
    }
  } else {
    ref_label = "theorem bound";
    for (std::size_t i = 0; i < n && i < bound.size(); ++i) ref[i] = bound[i];
  }

  // Log range of the left panel from gap and reference values.
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  auto widen = [&](double v) {
    if (std::isfinite(v) && v > 0.0) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  };
  for (std::size_t i = 0; i < gap.size(); ++i) widen(gap[i]);
  for (std::size_t i = 0; i < ref.size(); ++i) widen(ref[i]);
  if (!(lo < hi)) {
    lo = 1e-3;
    hi = 1.0;
  }
  double log_lo = std::floor(std::log10(lo));
  double log_hi = std::ceil(std::log10(hi));
  if (log_hi <= log_lo) log_hi = log_lo + 1.0;

  // Linear range of the right panel.
  double eta_max = 0.0;
  for (double e : eta) {
    if (std::isfinite(e)) eta_max = std::max(eta_max, e);
  }
  if (eta_max <= 0.0) eta_max = 1.0;

  const Panel left{70, 50, 480, 390};
  const Panel right{590, 50, 1000, 390};
  auto map_x = [&](const Panel& p, double x) {
    return p.x0 + (p.x1 - p.x0) * (x / x_max);
  };
  auto map_log = [&](double v) {
    const double t = (std::log10(v) - log_lo) / (log_hi - log_lo);
    return left.y1 - (left.y1 - left.y0) * t;
  };
  auto map_lin = [&](double v) {
    return right.y1 - (right.y1 - right.y0) * (v / eta_max);
  };

  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"1040\" "
         "height=\"440\" viewBox=\"0 0 1040 440\">\n";
  out << "<rect width=\"1040\" height=\"440\" fill=\"#ffffff\"/>\n";
  if (!options.title.empty()) {
    draw_text(out, 520, 24, options.title);
  }

  draw_frame(out, left);
  draw_frame(out, right);
  draw_text(out, (left.x0 + left.x1) / 2, 415, "iteration");
  draw_text(out, (right.x0 + right.x1) / 2, 415, "iteration");
  draw_text(out, left.x0, 40, "sup gap (log scale)", "start");
  draw_text(out, right.x0, 40, "step size", "start");

  // x ticks, 5 per panel.
  for (int t = 0; t <= 4; ++t) {
    const double xv = x_max * t / 4.0;
    for (const Panel& p : {left, right}) {
      const double px = map_x(p, xv);
      out << "<line x1=\"" << num(px) << "\" y1=\"" << num(p.y1) << "\" x2=\""
          << num(px) << "\" y2=\"" << num(p.y1 + 4) << "\" stroke=\"#333333\"/>\n";
      draw_text(out, px, p.y1 + 18, tick_label(xv));
    }
  }
  // Left y ticks at powers of ten.
  const int decades = static_cast<int>(log_hi - log_lo);
  const int stride = std::max(1, (decades + 7) / 8);
  for (int d = 0; d <= decades; d += stride) {
    const double v = std::pow(10.0, log_lo + d);
    const double py = map_log(v);
    out << "<line x1=\"" << num(left.x0 - 4) << "\" y1=\"" << num(py)
        << "\" x2=\"" << num(left.x0) << "\" y2=\"" << num(py)
        << "\" stroke=\"#333333\"/>\n";
    draw_text(out, left.x0 - 8, py + 4, "1e" + tick_label(log_lo + d), "end");
  }
  // Right y ticks, 5 evenly spaced.
  for (int t = 0; t <= 4; ++t) {
    const double v = eta_max * t / 4.0;
    const double py = map_lin(v);
    out << "<line x1=\"" << num(right.x0 - 4) << "\" y1=\"" << num(py)
        << "\" x2=\"" << num(right.x0) << "\" y2=\"" << num(py)
        << "\" stroke=\"#333333\"/>\n";
    draw_text(out, right.x0 - 8, py + 4, tick_label(v), "end");
  }

  // Series.
  std::vector<std::pair<double, double>> pts;
  auto collect_log = [&](const std::vector<double>& ys) {
    pts.clear();
    for (std::size_t i = 0; i < n && i < ys.size(); ++i) {
      if (std::isfinite(ys[i]) && ys[i] > 0.0) {
        pts.emplace_back(map_x(left, iter[i]), map_log(ys[i]));
      }
    }
  };
  collect_log(ref);
  draw_polyline(out, pts, kRefColor);
  collect_log(gap);
  draw_polyline(out, pts, kGapColor);

  pts.clear();
  for (std::size_t i = 0; i < n && i < eta.size(); ++i) {
    if (std::isfinite(eta[i])) {
      pts.emplace_back(map_x(right, iter[i]), map_lin(eta[i]));
    }
  }
  draw_polyline(out, pts, kEtaColor);

  // Legend.
  const double lx = left.x0 + 12;
  double ly = left.y0 + 16;
  auto legend_entry = [&](const char* color, const std::string& label) {
    out << "<line x1=\"" << num(lx) << "\" y1=\"" << num(ly - 4) << "\" x2=\""
        << num(lx + 24) << "\" y2=\"" << num(ly - 4) << "\" stroke=\"" << color
        << "\" stroke-width=\"1.5\"/>\n";
    draw_text(out, lx + 30, ly, label, "start");
    ly += 16;
  };
  legend_entry(kGapColor, "sup gap");
  legend_entry(kRefColor, ref_label);
  legend_entry(kEtaColor, "step size (right)");

  out << "</svg>\n";
  return out.str();
}

}  // namespace pmdlab
