#include <deproj/io/plot.hpp>

#include <deproj/core/error.hpp>
#include <deproj/io/files.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace deproj {

namespace {

constexpr double kWidth = 640, kHeight = 440;
constexpr double kLeft = 80, kRight = 20, kTop = 40, kBottom = 60;
const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

std::string tick_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", v);
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

struct Axis {
  double lo = 0, hi = 1;
  bool log = false;
  double map(double v, double a, double b) const {
    const double t = log ? (std::log10(v) - std::log10(lo)) / (std::log10(hi) - std::log10(lo))
                         : (v - lo) / (hi - lo);
    return a + t * (b - a);
  }
  bool usable(double v) const { return std::isfinite(v) && (!log || v > 0); }
  std::vector<double> ticks() const {
    std::vector<double> t;
    if (log) {
      for (int e = int(std::floor(std::log10(lo))); e <= int(std::ceil(std::log10(hi))); ++e) {
        const double v = std::pow(10.0, e);
        if (v >= lo * (1 - 1e-12) && v <= hi * (1 + 1e-12)) t.push_back(v);
      }
    } else {
      const double step = std::pow(10.0, std::floor(std::log10((hi - lo) / 2)));
      for (double v = std::ceil(lo / step) * step; v <= hi + 1e-12 * step; v += step) t.push_back(v);
    }
    return t;
  }
};

Axis fit_axis(const std::vector<double>& values, bool log) {
  Axis a;
  a.log = log;
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (double v : values) {
    if (!a.usable(v)) continue;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  if (!std::isfinite(lo)) {
    lo = log ? 1 : 0;
    hi = log ? 10 : 1;
  }
  if (log) {
    if (hi <= lo) hi = lo * 10;
    a.lo = std::pow(10.0, std::floor(std::log10(lo)));
    a.hi = std::pow(10.0, std::ceil(std::log10(hi)));
    if (a.hi <= a.lo) a.hi = a.lo * 10;
  } else {
    if (hi <= lo) hi = lo + 1;
    const double pad = 0.05 * (hi - lo);
    a.lo = lo - pad;
    a.hi = hi + pad;
  }
  return a;
}

}  // namespace

std::string render_svg(const PlotSpec& spec) {
  std::vector<double> xs, ys;
  for (const auto& s : spec.series) {
    xs.insert(xs.end(), s.x.begin(), s.x.end());
    ys.insert(ys.end(), s.y.begin(), s.y.end());
    ys.insert(ys.end(), s.lower.begin(), s.lower.end());
    ys.insert(ys.end(), s.upper.begin(), s.upper.end());
  }
  const Axis ax = fit_axis(xs, spec.log_x), ay = fit_axis(ys, spec.log_y);
  const double x0 = kLeft, x1 = kWidth - kRight, y0 = kHeight - kBottom, y1 = kTop;

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
      << kHeight << "\" viewBox=\"0 0 " << kWidth << " " << kHeight
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<text x=\"" << fmt(kWidth / 2) << "\" y=\"24\" text-anchor=\"middle\" font-size=\"14\">"
      << escape(spec.title) << "</text>\n";
  svg << "<rect x=\"" << fmt(x0) << "\" y=\"" << fmt(y1) << "\" width=\"" << fmt(x1 - x0)
      << "\" height=\"" << fmt(y0 - y1) << "\" fill=\"none\" stroke=\"black\"/>\n";

  for (double t : ax.ticks()) {
    const double px = ax.map(t, x0, x1);
    svg << "<line x1=\"" << fmt(px) << "\" y1=\"" << fmt(y0) << "\" x2=\"" << fmt(px) << "\" y2=\""
        << fmt(y0 + 5) << "\" stroke=\"black\"/>\n";
    svg << "<text x=\"" << fmt(px) << "\" y=\"" << fmt(y0 + 18) << "\" text-anchor=\"middle\">"
        << tick_label(t) << "</text>\n";
  }
  for (double t : ay.ticks()) {
    const double py = ay.map(t, y0, y1);
    svg << "<line x1=\"" << fmt(x0 - 5) << "\" y1=\"" << fmt(py) << "\" x2=\"" << fmt(x0)
        << "\" y2=\"" << fmt(py) << "\" stroke=\"black\"/>\n";
    svg << "<text x=\"" << fmt(x0 - 8) << "\" y=\"" << fmt(py + 4) << "\" text-anchor=\"end\">"
        << tick_label(t) << "</text>\n";
  }
  svg << "<text x=\"" << fmt((x0 + x1) / 2) << "\" y=\"" << fmt(kHeight - 16)
      << "\" text-anchor=\"middle\">" << escape(spec.x_label) << "</text>\n";
  svg << "<text transform=\"translate(18," << fmt((y0 + y1) / 2)
      << ") rotate(-90)\" text-anchor=\"middle\">" << escape(spec.y_label) << "</text>\n";

  int legend_row = 0;
  for (const auto& s : spec.series) {
    if (!s.lower.empty() && s.lower.size() == s.x.size() && s.upper.size() == s.x.size()) {
      std::ostringstream pts;
      std::vector<std::pair<double, double>> back;
      for (std::size_t i = 0; i < s.x.size(); ++i) {
        if (!ax.usable(s.x[i]) || !ay.usable(s.lower[i]) || !ay.usable(s.upper[i])) continue;
        pts << fmt(ax.map(s.x[i], x0, x1)) << "," << fmt(ay.map(s.upper[i], y0, y1)) << " ";
        back.emplace_back(ax.map(s.x[i], x0, x1), ay.map(s.lower[i], y0, y1));
      }
      for (auto it = back.rbegin(); it != back.rend(); ++it)
        pts << fmt(it->first) << "," << fmt(it->second) << " ";
      svg << "<polygon points=\"" << pts.str() << "\" fill=\"" << s.color
          << "\" fill-opacity=\"0.2\" stroke=\"none\"/>\n";
    }
    std::ostringstream pts;
    for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
      if (!ax.usable(s.x[i]) || !ay.usable(s.y[i])) continue;
      pts << fmt(ax.map(s.x[i], x0, x1)) << "," << fmt(ay.map(s.y[i], y0, y1)) << " ";
    }
    svg << "<polyline points=\"" << pts.str() << "\" fill=\"none\" stroke=\"" << s.color
        << "\" stroke-width=\"1.5\"/>\n";
    const double ly = y1 + 16 + 16 * legend_row++;
    svg << "<line x1=\"" << fmt(x1 - 150) << "\" y1=\"" << fmt(ly - 4) << "\" x2=\""
        << fmt(x1 - 130) << "\" y2=\"" << fmt(ly - 4) << "\" stroke=\"" << s.color
        << "\" stroke-width=\"2\"/>\n";
    svg << "<text x=\"" << fmt(x1 - 125) << "\" y=\"" << fmt(ly) << "\">" << escape(s.label)
        << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

namespace {

std::string base_name(const std::string& path) {
  const auto slash = path.find_last_of('/');
  return slash == std::string::npos ? path : path.substr(slash + 1);
}

std::vector<double> exp_all(std::vector<double> v) {
  for (double& x : v) x = std::exp(x);
  return v;
}

}  // namespace

std::string plot_csv_files(const std::vector<std::string>& paths, const std::string& title) {
  DEPROJ_REQUIRE(!paths.empty(), UsageError, "plot needs at least one input file");
  PlotSpec spec;
  spec.title = title;
  std::size_t color = 0;
  auto next_color = [&] { return kPalette[color++ % (sizeof(kPalette) / sizeof(kPalette[0]))]; };

  for (const auto& path : paths) {
    const CsvTable t = read_csv(path);
    const std::string name = base_name(path);
    if (t.column("method") >= 0 && t.column("mean_mse100") >= 0) {
      // comparison table: one point per method, x = image side
      const Index mc = t.column("method");
      std::vector<std::string> methods;
      for (const auto& row : t.rows)
        if (std::find(methods.begin(), methods.end(), row[std::size_t(mc)]) == methods.end())
          methods.push_back(row[std::size_t(mc)]);
      const auto ns = t.numbers("n"), means = t.numbers("mean_mse100");
      for (const auto& m : methods) {
        PlotSeries s;
        s.label = name + ": " + m;
        s.color = next_color();
        for (std::size_t r = 0; r < t.rows.size(); ++r) {
          if (t.rows[r][std::size_t(mc)] != m) continue;
          s.x.push_back(ns[r]);
          s.y.push_back(means[r]);
        }
        spec.series.push_back(std::move(s));
      }
      spec.x_label = "image side N";
      spec.y_label = "MSE of log-profile (x100)";
    } else if (t.column("lower") >= 0 && t.column("upper") >= 0) {
      PlotSeries s;
      s.label = name;
      s.color = next_color();
      s.x = t.numbers("radius");
      s.y = exp_all(t.numbers("estimate"));
      s.lower = exp_all(t.numbers("lower"));
      s.upper = exp_all(t.numbers("upper"));
      spec.series.push_back(std::move(s));
    } else if (t.column("radius") >= 0) {
      const char* col = t.column("mean") >= 0 ? "mean" : "emissivity";
      DEPROJ_REQUIRE(t.column(col) >= 0, ValidationError,
                     path + ": profile csv needs a 'mean' or 'emissivity' column");
      PlotSeries s;
      s.label = name;
      s.color = next_color();
      s.x = t.numbers("radius");
      s.y = t.numbers(col);
      spec.series.push_back(std::move(s));
    } else {
      throw ValidationError(path + ": unrecognized csv layout for plotting");
    }
  }
  return render_svg(spec);
}

}  // namespace deproj
