#include "mmrelay/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace mmrelay {

namespace {

const char* const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
                                "#bcbd22", "#17becf"};

struct Series {
  std::string label;
  std::vector<std::pair<double, double>> pts;
};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string tick_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", std::abs(v) < 1e-12 ? 0.0 : v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string o;
  for (char c : s) {
    if (c == '<') o += "&lt;";
    else if (c == '>') o += "&gt;";
    else if (c == '&') o += "&amp;";
    else o += c;
  }
  return o;
}

double nice_step(double range, int target) {
  const double raw = range / target;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  for (double m : {1.0, 2.0, 2.5, 5.0, 10.0})
    if (m * mag >= raw) return m * mag;
  return 10 * mag;
}

std::vector<double> ticks(double lo, double hi, double step) {
  std::vector<double> t;
  for (double v = std::ceil(lo / step - 1e-9) * step; v <= hi + 1e-9 * step; v += step)
    t.push_back(v);
  return t;
}

}  // namespace

PlotSpec plot_spec_for(const Scenario& s) {
  PlotSpec p;
  p.title = s.name;
  std::string unit;
  switch (s.sweep) {
    case SweepVar::kPilot: unit = "P_rho (dBm)"; break;
    case SweepVar::kEta: unit = "eta (dB)"; break;
    case SweepVar::kRelayPower: unit = "P_R (dBm)"; break;
    case SweepVar::kInterference: unit = "LIR = UI (dB)"; break;
    default: unit = sweep_var_name(s.sweep);
  }
  p.x_label = unit;
  p.metrics = split_metrics(s.plot_metric);
  p.y_label = s.plot_metric;
  p.db_axis = sweep_is_db(s.sweep);
  return p;
}

std::string emit_plot(const ResultTable& t, const PlotSpec& spec) {
  std::vector<Series> series;
  for (const auto& r : t.rows) {
    const std::string base = r.metric.substr(0, r.metric.find('@'));
    if (std::find(spec.metrics.begin(), spec.metrics.end(), base) == spec.metrics.end())
      continue;
    const std::string label = r.scheme + " " + r.mode + " " + r.metric;
    auto it = std::find_if(series.begin(), series.end(),
                           [&](const Series& s) { return s.label == label; });
    if (it == series.end()) {
      series.push_back({label, {}});
      it = series.end() - 1;
    }
    const double y = r.infeasible ? std::nan("") : r.value;
    it->pts.emplace_back(r.sweep_value, y);
  }
  if (series.empty()) throw std::invalid_argument("emit_plot: no rows to plot");

  double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
  for (const auto& s : series)
    for (const auto& [x, y] : s.pts) {
      x0 = std::min(x0, x);
      x1 = std::max(x1, x);
      if (std::isfinite(y)) {
        y0 = std::min(y0, y);
        y1 = std::max(y1, y);
      }
    }
  if (!std::isfinite(y0)) y0 = 0, y1 = 1;
  if (x1 <= x0) x0 -= 1, x1 += 1;
  if (y1 <= y0) {
    const double pad = std::abs(y0) > 0 ? 0.1 * std::abs(y0) : 1.0;
    y0 -= pad;
    y1 += pad;
  } else {
    const double pad = 0.05 * (y1 - y0);
    y0 -= pad;
    y1 += pad;
  }

  const double L = 80, R = 220, Tm = 40, B = 60;
  const double W = spec.width, H = spec.height;
  const double pw = W - L - R, ph = H - Tm - B;
  auto sx = [&](double x) { return L + (x - x0) / (x1 - x0) * pw; };
  auto sy = [&](double y) { return Tm + (y1 - y) / (y1 - y0) * ph; };

  std::string o;
  o += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(W) +
       "\" height=\"" + num(H) + "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  o += "<rect x=\"0\" y=\"0\" width=\"" + num(W) + "\" height=\"" + num(H) +
       "\" fill=\"white\"/>\n";
  o += "<text x=\"" + num(W / 2) + "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" +
       escape(spec.title) + "</text>\n";
  o += "<rect x=\"" + num(L) + "\" y=\"" + num(Tm) + "\" width=\"" + num(pw) +
       "\" height=\"" + num(ph) + "\" fill=\"none\" stroke=\"black\"/>\n";

  double xstep = spec.db_axis ? 10.0 : nice_step(x1 - x0, 6);
  if (spec.db_axis && ticks(x0, x1, xstep).size() < 3) xstep = 5.0;
  for (double v : ticks(x0, x1, xstep)) {
    o += "<line x1=\"" + num(sx(v)) + "\" y1=\"" + num(Tm + ph) + "\" x2=\"" +
         num(sx(v)) + "\" y2=\"" + num(Tm + ph + 5) + "\" stroke=\"black\"/>\n";
    o += "<text x=\"" + num(sx(v)) + "\" y=\"" + num(Tm + ph + 20) +
         "\" text-anchor=\"middle\">" + tick_label(v) + "</text>\n";
  }
  for (double v : ticks(y0, y1, nice_step(y1 - y0, 6))) {
    o += "<line x1=\"" + num(L - 5) + "\" y1=\"" + num(sy(v)) + "\" x2=\"" + num(L) +
         "\" y2=\"" + num(sy(v)) + "\" stroke=\"black\"/>\n";
    o += "<text x=\"" + num(L - 8) + "\" y=\"" + num(sy(v) + 4) +
         "\" text-anchor=\"end\">" + tick_label(v) + "</text>\n";
  }
  o += "<text x=\"" + num(L + pw / 2) + "\" y=\"" + num(H - 15) +
       "\" text-anchor=\"middle\">" + escape(spec.x_label) + "</text>\n";
  o += "<text x=\"18\" y=\"" + num(Tm + ph / 2) + "\" text-anchor=\"middle\" transform=\"rotate(-90 18 " +
       num(Tm + ph / 2) + ")\">" + escape(spec.y_label) + "</text>\n";

  for (size_t i = 0; i < series.size(); ++i) {
    const char* color = kPalette[i % std::size(kPalette)];
    std::string pts;
    auto flush = [&] {
      if (!pts.empty())
        o += "<polyline fill=\"none\" stroke=\"" + std::string(color) +
             "\" stroke-width=\"1.5\" points=\"" + pts + "\"/>\n";
      pts.clear();
    };
    for (const auto& [x, y] : series[i].pts) {
      if (!std::isfinite(y)) {
        flush();
        continue;
      }
      if (!pts.empty()) pts += " ";
      pts += num(sx(x)) + "," + num(sy(y));
    }
    flush();
    const double ly = Tm + 10 + 18.0 * i;
    o += "<line x1=\"" + num(L + pw + 10) + "\" y1=\"" + num(ly) + "\" x2=\"" +
         num(L + pw + 30) + "\" y2=\"" + num(ly) + "\" stroke=\"" + color +
         "\" stroke-width=\"2\"/>\n";
    o += "<text x=\"" + num(L + pw + 35) + "\" y=\"" + num(ly + 4) + "\">" +
         escape(series[i].label) + "</text>\n";
  }
  o += "</svg>\n";
  return o;
}

}  // namespace mmrelay
