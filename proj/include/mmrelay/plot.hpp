// Static SVG line plots of result tables.
#pragma once

#include "mmrelay/scenario.hpp"

#include <string>
#include <vector>

namespace mmrelay {

struct PlotSpec {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<std::string> metrics;  // base names; series tags are kept
  bool db_axis = false;  // x in dB: ticks every 10 dB (decades)
  int width = 720;
  int height = 480;
};

PlotSpec plot_spec_for(const Scenario& s);

// One polyline per (scheme, mode, metric); infeasible or NaN rows break the
// line. Throws std::invalid_argument when no row matches.
std::string emit_plot(const ResultTable& t, const PlotSpec& spec);

}  // namespace mmrelay
