#include "mmrelay/scenario.hpp"

#include "mmrelay/config.hpp"
#include "mmrelay/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <set>

namespace mmrelay {

namespace {

const std::vector<std::pair<SweepVar, std::string>>& sweep_names() {
  static const std::vector<std::pair<SweepVar, std::string>> v = {
      {SweepVar::kPilot, "P_rho"},
      {SweepVar::kEta, "eta"},
      {SweepVar::kQos, "qos_level"},
      {SweepVar::kIterations, "iterations"},
      {SweepVar::kRelayPower, "P_R"},
      {SweepVar::kInterference, "interference"},
      {SweepVar::kAntennas, "N"}};
  return v;
}

const std::vector<std::pair<Mode, std::string>>& mode_names() {
  static const std::vector<std::pair<Mode, std::string>> v = {
      {Mode::kEe, "ee"},
      {Mode::kMaxMin, "maxmin"},
      {Mode::kSe, "se"},
      {Mode::kEqual, "equal"},
      {Mode::kNone, "none"}};
  return v;
}

void require(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument(what);
}

struct Point {
  SystemConfig cfg;
  double qos = 0;
  double relay_mw = 0;
};

void apply(Point& p, SweepVar v, double x) {
  switch (v) {
    case SweepVar::kPilot: p.cfg.P_rho = dbm_to_mw(x); break;
    case SweepVar::kEta: p.cfg.Pt_max = db_to_lin(x); break;
    case SweepVar::kQos: p.qos = x; break;
    case SweepVar::kRelayPower: p.relay_mw = dbm_to_mw(x); break;
    case SweepVar::kInterference:
      p.cfg.sigma_LIR2 = db_to_lin(x);
      p.cfg.sigma_UI = uniform_ui(p.cfg.K, db_to_lin(x));
      break;
    case SweepVar::kAntennas: p.cfg.N = static_cast<int>(std::lround(x)); break;
    case SweepVar::kIterations: break;
  }
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string short_num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

const std::set<std::string>& known_metrics() {
  static const std::set<std::string> m = {"se", "ee", "min_user_ee", "p_total",
                                          "se_mc", "se_mc_ls", "lambda", "D"};
  return m;
}

struct Emitter {
  const Scenario& s;
  double sweep_value;
  std::string suffix;  // series tag appended to metric names
  std::vector<ResultRow>& out;

  void row(const std::string& scheme, const std::string& mode,
           const std::string& metric, double value, double se = 0,
           bool infeasible = false) {
    ResultRow r;
    r.scenario = s.name;
    r.sweep_var = sweep_var_name(s.sweep);
    r.sweep_value = sweep_value;
    r.scheme = scheme;
    r.mode = mode;
    r.metric = metric + suffix;
    r.value = infeasible ? std::numeric_limits<double>::quiet_NaN() : value;
    r.se = se;
    r.infeasible = infeasible;
    r.seed = s.seed;
    out.push_back(std::move(r));
  }
};

OptimizerOptions optimizer_options(const Scenario& s, const Point& p) {
  OptimizerOptions o;
  o.L = s.max_outer;
  if (p.qos > 0) o.qos = Eigen::VectorXd::Constant(p.cfg.users(), p.qos);
  return o;
}

SolveOutcome run_mode(Mode m, const SystemConfig& cfg, Scheme scheme,
                      const OptimizerOptions& o, const Point& p) {
  switch (m) {
    case Mode::kEe: return dinkelbach_ee(cfg, scheme, o);
    case Mode::kMaxMin: return maxmin_ee(cfg, scheme, o);
    case Mode::kSe: return maximize_se(cfg, scheme, o);
    case Mode::kEqual: return evaluate_allocation(cfg, scheme, equal_power(cfg));
    case Mode::kNone: {
      PowerAllocation a;
      a.P_R = p.relay_mw;
      a.p = Eigen::VectorXd::Constant(cfg.users(), p.relay_mw / cfg.users());
      return evaluate_allocation(cfg, scheme, a);
    }
  }
  throw std::logic_error("unknown mode");
}

void emit_point(const Scenario& s, const Point& p, Scheme scheme, Emitter& em) {
  const std::string sch = scheme_name(scheme);
  const OptimizerOptions o = optimizer_options(s, p);
  for (Mode m : s.modes) {
    const std::string md = mode_name(m);
    try {
      const SolveOutcome r = run_mode(m, p.cfg, scheme, o, p);
      em.row(sch, md, "se", r.se);
      em.row(sch, md, "ee", r.ee);
      em.row(sch, md, "min_user_ee", r.min_user_ee);
      em.row(sch, md, "p_total", r.alloc.transmit_total());
      if (s.trials > 0) {
        const double pre = prelog(p.cfg);
        const McRate mc = mc_ergodic_sum_rate(p.cfg, r.alloc, scheme, s.trials, s.seed);
        em.row(sch, md, "se_mc", pre * mc.mean, pre * mc.se);
        if (s.ls_compare) {
          const McRate ls = mc_ergodic_sum_rate(p.cfg, r.alloc, scheme, s.trials,
                                                s.seed, Estimator::kLs);
          em.row(sch, md, "se_mc_ls", pre * ls.mean, pre * ls.se);
        }
      }
    } catch (const Infeasible&) {
      for (const char* metric : {"se", "ee", "min_user_ee", "p_total"})
        em.row(sch, md, metric, 0, 0, true);
    }
    if (s.half_duplex) {
      const std::string hd = md + "_hd";
      try {
        const SolveOutcome r = run_mode(m, half_duplex_config(p.cfg), scheme, o, p);
        em.row(sch, hd, "se", 0.5 * r.se);
        em.row(sch, hd, "ee", 0.5 * r.ee);
      } catch (const Infeasible&) {
        em.row(sch, hd, "se", 0, 0, true);
        em.row(sch, hd, "ee", 0, 0, true);
      }
    }
  }
}

void emit_trace(const Scenario& s, const Point& p, Scheme scheme, Mode m,
                std::vector<ResultRow>& out, const std::string& suffix) {
  const std::string sch = scheme_name(scheme);
  const std::string md = mode_name(m);
  const OptimizerOptions o = optimizer_options(s, p);
  SolveOutcome r;
  bool infeasible = false;
  try {
    r = m == Mode::kEe ? dinkelbach_ee(p.cfg, scheme, o)
                       : maxmin_ee(p.cfg, scheme, o);
  } catch (const Infeasible&) {
    infeasible = true;
  }
  for (double g : s.grid) {
    Emitter em{s, g, suffix, out};
    if (infeasible) {
      for (const char* metric : {"lambda", "D", "ee"})
        em.row(sch, md, metric, 0, 0, true);
      continue;
    }
    const size_t i = std::min<size_t>(static_cast<size_t>(g) - 1, r.trace.size() - 1);
    const TraceRow& t = r.trace[i];
    em.row(sch, md, "lambda", t.lambda);
    em.row(sch, md, "D", t.D);
    em.row(sch, md, "ee", t.ee_true);
    em.row(sch, md, "se", t.se_true);
    em.row(sch, md, "min_user_ee", t.min_user_ee);
  }
}

std::string series_suffix(const Scenario& s, double v) {
  return s.has_series ? "@" + sweep_var_name(s.series) + "=" + short_num(v) : "";
}

}  // namespace

std::string sweep_var_name(SweepVar v) {
  for (const auto& [k, n] : sweep_names())
    if (k == v) return n;
  return "?";
}

SweepVar parse_sweep_var(const std::string& s) {
  for (const auto& [k, n] : sweep_names())
    if (n == s) return k;
  throw std::invalid_argument("unknown sweep variable '" + s + "'");
}

bool sweep_is_db(SweepVar v) {
  return v == SweepVar::kPilot || v == SweepVar::kEta ||
         v == SweepVar::kRelayPower || v == SweepVar::kInterference;
}

std::string mode_name(Mode m) {
  for (const auto& [k, n] : mode_names())
    if (k == m) return n;
  return "?";
}

Mode parse_mode(const std::string& s) {
  for (const auto& [k, n] : mode_names())
    if (n == s) return k;
  throw std::invalid_argument("unknown mode '" + s + "'");
}

void Scenario::validate() const {
  require(!grid.empty(), "grid: must not be empty");
  for (size_t i = 1; i < grid.size(); ++i)
    require(grid[i] > grid[i - 1], "grid: must be strictly increasing");
  require(!schemes.empty(), "schemes: must not be empty");
  require(!modes.empty(), "modes: must not be empty");
  require(trials >= 0, "trials: must be non-negative");
  require(!ls_compare || trials > 0, "ls_compare: needs trials > 0");
  require(qos_rate >= 0, "qos_rate: must be non-negative");
  require(max_outer >= 1, "max_outer: must be at least 1");
  for (const auto& m : split_metrics(plot_metric))
    require(known_metrics().count(m) > 0, "plot_metric: unknown metric '" + m + "'");
  if (has_series) {
    require(!series_grid.empty(), "series_grid: must not be empty");
    require(series != sweep, "series: must differ from sweep");
    require(series != SweepVar::kIterations && series != SweepVar::kRelayPower,
            "series: cannot be " + sweep_var_name(series));
  }
  const bool none = std::find(modes.begin(), modes.end(), Mode::kNone) != modes.end();
  if (sweep == SweepVar::kRelayPower)
    require(none && modes.size() == 1, "modes: sweep P_R needs mode none only");
  else
    require(!none, "modes: mode none needs sweep P_R");
  if (sweep == SweepVar::kIterations) {
    for (Mode m : modes)
      require(m == Mode::kEe || m == Mode::kMaxMin,
              "modes: iteration sweep needs ee or maxmin");
    for (double g : grid)
      require(g >= 1 && g == std::floor(g), "grid: iterations must be positive integers");
    require(!half_duplex, "half_duplex: not available for iteration sweeps");
  }
  const bool zf = std::find(schemes.begin(), schemes.end(), Scheme::kZf) != schemes.end();
  const std::vector<double> one{0.0};
  for (double sv : has_series ? series_grid : one)
    for (double g : grid) {
      Point p{base, qos_rate, 0};
      if (has_series) apply(p, series, sv);
      apply(p, sweep, g);
      p.cfg.validate(zf);
    }
}

std::vector<std::string> split_metrics(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s + ",") {
    if (c == ',') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else if (c != ' ') {
      cur += c;
    }
  }
  return out;
}

std::string csv_header() {
  return "scenario,sweep_var,sweep_value,scheme,mode,metric,value,stderr,seed\n";
}

std::string to_csv(const ResultTable& t) {
  std::string o = csv_header();
  for (const auto& r : t.rows) {
    o += r.scenario + "," + r.sweep_var + "," + fmt(r.sweep_value) + "," +
         r.scheme + "," + r.mode + "," + r.metric + "," +
         (r.infeasible ? std::string("infeasible") : fmt(r.value)) + "," +
         fmt(r.se) + "," + std::to_string(r.seed) + "\n";
  }
  return o;
}

ResultTable run_scenario(const Scenario& s) {
  s.validate();
  const std::vector<double> one{0.0};
  const std::vector<double>& series = s.has_series ? s.series_grid : one;

  struct Task {
    double series_value;
    double sweep_value;
    Scheme scheme;
    Mode mode;
  };
  std::vector<Task> tasks;
  for (double sv : series)
    for (Scheme sch : s.schemes) {
      if (s.sweep == SweepVar::kIterations) {
        for (Mode m : s.modes) tasks.push_back({sv, 0, sch, m});
      } else {
        for (double g : s.grid) tasks.push_back({sv, g, sch, Mode::kNone});
      }
    }

  std::vector<std::vector<ResultRow>> parts(tasks.size());
  parallel_for(static_cast<int>(tasks.size()), [&](int i) {
    const Task& t = tasks[i];
    Point p{s.base, s.qos_rate, 0};
    if (s.has_series) apply(p, s.series, t.series_value);
    const std::string suffix = series_suffix(s, t.series_value);
    if (s.sweep == SweepVar::kIterations) {
      emit_trace(s, p, t.scheme, t.mode, parts[i], suffix);
      return;
    }
    apply(p, s.sweep, t.sweep_value);
    Emitter em{s, t.sweep_value, suffix, parts[i]};
    emit_point(s, p, t.scheme, em);
  });

  ResultTable table;
  for (auto& part : parts)
    for (auto& r : part) {
      table.any_infeasible |= r.infeasible;
      table.rows.push_back(std::move(r));
    }
  return table;
}

Scenario paper_scale(Scenario s) {
  const bool varies_n = s.sweep == SweepVar::kAntennas ||
                        (s.has_series && s.series == SweepVar::kAntennas);
  if (!varies_n) s.base.N = 500;
  if (s.base.K != 5) {
    s.base.K = 5;
    s.base.tau = std::max(s.base.tau, 10);
    const double ui = s.base.sigma_UI.maxCoeff();
    s.base.sigma_UI = uniform_ui(5, ui);
    const SystemConfig ref = reference_config();
    s.base.Du = ref.Du;
    s.base.Dd = ref.Dd;
  }
  return s;
}

namespace {

const char* const kBuiltin[] = {
    R"(name = pilot_sweep
seed = 11
sweep = P_rho
grid = -10:5:40
series = eta
series_grid = 0, 20
schemes = mrc, zf
modes = ee, equal
)",
    R"(name = eta_sweep
seed = 12
sweep = eta
grid = -10:2:20
schemes = mrc, zf
modes = ee, equal
)",
    R"(name = qos_sweep
seed = 13
sweep = eta
grid = -10:2.5:20
series = qos_level
series_grid = 0, 0.2, 0.5, 0.7
schemes = zf
modes = ee
)",
    R"(name = convergence
seed = 14
sweep = iterations
grid = 1:1:40
series = eta
series_grid = 0, 10
schemes = mrc, zf
modes = ee
plot_metric = ee
)",
    R"(name = bound_vs_exact
seed = 15
K = 10
tau = 20
p_rho_dbm = 10
du = 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1
dd = 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1
sweep = P_R
grid = -10:5:30
series = N
series_grid = 64, 256
schemes = mrc, zf
modes = none
trials = 500
plot_metric = se, se_mc
)",
    R"(name = se_comparison
seed = 16
sweep = P_rho
grid = -10:5:30
schemes = mrc, zf
modes = se, equal
trials = 200
ls_compare = true
plot_metric = se
)",
    R"(name = fd_vs_hd
seed = 17
sweep = eta
grid = -10:5:20
series = interference
series_grid = -10, 0, 10
schemes = mrc, zf
modes = ee
half_duplex = true
plot_metric = ee
)",
};

}  // namespace

std::vector<Scenario> builtin_scenarios() {
  std::vector<Scenario> out;
  for (const char* text : kBuiltin) out.push_back(parse_config(text, "builtin"));
  return out;
}

const Scenario* find_builtin(const std::vector<Scenario>& all,
                             const std::string& name) {
  for (const auto& s : all)
    if (s.name == name) return &s;
  return nullptr;
}

}  // namespace mmrelay
