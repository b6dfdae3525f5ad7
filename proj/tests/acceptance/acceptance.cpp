// Acceptance run: one PASS/FAIL line per criterion, diagnostics indented
// below it. Exit status is the number of failed criteria.
#include "mmrelay/config.hpp"
#include "mmrelay/parallel.hpp"

#include <chrono>
#include <cstdarg>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <random>
#include <string>
#include <vector>

using namespace mmrelay;

namespace {

int failures = 0;
std::string notes;  // diagnostics of the running criterion

void note(const char* fmt, ...) __attribute__((format(printf, 1, 2)));
void note(const char* fmt, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, fmt);
  std::vsnprintf(buf, sizeof buf, fmt, ap);
  va_end(ap);
  notes += std::string("    ") + buf + "\n";
}

void criterion(int id, const std::string& what, const std::function<bool()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  notes.clear();
  bool ok = false;
  try {
    ok = body();
  } catch (const std::exception& e) {
    note("exception: %s", e.what());
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::printf("%s %2d %s (%.1f s)\n%s", ok ? "PASS" : "FAIL", id, what.c_str(), secs,
              notes.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

SystemConfig desk(double eta_db) {
  SystemConfig c = reference_config(128);
  c.Pt_max = db_to_lin(eta_db);
  return c;
}

SystemConfig tightness_config() {
  SystemConfig c = reference_config(256);
  c.K = 10;
  c.tau = 20;
  c.P_rho = dbm_to_mw(10);
  c.Du = Eigen::VectorXd::Ones(20);
  c.Dd = Eigen::VectorXd::Ones(20);
  c.sigma_UI = uniform_ui(10, 1.0);
  return c;
}

struct Tightness {
  double bound = 0, mc = 0, se = 0;
};

Tightness tightness(Scheme s) {
  const SystemConfig c = tightness_config();
  const PowerAllocation a = equal_power(c);
  const McRate mc = mc_ergodic_sum_rate(c, a, s, 500, 101);
  Tightness t;
  t.bound = bound_report(c, a, s).rate.sum();
  t.mc = mc.mean;
  t.se = mc.se;
  note("%s N=256 K=10: bound %.5f, MC %.5f +- %.5f (500 trials), ratio %.4f",
       scheme_name(s).c_str(), t.bound, t.mc, t.se, t.bound / t.mc);
  return t;
}

bool near_monotone(const std::vector<double>& v, double rel) {
  for (size_t i = 1; i < v.size(); ++i)
    if (v[i] < v[i - 1] * (1 - rel)) return false;
  return true;
}

double value_of(const ResultTable& t, const std::string& scheme, const std::string& mode,
                const std::string& metric, double x) {
  for (const auto& r : t.rows)
    if (r.scheme == scheme && r.mode == mode && r.metric == metric &&
        std::abs(r.sweep_value - x) < 1e-9)
      return r.infeasible ? std::nan("") : r.value;
  return std::nan("");
}

}  // namespace

int main() {
  std::printf("acceptance: %d worker(s)\n", worker_count());

  criterion(1, "ZF bound within 3% of Monte-Carlo at N=256", [] {
    const Tightness t = tightness(Scheme::kZf);
    return std::abs(t.bound - t.mc) <= 0.03 * t.mc + 3 * t.se;
  });

  criterion(2, "MRC bound below Monte-Carlo and within 10%", [] {
    const Tightness t = tightness(Scheme::kMrc);
    return t.bound <= t.mc + 3 * t.se && t.bound >= 0.9 * t.mc - 3 * t.se;
  });

  criterion(3, "closed-form moments match simulation (N=64, K=2, 1e4 trials)", [] {
    SystemConfig c = reference_config(64);
    c.K = 2;
    c.tau = 4;
    c.Du = Eigen::VectorXd::LinSpaced(4, 0.3, 1.0);
    c.Dd = Eigen::VectorXd::LinSpaced(4, 0.9, 0.4);
    c.sigma_UI = uniform_ui(2, 1.0);
    PowerAllocation a;
    a.p = Eigen::VectorXd::LinSpaced(4, 0.5, 1.5);
    a.P_R = 5.0;
    bool ok = true;
    for (Scheme s : {Scheme::kMrc, Scheme::kZf}) {
      const auto rows = moment_check(c, s, a, 10000, 303);
      double worst = 0;
      std::string which;
      for (const auto& r : rows) {
        if (std::abs(r.z()) > std::abs(worst)) {
          worst = r.z();
          which = r.identity + (r.user >= 0 ? "[" + std::to_string(r.user) + "]" : "");
        }
        if (!(std::abs(r.z()) < 3)) {
          ok = false;
          note("%s %s user %d: closed %.6g, MC %.6g +- %.3g", scheme_name(s).c_str(),
               r.identity.c_str(), r.user, r.closed, r.mc, r.se);
        }
      }
      note("%s: %zu rows, largest |z| = %.2f (%s)", scheme_name(s).c_str(), rows.size(),
           std::abs(worst), which.c_str());
    }
    return ok;
  });

  criterion(4, "relay gain and output power match the closed forms (1e4 draws)", [] {
    SystemConfig c = reference_config(64);
    c.K = 2;
    c.tau = 4;
    c.Du = Eigen::VectorXd::LinSpaced(4, 0.3, 1.0);
    c.Dd = Eigen::VectorXd::LinSpaced(4, 0.9, 0.4);
    c.sigma_UI = uniform_ui(2, 1.0);
    PowerAllocation a;
    a.p = Eigen::VectorXd::LinSpaced(4, 0.5, 1.5);
    a.P_R = 5.0;
    const HatVariances h = hat_variances(c);
    bool ok = true;
    for (Scheme s : {Scheme::kMrc, Scheme::kZf}) {
      const int draws = 10000;
      std::vector<double> v(draws);
      parallel_for(draws, [&](int t) {
        Rng rng = stream_rng(404, t);
        const LinkSample l = sample_link(c, rng);
        const Precoder W = make_precoder(l.est.Ghat, l.est.Fhat, s);
        v[t] = relay_power_denominator(W, c, l.real, a, rng, 1).mean;
      });
      double m = 0, m2 = 0;
      for (double x : v) m += x, m2 += x * x;
      m /= draws;
      const double se = std::sqrt((m2 / draws - m * m) / (draws - 1));
      const double alpha = alpha_closed(c, h, a, s);
      const double alpha_mc = std::sqrt(a.P_R / m);
      const double alpha_se = 0.5 * alpha_mc * se / m;
      const double out = alpha * alpha * m, out_se = alpha * alpha * se;
      note("%s: alpha closed %.6g, empirical %.6g +- %.2g; output power %.5f +- %.5f (P_R %.1f)",
           scheme_name(s).c_str(), alpha, alpha_mc, alpha_se, out, out_se, a.P_R);
      ok = ok && std::abs(alpha - alpha_mc) <= 3 * alpha_se &&
           std::abs(out - a.P_R) <= 3 * out_se;
    }
    return ok;
  });

  const Scenario eta = *find_builtin(builtin_scenarios(), "eta_sweep");
  ResultTable eta_table;

  criterion(5, "optimized EE dominates equal power on the eta grid", [&] {
    eta_table = run_scenario(eta);
    bool ok = true;
    for (const auto& scheme : {"mrc", "zf"}) {
      int strict = 0;
      for (double x : eta.grid) {
        const double o = value_of(eta_table, scheme, "ee", "ee", x);
        const double e = value_of(eta_table, scheme, "equal", "ee", x);
        if (!(o >= e)) {
          ok = false;
          note("%s eta %g: optimized %.6g < equal %.6g", scheme, x, o, e);
        }
        if (o > e * (1 + 1e-6)) ++strict;
      }
      note("%s: strict improvement at %d of %zu points", scheme, strict, eta.grid.size());
      ok = ok && 2 * strict >= static_cast<int>(eta.grid.size());
    }
    return ok;
  });

  criterion(6, "MRC EE saturates beyond its knee, equal-power EE falls after its peak", [&] {
    std::vector<double> opt, eq, pt;
    for (double x : eta.grid) {
      opt.push_back(value_of(eta_table, "mrc", "ee", "ee", x));
      eq.push_back(value_of(eta_table, "mrc", "equal", "ee", x));
      pt.push_back(value_of(eta_table, "mrc", "ee", "p_total", x));
    }
    size_t knee = opt.size();
    for (size_t i = 0; i < opt.size(); ++i)
      if (pt[i] < 0.99 * db_to_lin(eta.grid[i])) {
        knee = i;
        break;
      }
    const bool mono = near_monotone(opt, 1e-6);
    double lo = INFINITY, hi = 0;
    for (size_t i = knee; i < opt.size(); ++i) lo = std::min(lo, opt[i]), hi = std::max(hi, opt[i]);
    const bool flat = knee < opt.size() && (hi - lo) <= 0.02 * hi;
    size_t peak = 0;
    for (size_t i = 1; i < eq.size(); ++i)
      if (eq[i] > eq[peak]) peak = i;
    bool falls = peak + 1 < eq.size();
    for (size_t i = peak + 1; i < eq.size(); ++i) falls = falls && eq[i] < eq[i - 1];
    note("optimized EE non-decreasing: %s; knee at eta = %g dB (p_total %.3g mW); spread beyond "
         "knee %.3g%%",
         mono ? "yes" : "no", knee < opt.size() ? eta.grid[knee] : NAN,
         knee < opt.size() ? pt[knee] : NAN, knee < opt.size() ? 100 * (hi - lo) / hi : NAN);
    note("equal-power EE peak at eta = %g dB (%.6g), decreasing afterwards: %s", eta.grid[peak],
         eq[peak], falls ? "yes" : "no");
    return mono && flat && falls;
  });

  criterion(7, "Dinkelbach convergence envelopes at eta = 0 and 10 dB", [] {
    bool ok = true;
    for (double e : {0.0, 10.0})
      for (Scheme s : {Scheme::kMrc, Scheme::kZf}) {
        const SolveOutcome o = dinkelbach_ee(desk(e), s);
        const int cap = s == Scheme::kMrc ? 20 : 40;
        bool dec = true;
        for (size_t i = 1; i < o.D_trace.size(); ++i) dec = dec && o.D_trace[i] < o.D_trace[i - 1];
        const bool reached = !o.D_trace.empty() && std::abs(o.D_trace.back()) <= 1e-3;
        note("%s eta %g dB: %d iterations (cap %d), final D %.3g, strictly decreasing: %s",
             scheme_name(s).c_str(), e, o.iterations, cap,
             o.D_trace.empty() ? NAN : o.D_trace.back(), dec ? "yes" : "no");
        ok = ok && reached && o.iterations <= cap && dec;
      }
    return ok;
  });

  criterion(8, "QoS 0.5 bps/Hz: infeasible for eta <= 0 dB, EE within 1% for eta >= 5 dB", [] {
    bool ok = true;
    for (Scheme s : {Scheme::kMrc, Scheme::kZf})
      for (double e : {-10.0, -5.0, 0.0, 5.0, 10.0, 15.0, 20.0}) {
        const SystemConfig c = desk(e);
        OptimizerOptions q;
        q.qos = Eigen::VectorXd::Constant(c.users(), 0.5);
        const double free = dinkelbach_ee(c, s).ee;
        double with = NAN;
        bool feasible = true;
        std::string why;
        try {
          with = dinkelbach_ee(c, s, q).ee;
        } catch (const Infeasible& x) {
          feasible = false;
          why = std::string(" (") + x.what() + ")";
        }
        const bool expect_infeasible = e <= 0;
        bool pass = expect_infeasible ? !feasible
                                      : feasible && std::abs(with - free) <= 0.01 * free;
        if (e > 0 && e < 5) pass = true;
        note("%s eta %5.1f dB: %s, EE %.6g vs unconstrained %.6g%s%s", scheme_name(s).c_str(), e,
             feasible ? "feasible" : "infeasible", with, free, why.c_str(),
             pass ? "" : "  <-- violates");
        ok = ok && pass;
      }
    return ok;
  });

  criterion(9, "max-min EE improves the worst user at eta = 10 dB (ZF)", [] {
    const SystemConfig c = desk(10);
    const SolveOutcome o = maxmin_ee(c, Scheme::kZf);
    const SolveOutcome e = evaluate_allocation(c, Scheme::kZf, equal_power(c));
    const bool mono = near_monotone(o.lambda_trace, 1e-9);
    note("min user EE: max-min %.6g, equal power %.6g; %zu lambda updates, monotone: %s",
         o.min_user_ee, e.min_user_ee, o.lambda_trace.size(), mono ? "yes" : "no");
    return o.min_user_ee >= e.min_user_ee && mono;
  });

  criterion(10, "full duplex beats half duplex at 0 dB interference, loses at +10 dB", [] {
    bool ok = true;
    for (double lvl : {0.0, 10.0}) {
      SystemConfig c = desk(10);
      c.sigma_LIR2 = db_to_lin(lvl);
      c.sigma_UI = uniform_ui(c.K, db_to_lin(lvl));
      const double fd = dinkelbach_ee(c, Scheme::kMrc).ee;
      const double hd = 0.5 * dinkelbach_ee(half_duplex_config(c), Scheme::kMrc).ee;
      const SolveOutcome fd_eq = evaluate_allocation(c, Scheme::kMrc, equal_power(c));
      const SolveOutcome hd_eq =
          evaluate_allocation(half_duplex_config(c), Scheme::kMrc, equal_power(c));
      const bool pass = lvl == 0 ? fd > hd : fd < hd;
      note("interference %+g dB: FD EE %.6g, HD EE %.6g (equal power: FD %.6g, HD %.6g)%s", lvl,
           fd, hd, fd_eq.ee, 0.5 * hd_eq.ee, pass ? "" : "  <-- violates");
      ok = ok && pass;
    }
    return ok;
  });

  criterion(11, "monomial fit properties and ZF identity", [] {
    std::mt19937_64 gen(1111);
    std::uniform_real_distribution<double> u(-6, 6);
    double worst_tangent = 0, worst_over = -INFINITY;
    for (int i = 0; i < 100; ++i) {
      const double anchor = std::pow(10.0, u(gen));
      const MonomialFit f = monomial_fit(anchor);
      worst_tangent = std::max(worst_tangent, std::abs(f(anchor) / (1 + anchor) - 1));
      for (double g = -6; g <= 6.0001; g += 0.05) {
        const double gamma = std::pow(10.0, g);
        worst_over = std::max(worst_over, f(gamma) / (1 + gamma) - 1);
      }
    }
    SystemConfig c = reference_config(64);
    double worst_zf = 0;
    for (int t = 0; t < 100; ++t) {
      Rng rng = stream_rng(1112, t);
      const LinkSample l = sample_link(c, rng);
      const Precoder W = make_precoder(l.est.Ghat, l.est.Fhat, Scheme::kZf);
      const Eigen::MatrixXcd id = l.est.Fhat.transpose() * W.apply(l.est.Ghat);
      worst_zf = std::max(worst_zf, (id - permutation_map(c.K).cast<cd>()).cwiseAbs().maxCoeff());
    }
    note("tangency error %.2g, largest over-estimate %.2g, ZF identity error %.2g", worst_tangent,
         worst_over, worst_zf);
    return worst_tangent <= 1e-12 && worst_over <= 1e-12 && worst_zf <= 1e-8;
  });

  criterion(12, "seeded reruns give byte-identical CSV", [] {
    Scenario s = parse_config(R"(name = determinism
seed = 1212
K = 2
N = 32
tau = 4
sweep = eta
grid = 0, 10
schemes = mrc, zf
modes = ee, equal
trials = 100
ls_compare = true
)");
    const std::string a = to_csv(run_scenario(s));
    setenv("MMRELAY_THREADS", "1", 1);
    const std::string b = to_csv(run_scenario(s));
    unsetenv("MMRELAY_THREADS");
    const std::string c = to_csv(run_scenario(s));
    note("%zu bytes, reruns identical: %s", a.size(), a == b && a == c ? "yes" : "no");
    return a == b && a == c;
  });

  std::printf("acceptance: %d of 12 criteria failed\n", failures);
  return failures;
}
