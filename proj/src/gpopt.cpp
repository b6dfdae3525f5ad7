#include "mmrelay/gpopt.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <numbers>

namespace mmrelay {

double MonomialFit::operator()(double gamma) const {
  return delta * std::pow(gamma, alpha);
}

MonomialFit monomial_fit(double gamma_anchor) {
  if (!(gamma_anchor > 0) || !std::isfinite(gamma_anchor))
    throw std::invalid_argument("monomial_fit: anchor must be positive");
  MonomialFit f;
  f.anchor = gamma_anchor;
  f.alpha = gamma_anchor / (1.0 + gamma_anchor);
  f.delta = std::pow(gamma_anchor, -f.alpha) * (1.0 + gamma_anchor);
  return f;
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double mono_arg(const Monomial& m, const Eigen::VectorXd& y) {
  double u = m.log_coef;
  for (const auto& [i, a] : m.exps) u += a * y(i);
  return u;
}

void add_grad(Eigen::VectorXd& g, const Monomial& m, double w) {
  for (const auto& [i, a] : m.exps) g(i) += w * a;
}

void add_outer(Eigen::MatrixXd& H, const Monomial& m, double w) {
  for (const auto& [i, a] : m.exps)
    for (const auto& [j, b] : m.exps) H(i, j) += w * a * b;
}

struct Eval {
  double v = 0;
  Eigen::VectorXd g;
  Eigen::MatrixXd H;
};

double lin_dot(const std::vector<std::pair<int, double>>& lin,
               const Eigen::VectorXd& y) {
  double s = 0;
  for (const auto& [i, a] : lin) s += a * y(i);
  return s;
}

double constraint_value(const ConvexConstraint& c, const Eigen::VectorXd& y) {
  if (c.kind == ConvexConstraint::Kind::kLogSumExp) {
    double shift = -kInf;
    for (const auto& m : c.terms) shift = std::max(shift, mono_arg(m, y));
    double s = 0;
    for (const auto& m : c.terms) s += std::exp(mono_arg(m, y) - shift);
    return shift + std::log(s);
  }
  double v = c.offset + lin_dot(c.lin, y);
  for (const auto& m : c.terms) v += std::exp(mono_arg(m, y));
  return v;
}

Eval constraint_eval(const ConvexConstraint& c, const Eigen::VectorXd& y) {
  const int n = static_cast<int>(y.size());
  Eval e{0, Eigen::VectorXd::Zero(n), Eigen::MatrixXd::Zero(n, n)};
  if (c.kind == ConvexConstraint::Kind::kLogSumExp) {
    std::vector<double> u(c.terms.size());
    double shift = -kInf;
    for (size_t m = 0; m < u.size(); ++m) {
      u[m] = mono_arg(c.terms[m], y);
      shift = std::max(shift, u[m]);
    }
    double s = 0;
    for (double& v : u) s += (v = std::exp(v - shift));
    e.v = shift + std::log(s);
    for (size_t m = 0; m < u.size(); ++m) {
      add_grad(e.g, c.terms[m], u[m] / s);
      add_outer(e.H, c.terms[m], u[m] / s);
    }
    e.H -= e.g * e.g.transpose();
    return e;
  }
  e.v = c.offset;
  for (const auto& [i, a] : c.lin) {
    e.v += a * y(i);
    e.g(i) += a;
  }
  for (const auto& m : c.terms) {
    const double w = std::exp(mono_arg(m, y));
    e.v += w;
    add_grad(e.g, m, w);
    add_outer(e.H, m, w);
  }
  return e;
}

// F = -(objective), convex.
Eval neg_objective_eval(const ConvexProgram& p, const Eigen::VectorXd& y) {
  const int n = static_cast<int>(y.size());
  Eval e{0, Eigen::VectorXd::Zero(n), Eigen::MatrixXd::Zero(n, n)};
  e.v = -p.obj_const;
  for (const auto& [i, a] : p.obj_lin) {
    e.v -= a * y(i);
    e.g(i) -= a;
  }
  for (const auto& m : p.obj_penalty) {
    const double w = std::exp(mono_arg(m, y));
    e.v += w;
    add_grad(e.g, m, w);
    add_outer(e.H, m, w);
  }
  return e;
}

// KKT residual of a primal point. Multipliers of the near-active
// constraints are fitted by least squares; 1/(t s_i) itself is too noisy
// once the slacks s_i approach rounding level.
double kkt_residual(const ConvexProgram& p, const Eigen::VectorXd& y, double t) {
  const int n = p.n;
  const Eigen::VectorXd gF = neg_objective_eval(p, y).g;
  std::vector<Eval> ev;
  double lmax = 0;
  for (const auto& c : p.cons) {
    ev.push_back(constraint_eval(c, y));
    lmax = std::max(lmax, 1.0 / (t * -ev.back().v));
  }
  std::vector<int> act;
  Eigen::VectorXd rest = gF;
  for (size_t i = 0; i < ev.size(); ++i) {
    const double lb = 1.0 / (t * -ev[i].v);
    if (lb >= 1e-6 * lmax) act.push_back(static_cast<int>(i));
    else rest += lb * ev[i].g;
  }
  Eigen::MatrixXd J(n, act.size());
  for (size_t j = 0; j < act.size(); ++j) J.col(j) = ev[act[j]].g;
  Eigen::VectorXd lam = J.colPivHouseholderQr().solve(-rest);
  double comp = 0;
  for (size_t j = 0; j < act.size(); ++j) {
    lam(j) = std::max(lam(j), 0.0);
    comp = std::max(comp, lam(j) * -ev[act[j]].v);
  }
  const double stat = (rest + J * lam).cwiseAbs().maxCoeff();
  return std::max(stat, comp);
}

using StopRule = std::function<bool(const Eigen::VectorXd&)>;

struct Barrier {
  const ConvexProgram& p;
  double t = 1;

  // +inf outside the strict interior.
  double value(const Eigen::VectorXd& y) const {
    double v = t * -p.objective(y);
    for (const auto& c : p.cons) {
      const double g = constraint_value(c, y);
      if (!(g < 0)) return kInf;
      v -= std::log(-g);
    }
    return std::isfinite(v) ? v : kInf;
  }
};

SolveResult barrier_solve(const ConvexProgram& p, Eigen::VectorXd y,
                          const SolverOptions& o, const StopRule& stop) {
  const int n = p.n;
  const double m = static_cast<double>(p.cons.size());
  Barrier bar{p, o.t0};
  int steps = 0;
  while (true) {
    for (int it = 0; it < 200; ++it) {
      if (++steps > o.max_newton)
        throw NonConvergence("barrier solver: Newton iteration limit", y);
      Eval f = neg_objective_eval(p, y);
      Eigen::VectorXd grad = bar.t * f.g;
      Eigen::MatrixXd H = bar.t * f.H;
      for (const auto& c : p.cons) {
        const Eval e = constraint_eval(c, y);
        const double s = -e.v;
        grad += e.g / s;
        H += e.H / s + e.g * e.g.transpose() / (s * s);
      }
      Eigen::LDLT<Eigen::MatrixXd> ldlt(H);
      Eigen::VectorXd dy = ldlt.solve(-grad);
      double reg = 1e-12 * std::max(1.0, H.diagonal().cwiseAbs().maxCoeff());
      while ((ldlt.info() != Eigen::Success || !dy.allFinite() ||
              grad.dot(dy) >= 0) &&
             reg < 1e12) {
        ldlt.compute(H + reg * Eigen::MatrixXd::Identity(n, n));
        dy = ldlt.solve(-grad);
        reg *= 100;
      }
      const double dec2 = -grad.dot(dy);
      if (!(dec2 > 1e-14)) break;
      const double v0 = bar.value(y);
      double step = 1.0;
      Eigen::VectorXd trial = y + dy;
      double v1 = bar.value(trial);
      while (!(v1 <= v0 - 0.25 * step * dec2) && step > 1e-14) {
        step *= 0.5;
        trial = y + step * dy;
        v1 = bar.value(trial);
      }
      if (!(v1 < kInf) || v1 > v0) break;
      const bool done = v0 - v1 <= 1e-15 * std::abs(v0);
      y = trial;
      if (stop && stop(y)) return {y, p.objective(y), 0, steps};
      if (dec2 / 2 <= 1e-11 || done) break;
    }
    if (m / bar.t < o.gap_tol) break;
    bar.t *= o.mu;
  }

  SolveResult out;
  out.y = y;
  out.objective = p.objective(y);
  out.kkt = kkt_residual(p, y, bar.t);
  out.newton_steps = steps;
  return out;
}

bool strictly_feasible(const ConvexProgram& p, const Eigen::VectorXd& y) {
  for (const auto& c : p.cons) {
    const double g = constraint_value(c, y);
    if (!(g < 0)) return false;
  }
  return true;
}

// Minimize s subject to g_i(y) <= s; returns a strictly feasible y.
Eigen::VectorXd phase_one(const ConvexProgram& p, const Eigen::VectorXd& y0,
                          const SolverOptions& o) {
  const int s_idx = p.n;
  ConvexProgram q;
  q.n = p.n + 1;
  q.obj_lin = {{s_idx, -1.0}};
  double worst = -kInf;
  for (const auto& c : p.cons) {
    ConvexConstraint d = c;
    if (d.kind == ConvexConstraint::Kind::kLogSumExp)
      for (auto& m : d.terms) m.exps.emplace_back(s_idx, -1.0);
    else
      d.lin.emplace_back(s_idx, -1.0);
    q.cons.push_back(std::move(d));
    worst = std::max(worst, constraint_value(c, y0));
  }
  if (!std::isfinite(worst))
    throw Infeasible("phase one: start point outside the domain");
  ConvexConstraint floor;
  floor.offset = -1.0;
  floor.lin = {{s_idx, -1.0}};
  floor.name = "phase_one_floor";
  q.cons.push_back(floor);

  Eigen::VectorXd z(q.n);
  z.head(p.n) = y0;
  z(s_idx) = std::max(worst, -0.5) + 1.0;
  const double margin = 1e-7;
  SolveResult r = barrier_solve(q, z, o, [&](const Eigen::VectorXd& v) {
    return v(s_idx) < -margin;
  });
  if (r.y(s_idx) < -margin) return r.y.head(p.n);

  std::vector<std::string> binding;
  const Eigen::VectorXd y = r.y.head(p.n);
  for (const auto& c : p.cons)
    if (constraint_value(c, y) >= r.y(s_idx) - 1e-6) binding.push_back(c.name);
  std::string what = "infeasible constraint set:";
  for (const auto& b : binding) what += " " + b;
  throw Infeasible(what, binding);
}

}  // namespace

double ConvexConstraint::value(const Eigen::VectorXd& y) const {
  return constraint_value(*this, y);
}

double ConvexProgram::objective(const Eigen::VectorXd& y) const {
  double v = obj_const + lin_dot(obj_lin, y);
  for (const auto& m : obj_penalty) v -= std::exp(mono_arg(m, y));
  return v;
}

SolveResult solve_convex(const ConvexProgram& prog, const Eigen::VectorXd& y0,
                         const SolverOptions& opts) {
  if (y0.size() != prog.n)
    throw std::invalid_argument("solve_convex: start has wrong dimension");
  Eigen::VectorXd y = y0;
  if (!strictly_feasible(prog, y)) y = phase_one(prog, y, opts);
  return barrier_solve(prog, y, opts, nullptr);
}

namespace {

// Monomials of den_k / (num_k p_k'), before the Gamma factor.
Posynomial isnr_terms(const BoundCoefficients& c, int k) {
  const SnrForm& f = c.form;
  const int U = f.users();
  const Layout L{U};
  const int kp = k ^ 1;
  const double base = -std::log(f.num(k));
  Posynomial out;
  auto push = [&](double coef, std::vector<std::pair<int, double>> exps) {
    if (!(coef > 0)) return;
    exps.emplace_back(L.x(kp), -1.0);
    std::sort(exps.begin(), exps.end());
    std::vector<std::pair<int, double>> merged;
    for (const auto& e : exps) {
      if (!merged.empty() && merged.back().first == e.first)
        merged.back().second += e.second;
      else
        merged.push_back(e);
    }
    std::erase_if(merged, [](const auto& e) { return e.second == 0.0; });
    out.push_back({base + std::log(coef), std::move(merged)});
  };
  for (int i = 0; i < U; ++i) {
    push(f.lin(k, i), {{L.x(i), 1.0}});
    push(f.lin_inv_pr(k, i), {{L.x(i), 1.0}, {L.xr(), -1.0}});
    for (int j = 0; j < U; ++j)
      push(f.cross[k](i, j), {{L.x(i), 1.0}, {L.x(j), 1.0}, {L.xr(), -1.0}});
  }
  push(f.cst(k), {});
  push(f.pr(k), {{L.xr(), 1.0}});
  push(f.inv_pr(k), {{L.xr(), -1.0}});
  return out;
}

ConvexConstraint affine(double offset, std::vector<std::pair<int, double>> lin,
                        std::string name) {
  ConvexConstraint c;
  c.kind = ConvexConstraint::Kind::kAffineExp;
  c.offset = offset;
  c.lin = std::move(lin);
  c.name = std::move(name);
  return c;
}

// Peak, relay and total-power limits plus a far lower floor on each power.
void add_power_constraints(const SystemConfig& cfg, std::vector<ConvexConstraint>& cons) {
  const int U = cfg.users();
  const Layout L{U};
  const double lp = std::log(cfg.P_max), lr = std::log(cfg.PR_max);
  for (int i = 0; i < U; ++i) {
    cons.push_back(affine(-lp, {{L.x(i), 1.0}}, "p_max[" + std::to_string(i) + "]"));
    cons.push_back(affine(lp - 40.0, {{L.x(i), -1.0}}, "p_floor[" + std::to_string(i) + "]"));
  }
  cons.push_back(affine(-lr, {{L.xr(), 1.0}}, "pr_max"));
  cons.push_back(affine(lr - 40.0, {{L.xr(), -1.0}}, "pr_floor"));
  ConvexConstraint tot;
  tot.kind = ConvexConstraint::Kind::kLogSumExp;
  tot.name = "total_power";
  const double lt = -std::log(cfg.Pt_max);
  for (int i = 0; i < U; ++i) tot.terms.push_back({lt, {{L.x(i), 1.0}}});
  tot.terms.push_back({lt, {{L.xr(), 1.0}}});
  cons.push_back(std::move(tot));
}

PowerAllocation alloc_from(const Eigen::VectorXd& y, int U) {
  const Layout L{U};
  PowerAllocation a;
  a.p = y.head(U).array().exp();
  a.P_R = std::exp(y(L.xr()));
  return a;
}

}  // namespace

ConvexConstraint build_isnr_constraint(const BoundCoefficients& c, int k) {
  const Layout L{c.form.users()};
  ConvexConstraint con;
  con.kind = ConvexConstraint::Kind::kLogSumExp;
  con.name = "isnr[" + std::to_string(k) + "]";
  con.terms = isnr_terms(c, k);
  for (auto& m : con.terms) m.exps.emplace_back(L.z(k), 1.0);
  return con;
}

ConvexProgram GpSubproblem::build() const {
  const SystemConfig& c = *cfg;
  const int U = c.users();
  const Layout L{U};
  const bool epi = objective == Objective::kMaxMin;
  const double pre = prelog(c);
  const double lam = objective == Objective::kSe ? 0.0 : lambda;
  ConvexProgram p;
  p.n = L.size(epi);

  if (!epi) {
    p.obj_const = -lam * c.Pc;
    for (int k = 0; k < U; ++k) {
      p.obj_const += pre * std::log2(fits[k].delta);
      p.obj_lin.emplace_back(L.z(k), pre * fits[k].alpha / std::numbers::ln2);
    }
    if (lam > 0) {
      for (int i = 0; i < U; ++i) p.obj_penalty.push_back({std::log(lam), {{L.x(i), 1.0}}});
      p.obj_penalty.push_back({std::log(lam), {{L.xr(), 1.0}}});
    }
  } else {
    p.obj_lin.emplace_back(L.t(), 1.0);
    for (int k = 0; k < U; ++k) {
      ConvexConstraint e = affine(
          -pre * std::log2(fits[k].delta) + lam * c.Pc / U,
          {{L.t(), 1.0}, {L.z(k), -pre * fits[k].alpha / std::numbers::ln2}},
          "epigraph[" + std::to_string(k) + "]");
      if (lam > 0) {
        e.terms.push_back({std::log(lam), {{L.x(k), 1.0}}});
        e.terms.push_back({std::log(lam / U), {{L.xr(), 1.0}}});
      }
      p.cons.push_back(std::move(e));
    }
  }

  for (int k = 0; k < U; ++k) p.cons.push_back(build_isnr_constraint(*coeffs, k));
  add_power_constraints(c, p.cons);
  const double lb = std::log(beta);
  for (int k = 0; k < U; ++k) {
    const double la = std::log(fits[k].anchor);
    const std::string id = std::to_string(k);
    p.cons.push_back(affine(-(la + lb), {{L.z(k), 1.0}}, "trust_hi[" + id + "]"));
    p.cons.push_back(affine(la - lb, {{L.z(k), -1.0}}, "trust_lo[" + id + "]"));
    if (gamma_min.size() == U && gamma_min(k) > 0)
      p.cons.push_back(affine(std::log(gamma_min(k)), {{L.z(k), -1.0}}, "qos[" + id + "]"));
  }
  return p;
}

SubproblemResult solve_subproblem(const GpSubproblem& sub,
                                  const PowerAllocation& start,
                                  const SolverOptions& opts) {
  const int U = sub.cfg->users();
  const Layout L{U};
  const bool epi = sub.objective == Objective::kMaxMin;
  const ConvexProgram prog = sub.build();

  Eigen::VectorXd y0(prog.n);
  const double shrink = std::log(0.999);
  for (int i = 0; i < U; ++i) y0(L.x(i)) = std::log(start.p(i)) + shrink;
  y0(L.xr()) = std::log(start.P_R) + shrink;
  for (int k = 0; k < U; ++k) {
    double z = std::log(sub.fits[k].anchor) - 0.5 * std::log(sub.beta);
    if (sub.gamma_min.size() == U && sub.gamma_min(k) > 0)
      z = std::max(z, 0.5 * (std::log(sub.gamma_min(k)) +
                             std::log(sub.fits[k].anchor)));
    y0(L.z(k)) = z;
  }
  if (epi) {
    y0(L.t()) = 0;
    double worst = -kInf;
    for (const auto& c : prog.cons)
      if (c.name.rfind("epigraph", 0) == 0) worst = std::max(worst, c.value(y0));
    y0(L.t()) = -worst - 1.0;
  }

  const SolveResult r = solve_convex(prog, y0, opts);
  SubproblemResult out;
  out.alloc = alloc_from(r.y, U);
  out.gamma.resize(U);
  for (int k = 0; k < U; ++k) out.gamma(k) = std::exp(r.y(L.z(k)));
  out.objective = r.objective;
  out.kkt = r.kkt;
  return out;
}

PowerAllocation equal_power(const SystemConfig& cfg) {
  PowerAllocation a;
  a.P_R = std::min(cfg.Pt_max / 2.0, cfg.PR_max);
  a.p = Eigen::VectorXd::Constant(cfg.users(),
                                  std::min(a.P_R / cfg.users(), cfg.P_max));
  return a;
}

std::string trace_csv(const SolveOutcome& out) {
  std::string s = "iter,lambda,D_lambda,ee_true,se_true,min_user_ee\n";
  char buf[256];
  for (const auto& r : out.trace) {
    std::snprintf(buf, sizeof buf, "%d,%.12g,%.12g,%.12g,%.12g,%.12g\n", r.iter,
                  r.lambda, r.D, r.ee_true, r.se_true, r.min_user_ee);
    s += buf;
  }
  return s;
}

PowerAllocation qos_feasible_point(const SystemConfig& cfg,
                                   const BoundCoefficients& c,
                                   const Eigen::VectorXd& gamma_min) {
  const int U = cfg.users();
  const Layout L{U};
  const int s_idx = U + 1;
  // users without a target (gamma_min = 0) impose no constraint
  std::vector<int> req;
  for (int k = 0; k < U; ++k)
    if (gamma_min(k) > 0) req.push_back(k);
  const PowerAllocation e = equal_power(cfg);
  if (req.empty()) return e;

  ConvexProgram p;
  p.n = U + 2;
  p.obj_lin = {{s_idx, 1.0}};
  for (int k : req) {
    ConvexConstraint con;
    con.kind = ConvexConstraint::Kind::kLogSumExp;
    con.name = "qos[" + std::to_string(k) + "]";
    con.terms = isnr_terms(c, k);
    for (auto& m : con.terms) {
      m.log_coef += std::log(gamma_min(k));
      m.exps.emplace_back(s_idx, 1.0);
    }
    p.cons.push_back(std::move(con));
  }
  add_power_constraints(cfg, p.cons);
  p.cons.push_back(affine(-50.0, {{s_idx, 1.0}}, "margin_cap"));

  Eigen::VectorXd y0(p.n);
  for (int i = 0; i < U; ++i) y0(L.x(i)) = std::log(e.p(i)) + std::log(0.999);
  y0(L.xr()) = std::log(e.P_R) + std::log(0.999);
  const Eigen::VectorXd snr = snr_lower_all(c, e);
  double m = kInf;
  for (int k : req) m = std::min(m, std::log(snr(k) / gamma_min(k)));
  y0(s_idx) = m - 1.0;

  const SolveResult r = solve_convex(p, y0);
  if (r.y(s_idx) > 1e-9) return alloc_from(r.y, U);

  std::vector<int> users;
  std::vector<std::string> names;
  for (size_t j = 0; j < req.size(); ++j)
    if (p.cons[j].value(r.y) >= -1e-6) {
      users.push_back(req[j]);
      names.push_back(p.cons[j].name);
    }
  // Prefer the users whose target fails even when nobody else has one; a
  // common margin leaves every constraint active and names everyone.
  if (req.size() > 1) {
    std::vector<int> alone;
    std::vector<std::string> alone_names;
    for (int k : users) {
      Eigen::VectorXd single = Eigen::VectorXd::Zero(U);
      single(k) = gamma_min(k);
      try {
        qos_feasible_point(cfg, c, single);
      } catch (const Infeasible&) {
        alone.push_back(k);
        alone_names.push_back("qos[" + std::to_string(k) + "]");
      }
    }
    if (!alone.empty()) {
      users = std::move(alone);
      names = std::move(alone_names);
    }
  }
  std::string what = "QoS targets unreachable for users:";
  for (int k : users) what += " " + std::to_string(k);
  throw Infeasible(what, names, users);
}

namespace {

struct Ctx {
  const SystemConfig& cfg;
  const BoundCoefficients& coeffs;
  Objective objective;
  const OptimizerOptions& opts;
  Eigen::VectorXd gamma_min;
  int gp_solves = 0;
};

double merit(const Ctx& c, const PowerAllocation& a, const Eigen::VectorXd& snr,
             double lambda) {
  const double pre = prelog(c.cfg);
  if (c.objective == Objective::kMaxMin) {
    const int U = c.cfg.users();
    double m = kInf;
    for (int k = 0; k < U; ++k)
      m = std::min(m, pre * std::log2(1.0 + snr(k)) -
                          lambda * (a.p(k) + (a.P_R + c.cfg.Pc) / U));
    return m;
  }
  return spectral_efficiency(c.cfg, snr) -
         (c.objective == Objective::kSe ? 0.0 : lambda * total_power(c.cfg, a));
}

std::vector<MonomialFit> fits_at(const Eigen::VectorXd& snr) {
  std::vector<MonomialFit> f;
  for (int k = 0; k < snr.size(); ++k)
    f.push_back(monomial_fit(std::max(snr(k), 1e-300)));
  return f;
}

struct SeqState {
  PowerAllocation alloc;
  Eigen::VectorXd snr;
  std::vector<MonomialFit> fits;  // anchors of the last accepted solve
  bool anchored = false;
};

// Refit and re-solve until the anchors settle.
SeqState sequential(Ctx& c, double lambda, const PowerAllocation& start) {
  SeqState s;
  s.alloc = start;
  s.snr = snr_lower_all(c.coeffs, start);
  s.fits = fits_at(s.snr);
  double cur = merit(c, s.alloc, s.snr, lambda);
  for (int it = 0; it < c.opts.inner_max; ++it) {
    GpSubproblem sub;
    sub.cfg = &c.cfg;
    sub.coeffs = &c.coeffs;
    sub.objective = c.objective;
    sub.fits = fits_at(s.snr);
    sub.lambda = lambda;
    sub.beta = c.opts.beta;
    sub.gamma_min = c.gamma_min;
    SubproblemResult r;
    try {
      r = solve_subproblem(sub, s.alloc);
    } catch (const Infeasible&) {
      break;
    }
    ++c.gp_solves;
    const Eigen::VectorXd snr = snr_lower_all(c.coeffs, r.alloc);
    const double next = merit(c, r.alloc, snr, lambda);
    if (next < cur - 1e-9 * std::max(1.0, std::abs(cur))) break;
    const double rel = (snr - s.snr).cwiseAbs().maxCoeff() /
                       s.snr.cwiseAbs().maxCoeff();
    s.fits = sub.fits;
    s.alloc = r.alloc;
    s.snr = snr;
    cur = next;
    if (rel <= c.opts.anchor_tol) {
      s.anchored = true;
      break;
    }
  }
  return s;
}

double surrogate_user(const SystemConfig& cfg, const MonomialFit& f,
                      double gamma) {
  return prelog(cfg) * std::log2(f(gamma));
}

void finish(const SystemConfig& cfg, const BoundCoefficients& coeffs,
            const PowerAllocation& a, const std::vector<MonomialFit>* fits,
            SolveOutcome& out) {
  out.alloc = a;
  out.gamma = snr_lower_all(coeffs, a);
  out.se = spectral_efficiency(cfg, out.gamma);
  out.ee = energy_efficiency(cfg, a, out.se);
  out.min_user_ee = user_ee(cfg, a, out.gamma).minCoeff();
  out.surrogate_se = 0;
  if (fits)
    for (int k = 0; k < out.gamma.size(); ++k)
      out.surrogate_se += surrogate_user(cfg, (*fits)[k], out.gamma(k));
  else
    out.surrogate_se = out.se;
}

TraceRow trace_row(const SystemConfig& cfg, const BoundCoefficients& coeffs,
                   int iter, double lambda, double D, const PowerAllocation& a) {
  const Eigen::VectorXd snr = snr_lower_all(coeffs, a);
  TraceRow r;
  r.iter = iter;
  r.lambda = lambda;
  r.D = D;
  r.se_true = spectral_efficiency(cfg, snr);
  r.ee_true = energy_efficiency(cfg, a, r.se_true);
  r.min_user_ee = user_ee(cfg, a, snr).minCoeff();
  return r;
}

Eigen::VectorXd gamma_targets(const OptimizerOptions& o, int U) {
  if (o.qos.size() == 0) return {};
  if (o.qos.size() != U)
    throw std::invalid_argument("qos: expected one target per user");
  if ((o.qos.array() < 0).any())
    throw std::invalid_argument("qos: targets must be non-negative");
  return (Eigen::pow(2.0, o.qos.array()) - 1.0).matrix();
}

PowerAllocation initial_point(Ctx& c) {
  PowerAllocation a = equal_power(c.cfg);
  if (c.gamma_min.size() == 0) return a;
  const Eigen::VectorXd snr = snr_lower_all(c.coeffs, a);
  if (((snr - c.gamma_min).array() > 0).all()) return a;
  return qos_feasible_point(c.cfg, c.coeffs, c.gamma_min);
}

}  // namespace

SolveOutcome dinkelbach_ee(const SystemConfig& cfg, Scheme scheme,
                           const OptimizerOptions& opts) {
  cfg.validate(scheme == Scheme::kZf);
  const BoundCoefficients coeffs = bound_coeffs(cfg, hat_variances(cfg), scheme);
  Ctx c{cfg, coeffs, Objective::kSumEe, opts, gamma_targets(opts, cfg.users())};
  PowerAllocation a = initial_point(c);
  SolveOutcome out;
  double lambda = 0;
  std::vector<MonomialFit> fits;
  for (int m = 1; m <= opts.L; ++m) {
    const SeqState s = sequential(c, lambda, a);
    a = s.alloc;
    fits = s.fits;
    double sur = 0;
    for (int k = 0; k < s.snr.size(); ++k) sur += surrogate_user(cfg, s.fits[k], s.snr(k));
    const double P = total_power(cfg, a);
    const double D = sur - lambda * P;
    out.lambda_trace.push_back(lambda);
    out.D_trace.push_back(D);
    out.trace.push_back(trace_row(cfg, coeffs, m, lambda, D, a));
    out.iterations = m;
    if (D <= opts.eps) {
      out.converged = true;
      break;
    }
    lambda = sur / P;
  }
  out.gp_solves = c.gp_solves;
  finish(cfg, coeffs, a, &fits, out);
  return out;
}

SolveOutcome maxmin_ee(const SystemConfig& cfg, Scheme scheme,
                       const OptimizerOptions& opts) {
  cfg.validate(scheme == Scheme::kZf);
  const BoundCoefficients coeffs = bound_coeffs(cfg, hat_variances(cfg), scheme);
  Ctx c{cfg, coeffs, Objective::kMaxMin, opts, gamma_targets(opts, cfg.users())};
  PowerAllocation a = initial_point(c);
  const int U = cfg.users();
  SolveOutcome out;
  double lambda = 0;
  std::vector<MonomialFit> fits;
  for (int m = 1; m <= opts.L; ++m) {
    const SeqState s = sequential(c, lambda, a);
    a = s.alloc;
    fits = s.fits;
    double D = kInf, next = kInf;
    for (int k = 0; k < U; ++k) {
      const double num = surrogate_user(cfg, s.fits[k], s.snr(k));
      const double den = a.p(k) + (a.P_R + cfg.Pc) / U;
      D = std::min(D, num - lambda * den);
      next = std::min(next, num / den);
    }
    out.lambda_trace.push_back(lambda);
    out.D_trace.push_back(D);
    out.trace.push_back(trace_row(cfg, coeffs, m, lambda, D, a));
    out.iterations = m;
    if (D <= opts.eps) {
      out.converged = true;
      break;
    }
    lambda = next;
  }
  out.gp_solves = c.gp_solves;
  finish(cfg, coeffs, a, &fits, out);
  return out;
}

SolveOutcome maximize_se(const SystemConfig& cfg, Scheme scheme,
                         const OptimizerOptions& opts) {
  cfg.validate(scheme == Scheme::kZf);
  const BoundCoefficients coeffs = bound_coeffs(cfg, hat_variances(cfg), scheme);
  Ctx c{cfg, coeffs, Objective::kSe, opts, gamma_targets(opts, cfg.users())};
  const SeqState s = sequential(c, 0.0, initial_point(c));
  SolveOutcome out;
  out.iterations = c.gp_solves;
  out.gp_solves = c.gp_solves;
  out.converged = s.anchored;
  finish(cfg, coeffs, s.alloc, &s.fits, out);
  out.lambda_trace.push_back(0.0);
  out.D_trace.push_back(out.surrogate_se);
  out.trace.push_back(trace_row(cfg, coeffs, 1, 0.0, out.surrogate_se, s.alloc));
  return out;
}

SolveOutcome evaluate_allocation(const SystemConfig& cfg, Scheme scheme,
                                 const PowerAllocation& a) {
  cfg.validate(scheme == Scheme::kZf);
  const BoundCoefficients coeffs = bound_coeffs(cfg, hat_variances(cfg), scheme);
  SolveOutcome out;
  finish(cfg, coeffs, a, nullptr, out);
  out.converged = true;
  out.trace.push_back(trace_row(cfg, coeffs, 0, 0.0, 0.0, a));
  return out;
}

}  // namespace mmrelay
