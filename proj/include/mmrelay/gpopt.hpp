// Power allocation: sequential monomial approximation of log(1 + SNR),
// log-domain barrier solver, Dinkelbach EE maximization, generalized
// Dinkelbach max-min EE and SE maximization.
#pragma once

#include "mmrelay/rates.hpp"

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace mmrelay {

// delta * G^alpha, tangent to 1 + G at the anchor and below it elsewhere.
struct MonomialFit {
  double alpha = 0;
  double delta = 0;
  double anchor = 0;

  double operator()(double gamma) const;
};

MonomialFit monomial_fit(double gamma_anchor);

// exp(log_coef + sum a_j y_j)
struct Monomial {
  double log_coef = 0;
  std::vector<std::pair<int, double>> exps;
};
using Posynomial = std::vector<Monomial>;

// kLogSumExp:  log sum_m exp(...) <= 0
// kAffineExp:  offset + lin.y + sum_m exp(...) <= 0
struct ConvexConstraint {
  enum class Kind { kLogSumExp, kAffineExp };
  Kind kind = Kind::kAffineExp;
  Posynomial terms;
  std::vector<std::pair<int, double>> lin;
  double offset = 0;
  std::string name;

  double value(const Eigen::VectorXd& y) const;
};

// maximize  obj_lin.y + obj_const - sum_m exp(obj_penalty_m)
struct ConvexProgram {
  int n = 0;
  std::vector<std::pair<int, double>> obj_lin;
  double obj_const = 0;
  Posynomial obj_penalty;
  std::vector<ConvexConstraint> cons;

  double objective(const Eigen::VectorXd& y) const;
};

struct SolverOptions {
  double kkt_tol = 1e-7;
  double gap_tol = 1e-9;
  double t0 = 1.0;
  double mu = 10.0;
  int max_newton = 2000;
};

struct SolveResult {
  Eigen::VectorXd y;
  double objective = 0;
  double kkt = 0;
  int newton_steps = 0;
};

struct Infeasible : std::runtime_error {
  std::vector<std::string> binding;
  std::vector<int> users;
  Infeasible(const std::string& what, std::vector<std::string> b = {},
             std::vector<int> u = {})
      : std::runtime_error(what), binding(std::move(b)), users(std::move(u)) {}
};

struct NonConvergence : std::runtime_error {
  Eigen::VectorXd best;
  NonConvergence(const std::string& what, Eigen::VectorXd b)
      : std::runtime_error(what), best(std::move(b)) {}
};

// Barrier method with damped Newton centering. A start that is not strictly
// feasible triggers a phase-one solve first.
SolveResult solve_convex(const ConvexProgram& prog, const Eigen::VectorXd& y0,
                         const SolverOptions& opts = {});

// Variable layout of the power-allocation programs.
struct Layout {
  int users = 0;
  int x(int i) const { return i; }
  int xr() const { return users; }
  int z(int k) const { return users + 1 + k; }
  int t() const { return 2 * users + 1; }
  int size(bool epigraph) const { return 2 * users + 1 + (epigraph ? 1 : 0); }
};

// ISNR_k * Gamma_k <= 1 as a log-sum-exp constraint over (log p, log P_R,
// log Gamma).
ConvexConstraint build_isnr_constraint(const BoundCoefficients& c, int k);

enum class Objective { kSumEe, kMaxMin, kSe };

struct GpSubproblem {
  const SystemConfig* cfg = nullptr;
  const BoundCoefficients* coeffs = nullptr;
  Objective objective = Objective::kSumEe;
  std::vector<MonomialFit> fits;
  double lambda = 0;
  double beta = 1.1;
  Eigen::VectorXd gamma_min;  // empty: no QoS

  ConvexProgram build() const;
};

struct SubproblemResult {
  PowerAllocation alloc;
  Eigen::VectorXd gamma;
  double objective = 0;
  double kkt = 0;
};

SubproblemResult solve_subproblem(const GpSubproblem& sub,
                                  const PowerAllocation& start,
                                  const SolverOptions& opts = {});

PowerAllocation equal_power(const SystemConfig& cfg);

struct OptimizerOptions {
  double eps = 1e-3;
  int L = 100;
  double beta = 1.1;
  double anchor_tol = 1e-4;
  int inner_max = 300;
  Eigen::VectorXd qos;  // per-user log2(1 + SNR) targets; empty for none
};

struct TraceRow {
  int iter = 0;
  double lambda = 0;
  double D = 0;
  double ee_true = 0;
  double se_true = 0;
  double min_user_ee = 0;
};

struct SolveOutcome {
  PowerAllocation alloc;
  Eigen::VectorXd gamma;  // bound SNR at alloc
  std::vector<double> lambda_trace;
  std::vector<double> D_trace;
  std::vector<TraceRow> trace;
  int iterations = 0;
  int gp_solves = 0;
  bool converged = false;
  double se = 0;            // bound SE at alloc
  double surrogate_se = 0;  // monomial surrogate at alloc
  double ee = 0;
  double min_user_ee = 0;
};

std::string trace_csv(const SolveOutcome& out);

SolveOutcome dinkelbach_ee(const SystemConfig& cfg, Scheme scheme,
                           const OptimizerOptions& opts = {});
SolveOutcome maxmin_ee(const SystemConfig& cfg, Scheme scheme,
                       const OptimizerOptions& opts = {});
SolveOutcome maximize_se(const SystemConfig& cfg, Scheme scheme,
                         const OptimizerOptions& opts = {});
// Equal power evaluated through the same reporting path.
SolveOutcome evaluate_allocation(const SystemConfig& cfg, Scheme scheme,
                                 const PowerAllocation& a);

// Largest common QoS margin; throws Infeasible naming the binding users when
// the targets cannot be met at any power profile.
PowerAllocation qos_feasible_point(const SystemConfig& cfg,
                                   const BoundCoefficients& c,
                                   const Eigen::VectorXd& gamma_min);

}  // namespace mmrelay
