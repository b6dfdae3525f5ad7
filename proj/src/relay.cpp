#include "mmrelay/relay.hpp"

#include <cmath>

namespace mmrelay {

std::string scheme_name(Scheme s) { return s == Scheme::kMrc ? "mrc" : "zf"; }

Scheme parse_scheme(const std::string& s) {
  if (s == "mrc") return Scheme::kMrc;
  if (s == "zf") return Scheme::kZf;
  throw std::invalid_argument("unknown scheme '" + s + "'");
}

Eigen::MatrixXd permutation_map(int K) {
  if (K < 1) throw std::invalid_argument("K: need at least one pair");
  Eigen::MatrixXd T = Eigen::MatrixXd::Zero(2 * K, 2 * K);
  for (int m = 0; m < K; ++m) {
    T(2 * m, 2 * m + 1) = 1.0;
    T(2 * m + 1, 2 * m) = 1.0;
  }
  return T;
}

namespace {

// Rows of T M: swap rows within each pair.
Eigen::MatrixXcd swap_rows(const Eigen::MatrixXcd& M) {
  Eigen::MatrixXcd out(M.rows(), M.cols());
  for (Eigen::Index r = 0; r < M.rows(); ++r) out.row(r) = M.row(r ^ 1);
  return out;
}

Eigen::MatrixXcd swap_cols(const Eigen::MatrixXcd& M) {
  Eigen::MatrixXcd out(M.rows(), M.cols());
  for (Eigen::Index c = 0; c < M.cols(); ++c) out.col(c) = M.col(c ^ 1);
  return out;
}

}  // namespace

Eigen::MatrixXcd Precoder::dense() const {
  return left.conjugate() * swap_rows(right.adjoint());
}

Eigen::MatrixXcd Precoder::apply(const Eigen::MatrixXcd& A) const {
  return left.conjugate() * swap_rows(right.adjoint() * A);
}

Eigen::MatrixXcd Precoder::left_apply(const Eigen::MatrixXcd& A) const {
  return swap_cols(A.transpose() * left.conjugate()) * right.adjoint();
}

double Precoder::frob2() const {
  // tr(W^H W) = tr(T L^T L^* T R^H R)
  const Eigen::MatrixXcd LL = left.transpose() * left.conjugate();
  const Eigen::MatrixXcd RR = right.adjoint() * right;
  return swap_cols(swap_rows(LL)).cwiseProduct(RR.transpose()).sum().real();
}

Eigen::MatrixXcd pseudo_inverse_columns(const Eigen::MatrixXcd& X) {
  const Eigen::MatrixXcd gram = X.adjoint() * X;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(gram,
                                                     Eigen::EigenvaluesOnly);
  const double lo = es.eigenvalues().minCoeff();
  const double hi = es.eigenvalues().maxCoeff();
  if (!(lo > 0) || hi / lo > 1e12)
    throw DegenerateChannel("Gram matrix condition number above 1e12");
  Eigen::LLT<Eigen::MatrixXcd> llt(gram);
  if (llt.info() != Eigen::Success)
    throw DegenerateChannel("Gram matrix not positive definite");
  return llt.solve(X.adjoint()).adjoint();
}

Precoder make_precoder(const Eigen::MatrixXcd& Ghat,
                       const Eigen::MatrixXcd& Fhat, Scheme scheme) {
  if (Ghat.rows() != Fhat.rows() || Ghat.cols() != Fhat.cols() ||
      Ghat.cols() % 2 != 0)
    throw std::invalid_argument("precoder: Ghat and Fhat must both be N x 2K");
  Precoder W;
  W.scheme = scheme;
  if (scheme == Scheme::kMrc) {
    W.left = Fhat;
    W.right = Ghat;
  } else {
    if (Ghat.rows() <= Ghat.cols())
      throw std::invalid_argument("precoder: zero-forcing needs N > 2K");
    W.left = pseudo_inverse_columns(Fhat);
    W.right = pseudo_inverse_columns(Ghat);
  }
  return W;
}

Eigen::MatrixXcd precoder_mrc(const Eigen::MatrixXcd& Ghat,
                              const Eigen::MatrixXcd& Fhat) {
  return make_precoder(Ghat, Fhat, Scheme::kMrc).dense();
}

Eigen::MatrixXcd precoder_zf(const Eigen::MatrixXcd& Ghat,
                             const Eigen::MatrixXcd& Fhat) {
  return make_precoder(Ghat, Fhat, Scheme::kZf).dense();
}

AlphaTerms alpha_terms(const SystemConfig& cfg, const HatVariances& h,
                       const PowerAllocation& a, Scheme scheme) {
  const int U = cfg.users();
  const double N = cfg.N;
  AlphaTerms t;
  for (int j = 0; j < U; ++j) {
    const int jp = j ^ 1;
    t.Phi_hat += h.g(j) * h.f(jp);
    t.Psi += a.p(j) * cfg.Du(j);
    t.Upsilon_hat += a.p(j) * h.g(j) * h.g(j) * h.f(jp);
  }
  const double loop = cfg.sigma_nr2 + a.P_R * cfg.sigma_LIR2;
  if (scheme == Scheme::kMrc) {
    t.denom = N * N * (t.Psi + loop) * t.Phi_hat + N * N * N * t.Upsilon_hat;
  } else {
    const double D = cfg.wishart_dof();
    double err = 0;
    for (int i = 0; i < U; ++i) {
      t.lambda_hat += a.p(i ^ 1) / (D * h.f(i));
      t.eta_hat += 1.0 / (D * D * h.f(i) * h.g(i ^ 1));
      err += a.p(i) * h.xi_g(i);
    }
    t.denom = t.lambda_hat + t.eta_hat * (err + loop);
  }
  return t;
}

double alpha_closed(const SystemConfig& cfg, const HatVariances& h,
                    const PowerAllocation& a, Scheme scheme) {
  if (a.P_R == 0) return 0.0;
  const AlphaTerms t = alpha_terms(cfg, h, a, scheme);
  if (!(t.denom > 0))
    throw std::invalid_argument("alpha: zero relay input power");
  return std::sqrt(a.P_R / t.denom);
}

PowerSample relay_power_denominator(const Precoder& W, const SystemConfig& cfg,
                                    const ChannelRealization& real,
                                    const PowerAllocation& a, Rng& rng,
                                    int trials) {
  const int U = cfg.users();
  const bool loop = real.G_RR.size() > 0;
  Eigen::VectorXcd x(U), xr(cfg.N), z(cfg.N);
  double s = 0, s2 = 0;
  for (int t = 0; t < trials; ++t) {
    for (int i = 0; i < U; ++i) x(i) = complex_normal(rng, a.p(i));
    fill_complex_normal(z, rng, cfg.sigma_nr2);
    Eigen::VectorXcd v = real.G * x + z;
    if (loop) {
      fill_complex_normal(xr, rng, a.P_R / cfg.N);
      v += real.G_RR * xr;
    }
    const double e = W.apply(v).squaredNorm();
    s += e;
    s2 += e * e;
  }
  PowerSample ps;
  ps.mean = s / trials;
  if (trials > 1) {
    const double var = (s2 - trials * ps.mean * ps.mean) / (trials - 1);
    ps.se = std::sqrt(std::max(var, 0.0) / trials);
  }
  return ps;
}

double alpha_empirical(const Precoder& W, const SystemConfig& cfg,
                       const ChannelRealization& real,
                       const PowerAllocation& a, Rng& rng, int trials) {
  if (trials < 1) throw std::invalid_argument("trials: must be >= 1");
  const PowerSample ps = relay_power_denominator(W, cfg, real, a, rng, trials);
  return ps.mean > 0 ? std::sqrt(a.P_R / ps.mean) : 0.0;
}

cd sic_coefficient(const Eigen::MatrixXcd& Ghat, const Eigen::MatrixXcd& Fhat,
                   const Precoder& W, int k) {
  const Eigen::MatrixXcd wg = W.apply(Ghat.col(k));
  return (Fhat.col(k).transpose() * wg)(0, 0);
}

cd sic_coefficient(const Eigen::MatrixXcd& Ghat, const Eigen::MatrixXcd& Fhat,
                   const Eigen::MatrixXcd& W, int k) {
  return Fhat.col(k).transpose() * (W * Ghat.col(k));
}

}  // namespace mmrelay
