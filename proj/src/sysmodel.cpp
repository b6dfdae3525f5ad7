#include "mmrelay/sysmodel.hpp"

#include <cmath>
#include <numbers>

namespace mmrelay {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument(what);
}

}  // namespace

int pair_partner(int k, int K) {
  if (k < 0 || k >= 2 * K)
    throw std::out_of_range("user index " + std::to_string(k) +
                            " outside 0.." + std::to_string(2 * K - 1));
  return k ^ 1;
}

double SystemConfig::wishart_dof() const {
  return zf_dof == WishartDof::kComplex ? N - 2 * K : N - 2 * K - 1;
}

void SystemConfig::validate(bool zf) const {
  require(K >= 1, "K: need at least one user pair");
  require(N >= 1, "N: need at least one relay antenna");
  require(T >= 1, "T: coherence interval must be positive");
  require(tau >= 2 * K, "tau: pilot length must be at least 2K");
  require(tau <= T, "tau: pilot length exceeds coherence interval");
  if (zf) require(N > 2 * K + 1, "N: zero-forcing needs N > 2K + 1");
  require(sigma_n2 > 0, "sigma_n2: must be positive");
  require(sigma_nr2 > 0, "sigma_nr2: must be positive");
  require(sigma_LIR2 >= 0, "sigma_LIR2: must be non-negative");
  const int U = users();
  require(Du.size() == U, "Du: expected 2K entries");
  require(Dd.size() == U, "Dd: expected 2K entries");
  require((Du.array() > 0).all(), "Du: entries must be positive");
  require((Dd.array() > 0).all(), "Dd: entries must be positive");
  require(sigma_UI.rows() == U && sigma_UI.cols() == U,
          "sigma_UI: expected 2K x 2K");
  for (int k = 0; k < U; ++k)
    for (int i = 0; i < U; ++i) {
      require(sigma_UI(k, i) >= 0, "sigma_UI: entries must be non-negative");
      if ((k - i) % 2 != 0)
        require(sigma_UI(k, i) == 0,
                "sigma_UI: entries across the relay must be zero");
    }
  require(P_max > 0, "P_max: must be positive");
  require(PR_max > 0, "PR_max: must be positive");
  require(Pt_max > 0, "Pt_max: must be positive");
  require(Pc > 0, "Pc: must be positive");
  require(P_rho > 0, "P_rho: must be positive");
}

Eigen::MatrixXd uniform_ui(int K, double v) {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(2 * K, 2 * K);
  for (int k = 0; k < 2 * K; ++k)
    for (int i = k % 2; i < 2 * K; i += 2) m(k, i) = v;
  return m;
}

double dbm_to_mw(double dbm) { return std::pow(10.0, dbm / 10.0); }
double db_to_lin(double db) { return std::pow(10.0, db / 10.0); }
double lin_to_db(double lin) { return 10.0 * std::log10(lin); }

SystemConfig reference_config(int N) {
  SystemConfig c;
  c.K = 5;
  c.N = N;
  c.T = 200;
  c.tau = 2 * c.K;
  c.sigma_n2 = c.sigma_nr2 = 1.0;
  c.sigma_LIR2 = 1.0;
  c.sigma_UI = uniform_ui(c.K, 1.0);
  c.Du.resize(10);
  c.Du << 0.749, 0.045, 0.246, 0.121, 0.125, 0.142, 0.635, 0.256, 0.021,
      0.123;
  c.Dd.resize(10);
  c.Dd << 0.257, 0.856, 1.000, 0.899, 0.014, 0.759, 0.315, 0.432, 0.195,
      0.562;
  c.P_max = dbm_to_mw(10);
  c.PR_max = dbm_to_mw(23);
  c.Pt_max = db_to_lin(10);
  c.Pc = dbm_to_mw(30);
  c.P_rho = dbm_to_mw(20);
  return c;
}

double PowerAllocation::min_slack(const SystemConfig& cfg) const {
  double s = 1.0 - transmit_total() / cfg.Pt_max;
  s = std::min(s, 1.0 - P_R / cfg.PR_max);
  s = std::min(s, P_R / cfg.PR_max);
  for (int k = 0; k < p.size(); ++k) {
    s = std::min(s, 1.0 - p(k) / cfg.P_max);
    s = std::min(s, p(k) / cfg.P_max);
  }
  return s;
}

bool PowerAllocation::feasible(const SystemConfig& cfg, double tol) const {
  return p.size() == cfg.users() && min_slack(cfg) >= -tol;
}

HatVariances hat_variances(const SystemConfig& cfg, Estimator method) {
  const double e = cfg.tau * cfg.P_rho;
  HatVariances h;
  if (method == Estimator::kMmse) {
    auto hat = [&](const Eigen::VectorXd& s) -> Eigen::VectorXd {
      return (e * s.array().square() / (e * s.array() + cfg.sigma_nr2))
          .matrix();
    };
    auto err = [&](const Eigen::VectorXd& s) -> Eigen::VectorXd {
      return (s.array() * cfg.sigma_nr2 / (e * s.array() + cfg.sigma_nr2))
          .matrix();
    };
    h.g = hat(cfg.Du);
    h.f = hat(cfg.Dd);
    h.xi_g = err(cfg.Du);
    h.xi_f = err(cfg.Dd);
  } else {
    const double ls = cfg.sigma_nr2 / e;
    h.xi_g = Eigen::VectorXd::Constant(cfg.users(), ls);
    h.xi_f = h.xi_g;
    h.g = cfg.Du.array() + ls;
    h.f = cfg.Dd.array() + ls;
  }
  return h;
}

cd complex_normal(Rng& rng, double var) {
  std::normal_distribution<double> n(0.0, std::sqrt(var / 2.0));
  const double re = n(rng);
  return {re, n(rng)};
}

void fill_complex_normal(Eigen::Ref<Eigen::MatrixXcd> m, Rng& rng,
                         double var) {
  std::normal_distribution<double> n(0.0, std::sqrt(var / 2.0));
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      const double re = n(rng);
      m(i, j) = cd(re, n(rng));
    }
}

Rng stream_rng(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream),
                    static_cast<std::uint32_t>(stream >> 32), 0x6d6d72u};
  return Rng(seq);
}

Eigen::MatrixXcd pilot_matrix(int K, int tau) {
  Eigen::MatrixXcd phi(2 * K, tau);
  const double s = 1.0 / std::sqrt(static_cast<double>(tau));
  for (int r = 0; r < 2 * K; ++r)
    for (int c = 0; c < tau; ++c) {
      const double ang = -2.0 * std::numbers::pi * r * c / tau;
      phi(r, c) = std::polar(s, ang);
    }
  return phi;
}

namespace {

Eigen::MatrixXcd column_scaled(int N, const Eigen::VectorXd& var, Rng& rng) {
  Eigen::MatrixXcd m(N, var.size());
  for (Eigen::Index k = 0; k < var.size(); ++k)
    fill_complex_normal(m.col(k), rng, var(k));
  return m;
}

void draw_extras(const SystemConfig& cfg, Rng& rng, bool with_loop,
                 ChannelRealization& r) {
  if (with_loop) {
    r.G_RR.resize(cfg.N, cfg.N);
    fill_complex_normal(r.G_RR, rng, cfg.sigma_LIR2);
  } else {
    r.G_RR.resize(0, 0);
  }
  const int U = cfg.users();
  r.Omega.resize(U, U);
  for (int i = 0; i < U; ++i)
    for (int k = 0; k < U; ++k) r.Omega(k, i) = complex_normal(rng, cfg.sigma_UI(k, i));
}

}  // namespace

ChannelRealization draw_channels(const SystemConfig& cfg, Rng& rng,
                                 bool with_loop) {
  ChannelRealization r;
  r.G = column_scaled(cfg.N, cfg.Du, rng);
  r.F = column_scaled(cfg.N, cfg.Dd, rng);
  draw_extras(cfg, rng, with_loop, r);
  return r;
}

ChannelEstimate estimate_channels(const SystemConfig& cfg,
                                  const ChannelRealization& real, Rng& rng,
                                  Estimator method) {
  if (cfg.tau < 2 * cfg.K)
    throw std::invalid_argument("tau: non-orthogonal pilots are unsupported");
  const Eigen::MatrixXcd phi = pilot_matrix(cfg.K, cfg.tau);
  const double amp = std::sqrt(cfg.tau * cfg.P_rho);
  const HatVariances h = hat_variances(cfg, method);

  auto train = [&](const Eigen::MatrixXcd& H, const Eigen::VectorXd& var) {
    Eigen::MatrixXcd Z(cfg.N, cfg.tau);
    fill_complex_normal(Z, rng, cfg.sigma_nr2);
    const Eigen::MatrixXcd Y = amp * H * phi + Z;
    Eigen::MatrixXcd est = Y * phi.adjoint();
    for (Eigen::Index k = 0; k < est.cols(); ++k) {
      const double scale =
          method == Estimator::kMmse
              ? amp * var(k) / (amp * amp * var(k) + cfg.sigma_nr2)
              : 1.0 / amp;
      est.col(k) *= scale;
    }
    return est;
  };

  ChannelEstimate e;
  e.Ghat = train(real.G, cfg.Du);
  e.Fhat = train(real.F, cfg.Dd);
  e.sig_hat_g2 = h.g;
  e.sig_hat_f2 = h.f;
  e.sig_xi_g2 = h.xi_g;
  e.sig_xi_f2 = h.xi_f;
  return e;
}

LinkSample sample_link(const SystemConfig& cfg, Rng& rng, Estimator method,
                       EstimationMode mode, bool with_loop) {
  LinkSample s;
  if (mode == EstimationMode::kPilotSim) {
    s.real = draw_channels(cfg, rng, with_loop);
    s.est = estimate_channels(cfg, s.real, rng, method);
    return s;
  }
  if (cfg.tau < 2 * cfg.K)
    throw std::invalid_argument("tau: non-orthogonal pilots are unsupported");
  const HatVariances h = hat_variances(cfg, method);
  s.est.sig_hat_g2 = h.g;
  s.est.sig_hat_f2 = h.f;
  s.est.sig_xi_g2 = h.xi_g;
  s.est.sig_xi_f2 = h.xi_f;
  if (method == Estimator::kMmse) {
    s.est.Ghat = column_scaled(cfg.N, h.g, rng);
    s.est.Fhat = column_scaled(cfg.N, h.f, rng);
    s.real.G = s.est.Ghat + column_scaled(cfg.N, h.xi_g, rng);
    s.real.F = s.est.Fhat + column_scaled(cfg.N, h.xi_f, rng);
  } else {
    s.real.G = column_scaled(cfg.N, cfg.Du, rng);
    s.real.F = column_scaled(cfg.N, cfg.Dd, rng);
    s.est.Ghat = s.real.G + column_scaled(cfg.N, h.xi_g, rng);
    s.est.Fhat = s.real.F + column_scaled(cfg.N, h.xi_f, rng);
  }
  draw_extras(cfg, rng, with_loop, s.real);
  return s;
}

}  // namespace mmrelay
