// Scenario parameters, channel sampling and pilot-based channel estimation.
#pragma once

#include <Eigen/Dense>

#include <complex>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace mmrelay {

using cd = std::complex<double>;
using Rng = std::mt19937_64;

// Users are indexed 0..2K-1; pair m holds users (2m, 2m+1).
int pair_partner(int k, int K);

// Convention for the complex Wishart inverse mean used by the ZF closed forms.
// kComplex: E[(H^H H)^-1] = I/(N-2K), exact for circular complex Gaussians.
// kReal: the N-2K-1 denominator of the real-valued Wishart mean.
enum class WishartDof { kComplex, kReal };

struct SystemConfig {
  int K = 5;
  int N = 128;
  int T = 200;
  int tau = 10;

  double sigma_n2 = 1.0;
  double sigma_nr2 = 1.0;
  double sigma_LIR2 = 1.0;
  // 2K x 2K, nonzero only for i in U_k (same side of the relay as k).
  Eigen::MatrixXd sigma_UI;

  Eigen::VectorXd Du;  // sigma^2_{g,k}: users -> relay
  Eigen::VectorXd Dd;  // sigma^2_{f,k}: relay -> users

  double P_max = 10.0;
  double PR_max = 199.526231496888;
  double Pt_max = 10.0;
  double Pc = 1000.0;
  double P_rho = 100.0;

  WishartDof zf_dof = WishartDof::kComplex;

  int users() const { return 2 * K; }
  // Degrees of freedom D in E[(F^H F)^-1] = diag(1/(D sigma^2)).
  double wishart_dof() const;
  // Throws std::invalid_argument naming the offending field.
  void validate(bool zf = false) const;
};

// sigma_UI with value v on every same-side (k, i) entry, self-loops included.
Eigen::MatrixXd uniform_ui(int K, double v);

// Reference defaults: K = 5, tau = 2K, T = 200, P_rho = 20 dBm, profile
// Du/Dd, 0 dB loop and inter-user interference, eta = 10 dB.
SystemConfig reference_config(int N = 128);

double dbm_to_mw(double dbm);
double db_to_lin(double db);
double lin_to_db(double lin);

struct PowerAllocation {
  Eigen::VectorXd p;
  double P_R = 0.0;

  double transmit_total() const { return p.sum() + P_R; }
  // Worst constraint slack (negative means violation), relative to the caps.
  double min_slack(const SystemConfig& cfg) const;
  bool feasible(const SystemConfig& cfg, double tol = 1e-8) const;
};

struct HatVariances {
  Eigen::VectorXd g, f;        // estimate variances
  Eigen::VectorXd xi_g, xi_f;  // error variances
};

enum class Estimator { kMmse, kLs };
enum class EstimationMode { kStatistical, kPilotSim };

HatVariances hat_variances(const SystemConfig& cfg,
                           Estimator method = Estimator::kMmse);

struct ChannelRealization {
  Eigen::MatrixXcd G;      // N x 2K
  Eigen::MatrixXcd F;      // N x 2K
  Eigen::MatrixXcd G_RR;   // N x N
  Eigen::MatrixXcd Omega;  // 2K x 2K
};

struct ChannelEstimate {
  Eigen::MatrixXcd Ghat, Fhat;
  Eigen::VectorXd sig_hat_g2, sig_hat_f2;
  Eigen::VectorXd sig_xi_g2, sig_xi_f2;
};

struct LinkSample {
  ChannelRealization real;
  ChannelEstimate est;
};

// CN(0, var) entries, real and imaginary parts each of variance var/2.
cd complex_normal(Rng& rng, double var);
void fill_complex_normal(Eigen::Ref<Eigen::MatrixXcd> m, Rng& rng, double var);

// Independent stream for trial `stream` under master seed `seed`.
Rng stream_rng(std::uint64_t seed, std::uint64_t stream);

// First 2K rows of the unitary tau x tau DFT matrix.
Eigen::MatrixXcd pilot_matrix(int K, int tau);

ChannelRealization draw_channels(const SystemConfig& cfg, Rng& rng,
                                 bool with_loop = true);

// Pilot simulation: Y = sqrt(tau P_rho) G phi + Z, despread by phi^H, then
// per-column MMSE scaling or plain LS.
ChannelEstimate estimate_channels(const SystemConfig& cfg,
                                  const ChannelRealization& real, Rng& rng,
                                  Estimator method = Estimator::kMmse);

// One channel use with estimates. Statistical mode draws the estimate and the
// error independently and sets the true channel to their sum.
LinkSample sample_link(const SystemConfig& cfg, Rng& rng,
                       Estimator method = Estimator::kMmse,
                       EstimationMode mode = EstimationMode::kStatistical,
                       bool with_loop = true);

}  // namespace mmrelay
