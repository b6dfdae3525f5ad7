// Achievable rates: exact Monte-Carlo SNR, closed-form lower bounds,
// spectral and energy efficiency.
#pragma once

#include "mmrelay/relay.hpp"

#include <string>
#include <vector>

namespace mmrelay {

// SNR_k = num_k p_k' / den_k with
// den_k = sum_i lin(k,i) p_i + sum_i lin_inv_pr(k,i) p_i / P_R
//       + sum_ij cross[k](i,j) p_i p_j / P_R + cst_k + pr_k P_R + inv_pr_k / P_R.
// Every coefficient is non-negative.
struct SnrForm {
  Eigen::VectorXd num;
  Eigen::MatrixXd lin;
  Eigen::MatrixXd lin_inv_pr;
  std::vector<Eigen::MatrixXd> cross;
  Eigen::VectorXd cst, pr, inv_pr;

  int users() const { return static_cast<int>(num.size()); }
  double denominator(const PowerAllocation& a, int k) const;
};

struct ModelViolation : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct BoundCoefficients {
  Scheme scheme = Scheme::kMrc;
  int K = 0;
  int N = 0;

  // MRC. b3[k](i, j) multiplies p_i p_j / P_R with j in U_k; the diagonal
  // i = j is the single-index b3_{k,i}.
  Eigen::VectorXd a;
  Eigen::MatrixXd b1, b2;
  std::vector<Eigen::MatrixXd> b3;
  Eigen::VectorXd c, d1, d2, d3;
  Eigen::MatrixXd e1, e2;
  double Phi_hat = 0;
  // SI_k / N^2 = b1(k,k) + c_k, evaluated without cancellation.
  Eigen::VectorXd si;

  // ZF. zd3[k](i, j) as for b3.
  Eigen::VectorXd u;
  Eigen::MatrixXd zd1, zd2;
  std::vector<Eigen::MatrixXd> zd3;
  Eigen::VectorXd v1, v2, v3;
  Eigen::MatrixXd w1, w2;
  double eta_hat = 0;
  double dof = 0;

  // Both schemes, merged into the generic rational form.
  SnrForm form;
};

BoundCoefficients bound_coeffs(const SystemConfig& cfg, const HatVariances& h,
                               Scheme scheme);

double snr_lower(const BoundCoefficients& c, const PowerAllocation& a, int k);
Eigen::VectorXd snr_lower_all(const BoundCoefficients& c,
                              const PowerAllocation& a);

double prelog(const SystemConfig& cfg);
double spectral_efficiency(const SystemConfig& cfg, const Eigen::VectorXd& snr);
double spectral_efficiency(const SystemConfig& cfg, const PowerAllocation& a,
                           Scheme scheme);
double total_power(const SystemConfig& cfg, const PowerAllocation& a);
double energy_efficiency(const SystemConfig& cfg, const PowerAllocation& a,
                         double se);

struct RateReport {
  Scheme scheme = Scheme::kMrc;
  Eigen::VectorXd snr;
  Eigen::VectorXd rate;  // log2(1 + SNR_k), before the pilot overhead
  double sum_se = 0;
  double total_power_mw = 0;
  double ee = 0;
};

RateReport bound_report(const SystemConfig& cfg, const PowerAllocation& a,
                        Scheme scheme, double se_scale = 1.0);

// No loop or inter-user interference; SE scaled by 1/2 when half_prelog.
SystemConfig half_duplex_config(const SystemConfig& cfg);
RateReport half_duplex_report(const SystemConfig& cfg, const PowerAllocation& a,
                              Scheme scheme, bool half_prelog = true);

std::string report_csv_header();
std::string report_csv(const RateReport& r);

// Per-user EE share: rate_k / (p_k + (P_R + P_c) / 2K), with overhead.
Eigen::VectorXd user_ee(const SystemConfig& cfg, const PowerAllocation& a,
                        const Eigen::VectorXd& snr);

// Exact SNR of every user for one channel use.
Eigen::VectorXd instantaneous_snrs(const SystemConfig& cfg, const Precoder& W,
                                   double alpha,
                                   const ChannelRealization& real,
                                   const ChannelEstimate& est,
                                   const PowerAllocation& a);
double instantaneous_snr(int k, const SystemConfig& cfg, const Precoder& W,
                         double alpha, const ChannelRealization& real,
                         const ChannelEstimate& est, const PowerAllocation& a);

struct McRate {
  double mean = 0;  // E[sum_k log2(1 + SNR_k)]
  double se = 0;
  Eigen::VectorXd user_mean, user_se;
  double alpha = 0;
  int trials = 0;
};

// Closed-form alpha for MMSE; for LS the relay gain is calibrated on the
// same draws from the conditional relay input power.
McRate mc_ergodic_sum_rate(const SystemConfig& cfg, const PowerAllocation& a,
                           Scheme scheme, int trials, std::uint64_t seed,
                           Estimator method = Estimator::kMmse,
                           EstimationMode mode = EstimationMode::kStatistical);

struct MomentRow {
  std::string identity;
  int user = -1;  // -1 for system-wide identities
  double closed = 0;
  double mc = 0;
  double se = 0;

  double z() const;
};

std::vector<MomentRow> moment_check(const SystemConfig& cfg,
                                             Scheme scheme,
                                             const PowerAllocation& a,
                                             int trials, std::uint64_t seed);

}  // namespace mmrelay
