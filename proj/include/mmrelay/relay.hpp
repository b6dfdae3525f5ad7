// Relay processing: pair-swap permutation, MRC/MRT and ZFR/ZFT precoders,
// and the amplification factor alpha.
#pragma once

#include "mmrelay/sysmodel.hpp"

#include <string>

namespace mmrelay {

enum class Scheme { kMrc, kZf };

std::string scheme_name(Scheme s);
Scheme parse_scheme(const std::string& s);

struct DegenerateChannel : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Block diagonal with K blocks [0 1; 1 0].
Eigen::MatrixXd permutation_map(int K);

// W = left^* T right^H. MRC: left = Fhat, right = Ghat. ZF: left =
// Fhat (Fhat^H Fhat)^-1, right = Ghat (Ghat^H Ghat)^-1.
struct Precoder {
  Scheme scheme = Scheme::kMrc;
  Eigen::MatrixXcd left, right;

  int users() const { return static_cast<int>(left.cols()); }
  Eigen::MatrixXcd dense() const;
  // W A without forming W.
  Eigen::MatrixXcd apply(const Eigen::MatrixXcd& A) const;
  // A^T W for an N x m matrix A.
  Eigen::MatrixXcd left_apply(const Eigen::MatrixXcd& A) const;
  // ||W||_F^2.
  double frob2() const;
};

Precoder make_precoder(const Eigen::MatrixXcd& Ghat,
                       const Eigen::MatrixXcd& Fhat, Scheme scheme);

Eigen::MatrixXcd precoder_mrc(const Eigen::MatrixXcd& Ghat,
                              const Eigen::MatrixXcd& Fhat);
Eigen::MatrixXcd precoder_zf(const Eigen::MatrixXcd& Ghat,
                             const Eigen::MatrixXcd& Fhat);

// X (X^H X)^-1 via Cholesky; throws DegenerateChannel when the Gram
// condition number exceeds 1e12.
Eigen::MatrixXcd pseudo_inverse_columns(const Eigen::MatrixXcd& X);

// Statistics entering the closed-form alpha.
struct AlphaTerms {
  double Phi_hat = 0;     // sum_j sig_hat_g,j sig_hat_f,j'
  double Psi = 0;         // sum_i p_i sigma^2_g,i
  double Upsilon_hat = 0; // sum_j p_j sig_hat_g,j^2 sig_hat_f,j'
  double lambda_hat = 0;  // sum_i p_i' / (D sig_hat_f,i)
  double eta_hat = 0;     // sum_j 1 / (D^2 sig_hat_f,j sig_hat_g,j')
  double denom = 0;       // P_R / alpha^2
};

AlphaTerms alpha_terms(const SystemConfig& cfg, const HatVariances& h,
                       const PowerAllocation& a, Scheme scheme);

double alpha_closed(const SystemConfig& cfg, const HatVariances& h,
                    const PowerAllocation& a, Scheme scheme);

// Sample mean of ||W G x||^2 + ||W G_RR x_R||^2 + ||W z_R||^2 for a fixed
// channel, with `trials` draws of data, residual loop signal and relay noise.
struct PowerSample {
  double mean = 0;
  double se = 0;
};
PowerSample relay_power_denominator(const Precoder& W, const SystemConfig& cfg,
                                    const ChannelRealization& real,
                                    const PowerAllocation& a, Rng& rng,
                                    int trials);

double alpha_empirical(const Precoder& W, const SystemConfig& cfg,
                       const ChannelRealization& real,
                       const PowerAllocation& a, Rng& rng, int trials);

// f_hat_k^T W g_hat_k, removed by user k before detection.
cd sic_coefficient(const Eigen::MatrixXcd& Ghat, const Eigen::MatrixXcd& Fhat,
                   const Precoder& W, int k);
cd sic_coefficient(const Eigen::MatrixXcd& Ghat, const Eigen::MatrixXcd& Fhat,
                   const Eigen::MatrixXcd& W, int k);

}  // namespace mmrelay
