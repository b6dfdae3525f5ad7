#include "mmrelay/rates.hpp"

#include <doctest.h>

#include <cmath>
#include <cstdlib>

using namespace mmrelay;

namespace {

SystemConfig symmetric_config(int K, int N, double lir, double ui) {
  SystemConfig c = reference_config(N);
  c.K = K;
  c.tau = 2 * K;
  c.P_rho = 2.0;
  c.Du = Eigen::VectorXd::Ones(2 * K);
  c.Dd = Eigen::VectorXd::Ones(2 * K);
  c.sigma_LIR2 = lir;
  c.sigma_UI = uniform_ui(K, ui);
  return c;
}

SystemConfig profile_config(int K, int N) {
  SystemConfig c = reference_config(N);
  c.K = K;
  c.tau = 2 * K;
  c.Du = Eigen::VectorXd::LinSpaced(2 * K, 0.3, 1.2);
  c.Dd = Eigen::VectorXd::LinSpaced(2 * K, 1.1, 0.4);
  c.sigma_UI = uniform_ui(K, 0.5);
  c.sigma_LIR2 = 0.3;
  return c;
}

PowerAllocation ramp(int U, double pr) {
  PowerAllocation a;
  a.p = Eigen::VectorXd::LinSpaced(U, 0.2, 1.0);
  a.P_R = pr;
  return a;
}

// SNR_k = E[gain]^2 p_k' / (sum of variance terms + (UI + noise) / alpha^2)
// with every expectation reduced by hand for unit fading and estimate
// variance s; alpha^2 from the relay power constraint.
double symmetric_snr_oracle(const SystemConfig& c, const PowerAllocation& a,
                            Scheme scheme, int k) {
  const double N = c.N, U = c.users(), tp = c.tau * c.P_rho;
  const double s = tp / (tp + 1), xi = 1 - s;
  const double lir = c.sigma_LIR2, ui = c.sigma_UI(0, 0);
  const int kp = k ^ 1;
  const double psum = a.p.sum();
  double same_side = 0;
  for (int j = k % 2; j < U; j += 2) same_side += a.p(j);
  if (scheme == Scheme::kMrc) {
    const double Phi = U * s * s;
    const double var = Phi + 2 * N * s * s * s;
    const double si = xi * xi * Phi + 2 * s * xi * (N * s * s + Phi);
    double den = a.p(kp) * var + a.p(k) * si;
    for (int i = 0; i < U; ++i)
      if (i != k && i != kp) den += a.p(i) * var;
    den += (1 + a.P_R * lir) * (Phi + N * s * s * s);
    const double inv_alpha2 = ((psum + 1 + a.P_R * lir) * Phi + N * psum * s * s * s) / a.P_R;
    den += (ui * same_side + 1) * inv_alpha2;
    return N * N * s * s * s * s * a.p(kp) / den;
  }
  const double D = N - U;
  const double eta = U / (D * D * s * s);
  const double lam = psum / (D * s);
  const double var = 2 * xi / (D * s) + xi * xi * eta;
  double den = psum * var;
  den += (1 + a.P_R * lir) * (1 / (D * s) + xi * eta);
  den += (ui * same_side + 1) * (lam + eta * (psum * xi + 1 + a.P_R * lir)) / a.P_R;
  return a.p(kp) / den;
}

}  // namespace

TEST_CASE("bound SNR matches an independent symmetric reduction") {
  for (Scheme s : {Scheme::kMrc, Scheme::kZf}) {
    const SystemConfig c = symmetric_config(3, 40, 0.7, 0.4);
    const auto bc = bound_coeffs(c, hat_variances(c), s);
    const PowerAllocation a = ramp(6, 2.5);
    for (int k = 0; k < 6; ++k) {
      INFO(scheme_name(s) << " user " << k);
      CHECK(snr_lower(bc, a, k) ==
            doctest::Approx(symmetric_snr_oracle(c, a, s, k)).epsilon(1e-12));
    }
  }
}

TEST_CASE("merged form equals the term-by-term MRC denominator") {
  const SystemConfig c = profile_config(3, 24);
  const auto bc = bound_coeffs(c, hat_variances(c), Scheme::kMrc);
  const PowerAllocation a = ramp(6, 1.7);
  for (int k = 0; k < 6; ++k) {
    double den = bc.c(k) * a.p(k) + bc.d1(k) + bc.d2(k) * a.P_R + bc.d3(k) / a.P_R;
    for (int i = 0; i < 6; ++i) {
      den += bc.b1(k, i) * a.p(i) + bc.b2(k, i) * a.p(i) / a.P_R;
      den += bc.e1(k, i) * a.p(i) / a.P_R + bc.e2(k, i) * a.p(i);
      for (int j = 0; j < 6; ++j) den += bc.b3[k](i, j) * a.p(i) * a.p(j) / a.P_R;
    }
    CHECK(bc.form.denominator(a, k) == doctest::Approx(den).epsilon(1e-12));
    CHECK(bc.si(k) == doctest::Approx(bc.b1(k, k) + bc.c(k)).epsilon(1e-10));
    CHECK(bc.si(k) > 0);
  }
}

TEST_CASE("merged coefficients are non-negative") {
  for (Scheme s : {Scheme::kMrc, Scheme::kZf}) {
    const SystemConfig c = profile_config(2, 32);
    const SnrForm f = bound_coeffs(c, hat_variances(c), s).form;
    CHECK(f.num.minCoeff() > 0);
    CHECK(f.lin.minCoeff() >= 0);
    CHECK(f.lin_inv_pr.minCoeff() >= 0);
    CHECK(f.cst.minCoeff() >= 0);
    CHECK(f.pr.minCoeff() >= 0);
    CHECK(f.inv_pr.minCoeff() >= 0);
    for (const auto& m : f.cross) CHECK(m.minCoeff() >= 0);
  }
}

TEST_CASE("coefficient special cases") {
  SystemConfig c = symmetric_config(2, 4, 1.0, 1.0);
  c.P_rho = 1e15;
  SUBCASE("unit estimate variance gives a_k = N^2") {
    const auto bc = bound_coeffs(c, hat_variances(c), Scheme::kMrc);
    CHECK(bc.a(0) == doctest::Approx(16.0));
  }
  SUBCASE("perfect CSI removes the ZF error terms") {
    c.N = 8;
    const auto bc = bound_coeffs(c, hat_variances(c), Scheme::kZf);
    CHECK(bc.zd1.cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("bound SNR limits") {
  const SystemConfig c = profile_config(2, 32);
  const auto bc = bound_coeffs(c, hat_variances(c), Scheme::kMrc);
  PowerAllocation a = ramp(4, 2.0);
  a.p(1) = 0;
  CHECK(snr_lower(bc, a, 0) == 0.0);
  a = ramp(4, 1e12);
  CHECK(snr_lower(bc, a, 0) < 1e-6);
  a.P_R = 0;
  CHECK(snr_lower(bc, a, 2) == 0.0);
}

TEST_CASE("spectral and energy efficiency arithmetic") {
  SystemConfig c = reference_config();
  c.tau = 10;
  c.T = 200;
  CHECK(spectral_efficiency(c, Eigen::VectorXd::Ones(10)) == doctest::Approx(9.5));
  c.T = 10;
  CHECK(spectral_efficiency(c, Eigen::VectorXd::Ones(10)) == 0.0);
  c.Pc = 1.0;
  PowerAllocation a;
  a.p = Eigen::VectorXd::Constant(10, 0.05);
  a.P_R = 0.5;
  CHECK(energy_efficiency(c, a, 9.5) == doctest::Approx(4.75));
  CHECK(energy_efficiency(c, a, 0.0) == 0.0);
}

TEST_CASE("half-duplex report") {
  const SystemConfig c = profile_config(2, 32);
  const PowerAllocation a = ramp(4, 2.0);
  for (Scheme s : {Scheme::kMrc, Scheme::kZf}) {
    const RateReport half = half_duplex_report(c, a, s, true);
    const RateReport full = half_duplex_report(c, a, s, false);
    CHECK(full.sum_se == doctest::Approx(2 * half.sum_se).epsilon(1e-14));
    CHECK(full.sum_se == doctest::Approx(bound_report(half_duplex_config(c), a, s).sum_se));
    CHECK(full.sum_se > bound_report(c, a, s).sum_se);
  }
}

TEST_CASE("report CSV") {
  const SystemConfig c = profile_config(1, 16);
  const RateReport r = bound_report(c, ramp(2, 1.0), Scheme::kZf);
  const std::string csv = report_csv_header() + report_csv(r);
  CHECK(csv.rfind("scheme,k,snr,rate,sum_se,total_power_mw,ee\nzf,0,", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);
}

TEST_CASE("instantaneous SNR isolates the user-noise term") {
  SystemConfig c = symmetric_config(1, 16, 0.0, 0.0);
  c.sigma_nr2 = 1e-300;
  Rng rng = stream_rng(4, 0);
  const ChannelRealization r = draw_channels(c, rng, false);
  ChannelEstimate e;
  e.Ghat = r.G;
  e.Fhat = r.F;
  const Precoder W = make_precoder(r.G, r.F, Scheme::kMrc);
  PowerAllocation a;
  a.p = Eigen::Vector2d(0.4, 0.9);
  a.P_R = 1.0;
  const double alpha = 0.01;
  const cd g = (r.F.col(0).transpose() * W.apply(r.G.col(1)))(0, 0);
  const double expect = alpha * alpha * a.p(1) * std::norm(g) / c.sigma_n2;
  CHECK(instantaneous_snr(0, c, W, alpha, r, e, a) == doctest::Approx(expect).epsilon(1e-10));
  a.p(1) = 0;
  CHECK(instantaneous_snr(0, c, W, alpha, r, e, a) == 0.0);
}

TEST_CASE("Monte-Carlo rate: trivial cases and determinism") {
  const SystemConfig c = profile_config(2, 16);
  PowerAllocation z;
  z.p = Eigen::VectorXd::Zero(4);
  z.P_R = 1.0;
  CHECK(mc_ergodic_sum_rate(c, z, Scheme::kMrc, 10, 1).mean == 0.0);

  const PowerAllocation a = ramp(4, 2.0);
  const McRate r1 = mc_ergodic_sum_rate(c, a, Scheme::kZf, 200, 9);
  setenv("MMRELAY_THREADS", "1", 1);
  const McRate r2 = mc_ergodic_sum_rate(c, a, Scheme::kZf, 200, 9);
  unsetenv("MMRELAY_THREADS");
  CHECK(r1.mean == r2.mean);
  CHECK(r1.se == r2.se);

  const McRate r4 = mc_ergodic_sum_rate(c, a, Scheme::kZf, 800, 10);
  const double ratio = (r1.se * r1.se) / (r4.se * r4.se);
  CHECK(ratio == doctest::Approx(4.0).epsilon(0.3));
}

TEST_CASE("bound lies below the Monte-Carlo rate") {
  const SystemConfig c = profile_config(2, 32);
  const PowerAllocation a = ramp(4, 2.0);
  for (Scheme s : {Scheme::kMrc, Scheme::kZf}) {
    const McRate mc = mc_ergodic_sum_rate(c, a, s, 2000, 5);
    const RateReport b = bound_report(c, a, s);
    INFO(scheme_name(s));
    for (int k = 0; k < 4; ++k) CHECK(b.rate(k) <= mc.user_mean(k) + 3 * mc.user_se(k));
    CHECK(b.rate.sum() >= 0.85 * mc.mean);
  }
}

TEST_CASE("MMSE beats least squares at low pilot power") {
  SystemConfig c = profile_config(2, 32);
  c.P_rho = 0.1;
  const PowerAllocation a = ramp(4, 2.0);
  const McRate mmse = mc_ergodic_sum_rate(c, a, Scheme::kMrc, 1000, 3);
  const McRate ls = mc_ergodic_sum_rate(c, a, Scheme::kMrc, 1000, 3, Estimator::kLs);
  CHECK(mmse.mean > ls.mean);
  const McRate pilot = mc_ergodic_sum_rate(c, a, Scheme::kMrc, 1000, 3, Estimator::kMmse,
                                           EstimationMode::kPilotSim);
  CHECK(std::abs(pilot.mean - mmse.mean) < 3 * std::hypot(pilot.se, mmse.se));
}

TEST_CASE("closed-form moments agree with simulation") {
  for (Scheme s : {Scheme::kMrc, Scheme::kZf}) {
    const SystemConfig c = profile_config(2, 24);
    const auto rows = moment_check(c, s, ramp(4, 2.0), 4000, 77);
    CHECK(rows.size() >= 27);
    for (const auto& r : rows) {
      INFO(scheme_name(s) << " " << r.identity << " user " << r.user << " closed "
                          << r.closed << " mc " << r.mc << " se " << r.se);
      CHECK(std::abs(r.z()) < 3.5);
    }
  }
}

TEST_CASE("bound SNR increases with the partner's power") {
  const SystemConfig c = profile_config(2, 32);
  for (Scheme s : {Scheme::kMrc, Scheme::kZf}) {
    const auto bc = bound_coeffs(c, hat_variances(c), s);
    for (double p = 0.05; p < 3; p *= 1.5) {
      PowerAllocation a = ramp(4, 2.0), b = a;
      a.p(1) = p;
      b.p(1) = p * 1.001;
      CHECK(snr_lower(bc, b, 0) > snr_lower(bc, a, 0));
    }
  }
}

TEST_CASE("exchanging two pair labels permutes the coefficients") {
  SystemConfig c = profile_config(2, 32);
  c.sigma_UI = uniform_ui(2, 0.7);
  SystemConfig d = c;
  const int perm[] = {2, 3, 0, 1};
  for (int i = 0; i < 4; ++i) {
    d.Du(perm[i]) = c.Du(i);
    d.Dd(perm[i]) = c.Dd(i);
  }
  PowerAllocation a = ramp(4, 2.0), b = a;
  for (int i = 0; i < 4; ++i) b.p(perm[i]) = a.p(i);
  for (Scheme s : {Scheme::kMrc, Scheme::kZf}) {
    const auto bc = bound_coeffs(c, hat_variances(c), s);
    const auto bd = bound_coeffs(d, hat_variances(d), s);
    for (int k = 0; k < 4; ++k) {
      CHECK(bd.form.num(perm[k]) == doctest::Approx(bc.form.num(k)).epsilon(1e-12));
      CHECK(snr_lower(bd, b, perm[k]) == doctest::Approx(snr_lower(bc, a, k)).epsilon(1e-12));
    }
  }
}
