#include "mmrelay/sysmodel.hpp"

#include <boost/multiprecision/cpp_dec_float.hpp>
#include <doctest.h>

#include <cmath>

using namespace mmrelay;

namespace {

SystemConfig small_config(int K, int N) {
  SystemConfig c = reference_config(N);
  c.K = K;
  c.tau = 2 * K;
  c.Du = Eigen::VectorXd::LinSpaced(2 * K, 0.3, 1.2);
  c.Dd = Eigen::VectorXd::LinSpaced(2 * K, 1.1, 0.4);
  c.sigma_UI = uniform_ui(K, 1.0);
  return c;
}

struct Moments {
  double mean = 0, se = 0;
};

Moments moments(const std::vector<double>& v) {
  double s = 0, s2 = 0;
  for (double x : v) {
    s += x;
    s2 += x * x;
  }
  const double n = static_cast<double>(v.size());
  Moments m;
  m.mean = s / n;
  m.se = std::sqrt(std::max(s2 / n - m.mean * m.mean, 0.0) / (n - 1));
  return m;
}

}  // namespace

TEST_CASE("pair partner swaps within each pair") {
  CHECK(pair_partner(0, 5) == 1);
  CHECK(pair_partner(3, 5) == 2);
  for (int k = 0; k < 10; ++k) CHECK(pair_partner(pair_partner(k, 5), 5) == k);
  CHECK_THROWS_AS(pair_partner(10, 5), std::out_of_range);
  CHECK_THROWS_AS(pair_partner(-1, 5), std::out_of_range);
}

TEST_CASE("reference configuration is valid") {
  const SystemConfig c = reference_config();
  CHECK_NOTHROW(c.validate(true));
  CHECK(c.users() == 10);
  CHECK(c.Pt_max == doctest::Approx(10.0));
  CHECK(c.PR_max == doctest::Approx(199.526231496888));
  CHECK(c.P_rho == doctest::Approx(100.0));
}

TEST_CASE("validation names the offending field") {
  SystemConfig c = reference_config();
  c.tau = 3;
  try {
    c.validate();
    FAIL("expected an error");
  } catch (const std::invalid_argument& e) {
    CHECK(std::string(e.what()).rfind("tau", 0) == 0);
  }
  c = reference_config(11);
  CHECK_NOTHROW(c.validate(false));
  CHECK_THROWS_WITH_AS(c.validate(true), doctest::Contains("N:"), std::invalid_argument);
  c = reference_config();
  c.sigma_UI(0, 1) = 1.0;
  CHECK_THROWS_WITH_AS(c.validate(), doctest::Contains("sigma_UI"), std::invalid_argument);
}

TEST_CASE("unit conversions") {
  CHECK(dbm_to_mw(20) == doctest::Approx(100));
  CHECK(db_to_lin(-10) == doctest::Approx(0.1));
  CHECK(lin_to_db(1000) == doctest::Approx(30));
}

TEST_CASE("hat variances: symmetric and limiting cases") {
  SystemConfig c = small_config(1, 8);
  c.Du.setOnes();
  c.Dd.setOnes();
  c.tau = 2;
  c.P_rho = 0.5;  // tau * P_rho = 1
  HatVariances h = hat_variances(c);
  CHECK(h.g(0) == doctest::Approx(0.5));
  CHECK(h.xi_g(0) == doctest::Approx(0.5));
  c.P_rho = 1e12;
  h = hat_variances(c);
  CHECK(h.g(1) == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(h.xi_f(1) < 1e-11);
}

TEST_CASE("hat variances match an extended-precision evaluation") {
  using boost::multiprecision::cpp_dec_float_50;
  SystemConfig c = reference_config();
  const HatVariances h = hat_variances(c);
  const cpp_dec_float_50 tp = cpp_dec_float_50(c.tau) * cpp_dec_float_50(c.P_rho);
  for (int k = 0; k < c.users(); ++k) {
    const cpp_dec_float_50 s(c.Du(k));
    const cpp_dec_float_50 hat = tp * s * s / (tp * s + 1);
    const cpp_dec_float_50 err = s / (tp * s + 1);
    CHECK(h.g(k) == doctest::Approx(hat.convert_to<double>()).epsilon(1e-14));
    CHECK(h.xi_g(k) == doctest::Approx(err.convert_to<double>()).epsilon(1e-14));
    CHECK(h.g(k) + h.xi_g(k) == doctest::Approx(c.Du(k)).epsilon(1e-14));
  }
}

TEST_CASE("least-squares variances") {
  const SystemConfig c = reference_config();
  const HatVariances h = hat_variances(c, Estimator::kLs);
  const double ls = 1.0 / (c.tau * c.P_rho);
  CHECK(h.xi_g(0) == doctest::Approx(ls));
  CHECK(h.g(0) == doctest::Approx(c.Du(0) + ls));
}

TEST_CASE("channel draws are seeded and have the configured variance") {
  SystemConfig c = small_config(2, 32);
  Rng a = stream_rng(7, 0), b = stream_rng(7, 0);
  const ChannelRealization r1 = draw_channels(c, a);
  const ChannelRealization r2 = draw_channels(c, b);
  CHECK(r1.G == r2.G);
  CHECK(r1.G_RR == r2.G_RR);
  CHECK(r1.Omega == r2.Omega);

  std::vector<double> v;
  Rng rng = stream_rng(3, 1);
  for (int t = 0; t < 100000 / c.N; ++t) {
    const ChannelRealization r = draw_channels(c, rng, false);
    for (int n = 0; n < c.N; ++n) v.push_back(std::norm(r.G(n, 2)));
  }
  const Moments m = moments(v);
  CHECK(std::abs(m.mean - c.Du(2)) < 3 * m.se);
}

TEST_CASE("zero variance column is identically zero") {
  SystemConfig c = small_config(1, 8);
  c.Du(1) = 0.0;
  Rng rng = stream_rng(1, 2);
  const ChannelRealization r = draw_channels(c, rng);
  CHECK(r.G.col(1).norm() == 0.0);
}

TEST_CASE("pilot matrix rows are orthonormal") {
  const Eigen::MatrixXcd phi = pilot_matrix(3, 8);
  CHECK((phi * phi.adjoint() - Eigen::MatrixXcd::Identity(6, 6)).norm() < 1e-12);
}

TEST_CASE("pilot simulation reproduces the estimate variance") {
  SystemConfig c = small_config(2, 16);
  c.P_rho = 0.3;
  const HatVariances h = hat_variances(c);
  std::vector<double> sim, stat;
  for (int t = 0; t < 10000 / c.N * 4; ++t) {
    Rng rng = stream_rng(11, t);
    const LinkSample p = sample_link(c, rng, Estimator::kMmse, EstimationMode::kPilotSim);
    const LinkSample s = sample_link(c, rng, Estimator::kMmse, EstimationMode::kStatistical);
    for (int n = 0; n < c.N; ++n) {
      sim.push_back(std::norm(p.est.Ghat(n, 1)));
      stat.push_back(std::norm(s.est.Ghat(n, 1)));
    }
  }
  const Moments ms = moments(sim), mt = moments(stat);
  CHECK(std::abs(ms.mean - h.g(1)) < 3 * ms.se);
  CHECK(std::abs(mt.mean - h.g(1)) < 3 * mt.se);
  CHECK(std::abs(ms.mean - mt.mean) < 3 * std::hypot(ms.se, mt.se));
}

TEST_CASE("noiseless training recovers the channel") {
  SystemConfig c = small_config(2, 8);
  c.P_rho = 1e14;
  Rng rng = stream_rng(5, 0);
  const LinkSample s = sample_link(c, rng, Estimator::kMmse, EstimationMode::kPilotSim);
  CHECK((s.est.Ghat - s.real.G).norm() < 1e-5 * s.real.G.norm());
  CHECK((s.est.Fhat - s.real.F).norm() < 1e-5 * s.real.F.norm());
}

TEST_CASE("power allocation slack") {
  const SystemConfig c = reference_config();
  PowerAllocation a;
  a.p = Eigen::VectorXd::Constant(10, 0.5);
  a.P_R = 5.0;
  CHECK(a.feasible(c));
  CHECK(a.min_slack(c) == doctest::Approx(0.0));
  a.P_R = 6.0;
  CHECK_FALSE(a.feasible(c));
}
