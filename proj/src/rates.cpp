#include "mmrelay/rates.hpp"

#include "mmrelay/parallel.hpp"

#include <cmath>
#include <cstdio>

namespace mmrelay {

double SnrForm::denominator(const PowerAllocation& a, int k) const {
  const double inv = 1.0 / a.P_R;
  double d = cst(k) + pr(k) * a.P_R + inv_pr(k) * inv;
  d += lin.row(k).dot(a.p) + inv * lin_inv_pr.row(k).dot(a.p);
  d += inv * a.p.dot(cross[k] * a.p);
  return d;
}

BoundCoefficients bound_coeffs(const SystemConfig& cfg, const HatVariances& h,
                               Scheme scheme) {
  cfg.validate(scheme == Scheme::kZf);
  const int U = cfg.users();
  const double N = cfg.N;
  const Eigen::VectorXd& sg = cfg.Du;
  const Eigen::VectorXd& sf = cfg.Dd;
  const Eigen::VectorXd &hg = h.g, &hf = h.f, &xg = h.xi_g, &xf = h.xi_f;
  const double sn = cfg.sigma_n2, snr_ = cfg.sigma_nr2, slir = cfg.sigma_LIR2;
  const Eigen::MatrixXd& sui = cfg.sigma_UI;

  BoundCoefficients c;
  c.scheme = scheme;
  c.K = cfg.K;
  c.N = cfg.N;
  SnrForm& f = c.form;
  f.cross.assign(U, Eigen::MatrixXd::Zero(U, U));

  if (scheme == Scheme::kMrc) {
    double Phi = 0;
    for (int j = 0; j < U; ++j) Phi += hg(j) * hf(j ^ 1);
    c.Phi_hat = Phi;
    Eigen::VectorXd beta(U);
    for (int i = 0; i < U; ++i)
      beta(i) = Phi * sg(i) + N * hg(i) * hg(i) * hf(i ^ 1);

    c.a.resize(U);
    c.b1.resize(U, U);
    c.b2.resize(U, U);
    c.b3.assign(U, Eigen::MatrixXd::Zero(U, U));
    c.c.resize(U);
    c.si.resize(U);
    c.d1.resize(U);
    c.d2.resize(U);
    c.d3.resize(U);
    c.e1.resize(U, U);
    c.e2.resize(U, U);
    for (int k = 0; k < U; ++k) {
      const int kp = k ^ 1;
      c.a(k) = N * N * hf(k) * hf(k) * hg(kp) * hg(kp);
      for (int i = 0; i < U; ++i) {
        c.b1(k, i) = Phi * sf(k) * sg(i) +
                     N * (sf(k) * hg(i) * hg(i) * hf(i ^ 1) +
                          sg(i) * hf(k) * hf(k) * hg(kp));
        c.b2(k, i) = sn * beta(i);
        for (int j = 0; j < U; ++j) c.b3[k](i, j) = sui(k, j) * beta(i);
        c.e1(k, i) = snr_ * sui(k, i) * Phi;
        c.e2(k, i) = slir * sui(k, i) * Phi;
      }
      c.c(k) = -(Phi * hf(k) * hg(k) +
                 N * (hf(k) * hf(k) * hg(k) * hg(kp) +
                      hf(k) * hg(k) * hg(k) * hf(kp)));
      c.si(k) = xf(k) * xg(k) * Phi +
                hf(k) * xg(k) * (N * hf(k) * hg(kp) + Phi) +
                xf(k) * hg(k) * (N * hg(k) * hf(kp) + Phi);
      const double bracket = sf(k) * Phi + N * hf(k) * hf(k) * hg(kp);
      c.d1(k) = (slir * sn + snr_ * sf(k)) * Phi +
                N * snr_ * hf(k) * hf(k) * hg(kp);
      c.d2(k) = slir * bracket;
      c.d3(k) = snr_ * sn * Phi;
    }
    f.num = c.a;
    f.lin = c.b1 + c.e2;
    f.lin.diagonal() = c.si + c.e2.diagonal();
    f.lin_inv_pr = c.b2 + c.e1;
    f.cross = c.b3;
    f.cst = c.d1;
    f.pr = c.d2;
    f.inv_pr = c.d3;
    return c;
  }

  const double D = cfg.wishart_dof();
  c.dof = D;
  double eta = 0;
  for (int j = 0; j < U; ++j) eta += 1.0 / (D * D * hf(j) * hg(j ^ 1));
  c.eta_hat = eta;
  Eigen::VectorXd gam(U);
  for (int i = 0; i < U; ++i) gam(i) = 1.0 / (D * hf(i ^ 1)) + eta * xg(i);

  c.u = Eigen::VectorXd::Ones(U);
  c.zd1.resize(U, U);
  c.zd2.resize(U, U);
  c.zd3.assign(U, Eigen::MatrixXd::Zero(U, U));
  c.v1.resize(U);
  c.v2.resize(U);
  c.v3.resize(U);
  c.w1.resize(U, U);
  c.w2.resize(U, U);
  for (int k = 0; k < U; ++k) {
    const int kp = k ^ 1;
    for (int i = 0; i < U; ++i) {
      c.zd1(k, i) = xf(k) / (D * hf(i ^ 1)) + xg(i) / (D * hg(kp)) +
                    xf(k) * xg(i) * eta;
      c.zd2(k, i) = sn * gam(i);
      for (int j = 0; j < U; ++j) c.zd3[k](i, j) = sui(k, j) * gam(i);
      c.w1(k, i) = eta * sui(k, i) * slir;
      c.w2(k, i) = eta * sui(k, i) * snr_;
    }
    const double nr = 1.0 / (D * hg(kp)) + xf(k) * eta;
    c.v1(k) = snr_ * nr + eta * slir * sn;
    c.v2(k) = slir * nr;
    c.v3(k) = eta * snr_ * sn;
  }
  f.num = c.u;
  f.lin = c.zd1 + c.w1;
  f.lin_inv_pr = c.zd2 + c.w2;
  f.cross = c.zd3;
  f.cst = c.v1;
  f.pr = c.v2;
  f.inv_pr = c.v3;
  return c;
}

double snr_lower(const BoundCoefficients& c, const PowerAllocation& a, int k) {
  const int kp = k ^ 1;
  if (a.P_R <= 0 || a.p(kp) <= 0) return 0.0;
  const double den = c.form.denominator(a, k);
  if (!(den > 0) || !std::isfinite(den))
    throw ModelViolation("non-positive SNR bound denominator for user " +
                         std::to_string(k));
  return c.form.num(k) * a.p(kp) / den;
}

Eigen::VectorXd snr_lower_all(const BoundCoefficients& c,
                              const PowerAllocation& a) {
  Eigen::VectorXd s(c.form.users());
  for (int k = 0; k < s.size(); ++k) s(k) = snr_lower(c, a, k);
  return s;
}

double prelog(const SystemConfig& cfg) {
  return 1.0 - static_cast<double>(cfg.tau) / cfg.T;
}

double spectral_efficiency(const SystemConfig& cfg, const Eigen::VectorXd& snr) {
  double s = 0;
  for (int k = 0; k < snr.size(); ++k) s += std::log2(1.0 + snr(k));
  return prelog(cfg) * s;
}

double spectral_efficiency(const SystemConfig& cfg, const PowerAllocation& a,
                           Scheme scheme) {
  const auto c = bound_coeffs(cfg, hat_variances(cfg), scheme);
  return spectral_efficiency(cfg, snr_lower_all(c, a));
}

double total_power(const SystemConfig& cfg, const PowerAllocation& a) {
  return a.transmit_total() + cfg.Pc;
}

double energy_efficiency(const SystemConfig& cfg, const PowerAllocation& a,
                         double se) {
  return se / total_power(cfg, a);
}

RateReport bound_report(const SystemConfig& cfg, const PowerAllocation& a,
                        Scheme scheme, double se_scale) {
  const auto c = bound_coeffs(cfg, hat_variances(cfg), scheme);
  RateReport r;
  r.scheme = scheme;
  r.snr = snr_lower_all(c, a);
  r.rate = r.snr.unaryExpr([](double s) { return std::log2(1.0 + s); });
  r.sum_se = se_scale * spectral_efficiency(cfg, r.snr);
  r.total_power_mw = total_power(cfg, a);
  r.ee = energy_efficiency(cfg, a, r.sum_se);
  return r;
}

SystemConfig half_duplex_config(const SystemConfig& cfg) {
  SystemConfig hd = cfg;
  hd.sigma_LIR2 = 0.0;
  hd.sigma_UI.setZero();
  return hd;
}

RateReport half_duplex_report(const SystemConfig& cfg, const PowerAllocation& a,
                              Scheme scheme, bool half_prelog) {
  return bound_report(half_duplex_config(cfg), a, scheme,
                      half_prelog ? 0.5 : 1.0);
}

std::string report_csv_header() {
  return "scheme,k,snr,rate,sum_se,total_power_mw,ee\n";
}

std::string report_csv(const RateReport& r) {
  std::string out;
  char buf[256];
  for (int k = 0; k < r.snr.size(); ++k) {
    std::snprintf(buf, sizeof buf, "%s,%d,%.12g,%.12g,%.12g,%.12g,%.12g\n",
                  scheme_name(r.scheme).c_str(), k, r.snr(k), r.rate(k),
                  r.sum_se, r.total_power_mw, r.ee);
    out += buf;
  }
  return out;
}

Eigen::VectorXd user_ee(const SystemConfig& cfg, const PowerAllocation& a,
                        const Eigen::VectorXd& snr) {
  const int U = cfg.users();
  Eigen::VectorXd e(U);
  for (int k = 0; k < U; ++k)
    e(k) = prelog(cfg) * std::log2(1.0 + snr(k)) /
           (a.p(k) + (a.P_R + cfg.Pc) / U);
  return e;
}

namespace {

// Channel-dependent parts of the exact SNR; SNR_k = A_k / (B_k + C_k / a^2).
struct TrialGains {
  Eigen::MatrixXcd M;     // f_k^T W g_i
  Eigen::VectorXcd sic;   // f_hat_k^T W g_hat_k
  Eigen::VectorXd nrm;    // ||f_k^T W||^2
  Eigen::VectorXd lir;    // ||f_k^T W G_RR||^2
  double relay_in = 0;    // E[||W (G x + G_RR x_R + z)||^2 | channel]
};

TrialGains trial_gains(const SystemConfig& cfg, const Precoder& W,
                       const ChannelRealization& real,
                       const ChannelEstimate& est, const PowerAllocation& a,
                       bool want_relay_in) {
  TrialGains t;
  const Eigen::MatrixXcd FtW = W.left_apply(real.F);
  t.M = FtW * real.G;
  t.sic = (W.left_apply(est.Fhat) * est.Ghat).diagonal();
  t.nrm = FtW.rowwise().squaredNorm();
  if (real.G_RR.size() > 0)
    t.lir = (FtW * real.G_RR).rowwise().squaredNorm();
  else
    t.lir = Eigen::VectorXd::Zero(FtW.rows());
  if (want_relay_in) {
    const Eigen::MatrixXcd WG = W.apply(real.G);
    double s = 0;
    for (int i = 0; i < a.p.size(); ++i) s += a.p(i) * WG.col(i).squaredNorm();
    const double fro = W.frob2();
    s += cfg.sigma_nr2 * fro;
    if (real.G_RR.size() > 0)
      s += a.P_R / cfg.N * W.apply(real.G_RR).squaredNorm();
    t.relay_in = s;
  }
  return t;
}

struct SnrParts {
  Eigen::VectorXd A, B, C;
};

SnrParts snr_parts(const SystemConfig& cfg, const TrialGains& t,
                   const PowerAllocation& a) {
  const int U = cfg.users();
  SnrParts s{Eigen::VectorXd(U), Eigen::VectorXd(U), Eigen::VectorXd(U)};
  for (int k = 0; k < U; ++k) {
    const int kp = k ^ 1;
    s.A(k) = a.p(kp) * std::norm(t.M(k, kp));
    double b = a.p(k) * std::norm(t.M(k, k) - t.sic(k));
    for (int i = 0; i < U; ++i)
      if (i != k && i != kp) b += a.p(i) * std::norm(t.M(k, i));
    b += t.lir(k) * a.P_R / cfg.N + t.nrm(k) * cfg.sigma_nr2;
    s.B(k) = b;
    s.C(k) = cfg.sigma_UI.row(k).dot(a.p) + cfg.sigma_n2;
  }
  return s;
}

double snr_from_parts(double A, double B, double C, double alpha) {
  if (alpha <= 0 || A <= 0) return 0.0;
  return A / (B + C / (alpha * alpha));
}

}  // namespace

Eigen::VectorXd instantaneous_snrs(const SystemConfig& cfg, const Precoder& W,
                                   double alpha,
                                   const ChannelRealization& real,
                                   const ChannelEstimate& est,
                                   const PowerAllocation& a) {
  const SnrParts s = snr_parts(cfg, trial_gains(cfg, W, real, est, a, false), a);
  Eigen::VectorXd out(s.A.size());
  for (int k = 0; k < out.size(); ++k)
    out(k) = snr_from_parts(s.A(k), s.B(k), s.C(k), alpha);
  return out;
}

double instantaneous_snr(int k, const SystemConfig& cfg, const Precoder& W,
                         double alpha, const ChannelRealization& real,
                         const ChannelEstimate& est, const PowerAllocation& a) {
  return instantaneous_snrs(cfg, W, alpha, real, est, a)(k);
}

McRate mc_ergodic_sum_rate(const SystemConfig& cfg, const PowerAllocation& a,
                           Scheme scheme, int trials, std::uint64_t seed,
                           Estimator method, EstimationMode mode) {
  cfg.validate(scheme == Scheme::kZf);
  if (trials < 1) throw std::invalid_argument("trials: must be >= 1");
  const int U = cfg.users();
  McRate out;
  out.trials = trials;
  out.user_mean = Eigen::VectorXd::Zero(U);
  out.user_se = Eigen::VectorXd::Zero(U);
  if (a.P_R <= 0 || a.p.isZero()) return out;

  const bool calibrate = method == Estimator::kLs;
  std::vector<SnrParts> parts(trials);
  std::vector<double> relay_in(trials, 0.0);
  parallel_for(trials, [&](int t) {
    Rng rng = stream_rng(seed, static_cast<std::uint64_t>(t));
    const LinkSample s = sample_link(cfg, rng, method, mode);
    const Precoder W = make_precoder(s.est.Ghat, s.est.Fhat, scheme);
    const TrialGains g = trial_gains(cfg, W, s.real, s.est, a, calibrate);
    parts[t] = snr_parts(cfg, g, a);
    relay_in[t] = g.relay_in;
  });

  if (calibrate) {
    double m = 0;
    for (double v : relay_in) m += v;
    m /= trials;
    out.alpha = std::sqrt(a.P_R / m);
  } else {
    out.alpha = alpha_closed(cfg, hat_variances(cfg, method), a, scheme);
  }

  double s = 0, s2 = 0;
  Eigen::VectorXd us = Eigen::VectorXd::Zero(U), us2 = us;
  for (int t = 0; t < trials; ++t) {
    double sum = 0;
    for (int k = 0; k < U; ++k) {
      const double r = std::log2(
          1.0 + snr_from_parts(parts[t].A(k), parts[t].B(k), parts[t].C(k),
                               out.alpha));
      us(k) += r;
      us2(k) += r * r;
      sum += r;
    }
    s += sum;
    s2 += sum * sum;
  }
  auto se_of = [trials](double sum, double sq) {
    if (trials < 2) return 0.0;
    const double m = sum / trials;
    const double var = (sq - trials * m * m) / (trials - 1);
    return std::sqrt(std::max(var, 0.0) / trials);
  };
  out.mean = s / trials;
  out.se = se_of(s, s2);
  for (int k = 0; k < U; ++k) {
    out.user_mean(k) = us(k) / trials;
    out.user_se(k) = se_of(us(k), us2(k));
  }
  return out;
}

double MomentRow::z() const {
  if (se > 0) return (mc - closed) / se;
  return mc == closed ? 0.0 : INFINITY;
}

namespace {

struct Accum {
  double s = 0, s2 = 0;
  void add(double v) {
    s += v;
    s2 += v * v;
  }
  double mean(int n) const { return s / n; }
  double se(int n) const {
    const double m = s / n;
    return std::sqrt(std::max((s2 - n * m * m) / (n - 1), 0.0) / n);
  }
};

}  // namespace

std::vector<MomentRow> moment_check(const SystemConfig& cfg,
                                             Scheme scheme,
                                             const PowerAllocation& a,
                                             int trials, std::uint64_t seed) {
  cfg.validate(scheme == Scheme::kZf);
  if (trials < 2) throw std::invalid_argument("trials: must be >= 2");
  const int U = cfg.users();
  const double N = cfg.N;
  const HatVariances h = hat_variances(cfg);
  const BoundCoefficients bc = bound_coeffs(cfg, h, scheme);
  const AlphaTerms at = alpha_terms(cfg, h, a, scheme);
  const bool zf = scheme == Scheme::kZf;

  struct Sample {
    Eigen::VectorXcd gain;
    Eigen::VectorXd si, ip, nr, lir;
    double data = 0, loop = 0, noise = 0, trace = 0, trace_f = 0;
  };
  std::vector<Sample> samples(trials);
  parallel_for(trials, [&](int t) {
    Rng rng = stream_rng(seed, static_cast<std::uint64_t>(t));
    const LinkSample s = sample_link(cfg, rng);
    const Precoder W = make_precoder(s.est.Ghat, s.est.Fhat, scheme);
    const TrialGains g = trial_gains(cfg, W, s.real, s.est, a, false);
    Sample& out = samples[t];
    out.gain.resize(U);
    out.si.resize(U);
    out.ip.resize(U);
    out.nr.resize(U);
    out.lir.resize(U);
    for (int k = 0; k < U; ++k) {
      const int kp = k ^ 1;
      out.gain(k) = g.M(k, kp);
      out.si(k) = std::norm(g.M(k, k) - g.sic(k));
      double ip = 0;
      for (int i = 0; i < U; ++i)
        if (i != k && i != kp) ip += a.p(i) * std::norm(g.M(k, i));
      out.ip(k) = ip;
      out.nr(k) = cfg.sigma_nr2 * g.nrm(k);
      out.lir(k) = g.lir(k) * a.P_R / N;
    }
    const Eigen::MatrixXcd WG = W.apply(s.real.G);
    for (int i = 0; i < U; ++i) out.data += a.p(i) * WG.col(i).squaredNorm();
    out.loop = a.P_R / N * W.apply(s.real.G_RR).squaredNorm();
    const double fro = W.frob2();
    out.noise = cfg.sigma_nr2 * fro;
    if (zf) {
      const Eigen::MatrixXcd LF = (s.est.Fhat.adjoint() * s.est.Fhat).inverse();
      const Eigen::MatrixXcd LG = (s.est.Ghat.adjoint() * s.est.Ghat).inverse();
      const Eigen::MatrixXd T = permutation_map(cfg.K);
      out.trace = (LF * T * LG * T).trace().real();
      out.trace_f = LF.trace().real();
    } else {
      out.trace = fro;
    }
  });

  std::vector<MomentRow> rows;
  auto push = [&](const std::string& id, int user, double closed,
                  const Accum& acc) {
    rows.push_back({id, user, closed, acc.mean(trials), acc.se(trials)});
  };

  const double N2 = zf ? 1.0 : N * N;
  for (int k = 0; k < U; ++k) {
    const int kp = k ^ 1;
    Accum mean_re, var, si, ip, nr, lir;
    std::complex<double> m = 0;
    for (const auto& s : samples) m += s.gain(k);
    m /= static_cast<double>(trials);
    for (const auto& s : samples) {
      mean_re.add(s.gain(k).real());
      var.add(std::norm(s.gain(k) - m) * trials / (trials - 1.0));
      si.add(s.si(k));
      ip.add(s.ip(k));
      nr.add(s.nr(k));
      lir.add(s.lir(k));
    }
    const double mean_closed =
        zf ? 1.0 : N * N * h.f(k) * h.g(kp);
    const Eigen::MatrixXd& b = zf ? bc.zd1 : bc.b1;
    const double si_closed = zf ? bc.zd1(k, k) : bc.si(k);
    double ip_closed = 0;
    for (int i = 0; i < U; ++i)
      if (i != k && i != kp) ip_closed += a.p(i) * b(k, i);
    const double nr_unit = zf ? 1.0 / (bc.dof * h.g(kp)) + h.xi_f(k) * bc.eta_hat
                              : cfg.Dd(k) * bc.Phi_hat +
                                    N * h.f(k) * h.f(k) * h.g(kp);
    push("mean_gain", k, mean_closed, mean_re);
    push("var_gain", k, N2 * b(k, kp), var);
    push("self_interference", k, N2 * si_closed, si);
    push("inter_pair", k, N2 * ip_closed, ip);
    push("relay_noise", k, N2 * cfg.sigma_nr2 * nr_unit, nr);
    push("loop_residual", k, N2 * a.P_R * cfg.sigma_LIR2 * nr_unit, lir);
  }

  Accum data, loop, noise, trace, trace_f;
  for (const auto& s : samples) {
    data.add(s.data);
    loop.add(s.loop);
    noise.add(s.noise);
    trace.add(s.trace);
    trace_f.add(s.trace_f);
  }
  double err = 0;
  for (int i = 0; i < U; ++i) err += a.p(i) * h.xi_g(i);
  if (zf) {
    push("relay_data_power", -1, at.lambda_hat + at.eta_hat * err, data);
    push("relay_loop_power", -1, at.eta_hat * cfg.sigma_LIR2 * a.P_R, loop);
    push("relay_noise_power", -1, at.eta_hat * cfg.sigma_nr2, noise);
    push("trace_LF_T_LG_T", -1, at.eta_hat, trace);
    double tf = 0;
    for (int i = 0; i < U; ++i) tf += 1.0 / (bc.dof * h.f(i));
    push("trace_LF", -1, tf, trace_f);
  } else {
    push("relay_data_power", -1,
         N * N * at.Psi * at.Phi_hat + N * N * N * at.Upsilon_hat, data);
    push("relay_loop_power", -1, N * N * at.Phi_hat * cfg.sigma_LIR2 * a.P_R,
         loop);
    push("relay_noise_power", -1, N * N * cfg.sigma_nr2 * at.Phi_hat, noise);
    push("trace_WhW", -1, N * N * at.Phi_hat, trace);
  }
  return rows;
}

}  // namespace mmrelay
