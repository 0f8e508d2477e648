#include "cvmdi/calibration.hpp"

#include <cmath>

namespace cvmdi {

void CalibrationModel::validate() const {
  if (u <= 0.0) throw DomainError("shot-noise unit must be positive");
  if (v_el_raw < 0.0 || v_rin < 0.0) throw DomainError("noise variances must be >= 0");
}

double eta_e(double u, double v_el, double v_rin) {
  CalibrationModel cal{u, v_el, v_rin};
  cal.validate();
  return cal.eta_e();
}

double miscalibration_factor(double u, double v_rin) {
  CalibrationModel cal{u, 0.0, v_rin};
  cal.validate();
  return cal.m();
}

std::vector<double> apply_rin_transform(const std::vector<double>& samples, double m, Pcg32& rng) {
  if (m < 1.0) throw DomainError("miscalibration factor must be >= 1");
  double keep = std::sqrt(1.0 / m);
  double mix = std::sqrt(1.0 - 1.0 / m);
  std::vector<double> out(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i)
    out[i] = keep * samples[i] + mix * rng.gaussian();
  return out;
}

EstimationSamples simulate_channel_data(const ProtocolParams& p, const ChannelParams& ch,
                                        std::size_t m_samples, Pcg32& rng) {
  if (m_samples < 2) throw DomainError("need at least 2 samples");
  p.validate();
  ch.validate();
  double t1 = p.t_s * p.t_m * ch.eta_a;
  double t2 = p.t_s * p.t_k * ch.eta_b;
  double s1 = std::sqrt(1.0 + t1 * ch.epsilon_1);
  double s2 = std::sqrt(1.0 + t2 * ch.epsilon_2);
  double mod = std::sqrt(p.v_mod);
  EstimationSamples s;
  s.x1.resize(m_samples);
  s.p2.resize(m_samples);
  s.y1.resize(m_samples);
  s.y2.resize(m_samples);
  for (std::size_t i = 0; i < m_samples; ++i) {
    double xa = mod * rng.gaussian(), xb = mod * rng.gaussian();
    double pa = mod * rng.gaussian(), pb = mod * rng.gaussian();
    s.x1[i] = xa - xb;
    s.p2[i] = pa + pb;
    s.y1[i] = t1 * s.x1[i] + s1 * rng.gaussian();
    s.y2[i] = t2 * s.p2[i] + s2 * rng.gaussian();
  }
  return s;
}

namespace {

struct LinearFit {
  double t, sigma_sq, se_t, se_sigma_sq;
};

LinearFit fit_normal_linear(const std::vector<double>& x, const std::vector<double>& y) {
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  if (sxx <= 0.0) throw DomainError("degenerate regressor: sum of squares is zero");
  double t = sxy / sxx;
  double rss = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double r = y[i] - t * x[i];
    rss += r * r;
  }
  double m = static_cast<double>(x.size());
  double sigma_sq = rss / m;
  return {t, sigma_sq, std::sqrt(sigma_sq / sxx), sigma_sq * std::sqrt(2.0 / m)};
}

}  // namespace

EstimationResult ml_estimators(const EstimationSamples& s) {
  if (s.size() < 2) throw DomainError("need at least 2 samples");
  LinearFit f1 = fit_normal_linear(s.x1, s.y1);
  LinearFit f2 = fit_normal_linear(s.p2, s.y2);
  EstimationResult e;
  e.samples = s.size();
  e.t1_hat = f1.t;
  e.t2_hat = f2.t;
  e.sigma1_sq_hat = f1.sigma_sq;
  e.sigma2_sq_hat = f2.sigma_sq;
  e.se_t1 = f1.se_t;
  e.se_t2 = f2.se_t;
  e.se_sigma1_sq = f1.se_sigma_sq;
  e.se_sigma2_sq = f2.se_sigma_sq;
  return e;
}

MonitorMoments monitor_moments(const ProtocolParams& p, Side side) {
  p.validate();
  double tap = side == Side::Alice ? p.t_m : p.t_k;
  if (tap >= 1.0)
    throw DomainError("no monitor signal at tap transmittance 1: source noise unidentifiable");
  MonitorMoments m;
  m.coefficient = p.t_s * p.eta_e * p.eta_d * (1.0 - tap);
  double zeta1 = std::sqrt(p.v() * p.v() - 1.0);
  m.cov_x = -std::sqrt(m.coefficient) * zeta1;
  m.cov_p = std::sqrt(m.coefficient) * zeta1;
  m.var_m3 = m.coefficient * (p.v() - 1.0 + p.eps_s()) + 1.0;
  return m;
}

double eps_s_from_moments(double coefficient, double var_m3, double v) {
  if (coefficient <= 0.0) throw DomainError("monitor coefficient must be positive");
  return (var_m3 - 1.0) / coefficient - (v - 1.0);
}

ScanResult scan_coupled_params(const Observables& obs, const ScanGrid& grid,
                               const ProtocolParams& known, const FiniteSizeParams& fs,
                               PeMode pe) {
  if (grid.step <= 0.0 || grid.from > grid.to) throw DomainError("invalid scan grid");
  bool monitored_a = obs.case_id == CaseId::AliceOnly || obs.case_id == CaseId::Both;
  bool monitored_b = obs.case_id == CaseId::BobOnly || obs.case_id == CaseId::Both;
  bool found = false;
  ScanResult best;
  for (double t_s = grid.from; t_s <= grid.to + 0.5 * grid.step; t_s += grid.step) {
    if (t_s >= 1.0) break;
    ProtocolParams p = known;
    p.t_s = t_s;
    double denom = t_s * known.eta_e * known.eta_d;
    if (monitored_a) {
      double t_m = 1.0 - obs.mon_coeff_a / denom;
      if (!(t_m > 0.0 && t_m < 1.0)) continue;
      p.t_m = t_m;
    } else {
      p.t_m = 1.0;
    }
    if (monitored_b) {
      double t_k = 1.0 - obs.mon_coeff_b / denom;
      if (!(t_k > 0.0 && t_k < 1.0)) continue;
      p.t_k = t_k;
    } else {
      p.t_k = 1.0;
    }
    ChannelParams ch;
    ch.eta_a = obs.t1_hat / (t_s * p.t_m);
    ch.eta_b = obs.t2_hat / (t_s * p.t_k);
    if (!(ch.eta_a > 0.0 && ch.eta_a <= 1.0)) continue;
    if (!(ch.eta_b > 0.0 && ch.eta_b <= 1.0)) continue;
    ch.epsilon_1 = std::max(0.0, (obs.sigma1_sq - 1.0) / obs.t1_hat);
    ch.epsilon_2 = std::max(0.0, (obs.sigma2_sq - 1.0) / obs.t2_hat);
    p.v_s = 1.0 + t_s * std::max(0.0, obs.eps_s_hat) / (1.0 - t_s);
    double rate;
    try {
      rate = secret_key_rate(obs.case_id, p, ch, negative_epr_attack(ch), fs, pe).rate;
    } catch (const NumericalError&) {
      continue;
    }
    if (!found || rate < best.rate) {
      found = true;
      best = {p, ch, rate, t_s};
    }
  }
  if (!found) throw NumericalError("estimation failure: empty feasible scan grid");
  return best;
}

ProtocolParams realistic_params(const SourceModelInputs& in) {
  ProtocolParams p;
  p.v_mod = in.v_mod;
  p.t_s = in.t_s;
  p.v_s = in.v_s_base + in.v_rin;
  p.t_m = in.t_m;
  p.t_k = in.t_k;
  p.eta_d = in.eta_d;
  p.eta_e = eta_e(1.0, in.v_el, in.v_rin);
  p.xi = in.xi;
  p.validate();
  return p;
}

ProtocolParams estimated_params(const SourceModelInputs& in) {
  ProtocolParams p;
  p.v_mod = in.v_mod;
  p.t_s = in.t_s;
  p.v_s = in.v_s_base;
  p.t_m = in.t_m;
  p.t_k = in.t_k;
  p.eta_d = in.eta_d;
  p.eta_e = eta_e(1.0, in.v_el, 0.0);
  p.xi = in.xi;
  p.validate();
  return p;
}

const char* rin_mode_name(RinMode m) {
  return m == RinMode::Substitution ? "substitution" : "sample_level";
}

RinMode rin_mode_from_name(const std::string& name) {
  if (name == "substitution") return RinMode::Substitution;
  if (name == "sample_level") return RinMode::SampleLevel;
  throw DomainError("unknown rin mode: " + name + " (expected substitution|sample_level)");
}

RinComparison estimated_vs_realistic(CaseId c, const SourceModelInputs& in,
                                     const ChannelParams& ch, const FiniteSizeParams& fs,
                                     PeMode pe, RinMode mode, Pcg32* rng, std::size_t samples) {
  if (in.v_rin < 0.0) throw DomainError("v_rin must be >= 0");
  ProtocolParams real = realistic_params(in);
  ProtocolParams est = estimated_params(in);
  AttackParams attack = negative_epr_attack(ch);

  RinComparison out{secret_key_rate(c, est, ch, attack, fs, pe),
                    secret_key_rate(c, real, ch, attack, fs, pe)};
  if (mode == RinMode::Substitution) return out;

  if (rng == nullptr) throw DomainError("sample_level mode needs a random generator");
  if (c == CaseId::Untrusted)
    throw DomainError("sample_level mode needs a monitored case");

  // Channel estimates from simulated records; the linear-model data does not
  // depend on the source calibration.
  ProtocolParams eff = case_effective(est, c);
  EstimationSamples data = simulate_channel_data(eff, ch, samples, *rng);
  EstimationResult e = ml_estimators(data);
  ChannelParams ch_hat = ch;
  ch_hat.eta_a = std::min(1.0, e.t1_hat / (eff.t_s * eff.t_m));
  ch_hat.eta_b = std::min(1.0, e.t2_hat / (eff.t_s * eff.t_k));
  ch_hat.epsilon_1 = std::max(0.0, (e.sigma1_sq_hat - 1.0) / e.t1_hat);
  ch_hat.epsilon_2 = std::max(0.0, (e.sigma2_sq_hat - 1.0) / e.t2_hat);

  // Monitor records: ideal joint draws of (x_A1, x_M3) from the RIN-free
  // model, then the normalization error as the RIN transform on the M3
  // series. The correlation-calibrated inversion cancels the damping, so
  // eps_s_hat converges to the configured source noise.
  Side side = c == CaseId::BobOnly ? Side::Bob : Side::Alice;
  MonitorMoments ideal = monitor_moments(eff, side);
  double v = eff.v();
  double zeta1 = std::sqrt(v * v - 1.0);
  double resid = ideal.var_m3 - ideal.cov_x * ideal.cov_x / v;
  if (resid <= 0.0) throw NumericalError("monitor moment model is not positive definite");
  std::vector<double> a1(samples), m3(samples);
  for (std::size_t i = 0; i < samples; ++i) {
    a1[i] = std::sqrt(v) * rng->gaussian();
    m3[i] = (ideal.cov_x / v) * a1[i] + std::sqrt(resid) * rng->gaussian();
  }
  std::vector<double> m3rec = apply_rin_transform(m3, miscalibration_factor(1.0, in.v_rin), *rng);
  double cov = 0.0, var = 0.0;
  for (std::size_t i = 0; i < samples; ++i) {
    cov += a1[i] * m3rec[i];
    var += m3rec[i] * m3rec[i];
  }
  cov /= static_cast<double>(samples);
  var /= static_cast<double>(samples);
  double coeff_hat = (cov / zeta1) * (cov / zeta1);
  double eps_s_hat = eps_s_from_moments(coeff_hat, var, v);

  ProtocolParams est_hat = est;
  if (est.t_s < 1.0) est_hat.v_s = 1.0 + est.t_s * std::max(0.0, eps_s_hat) / (1.0 - est.t_s);
  out.estimated = secret_key_rate(c, est_hat, ch_hat, negative_epr_attack(ch_hat), fs, pe);
  return out;
}

}  // namespace cvmdi
