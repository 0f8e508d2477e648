#include "cvmdi/keyrate.hpp"

#include <cmath>
#include <sstream>

namespace cvmdi {

void FiniteSizeParams::validate() const {
  if (block_n < 1.0) throw DomainError("block length must be >= 1");
  if (!(key_fraction > 0.0 && key_fraction <= 1.0))
    throw DomainError("key fraction must lie in (0,1]");
  for (double e : {eps_smooth, eps_pa, eps_pe})
    if (!(e > 0.0 && e < 1.0)) throw DomainError("failure probabilities must lie in (0,1)");
  if (dim_hx < 1) throw DomainError("dim_hx must be >= 1");
}

const char* pe_mode_name(PeMode m) { return m == PeMode::Ideal ? "ideal" : "worst_case"; }

PeMode pe_mode_from_name(const std::string& name) {
  if (name == "ideal") return PeMode::Ideal;
  if (name == "worst_case") return PeMode::WorstCase;
  throw DomainError("unknown pe_mode: " + name + " (expected ideal|worst_case)");
}

double mutual_information(double vx, double vp, double vx_cond, double vp_cond) {
  for (double v : {vx, vp, vx_cond, vp_cond})
    if (v <= 0.0) throw DomainError("variances must be positive");
  if (vx_cond > vx + 1e-9 || vp_cond > vp + 1e-9)
    throw DomainError("conditioning cannot increase variance");
  double num = (vx + 1.0) * (vp + 1.0);
  double den = (vx_cond + 1.0) * (vp_cond + 1.0);
  return 0.5 * std::log2(num / den);
}

double holevo_bound(const SymplecticSpectrum& nu_joint, const SymplecticSpectrum& nu_cond) {
  if (nu_joint.size() != nu_cond.size() + 1) {
    std::ostringstream os;
    os << "spectrum size mismatch: joint " << nu_joint.size() << " vs conditional "
       << nu_cond.size();
    throw DomainError(os.str());
  }
  return entropy_of_spectrum(nu_joint) - entropy_of_spectrum(nu_cond);
}

double delta_n(const FiniteSizeParams& fs) {
  fs.validate();
  double n = fs.n();
  return (2.0 * fs.dim_hx + 3.0) * std::sqrt(std::log2(2.0 / fs.eps_smooth) / n) +
         (2.0 / n) * std::log2(1.0 / fs.eps_pa);
}

double inverse_erfc(double y) {
  if (!(y > 0.0 && y < 2.0)) throw DomainError("inverse_erfc argument must lie in (0,2)");
  if (y == 1.0) return 0.0;
  // Sign symmetry: erfc(-x) = 2 - erfc(x).
  if (y > 1.0) return -inverse_erfc(2.0 - y);
  double x = std::sqrt(std::max(1e-12, -std::log(y)));
  const double two_over_sqrt_pi = 1.1283791670955126;
  for (int it = 0; it < 60; ++it) {
    double f = std::erfc(x) - y;
    double fp = -two_over_sqrt_pi * std::exp(-x * x);
    double step = f / fp;
    x -= step;
    if (std::abs(step) < 1e-14 * std::max(1.0, std::abs(x))) break;
  }
  return x;
}

EstimationResult model_implied_estimates(const ProtocolParams& p, const ChannelParams& ch,
                                         double m_samples) {
  if (m_samples < 2.0) throw DomainError("need at least 2 estimation symbols");
  EstimationResult e;
  e.samples = static_cast<std::size_t>(m_samples);
  e.t1_hat = p.t_s * p.t_m * ch.eta_a;
  e.t2_hat = p.t_s * p.t_k * ch.eta_b;
  e.sigma1_sq_hat = 1.0 + e.t1_hat * ch.epsilon_1;
  e.sigma2_sq_hat = 1.0 + e.t2_hat * ch.epsilon_2;
  e.eps_s_hat = p.eps_s();
  double sum_x_sq = m_samples * 2.0 * p.v_mod;  // regressor variance 2 V_Mod
  e.se_t1 = std::sqrt(e.sigma1_sq_hat / sum_x_sq);
  e.se_t2 = std::sqrt(e.sigma2_sq_hat / sum_x_sq);
  e.se_sigma1_sq = e.sigma1_sq_hat * std::sqrt(2.0 / m_samples);
  e.se_sigma2_sq = e.sigma2_sq_hat * std::sqrt(2.0 / m_samples);
  if (p.t_m < 1.0) {
    // Variance-estimator error of the monitored quadrature, propagated
    // through the moment inversion.
    double coef = p.t_s * p.eta_e * p.eta_d * (1.0 - p.t_m);
    double var_m3 = coef * (p.v() - 1.0 + p.eps_s()) + 1.0;
    e.se_eps_s = var_m3 * std::sqrt(2.0 / m_samples) / coef;
  }
  return e;
}

WorstCaseParams worst_case_adjust(const EstimationResult& est, const ProtocolParams& p,
                                  const ChannelParams& ch, double eps_pe) {
  if (!(eps_pe > 0.0 && eps_pe < 1.0)) throw DomainError("eps_pe must lie in (0,1)");
  double z = std::sqrt(2.0) * inverse_erfc(eps_pe);
  WorstCaseParams out{p, ch, z};

  double t1 = est.t1_hat - z * est.se_t1;
  double t2 = est.t2_hat - z * est.se_t2;
  if (t1 <= 0.0 || t2 <= 0.0)
    throw NumericalError("estimation failure: confidence shift produced nonpositive transmittance");
  out.channel.eta_a = std::min(1.0, t1 / (p.t_s * p.t_m));
  out.channel.eta_b = std::min(1.0, t2 / (p.t_s * p.t_k));
  double s1 = est.sigma1_sq_hat + z * est.se_sigma1_sq;
  double s2 = est.sigma2_sq_hat + z * est.se_sigma2_sq;
  out.channel.epsilon_1 = std::max(0.0, (s1 - 1.0) / t1);
  out.channel.epsilon_2 = std::max(0.0, (s2 - 1.0) / t2);
  out.channel.validate();

  double eps_s = est.eps_s_hat + z * est.se_eps_s;
  if (p.t_s < 1.0) out.params.v_s = 1.0 + p.t_s * std::max(0.0, eps_s) / (1.0 - p.t_s);
  out.params.validate();
  return out;
}

KeyRateBreakdown secret_key_rate(CaseId c, const ProtocolParams& p0, const ChannelParams& ch,
                                 const AttackParams& attack, const FiniteSizeParams& fs,
                                 PeMode pe) {
  fs.validate();
  ProtocolParams p = case_effective(p0, c);
  CaseAssembly nominal = assemble_case(c, p, ch, attack);

  KeyRateBreakdown out;
  out.case_id = c;
  out.pe_mode = pe;
  out.i_ab = std::max(
      0.0, mutual_information(nominal.vx_b1_r, nominal.vp_b1_r, nominal.vx_b1_ra,
                              nominal.vp_b1_ra));

  const CaseAssembly* holevo_src = &nominal;
  CaseAssembly worst = nominal;
  if (pe == PeMode::WorstCase) {
    double m_pe = fs.block_n - fs.n();
    if (m_pe < 2.0)
      throw DomainError("worst_case parameter estimation needs key_fraction < 1");
    EstimationResult est = model_implied_estimates(p, ch, m_pe);
    WorstCaseParams wc = worst_case_adjust(est, p, ch, fs.eps_pe);
    AttackParams wc_attack = negative_epr_attack(wc.channel);
    worst = assemble_case(c, wc.params, wc.channel, wc_attack);
    holevo_src = &worst;
  }
  out.nu_joint = symplectic_eigenvalues(holevo_src->joint);
  out.nu_cond = symplectic_eigenvalues(holevo_src->cond);
  out.chi_ae = holevo_bound(out.nu_joint, out.nu_cond);
  out.delta_n = delta_n(fs);
  out.rate = fs.key_fraction * (p.xi * out.i_ab - out.chi_ae - out.delta_n);
  return out;
}

double max_secure_distance(CaseId c, const ProtocolParams& p, double eps1, double eps2,
                           double alpha_db_per_km, Geometry geom, const FiniteSizeParams& fs,
                           PeMode pe, double tol_km) {
  auto rate_at = [&](double l_ab) {
    ChannelParams ch = ChannelParams::for_geometry(geom, l_ab, eps1, eps2, alpha_db_per_km);
    return secret_key_rate(c, p, ch, negative_epr_attack(ch), fs, pe).rate;
  };
  double lo = 0.5;
  if (rate_at(lo) <= 0.0) return 0.0;
  double hi = 1.0;
  while (hi < 500.0 && rate_at(hi) > 0.0) hi *= 1.6;
  if (hi >= 500.0) return 500.0;  // beyond any regime of interest here
  while (hi - lo > tol_km) {
    double mid = 0.5 * (lo + hi);
    (rate_at(mid) > 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace cvmdi
