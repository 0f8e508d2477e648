#pragma once

#include "cvmdi/protocol.hpp"

namespace cvmdi {

struct FiniteSizeParams {
  double block_n = 1e8;       // N, total symbols
  double key_fraction = 0.5;  // n / N
  double eps_smooth = 1e-10;
  double eps_pa = 1e-10;
  double eps_pe = 1e-10;
  int dim_hx = 2;

  double n() const { return block_n * key_fraction; }
  void validate() const;
};

enum class PeMode { Ideal, WorstCase };
const char* pe_mode_name(PeMode m);
PeMode pe_mode_from_name(const std::string& name);

struct KeyRateBreakdown {
  double i_ab = 0;
  double chi_ae = 0;
  double delta_n = 0;
  double rate = 0;  // raw, may be negative
  SymplecticSpectrum nu_joint{{1.0}};
  SymplecticSpectrum nu_cond{{1.0}};
  CaseId case_id = CaseId::Both;
  PeMode pe_mode = PeMode::Ideal;

  double clamped_rate() const { return rate > 0.0 ? rate : 0.0; }
};

// 1/2 log2[((Vx+1)(Vp+1)) / ((Vx_c+1)(Vp_c+1))], the heterodyne mutual
// information between the users given the relay outcomes.
double mutual_information(double vx, double vp, double vx_cond, double vp_cond);

// Sum of g((nu-1)/2) over the joint spectrum minus the same over the
// conditional spectrum; the conditional spectrum must be one mode shorter.
double holevo_bound(const SymplecticSpectrum& nu_joint, const SymplecticSpectrum& nu_cond);

// (2 dim H_X + 3) sqrt(log2(2/eps_smooth)/n) + (2/n) log2(1/eps_pa).
double delta_n(const FiniteSizeParams& fs);

// Inverse complementary error function (Newton on std::erfc).
double inverse_erfc(double y);

// Channel/monitor estimates with their standard errors; produced either by
// ml_estimators on data or synthesized from the model for worst-case
// parameter estimation.
struct EstimationResult {
  double t1_hat = 0, t2_hat = 0;
  double sigma1_sq_hat = 0, sigma2_sq_hat = 0;
  double eps_s_hat = 0;
  double se_t1 = 0, se_t2 = 0;
  double se_sigma1_sq = 0, se_sigma2_sq = 0;
  double se_eps_s = 0;
  std::size_t samples = 0;
};

// Noise-free estimates with asymptotic standard errors at m observations,
// used to synthesize the worst-case confidence corner without sampling.
EstimationResult model_implied_estimates(const ProtocolParams& p, const ChannelParams& ch,
                                         double m_samples);

struct WorstCaseParams {
  ProtocolParams params;
  ChannelParams channel;
  double z_score = 0;
};

// Parameter corner minimizing the key rate within the (1 - eps_pe)
// confidence region: transmittances shifted down by z*SE, noise variances
// up by z*SE, with z = sqrt(2) * erfinv(1 - eps_pe).
WorstCaseParams worst_case_adjust(const EstimationResult& est, const ProtocolParams& p,
                                  const ChannelParams& ch, double eps_pe);

// Devetak-Winter rate with finite-size correction:
// rate = (n/N) (xi I_AB - chi_AE - Delta(n)).
// WorstCase mode evaluates the Holevo bound at the worst-case corner
// synthesized from the model at m = N - n estimation symbols; I_AB stays at
// the nominal parameters.
KeyRateBreakdown secret_key_rate(CaseId c, const ProtocolParams& p, const ChannelParams& ch,
                                 const AttackParams& attack, const FiniteSizeParams& fs,
                                 PeMode pe = PeMode::Ideal);

// Largest total distance with positive rate under the negative EPR attack,
// found by bisection (0 if already nonpositive at 0.5 km).
double max_secure_distance(CaseId c, const ProtocolParams& p, double eps1, double eps2,
                           double alpha_db_per_km, Geometry geom, const FiniteSizeParams& fs,
                           PeMode pe = PeMode::Ideal, double tol_km = 0.05);

}  // namespace cvmdi
