#pragma once

#include <cstdint>
#include <vector>

#include "cvmdi/keyrate.hpp"
#include "cvmdi/rng.hpp"

namespace cvmdi {

// One-time-calibration shot-noise model. u is the original shot-noise unit
// (normalized to 1 here), v_el_raw the monitor electronic-noise variance and
// v_rin the laser relative-intensity-noise variance, all on the same scale.
struct CalibrationModel {
  double u = 1.0;
  double v_el_raw = 0.01;
  double v_rin = 0.0;

  double u_prime() const { return u + v_el_raw + v_rin; }  // calibrated SNU
  double u_bar() const { return u + v_rin; }               // SNU of users who ignore RIN
  double m() const { return 1.0 + v_rin / u; }
  double eta_e() const { return u / (u + v_el_raw + v_rin); }
  void validate() const;
};

double eta_e(double u, double v_el, double v_rin);
double miscalibration_factor(double u, double v_rin);

// x' = sqrt(1/m) x + sqrt(1 - 1/m) v with v standard normal, mapping
// Var -> Var/m + (1 - 1/m).
std::vector<double> apply_rin_transform(const std::vector<double>& samples, double m, Pcg32& rng);

// Per-sample record of the normal linear channel model:
// y1 = t1 x1 + z1, y2 = t2 p2 + z2 with t1 = T_S T_M eta_A, t2 = T_S T_K eta_B
// and Var(z_i) = 1 + t_i eps_i. x1/p2 are differences/sums of the two users'
// modulation quadratures (variance 2 V_Mod each).
struct EstimationSamples {
  std::vector<double> x1, p2, y1, y2;
  std::size_t size() const { return x1.size(); }
};

EstimationSamples simulate_channel_data(const ProtocolParams& p, const ChannelParams& ch,
                                        std::size_t m_samples, Pcg32& rng);

// Maximum-likelihood estimators of the normal linear model:
// t_hat = sum(xy)/sum(x^2), sigma^2_hat = (1/m) sum((y - t_hat x)^2),
// SE(t) = sqrt(sigma^2/sum x^2), SE(sigma^2) = sigma^2 sqrt(2/m).
// sigma^2_hat carries the uncorrected ML bias of -sigma^2/m.
// eps_s fields are left zero; the monitoring inversion fills them.
EstimationResult ml_estimators(const EstimationSamples& s);

// Predicted monitoring moments for one side's tap:
//   <x_A1 x_M3> = -sqrt(coef) zeta1,  <p_A1 p_M3> = +sqrt(coef) zeta1,
//   <x_M3^2> = coef (V - 1 + eps_S) + 1,  coef = T_S eta_e eta_d (1 - T).
struct MonitorMoments {
  double cov_x = 0;   // <x_A1 x_M3>
  double cov_p = 0;   // <p_A1 p_M3>
  double var_m3 = 0;  // <x_M3^2>
  double coefficient = 0;
};
MonitorMoments monitor_moments(const ProtocolParams& p, Side side = Side::Alice);

// Inversion of the monitored variance given the coupling coefficient
// measured from the cross-correlations.
double eps_s_from_moments(double coefficient, double var_m3, double v);

// Observables feeding the coupled-parameter scan.
struct Observables {
  CaseId case_id = CaseId::Both;
  double t1_hat = 0, t2_hat = 0;
  double sigma1_sq = 1, sigma2_sq = 1;
  double mon_coeff_a = 0;  // measured T_S eta_e eta_d (1 - T_M); 0 if absent
  double mon_coeff_b = 0;
  double eps_s_hat = 0;
};

struct ScanGrid {
  double from = 0.9;
  double to = 0.999;
  double step = 1e-3;
};

struct ScanResult {
  ProtocolParams params;
  ChannelParams channel;
  double rate = 0;
  double t_s = 0;
};

// Scans the free parameter (T_S), solves the remaining parameters from the
// observables at each grid value, and returns the set minimizing the key
// rate. Infeasible grid points are skipped; an empty feasible grid raises
// NumericalError.
ScanResult scan_coupled_params(const Observables& obs, const ScanGrid& grid,
                               const ProtocolParams& known, const FiniteSizeParams& fs,
                               PeMode pe = PeMode::Ideal);

// Raw model inputs prior to the estimated/realistic substitution. v_s_base
// is the RIN-free source EPR variance.
struct SourceModelInputs {
  double v_mod = 60.0;
  double t_s = 0.99;
  double v_s_base = 3.0;
  double t_m = 0.9;
  double t_k = 0.9;
  double eta_d = 0.6;
  double v_el = 0.01;
  double v_rin = 0.0;
  double xi = 1.0;
};

// RIN-aware model: the trusted source noise carries v_s + v_rin and the
// monitor calibration includes the RIN in the shot-noise unit.
ProtocolParams realistic_params(const SourceModelInputs& in);
// Model of users who ignore the RIN: source variance v_s, calibration
// excluding v_rin.
ProtocolParams estimated_params(const SourceModelInputs& in);

enum class RinMode { Substitution, SampleLevel };
const char* rin_mode_name(RinMode m);
RinMode rin_mode_from_name(const std::string& name);

struct RinComparison {
  KeyRateBreakdown estimated;
  KeyRateBreakdown realistic;
};

// Substitution mode evaluates both models directly. Sample-level mode
// re-derives the estimated rate from simulated data: channel estimates via
// ml_estimators, and the source-noise estimate from monitor records whose
// normalization error is the RIN transform; it converges to the
// substitution result as the sample count grows.
RinComparison estimated_vs_realistic(CaseId c, const SourceModelInputs& in,
                                     const ChannelParams& ch, const FiniteSizeParams& fs,
                                     PeMode pe = PeMode::Ideal,
                                     RinMode mode = RinMode::Substitution, Pcg32* rng = nullptr,
                                     std::size_t samples = 1000000);

}  // namespace cvmdi
