#pragma once

#include "cvmdi/channel.hpp"
#include "cvmdi/gaussian.hpp"

namespace cvmdi {

// Which source outputs carry a monitoring tap.
enum class CaseId { Untrusted, AliceOnly, BobOnly, Both };
enum class Side { Alice, Bob };

const char* case_name(CaseId c);
CaseId case_from_name(const std::string& name);

// User-side model parameters. t_m / t_k are the raw monitor-tap
// transmittances; case_effective() forces them to 1 on sides without a
// monitor. eta_e comes from the calibration model and is never recomputed
// here.
struct ProtocolParams {
  double v_mod = 60.0;
  double t_s = 0.99;
  double v_s = 3.0;
  double t_m = 0.9;
  double t_k = 0.9;
  double eta_d = 0.6;
  double eta_e = 1.0 / 1.01;
  double xi = 1.0;

  double v() const { return v_mod + 1.0; }
  double eps_s() const;  // source excess noise implied by (t_s, v_s)
  void validate() const;
};

ProtocolParams case_effective(ProtocolParams p, CaseId c);

// Closed-form symbol set shared by the reduced matrices.
struct DerivedSymbols {
  double v;
  double zeta1, zeta2;
  double tau, k;
  double varphi, delta, sigma;
  double eta_star_a, eta_star_prime_a;  // from t_m
  double eta_star_b, eta_star_prime_b;  // from t_k
};
DerivedSymbols derive_symbols(const ProtocolParams& p);

// 5-mode reduced covariance of one user's trusted chain, mode order
// (A1,F3,F1,M3,P2) or (B1,G3,G1,K3,Q2).
CovarianceMatrix build_gamma_star(const ProtocolParams& p, Side side);

// diag(theta/2, theta'/2) over the relay outcomes (x_C, p_D). Lossless links
// contribute omega - 1 additively and drop out of the correlation term.
Eigen::Matrix2d build_relay_matrix(const ProtocolParams& p, const ChannelParams& ch,
                                   const AttackParams& attack);

// Stacked correlation columns between the case's trusted modes and
// (x_C, p_D); one 2x2 diagonal block per mode, 2N x 2 overall.
Eigen::MatrixXd build_correlations(CaseId c, const ProtocolParams& p, const ChannelParams& ch);

// gamma - C R^{-1} C^T with labels preserved.
CovarianceMatrix condition_on_relay(const CovarianceMatrix& g, const Eigen::MatrixXd& c,
                                    const Eigen::Matrix2d& r);

std::vector<ModeLabel> case_mode_order(CaseId c);

struct CaseAssembly {
  CovarianceMatrix joint;  // trusted modes conditioned on the relay outcomes
  CovarianceMatrix cond;   // additionally conditioned on Alice's heterodyne
  double vx_b1_r = 0, vp_b1_r = 0;    // B1 variances given r
  double vx_b1_ra = 0, vp_b1_ra = 0;  // B1 variances given r and Alice's outcome
};

// Closed-form assembly of the case's conditional matrices.
CaseAssembly assemble_case(CaseId c, const ProtocolParams& p, const ChannelParams& ch,
                           const AttackParams& attack);

// Independent first-principles check: builds the global pure state mode by
// mode (EPR sources, taps, monitor beamsplitters, purified attack, relay
// Bell detection) and conditions on the relay homodynes. Requires strictly
// lossy links (eta < 1); the trusted/complement entropies verify that the
// kept trusted set together with everything else stays pure. The monitor
// wiring is fixed so that both detector-model beamsplitter outputs pass a
// calibration stage: the measured arm yields M3 and the kept arm yields P2.
struct OracleResult {
  CovarianceMatrix post_relay;     // every surviving mode, conditioned on r
  std::vector<ModeLabel> trusted;  // the case's trusted set
  CaseAssembly assembly;
  double entropy_trusted = 0;  // S(trusted | r)
  double entropy_rest = 0;     // S(everything else | r)
};
OracleResult build_circuit_oracle(CaseId c, const ProtocolParams& p, const ChannelParams& ch,
                                  const AttackParams& attack);

}  // namespace cvmdi
