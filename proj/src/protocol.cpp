#include "cvmdi/protocol.hpp"

#include <cmath>
#include <sstream>

namespace cvmdi {

namespace {

const Eigen::Matrix2d kI = Eigen::Matrix2d::Identity();
const Eigen::Matrix2d kZ = (Eigen::Matrix2d() << 1, 0, 0, -1).finished();

void set_block(Eigen::MatrixXd& m, int i, int j, const Eigen::Matrix2d& b) {
  m.block<2, 2>(2 * i, 2 * j) = b;
  m.block<2, 2>(2 * j, 2 * i) = b.transpose();
}

}  // namespace

const char* case_name(CaseId c) {
  switch (c) {
    case CaseId::Untrusted: return "untrusted";
    case CaseId::AliceOnly: return "alice";
    case CaseId::BobOnly: return "bob";
    case CaseId::Both: return "both";
  }
  return "?";
}

CaseId case_from_name(const std::string& name) {
  if (name == "untrusted") return CaseId::Untrusted;
  if (name == "alice") return CaseId::AliceOnly;
  if (name == "bob") return CaseId::BobOnly;
  if (name == "both") return CaseId::Both;
  throw DomainError("unknown case: " + name + " (expected untrusted|alice|bob|both)");
}

double ProtocolParams::eps_s() const {
  if (t_s >= 1.0) return 0.0;
  return (v_s - 1.0) * (1.0 - t_s) / t_s;
}

void ProtocolParams::validate() const {
  if (v_mod < 0.0) throw DomainError("modulation variance must be >= 0");
  if (!(t_s > 0.0 && t_s <= 1.0)) throw DomainError("t_s must lie in (0,1]");
  if (v_s < 1.0) throw DomainError("source EPR variance must be >= 1");
  if (!(t_m > 0.0 && t_m <= 1.0) || !(t_k > 0.0 && t_k <= 1.0))
    throw DomainError("monitor tap transmittances must lie in (0,1]");
  if (!(eta_d > 0.0 && eta_d < 1.0))
    throw DomainError("monitor detection efficiency must lie strictly in (0,1)");
  if (!(eta_e > 0.0 && eta_e <= 1.0)) throw DomainError("eta_e must lie in (0,1]");
  if (!(xi > 0.0 && xi <= 1.0)) throw DomainError("reconciliation efficiency must lie in (0,1]");
}

ProtocolParams case_effective(ProtocolParams p, CaseId c) {
  switch (c) {
    case CaseId::Untrusted: p.t_m = 1.0; p.t_k = 1.0; break;
    case CaseId::AliceOnly: p.t_k = 1.0; break;
    case CaseId::BobOnly: p.t_m = 1.0; break;
    case CaseId::Both: break;
  }
  return p;
}

DerivedSymbols derive_symbols(const ProtocolParams& p) {
  p.validate();
  DerivedSymbols s;
  s.v = p.v();
  s.zeta1 = std::sqrt(s.v * s.v - 1.0);
  s.zeta2 = std::sqrt(p.v_s * p.v_s - 1.0);
  s.tau = std::sqrt(1.0 - p.t_s);
  s.k = p.eta_d / (1.0 - p.eta_d);
  s.varphi = (1.0 - p.t_s) * s.v + p.t_s * p.v_s;
  s.delta = std::sqrt(p.t_s * (1.0 - p.t_s)) * (s.v - p.v_s);
  s.sigma = p.t_s * s.v + (1.0 - p.t_s) * p.v_s - 1.0;
  s.eta_star_a = p.eta_d * p.eta_e * (1.0 - p.t_m);
  s.eta_star_prime_a = (1.0 - p.eta_d) * p.eta_e * (1.0 - p.t_m);
  s.eta_star_b = p.eta_d * p.eta_e * (1.0 - p.t_k);
  s.eta_star_prime_b = (1.0 - p.eta_d) * p.eta_e * (1.0 - p.t_k);
  return s;
}

CovarianceMatrix build_gamma_star(const ProtocolParams& p, Side side) {
  DerivedSymbols sy = derive_symbols(p);
  double es = side == Side::Alice ? sy.eta_star_a : sy.eta_star_b;
  double esp = side == Side::Alice ? sy.eta_star_prime_a : sy.eta_star_prime_b;
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(10, 10);
  set_block(m, 0, 0, sy.v * kI);
  set_block(m, 0, 1, -sy.tau * sy.zeta1 * kZ);
  set_block(m, 0, 3, -std::sqrt(es * p.t_s) * sy.zeta1 * kZ);
  set_block(m, 0, 4, std::sqrt(esp * p.t_s) * sy.zeta1 * kZ);
  set_block(m, 1, 1, sy.varphi * kI);
  set_block(m, 1, 2, std::sqrt(p.t_s) * sy.zeta2 * kZ);
  set_block(m, 1, 3, std::sqrt(es) * sy.delta * kI);
  set_block(m, 1, 4, -std::sqrt(esp) * sy.delta * kI);
  set_block(m, 2, 2, p.v_s * kI);
  set_block(m, 2, 3, -std::sqrt(es) * sy.tau * sy.zeta2 * kZ);
  set_block(m, 2, 4, std::sqrt(esp) * sy.tau * sy.zeta2 * kZ);
  set_block(m, 3, 3, (es * sy.sigma + 1.0) * kI);
  set_block(m, 3, 4, -std::sqrt(es * esp) * sy.sigma * kI);
  set_block(m, 4, 4, (esp * sy.sigma + 1.0) * kI);
  std::vector<ModeLabel> labels =
      side == Side::Alice ? std::vector<ModeLabel>{"A1", "F3", "F1", "M3", "P2"}
                          : std::vector<ModeLabel>{"B1", "G3", "G1", "K3", "Q2"};
  return CovarianceMatrix(std::move(labels), std::move(m));
}

namespace {

double lossy_noise(double eta, double omega) {
  // (1-eta) omega, with the lossless limit carrying omega-1 additively.
  return eta == 1.0 ? omega - 1.0 : (1.0 - eta) * omega;
}

}  // namespace

Eigen::Matrix2d build_relay_matrix(const ProtocolParams& p, const ChannelParams& ch,
                                   const AttackParams& attack) {
  ch.validate();
  DerivedSymbols sy = derive_symbols(p);
  double cross = std::sqrt((1.0 - ch.eta_a) * (1.0 - ch.eta_b));
  double base = (ch.eta_a * p.t_m + ch.eta_b * p.t_k) * sy.sigma + (ch.eta_a + ch.eta_b);
  double noise = lossy_noise(ch.eta_a, attack.omega_a) + lossy_noise(ch.eta_b, attack.omega_b);
  double theta = base + noise - 2.0 * attack.g * cross;
  double theta_prime = base + noise + 2.0 * attack.g_prime * cross;
  if (theta <= 0.0 || theta_prime <= 0.0) {
    std::ostringstream os;
    os << "unphysical relay variances: theta=" << theta << " theta'=" << theta_prime;
    throw NumericalError(os.str());
  }
  Eigen::Matrix2d r = Eigen::Matrix2d::Zero();
  r(0, 0) = 0.5 * theta;
  r(1, 1) = 0.5 * theta_prime;
  return r;
}

namespace {

// Per-side correlation columns with (x_C, p_D): one 2x2 diagonal block per
// trusted mode, before the sqrt(eta T / 2) prefactor and the Bell sign.
Eigen::MatrixXd side_columns(const DerivedSymbols& sy, const ProtocolParams& p, Side side) {
  double es = side == Side::Alice ? sy.eta_star_a : sy.eta_star_b;
  double esp = side == Side::Alice ? sy.eta_star_prime_a : sy.eta_star_prime_b;
  const Eigen::Matrix2d& epr_pat = side == Side::Alice ? kZ : kI;
  const Eigen::Matrix2d& var_pat = side == Side::Alice ? kI : kZ;
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(10, 2);
  c.block<2, 2>(0, 0) = std::sqrt(p.t_s) * sy.zeta1 * epr_pat;
  c.block<2, 2>(2, 0) = -sy.delta * var_pat;
  c.block<2, 2>(4, 0) = sy.tau * sy.zeta2 * epr_pat;
  c.block<2, 2>(6, 0) = -std::sqrt(es) * sy.sigma * var_pat;
  c.block<2, 2>(8, 0) = std::sqrt(esp) * sy.sigma * var_pat;
  return c;
}

}  // namespace

Eigen::MatrixXd build_correlations(CaseId c, const ProtocolParams& p0, const ChannelParams& ch) {
  ProtocolParams p = case_effective(p0, c);
  ch.validate();
  DerivedSymbols sy = derive_symbols(p);
  Eigen::MatrixXd ca = std::sqrt(0.5 * ch.eta_a * p.t_m) * side_columns(sy, p, Side::Alice);
  Eigen::MatrixXd cb = -std::sqrt(0.5 * ch.eta_b * p.t_k) * side_columns(sy, p, Side::Bob);
  switch (c) {
    case CaseId::AliceOnly: {
      Eigen::MatrixXd out(12, 2);
      out.topRows(2) = cb.topRows(2);  // B1
      out.bottomRows(10) = ca;
      return out;
    }
    case CaseId::BobOnly: {
      Eigen::MatrixXd out(12, 2);
      out.topRows(2) = ca.topRows(2);  // A1
      out.bottomRows(10) = cb;
      return out;
    }
    case CaseId::Both: {
      Eigen::MatrixXd out(20, 2);
      out.topRows(10) = ca;
      out.bottomRows(10) = cb;
      return out;
    }
    case CaseId::Untrusted: {
      Eigen::MatrixXd out(4, 2);
      out.topRows(2) = cb.topRows(2);  // B1
      out.bottomRows(2) = ca.topRows(2);
      return out;
    }
  }
  throw DomainError("unreachable case");
}

CovarianceMatrix condition_on_relay(const CovarianceMatrix& g, const Eigen::MatrixXd& c,
                                    const Eigen::Matrix2d& r) {
  if (c.rows() != g.dim() || c.cols() != 2)
    throw DomainError("correlation matrix shape does not match the reduced matrix");
  double det = r(0, 0) * r(1, 1) - r(0, 1) * r(1, 0);
  if (std::abs(det) < 1e-300) throw NumericalError("singular relay covariance");
  return CovarianceMatrix(g.labels(), g.entries() - c * r.inverse() * c.transpose());
}

std::vector<ModeLabel> case_mode_order(CaseId c) {
  switch (c) {
    case CaseId::AliceOnly: return {"B1", "A1", "F3", "F1", "M3", "P2"};
    case CaseId::BobOnly: return {"A1", "B1", "G3", "G1", "K3", "Q2"};
    case CaseId::Both: return {"A1", "F3", "F1", "M3", "P2", "B1", "G3", "G1", "K3", "Q2"};
    case CaseId::Untrusted: return {"B1", "A1"};
  }
  throw DomainError("unreachable case");
}

namespace {

CaseAssembly finish_assembly(CovarianceMatrix joint) {
  CaseAssembly out{joint, condition_heterodyne(joint, "A1"), 0, 0, 0, 0};
  out.vx_b1_r = joint.var_x("B1");
  out.vp_b1_r = joint.var_p("B1");
  out.vx_b1_ra = out.cond.var_x("B1");
  out.vp_b1_ra = out.cond.var_p("B1");
  return out;
}

}  // namespace

CaseAssembly assemble_case(CaseId c, const ProtocolParams& p0, const ChannelParams& ch,
                           const AttackParams& attack) {
  ProtocolParams p = case_effective(p0, c);
  p.validate();
  CovarianceMatrix reduced = [&]() -> CovarianceMatrix {
    switch (c) {
      case CaseId::AliceOnly:
        return direct_sum(thermal_state(p.v(), "B1"), build_gamma_star(p, Side::Alice));
      case CaseId::BobOnly:
        return direct_sum(thermal_state(p.v(), "A1"), build_gamma_star(p, Side::Bob));
      case CaseId::Both:
        return direct_sum(build_gamma_star(p, Side::Alice), build_gamma_star(p, Side::Bob));
      case CaseId::Untrusted:
        return direct_sum(thermal_state(p.v(), "B1"), thermal_state(p.v(), "A1"));
    }
    throw DomainError("unreachable case");
  }();
  Eigen::MatrixXd corr = build_correlations(c, p, ch);
  Eigen::Matrix2d relay = build_relay_matrix(p, ch, attack);
  return finish_assembly(condition_on_relay(reduced, corr, relay));
}

OracleResult build_circuit_oracle(CaseId c, const ProtocolParams& p0, const ChannelParams& ch,
                                  const AttackParams& attack) {
  ProtocolParams p = case_effective(p0, c);
  p.validate();
  ch.validate();
  if (ch.eta_a >= 1.0 || ch.eta_b >= 1.0)
    throw DomainError("circuit oracle needs strictly lossy links (eta < 1)");

  // Slots are named by the mode each one finally carries. The signal slots
  // A5/B5 run A2 -> A3 -> A4 -> A5 (and mirrored); the monitor slots run the
  // tapped mode through the detector-model beamsplitters.
  CovarianceMatrix g = epr_state(p.v(), "A1", "A5");
  g = direct_sum(g, epr_state(p.v_s, "F1", "F3"));
  for (const char* l : {"M3", "P2", "WA2", "WA3"}) g = direct_sum(g, vacuum_state(l));
  g = direct_sum(g, epr_state(p.v(), "B1", "B5"));
  g = direct_sum(g, epr_state(p.v_s, "G1", "G3"));
  for (const char* l : {"K3", "Q2", "WB2", "WB3"}) g = direct_sum(g, vacuum_state(l));
  g = direct_sum(g, purify(eve_covariance(attack), "Ep"));

  // Alice's preparation and monitoring chain.
  g = apply_beamsplitter(g, "A5", "F3", p.t_s);
  g = apply_beamsplitter(g, "A5", "M3", p.t_m);
  g = apply_beamsplitter(g, "M3", "P2", p.eta_d);
  g = apply_beamsplitter(g, "M3", "WA2", p.eta_e);
  g = apply_beamsplitter(g, "P2", "WA3", p.eta_e);
  // Bob's chain.
  g = apply_beamsplitter(g, "B5", "G3", p.t_s);
  g = apply_beamsplitter(g, "B5", "K3", p.t_k);
  g = apply_beamsplitter(g, "K3", "Q2", p.eta_d);
  g = apply_beamsplitter(g, "K3", "WB2", p.eta_e);
  g = apply_beamsplitter(g, "Q2", "WB3", p.eta_e);
  // Untrusted links and the relay Bell detection. After the 50:50 the A5
  // slot carries (A5+B5)/sqrt(2) and the B5 slot carries the difference (up
  // to sign), so x is read on the B5 slot and p on the A5 slot.
  g = apply_beamsplitter(g, "A5", "E1", ch.eta_a);
  g = apply_beamsplitter(g, "B5", "E2", ch.eta_b);
  g = apply_beamsplitter(g, "A5", "B5", 0.5);
  g = condition_homodyne(g, "B5", Quadrature::X);
  g = condition_homodyne(g, "A5", Quadrature::P);

  OracleResult out{g, case_mode_order(c), CaseAssembly{g, g, 0, 0, 0, 0}, 0, 0};
  CovarianceMatrix joint = partial_trace(g, out.trusted);
  out.assembly = [&]() {
    CaseAssembly a{joint, condition_heterodyne(joint, "A1"), 0, 0, 0, 0};
    a.vx_b1_r = joint.var_x("B1");
    a.vp_b1_r = joint.var_p("B1");
    a.vx_b1_ra = a.cond.var_x("B1");
    a.vp_b1_ra = a.cond.var_p("B1");
    return a;
  }();
  std::vector<ModeLabel> rest;
  for (const auto& l : g.labels()) {
    bool kept = false;
    for (const auto& t : out.trusted) kept = kept || (t == l);
    if (!kept) rest.push_back(l);
  }
  out.entropy_trusted = gaussian_entropy(joint);
  out.entropy_rest = gaussian_entropy(partial_trace(g, rest));
  return out;
}

}  // namespace cvmdi
