#include "cvmdi/channel.hpp"

#include <cmath>
#include <sstream>

namespace cvmdi {

void ChannelParams::validate() const {
  if (!(eta_a > 0.0 && eta_a <= 1.0) || !(eta_b > 0.0 && eta_b <= 1.0))
    throw DomainError("channel transmittances must lie in (0,1]");
  if (epsilon_1 < 0.0 || epsilon_2 < 0.0)
    throw DomainError("channel excess noise must be >= 0");
  if (alpha_db_per_km < 0.0) throw DomainError("fiber attenuation must be >= 0");
}

ChannelParams ChannelParams::from_distances(double l_ac_km, double l_bc_km, double eps1,
                                            double eps2, double alpha_db_per_km) {
  ChannelParams ch;
  ch.eta_a = channel_transmittance(l_ac_km, alpha_db_per_km);
  ch.eta_b = channel_transmittance(l_bc_km, alpha_db_per_km);
  ch.epsilon_1 = eps1;
  ch.epsilon_2 = eps2;
  ch.alpha_db_per_km = alpha_db_per_km;
  ch.validate();
  return ch;
}

ChannelParams ChannelParams::for_geometry(Geometry geom, double l_ab_km, double eps1, double eps2,
                                          double alpha_db_per_km) {
  if (l_ab_km < 0.0) throw DomainError("total distance must be >= 0");
  if (geom == Geometry::Symmetric)
    return from_distances(0.5 * l_ab_km, 0.5 * l_ab_km, eps1, eps2, alpha_db_per_km);
  return from_distances(0.0, l_ab_km, eps1, eps2, alpha_db_per_km);
}

double channel_transmittance(double length_km, double alpha_db_per_km) {
  if (length_km < 0.0) throw DomainError("fiber length must be >= 0");
  return std::pow(10.0, -alpha_db_per_km * length_km / 10.0);
}

double negative_epr_phi(double omega_a, double omega_b) {
  if (omega_a < 1.0 || omega_b < 1.0)
    throw DomainError("thermal variances must be >= 1");
  return std::min(std::sqrt((omega_a - 1.0) * (omega_b + 1.0)),
                  std::sqrt((omega_a + 1.0) * (omega_b - 1.0)));
}

double omega_from_epsilon(double eta, double epsilon) {
  if (epsilon < 0.0) throw DomainError("excess noise must be >= 0");
  if (!(eta > 0.0 && eta <= 1.0)) throw DomainError("transmittance must lie in (0,1]");
  if (eta == 1.0) {
    if (epsilon > 0.0)
      throw DomainError("omega_from_epsilon undefined at eta = 1 with epsilon > 0");
    return 1.0;
  }
  return 1.0 + eta * epsilon / (1.0 - eta);
}

double omega_output_referred(double eta, double epsilon) {
  if (epsilon < 0.0) throw DomainError("excess noise must be >= 0");
  if (!(eta > 0.0 && eta <= 1.0)) throw DomainError("transmittance must lie in (0,1]");
  if (eta == 1.0) {
    if (epsilon > 0.0)
      throw DomainError("omega_output_referred undefined at eta = 1 with epsilon > 0");
    return 1.0;
  }
  return 1.0 + epsilon / (1.0 - eta);
}

namespace {

double link_omega(double eta, double epsilon) {
  // Lossless link: the excess noise is added at the relay input, realized as
  // omega - 1 = epsilon in the relay-noise guard.
  if (eta == 1.0) return 1.0 + epsilon;
  return omega_output_referred(eta, epsilon);
}

}  // namespace

AttackParams negative_epr_attack(const ChannelParams& ch) {
  ch.validate();
  AttackParams a;
  a.omega_a = link_omega(ch.eta_a, ch.epsilon_1);
  a.omega_b = link_omega(ch.eta_b, ch.epsilon_2);
  double phi = negative_epr_phi(a.omega_a, a.omega_b);
  a.g = -phi;
  a.g_prime = phi;
  return a;
}

AttackParams uncorrelated_attack(const ChannelParams& ch) {
  ch.validate();
  AttackParams a;
  a.omega_a = link_omega(ch.eta_a, ch.epsilon_1);
  a.omega_b = link_omega(ch.eta_b, ch.epsilon_2);
  a.g = 0.0;
  a.g_prime = 0.0;
  return a;
}

CovarianceMatrix eve_covariance(const AttackParams& attack) {
  if (attack.omega_a < 1.0 || attack.omega_b < 1.0)
    throw DomainError("thermal variances must be >= 1");
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(4, 4);
  m(0, 0) = m(1, 1) = attack.omega_a;
  m(2, 2) = m(3, 3) = attack.omega_b;
  m(0, 2) = m(2, 0) = attack.g;
  m(1, 3) = m(3, 1) = attack.g_prime;
  CovarianceMatrix g({"E1", "E2"}, std::move(m));
  // Physicality is gamma >= 0 together with every symplectic eigenvalue >= 1;
  // strong correlations can violate positivity while the symplectic spectrum
  // alone still looks fine.
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> es(g.entries());
  if (es.eigenvalues().minCoeff() < -1e-9 * es.eigenvalues().cwiseAbs().maxCoeff()) {
    std::ostringstream os;
    os << "unphysical attack correlations: covariance matrix indefinite (min eigenvalue "
       << es.eigenvalues().minCoeff() << ")";
    throw DomainError(os.str());
  }
  double numin = min_symplectic_eigenvalue(g);
  if (numin < 1.0 - 1e-9) {
    std::ostringstream os;
    os << "unphysical attack correlations: min symplectic eigenvalue " << numin;
    throw DomainError(os.str());
  }
  return g;
}

}  // namespace cvmdi
