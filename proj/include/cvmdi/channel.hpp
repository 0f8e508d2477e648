#pragma once

#include "cvmdi/gaussian.hpp"

namespace cvmdi {

enum class Geometry { Symmetric, Asymmetric };

// Untrusted-link description. eta = 1 means a lossless link whose excess
// noise is injected additively at the relay input (the short-link limit of
// the asymmetric configuration).
struct ChannelParams {
  double eta_a = 1.0;
  double eta_b = 1.0;
  double epsilon_1 = 0.01;
  double epsilon_2 = 0.01;
  double alpha_db_per_km = 0.2;

  void validate() const;
  static ChannelParams from_distances(double l_ac_km, double l_bc_km, double eps1, double eps2,
                                      double alpha_db_per_km = 0.2);
  static ChannelParams for_geometry(Geometry geom, double l_ab_km, double eps1, double eps2,
                                    double alpha_db_per_km = 0.2);
};

// Eve's correlated two-mode state: [[omega_a I, G],[G, omega_b I]] with
// G = diag(g, g').
struct AttackParams {
  double omega_a = 1.0;
  double omega_b = 1.0;
  double g = 0.0;
  double g_prime = 0.0;
};

// 10^(-alpha L / 10).
double channel_transmittance(double length_km, double alpha_db_per_km = 0.2);

// Correlation amplitude of the optimal correlated attack; the attack sets
// g' = -g = phi.
double negative_epr_phi(double omega_a, double omega_b);

// Thermal variance reproducing input-referred excess noise epsilon through a
// beamsplitter of transmittance eta: omega = 1 + eta*epsilon/(1-eta).
double omega_from_epsilon(double eta, double epsilon);

// Output-referred variant: omega = 1 + epsilon/(1-eta), i.e. the channel
// adds epsilon at its output. This is the referral the rate pipeline uses;
// see README for the calibration notes.
double omega_output_referred(double eta, double epsilon);

// Attack builders for a given channel. Lossless links (eta = 1) get
// omega = 1 + epsilon so the relay-noise guard reproduces the additive limit.
AttackParams negative_epr_attack(const ChannelParams& ch);
AttackParams uncorrelated_attack(const ChannelParams& ch);

// Eve's two-mode covariance over labels E1, E2; rejects unphysical
// correlations with the violating symplectic eigenvalue in the message.
CovarianceMatrix eve_covariance(const AttackParams& attack);

}  // namespace cvmdi
