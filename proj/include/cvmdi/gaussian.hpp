#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "cvmdi/errors.hpp"

namespace cvmdi {

// Short mode identifier (A1, B1, F3, M3, ...). Uniqueness is enforced per
// register by CovarianceMatrix.
using ModeLabel = std::string;

enum class Quadrature { X, P };

// Descending list of symplectic eigenvalues, one per mode.
class SymplecticSpectrum {
 public:
  explicit SymplecticSpectrum(std::vector<double> values);
  const std::vector<double>& values() const { return values_; }
  double min() const { return values_.back(); }
  double max() const { return values_.front(); }
  std::size_t size() const { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }

 private:
  std::vector<double> values_;
};

// Real symmetric 2N x 2N covariance matrix over labeled optical modes,
// xpxp ordering (mode i occupies rows/cols 2i, 2i+1), shot-noise units
// (vacuum variance = 1). Values are immutable once constructed.
class CovarianceMatrix {
 public:
  CovarianceMatrix(std::vector<ModeLabel> labels, Eigen::MatrixXd entries);

  int num_modes() const { return static_cast<int>(labels_.size()); }
  int dim() const { return static_cast<int>(entries_.rows()); }
  const std::vector<ModeLabel>& labels() const { return labels_; }
  const Eigen::MatrixXd& entries() const { return entries_; }

  bool has_mode(const ModeLabel& m) const;
  int index_of(const ModeLabel& m) const;  // DomainError for unknown labels
  Eigen::Matrix2d mode_block(const ModeLabel& m) const;
  double var_x(const ModeLabel& m) const;
  double var_p(const ModeLabel& m) const;

 private:
  std::vector<ModeLabel> labels_;
  Eigen::MatrixXd entries_;
};

// Block-diagonal symplectic form with 2x2 blocks [[0,1],[-1,0]].
Eigen::MatrixXd symplectic_form(int n_modes);

// --- state constructors -----------------------------------------------------

// Two-mode squeezed vacuum: [[V I, z Z],[z Z, V I]], z = sqrt(V^2-1).
CovarianceMatrix epr_state(double v, const ModeLabel& a, const ModeLabel& b);
CovarianceMatrix thermal_state(double v, const ModeLabel& m);
CovarianceMatrix vacuum_state(const ModeLabel& m);

// --- transforms and measurements --------------------------------------------

// Conjugation by the beamsplitter symplectic: output a carries
// sqrt(T) a + sqrt(1-T) b, output b carries -sqrt(1-T) a + sqrt(T) b.
CovarianceMatrix apply_beamsplitter(const CovarianceMatrix& g, const ModeLabel& a,
                                    const ModeLabel& b, double transmittance);

// Absolute values of the eigenvalues of i*Omega*gamma, deduplicated into one
// value per mode, descending. Pairs that disagree beyond 1e-8 relative raise
// NumericalError instead of being silently averaged.
SymplecticSpectrum symplectic_eigenvalues(const CovarianceMatrix& g);
double min_symplectic_eigenvalue(const CovarianceMatrix& g);

// g(x) = (x+1) log2(x+1) - x log2(x), the thermal-state entropy in bits.
double g_entropy(double mean_photon_number);

// Sum of g((nu-1)/2) over the symplectic spectrum. Values in [1-1e-6, 1+1e-9]
// are clamped to 1 (conditioning and storage roundoff of near-pure states);
// anything below the band raises NumericalError (unphysical state).
double gaussian_entropy(const CovarianceMatrix& g);
double entropy_of_spectrum(const SymplecticSpectrum& spectrum);

// Gaussian conditioning on a homodyne outcome of one quadrature of mode m;
// mode m is removed from the register.
CovarianceMatrix condition_homodyne(const CovarianceMatrix& g, const ModeLabel& m,
                                    Quadrature q);

// Gaussian conditioning on a heterodyne outcome of mode m (gamma_m + I is
// always invertible for physical states); mode m is removed.
CovarianceMatrix condition_heterodyne(const CovarianceMatrix& g, const ModeLabel& m);

// --- register plumbing -------------------------------------------------------

CovarianceMatrix partial_trace(const CovarianceMatrix& g, const std::vector<ModeLabel>& keep);
CovarianceMatrix reorder(const CovarianceMatrix& g, const std::vector<ModeLabel>& order);
CovarianceMatrix direct_sum(const CovarianceMatrix& a, const CovarianceMatrix& b);
CovarianceMatrix relabel(const CovarianceMatrix& g, const ModeLabel& from, const ModeLabel& to);

// --- normal-form machinery ---------------------------------------------------

// gamma = S diag(nu_1, nu_1, ..., nu_N, nu_N) S^T with S symplectic.
struct WilliamsonForm {
  Eigen::MatrixXd symplectic;
  std::vector<double> nu;
};
WilliamsonForm williamson(const CovarianceMatrix& g);

// Pure 2N-mode extension whose reduction over the ancillas is g. Ancilla
// modes are labeled <ancilla_prefix>1..N.
CovarianceMatrix purify(const CovarianceMatrix& g, const std::string& ancilla_prefix);

}  // namespace cvmdi
