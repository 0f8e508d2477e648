#include "cvmdi/gaussian.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

namespace cvmdi {

namespace {

constexpr double kSymmetryTol = 1e-12;
constexpr double kPairTol = 1e-8;
constexpr double kPureClampBand = 1e-6;

const Eigen::Matrix2d& identity2() {
  static const Eigen::Matrix2d m = Eigen::Matrix2d::Identity();
  return m;
}

}  // namespace

SymplecticSpectrum::SymplecticSpectrum(std::vector<double> values) : values_(std::move(values)) {
  if (values_.empty()) throw DomainError("symplectic spectrum must be nonempty");
  std::sort(values_.begin(), values_.end(), std::greater<double>());
}

CovarianceMatrix::CovarianceMatrix(std::vector<ModeLabel> labels, Eigen::MatrixXd entries)
    : labels_(std::move(labels)), entries_(std::move(entries)) {
  if (entries_.rows() != entries_.cols())
    throw DomainError("covariance matrix must be square");
  if (entries_.rows() != 2 * static_cast<Eigen::Index>(labels_.size()))
    throw DomainError("covariance dimension must equal twice the number of mode labels");
  if (labels_.empty()) throw DomainError("covariance matrix needs at least one mode");
  std::set<ModeLabel> seen(labels_.begin(), labels_.end());
  if (seen.size() != labels_.size())
    throw DomainError("duplicate mode labels in register");
  double scale = std::max(1.0, entries_.cwiseAbs().maxCoeff());
  double asym = (entries_ - entries_.transpose()).cwiseAbs().maxCoeff();
  if (asym > kSymmetryTol * scale) {
    std::ostringstream os;
    os << "covariance matrix not symmetric (relative asymmetry " << asym / scale << ")";
    throw DomainError(os.str());
  }
  entries_ = 0.5 * (entries_ + entries_.transpose().eval());
}

bool CovarianceMatrix::has_mode(const ModeLabel& m) const {
  return std::find(labels_.begin(), labels_.end(), m) != labels_.end();
}

int CovarianceMatrix::index_of(const ModeLabel& m) const {
  auto it = std::find(labels_.begin(), labels_.end(), m);
  if (it == labels_.end()) throw DomainError("unknown mode label: " + m);
  return static_cast<int>(it - labels_.begin());
}

Eigen::Matrix2d CovarianceMatrix::mode_block(const ModeLabel& m) const {
  int i = index_of(m);
  return entries_.block<2, 2>(2 * i, 2 * i);
}

double CovarianceMatrix::var_x(const ModeLabel& m) const {
  int i = index_of(m);
  return entries_(2 * i, 2 * i);
}

double CovarianceMatrix::var_p(const ModeLabel& m) const {
  int i = index_of(m);
  return entries_(2 * i + 1, 2 * i + 1);
}

Eigen::MatrixXd symplectic_form(int n_modes) {
  Eigen::MatrixXd omega = Eigen::MatrixXd::Zero(2 * n_modes, 2 * n_modes);
  for (int i = 0; i < n_modes; ++i) {
    omega(2 * i, 2 * i + 1) = 1.0;
    omega(2 * i + 1, 2 * i) = -1.0;
  }
  return omega;
}

CovarianceMatrix epr_state(double v, const ModeLabel& a, const ModeLabel& b) {
  if (v < 1.0) throw DomainError("EPR variance must be >= 1");
  double z = std::sqrt(v * v - 1.0);
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(4, 4);
  m(0, 0) = m(1, 1) = m(2, 2) = m(3, 3) = v;
  m(0, 2) = m(2, 0) = z;
  m(1, 3) = m(3, 1) = -z;
  return CovarianceMatrix({a, b}, std::move(m));
}

CovarianceMatrix thermal_state(double v, const ModeLabel& m) {
  if (v < 1.0) throw DomainError("thermal variance must be >= 1");
  return CovarianceMatrix({m}, v * Eigen::Matrix2d::Identity());
}

CovarianceMatrix vacuum_state(const ModeLabel& m) { return thermal_state(1.0, m); }

CovarianceMatrix apply_beamsplitter(const CovarianceMatrix& g, const ModeLabel& a,
                                    const ModeLabel& b, double transmittance) {
  if (transmittance < 0.0 || transmittance > 1.0)
    throw DomainError("beamsplitter transmittance must lie in [0,1]");
  int ia = g.index_of(a);
  int ib = g.index_of(b);
  if (ia == ib) throw DomainError("beamsplitter needs two distinct modes");
  double ct = std::sqrt(transmittance);
  double st = std::sqrt(1.0 - transmittance);
  Eigen::MatrixXd s = Eigen::MatrixXd::Identity(g.dim(), g.dim());
  for (int q = 0; q < 2; ++q) {
    s(2 * ia + q, 2 * ia + q) = ct;
    s(2 * ia + q, 2 * ib + q) = st;
    s(2 * ib + q, 2 * ia + q) = -st;
    s(2 * ib + q, 2 * ib + q) = ct;
  }
  return CovarianceMatrix(g.labels(), s * g.entries() * s.transpose());
}

namespace {

// Collapse 2N sorted magnitudes into N per-mode values, checking that the
// doubled eigenvalues actually pair up.
std::vector<double> pair_magnitudes(std::vector<double> mags) {
  std::sort(mags.begin(), mags.end(), std::greater<double>());
  std::vector<double> out;
  out.reserve(mags.size() / 2);
  for (std::size_t k = 0; k + 1 < mags.size(); k += 2) {
    double a = mags[k], b = mags[k + 1];
    if (std::abs(a - b) > kPairTol * std::max(1.0, a)) {
      std::ostringstream os;
      os << "symplectic eigenvalue pairing failed: " << a << " vs " << b;
      throw NumericalError(os.str());
    }
    out.push_back(0.5 * (a + b));
  }
  return out;
}

}  // namespace

SymplecticSpectrum symplectic_eigenvalues(const CovarianceMatrix& g) {
  const Eigen::MatrixXd& m = g.entries();
  int n = g.num_modes();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
  if (es.info() != Eigen::Success)
    throw NumericalError("eigen-solver failed on covariance matrix");
  double lam_min = es.eigenvalues().minCoeff();
  double lam_max = es.eigenvalues().maxCoeff();
  std::vector<double> mags;
  mags.reserve(2 * n);
  if (lam_min > -1e-9 * std::max(1.0, lam_max)) {
    // Positive semidefinite: use the antisymmetric normal form of
    // K Omega K with K = gamma^{1/2}; -(K Omega K)^2 is symmetric PSD with
    // doubled eigenvalues nu^2. Fully symmetric solvers, so this stays
    // accurate for highly squeezed states.
    Eigen::VectorXd lam = es.eigenvalues().cwiseMax(0.0);
    Eigen::MatrixXd k = es.eigenvectors() * lam.cwiseSqrt().asDiagonal() *
                        es.eigenvectors().transpose();
    Eigen::MatrixXd a = k * symplectic_form(n) * k;
    a = 0.5 * (a - a.transpose().eval());
    Eigen::MatrixXd b = -(a * a);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es2(0.5 * (b + b.transpose().eval()));
    if (es2.info() != Eigen::Success)
      throw NumericalError("eigen-solver failed on symplectic normal form");
    for (int i = 0; i < 2 * n; ++i) mags.push_back(std::sqrt(std::max(0.0, es2.eigenvalues()(i))));
  } else {
    // Indefinite symmetric input: fall back to the general spectrum of
    // Omega * gamma, whose eigenvalues are +-i nu.
    Eigen::EigenSolver<Eigen::MatrixXd> ges(symplectic_form(n) * m);
    if (ges.info() != Eigen::Success)
      throw NumericalError("eigen-solver failed on Omega*gamma");
    for (int i = 0; i < 2 * n; ++i) mags.push_back(std::abs(ges.eigenvalues()(i)));
  }
  return SymplecticSpectrum(pair_magnitudes(std::move(mags)));
}

double min_symplectic_eigenvalue(const CovarianceMatrix& g) {
  return symplectic_eigenvalues(g).min();
}

double g_entropy(double x) {
  if (x < -1e-12) throw DomainError("g_entropy argument must be >= 0");
  if (x <= 0.0) return 0.0;
  return (x + 1.0) * std::log2(x + 1.0) - x * std::log2(x);
}

double entropy_of_spectrum(const SymplecticSpectrum& spectrum) {
  double s = 0.0;
  for (double nu : spectrum.values()) {
    if (nu < 1.0 - kPureClampBand) {
      std::ostringstream os;
      os << "unphysical state: symplectic eigenvalue " << nu << " below 1";
      throw NumericalError(os.str());
    }
    // Near-pure values are snapped to 1. The band below 1 covers conditioning
    // roundoff; the much narrower band above covers storage rounding of
    // highly squeezed pure states, where g amplifies eigenvalue error
    // logarithmically.
    if (nu <= 1.0 + 1e-9) continue;
    s += g_entropy((nu - 1.0) / 2.0);
  }
  return s;
}

double gaussian_entropy(const CovarianceMatrix& g) {
  return entropy_of_spectrum(symplectic_eigenvalues(g));
}

namespace {

// Rows/cols of the register with mode `drop` removed.
std::vector<int> surviving_rows(int n_modes, int drop) {
  std::vector<int> idx;
  idx.reserve(2 * n_modes - 2);
  for (int i = 0; i < 2 * n_modes; ++i)
    if (i != 2 * drop && i != 2 * drop + 1) idx.push_back(i);
  return idx;
}

std::vector<ModeLabel> surviving_labels(const std::vector<ModeLabel>& labels, int drop) {
  std::vector<ModeLabel> out;
  out.reserve(labels.size() - 1);
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (static_cast<int>(i) != drop) out.push_back(labels[i]);
  return out;
}

}  // namespace

CovarianceMatrix condition_homodyne(const CovarianceMatrix& g, const ModeLabel& m,
                                    Quadrature q) {
  int im = g.index_of(m);
  int col = 2 * im + (q == Quadrature::X ? 0 : 1);
  double v = g.entries()(col, col);
  if (v <= 0.0) throw NumericalError("singular homodyne measurement: zero quadrature variance");
  auto idx = surviving_rows(g.num_modes(), im);
  Eigen::MatrixXd rest(idx.size(), idx.size());
  Eigen::VectorXd c(idx.size());
  for (std::size_t r = 0; r < idx.size(); ++r) {
    c(r) = g.entries()(idx[r], col);
    for (std::size_t s = 0; s < idx.size(); ++s) rest(r, s) = g.entries()(idx[r], idx[s]);
  }
  rest -= (c * c.transpose()) / v;
  return CovarianceMatrix(surviving_labels(g.labels(), im), std::move(rest));
}

CovarianceMatrix condition_heterodyne(const CovarianceMatrix& g, const ModeLabel& m) {
  int im = g.index_of(m);
  Eigen::Matrix2d blk = g.entries().block<2, 2>(2 * im, 2 * im) + identity2();
  auto idx = surviving_rows(g.num_modes(), im);
  Eigen::MatrixXd rest(idx.size(), idx.size());
  Eigen::MatrixXd cross(idx.size(), 2);
  for (std::size_t r = 0; r < idx.size(); ++r) {
    cross(r, 0) = g.entries()(idx[r], 2 * im);
    cross(r, 1) = g.entries()(idx[r], 2 * im + 1);
    for (std::size_t s = 0; s < idx.size(); ++s) rest(r, s) = g.entries()(idx[r], idx[s]);
  }
  rest -= cross * blk.inverse() * cross.transpose();
  return CovarianceMatrix(surviving_labels(g.labels(), im), std::move(rest));
}

CovarianceMatrix partial_trace(const CovarianceMatrix& g, const std::vector<ModeLabel>& keep) {
  if (keep.empty()) throw DomainError("partial_trace must keep at least one mode");
  std::set<ModeLabel> seen(keep.begin(), keep.end());
  if (seen.size() != keep.size()) throw DomainError("duplicate labels in partial_trace");
  Eigen::MatrixXd out(2 * keep.size(), 2 * keep.size());
  for (std::size_t a = 0; a < keep.size(); ++a) {
    int ia = g.index_of(keep[a]);
    for (std::size_t b = 0; b < keep.size(); ++b) {
      int ib = g.index_of(keep[b]);
      out.block<2, 2>(2 * a, 2 * b) = g.entries().block<2, 2>(2 * ia, 2 * ib);
    }
  }
  return CovarianceMatrix(keep, std::move(out));
}

CovarianceMatrix reorder(const CovarianceMatrix& g, const std::vector<ModeLabel>& order) {
  if (order.size() != g.labels().size())
    throw DomainError("reorder must list every mode exactly once");
  return partial_trace(g, order);
}

CovarianceMatrix direct_sum(const CovarianceMatrix& a, const CovarianceMatrix& b) {
  std::vector<ModeLabel> labels = a.labels();
  for (const auto& l : b.labels()) {
    if (a.has_mode(l)) throw DomainError("direct_sum label collision: " + l);
    labels.push_back(l);
  }
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(a.dim() + b.dim(), a.dim() + b.dim());
  m.topLeftCorner(a.dim(), a.dim()) = a.entries();
  m.bottomRightCorner(b.dim(), b.dim()) = b.entries();
  return CovarianceMatrix(std::move(labels), std::move(m));
}

CovarianceMatrix relabel(const CovarianceMatrix& g, const ModeLabel& from, const ModeLabel& to) {
  int i = g.index_of(from);
  if (g.has_mode(to)) throw DomainError("relabel target already present: " + to);
  std::vector<ModeLabel> labels = g.labels();
  labels[i] = to;
  return CovarianceMatrix(std::move(labels), g.entries());
}

WilliamsonForm williamson(const CovarianceMatrix& g) {
  int n = g.num_modes();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g.entries());
  if (es.info() != Eigen::Success || es.eigenvalues().minCoeff() <= 0.0)
    throw NumericalError("williamson requires a positive-definite covariance matrix");
  Eigen::MatrixXd ksqrt = es.eigenvectors() * es.eigenvalues().cwiseSqrt().asDiagonal() *
                          es.eigenvectors().transpose();
  Eigen::MatrixXd kinv = es.eigenvectors() *
                         es.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal() *
                         es.eigenvectors().transpose();
  Eigen::MatrixXd a = kinv * symplectic_form(n) * kinv;
  a = 0.5 * (a - a.transpose().eval());

  // Real Schur form of an antisymmetric matrix is block diagonal with
  // 2x2 blocks [[0, 1/nu],[-1/nu, 0]]; degeneracies are handled for free.
  Eigen::RealSchur<Eigen::MatrixXd> schur(a);
  if (schur.info() != Eigen::Success) throw NumericalError("schur decomposition failed");
  Eigen::MatrixXd q = schur.matrixU();
  Eigen::MatrixXd t = schur.matrixT();
  std::vector<std::pair<double, int>> blocks;  // (nu, block index)
  for (int k = 0; k < n; ++k) {
    double b = t(2 * k, 2 * k + 1);
    if (b < 0.0) {
      q.col(2 * k).swap(q.col(2 * k + 1));
      b = -b;
    }
    if (b <= 0.0) throw NumericalError("williamson found a singular symplectic block");
    blocks.emplace_back(1.0 / b, k);
  }
  std::sort(blocks.begin(), blocks.end(),
            [](const auto& x, const auto& y) { return x.first > y.first; });

  Eigen::MatrixXd o(2 * n, 2 * n);
  std::vector<double> nu(n);
  Eigen::VectorXd dinv(2 * n);
  for (int k = 0; k < n; ++k) {
    nu[k] = blocks[k].first;
    int src = blocks[k].second;
    o.col(2 * k) = q.col(2 * src);
    o.col(2 * k + 1) = q.col(2 * src + 1);
    dinv(2 * k) = dinv(2 * k + 1) = 1.0 / std::sqrt(nu[k]);
  }
  Eigen::MatrixXd s = ksqrt * o * dinv.asDiagonal();

  double scale = std::max(1.0, g.entries().cwiseAbs().maxCoeff());
  Eigen::VectorXd d(2 * n);
  for (int k = 0; k < n; ++k) d(2 * k) = d(2 * k + 1) = nu[k];
  double recon_err = (s * d.asDiagonal() * s.transpose() - g.entries()).cwiseAbs().maxCoeff();
  double sympl_err =
      (s * symplectic_form(n) * s.transpose() - symplectic_form(n)).cwiseAbs().maxCoeff();
  if (recon_err > 1e-8 * scale || sympl_err > 1e-8 * scale)
    throw NumericalError("williamson decomposition failed verification");
  return {std::move(s), std::move(nu)};
}

CovarianceMatrix purify(const CovarianceMatrix& g, const std::string& ancilla_prefix) {
  int n = g.num_modes();
  WilliamsonForm wf = williamson(g);
  // EPR(nu_i) between normal mode i and ancilla i, then undo the normal form
  // on the system half.
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(4 * n, 4 * n);
  for (int i = 0; i < n; ++i) {
    double nu = std::max(1.0, wf.nu[i]);
    double z = std::sqrt(nu * nu - 1.0);
    int si = 2 * i, ai = 2 * (n + i);
    p(si, si) = p(si + 1, si + 1) = nu;
    p(ai, ai) = p(ai + 1, ai + 1) = nu;
    p(si, ai) = p(ai, si) = z;
    p(si + 1, ai + 1) = p(ai + 1, si + 1) = -z;
  }
  Eigen::MatrixXd sfull = Eigen::MatrixXd::Identity(4 * n, 4 * n);
  sfull.topLeftCorner(2 * n, 2 * n) = wf.symplectic;
  Eigen::MatrixXd out = sfull * p * sfull.transpose();
  std::vector<ModeLabel> labels = g.labels();
  for (int i = 0; i < n; ++i) labels.push_back(ancilla_prefix + std::to_string(i + 1));
  return CovarianceMatrix(std::move(labels), std::move(out));
}

}  // namespace cvmdi
