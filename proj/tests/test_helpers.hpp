#pragma once

#include <vector>

#include "cvmdi/gaussian.hpp"
#include "cvmdi/rng.hpp"

namespace cvmdi::testing {

// Random physical state built from thermal/EPR cores and a random
// beamsplitter circuit; physical by construction.
inline CovarianceMatrix random_physical_state(Pcg32& rng, int max_modes = 5) {
  int target = 1 + static_cast<int>(rng.uniform() * max_modes);
  CovarianceMatrix g = thermal_state(1.0 + 3.0 * rng.uniform(), "m1");
  int next = 2;
  while (g.num_modes() < target) {
    if (rng.uniform() < 0.5 && g.num_modes() + 2 <= target + 1) {
      std::string a = "m" + std::to_string(next++);
      std::string b = "m" + std::to_string(next++);
      g = direct_sum(g, epr_state(1.0 + 9.0 * rng.uniform(), a, b));
    } else {
      std::string a = "m" + std::to_string(next++);
      g = direct_sum(g, thermal_state(1.0 + 4.0 * rng.uniform(), a));
    }
  }
  int mixes = 3 + static_cast<int>(rng.uniform() * 6);
  for (int k = 0; k < mixes && g.num_modes() > 1; ++k) {
    int ia = static_cast<int>(rng.uniform() * g.num_modes());
    int ib = static_cast<int>(rng.uniform() * g.num_modes());
    if (ia == ib) continue;
    g = apply_beamsplitter(g, g.labels()[ia], g.labels()[ib], rng.uniform());
  }
  return g;
}

inline double max_abs_diff(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return (a - b).cwiseAbs().maxCoeff();
}

}  // namespace cvmdi::testing
