#pragma once

#include <array>
#include <functional>

namespace tomocomet {

struct ScalarMinimum {
  double x = 0.0;
  double value = 0.0;
  int evaluations = 0;
};

/// Golden-section minimization of a unimodal f on [lo, hi]; stops once the
/// bracket is narrower than tol.
ScalarMinimum golden_section_minimize(const std::function<double(double)>& f,
                                      double lo, double hi, double tol);

struct PlanarMinimum {
  std::array<double, 2> x{};
  double value = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Nelder-Mead simplex on R^2 started from the right triangle
/// {x0, x0 + step0 e0, x0 + step1 e1}. Converges when every vertex lies
/// within tol[i] of the best one along axis i.
PlanarMinimum nelder_mead_minimize(
    const std::function<double(const std::array<double, 2>&)>& f,
    std::array<double, 2> x0, std::array<double, 2> step,
    std::array<double, 2> tol, int max_iterations = 2000);

}  // namespace tomocomet
