#include "tomocomet/search.hpp"

#include <algorithm>
#include <cmath>

namespace tomocomet {

ScalarMinimum golden_section_minimize(const std::function<double(double)>& f,
                                      double lo, double hi, double tol) {
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f(c), fd = f(d);
  int evals = 2;
  while (b - a > tol) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
    ++evals;
    if (evals > 500) break;
  }
  if (fc <= fd) return {c, fc, evals};
  return {d, fd, evals};
}

PlanarMinimum nelder_mead_minimize(
    const std::function<double(const std::array<double, 2>&)>& f,
    std::array<double, 2> x0, std::array<double, 2> step,
    std::array<double, 2> tol, int max_iterations) {
  using Point = std::array<double, 2>;
  std::array<Point, 3> p{x0, x0, x0};
  p[1][0] += step[0];
  p[2][1] += step[1];
  std::array<double, 3> v{f(p[0]), f(p[1]), f(p[2])};

  auto combine = [](const Point& a, const Point& b, double t) {
    return Point{a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])};
  };

  PlanarMinimum out;
  for (int it = 0; it < max_iterations; ++it) {
    std::array<int, 3> idx{0, 1, 2};
    std::sort(idx.begin(), idx.end(), [&](int i, int j) { return v[i] < v[j]; });
    const int best = idx[0], mid = idx[1], worst = idx[2];
    out.iterations = it;

    bool small = true;
    for (int k = 0; k < 3 && small; ++k) {
      for (int axis = 0; axis < 2; ++axis) {
        if (std::abs(p[k][axis] - p[best][axis]) > tol[axis]) small = false;
      }
    }
    if (small) {
      out.converged = true;
      break;
    }

    const Point centroid{(p[best][0] + p[mid][0]) / 2.0, (p[best][1] + p[mid][1]) / 2.0};
    const Point reflected = combine(centroid, p[worst], -1.0);
    const double fr = f(reflected);
    if (fr < v[best]) {
      const Point expanded = combine(centroid, p[worst], -2.0);
      const double fe = f(expanded);
      if (fe < fr) {
        p[worst] = expanded;
        v[worst] = fe;
      } else {
        p[worst] = reflected;
        v[worst] = fr;
      }
      continue;
    }
    if (fr < v[mid]) {
      p[worst] = reflected;
      v[worst] = fr;
      continue;
    }
    const bool outside = fr < v[worst];
    const Point contracted =
        outside ? combine(centroid, reflected, 0.5) : combine(centroid, p[worst], 0.5);
    const double fc = f(contracted);
    if (fc < (outside ? fr : v[worst])) {
      p[worst] = contracted;
      v[worst] = fc;
      continue;
    }
    for (int k : {mid, worst}) {
      p[k] = combine(p[best], p[k], 0.5);
      v[k] = f(p[k]);
    }
  }
  const int best = static_cast<int>(std::min_element(v.begin(), v.end()) - v.begin());
  out.x = p[best];
  out.value = v[best];
  return out;
}

}  // namespace tomocomet
