#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>

#include <Eigen/Core>

namespace testing {

using Vec = Eigen::VectorXd;

inline Vec random_vec(Eigen::Index n, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> nd(0.0, scale);
  Vec v(n);
  for (auto& x : v) x = nd(rng);
  return v;
}

inline double rel_err(double a, double b) {
  const double s = std::max(std::abs(a), std::abs(b));
  return s == 0.0 ? 0.0 : std::abs(a - b) / s;
}

inline double rel_err(const Vec& a, const Vec& b) {
  const double s = std::max(a.norm(), b.norm());
  return s == 0.0 ? 0.0 : (a - b).norm() / s;
}

// Central difference of f along d at x.
inline double fd_directional(const std::function<double(const Vec&)>& f, const Vec& x, const Vec& d,
                             double h) {
  return (f(x + h * d) - f(x - h * d)) / (2 * h);
}

inline Vec fd_directional(const std::function<Vec(const Vec&)>& g, const Vec& x, const Vec& d, double h) {
  return (g(x + h * d) - g(x - h * d)) / (2 * h);
}

// Smallest relative error of the central difference over a sweep of steps.
inline double best_fd_error(const std::function<double(const Vec&)>& f, const Vec& x, const Vec& d,
                            double exact, std::initializer_list<double> steps = {1e-4, 1e-5, 1e-6, 1e-7}) {
  double best = 1e300;
  for (double h : steps) best = std::min(best, rel_err(fd_directional(f, x, d, h), exact));
  return best;
}

inline double best_fd_error(const std::function<Vec(const Vec&)>& g, const Vec& x, const Vec& d,
                            const Vec& exact, std::initializer_list<double> steps = {1e-4, 1e-5, 1e-6, 1e-7}) {
  double best = 1e300;
  for (double h : steps) best = std::min(best, rel_err(fd_directional(g, x, d, h), exact));
  return best;
}

}  // namespace testing
