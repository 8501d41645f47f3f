#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "jinv/linalg.hpp"

// Finite-difference verification of the derivative code.

namespace jinv {

struct CheckResult {
  std::string name;
  double error = 0.0;
  double tolerance = 0.0;

  bool passed() const { return error < tolerance; }
};

/// Smallest relative error of central differences of f along d at x against
/// the exact directional derivative, over steps 1e-4 .. 1e-7.
double fd_gradient_error(const std::function<double(const Vec&)>& f, const Vec& x, const Vec& d, double exact);

/// Same for a vector valued map (gradient differences against a Hessian action).
double fd_hessian_error(const std::function<Vec(const Vec&)>& g, const Vec& x, const Vec& d, const Vec& exact);

/// |<q, H p> - <p, H q>| / max(|<q, H p>|, |<p, H q>|).
double symmetry_error(const std::function<Vec(const Vec&)>& hvp, const Vec& p, const Vec& q);

/// Every regularizer kind on random P1 pairs at mesh size n: gradient for all
/// five kinds, Hessian action and symmetry for all but the nuclear norm.
std::vector<CheckResult> check_regularizers(int n, std::uint64_t seed);

/// Poisson misfit gradient and full Hessian action on a random log-conductivity.
std::vector<CheckResult> check_poisson(int n, std::uint64_t seed);

/// Acoustic misfit gradient along alpha and beta directions and the full
/// Hessian action, two sources, smooth medium.
std::vector<CheckResult> check_acoustic(int n, std::uint64_t seed);

/// Regularizers at n = 8, Poisson at n = 8, acoustic at n = 10.
std::vector<CheckResult> run_fd_checks(std::uint64_t seed);

}  // namespace jinv
