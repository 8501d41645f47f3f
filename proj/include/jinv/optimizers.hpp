#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "jinv/linalg.hpp"

namespace jinv {

using VecMap = std::function<Vec(const Vec&)>;

/// Objective quantities at one point. hvp and precondition may be empty.
struct Linearized {
  double value = 0.0;
  Vec gradient;
  VecMap hvp;           // Hessian (or Gauss-Newton) action at the point
  VecMap precondition;  // SPD approximation of the inverse Hessian
};

/// value() may throw SolverError; the line search treats that as +inf.
/// linearize() shares state and adjoint solves between the gradient and
/// later Hessian actions.
struct ObjectiveBundle {
  std::function<double(const Vec&)> value;
  std::function<Linearized(const Vec&)> linearize;
};

/// Bundle from separate callbacks; hvp(x, v) and precond(x) are optional.
ObjectiveBundle make_bundle(std::function<double(const Vec&)> value, std::function<Vec(const Vec&)> gradient,
                            std::function<Vec(const Vec&, const Vec&)> hvp = {},
                            std::function<VecMap(const Vec&)> precond = {});

struct LineSearchConfig {
  double c1 = 1e-4;
  double factor = 0.5;
  int max_steps = 25;  // halvings after the first trial
  double initial_step = 1.0;

  void validate() const;
};

struct LineSearchResult {
  bool accepted = false;
  double step = 0.0;
  double value = 0.0;
  int trials = 0;
  Vec x;
};

/// Backtracks from initial_step until f(x + a p) <= f0 + c1 a g^T p.
/// Throws std::invalid_argument if p is not a descent direction.
LineSearchResult armijo_backtrack(const std::function<double(const Vec&)>& f, const Vec& x, double f0,
                                  const Vec& g, const Vec& p, const LineSearchConfig& ls);

enum class OptTermination { converged, max_iter, line_search_failed };
std::string to_string(OptTermination t);

struct TraceRow {
  int iteration = 0;
  double objective = 0.0;
  double grad_norm = 0.0;
  double step = 0.0;
  int cg_iters = 0;
  std::string cg_reason;
  double wall_time = 0.0;  // seconds since start, not written to CSV
};

struct OptimizationTrace {
  std::vector<TraceRow> rows;
  OptTermination termination = OptTermination::max_iter;
};

// Columns: iteration,objective,grad_norm,step,cg_iters,cg_reason
void write_trace_csv(std::ostream& os, const OptimizationTrace& trace);

struct NewtonCgConfig {
  LineSearchConfig line_search;
  int max_iter = 200;
  double grad_rtol = 1e-6;  // stop when |g| <= max(grad_rtol |g0|, grad_atol)
  double grad_atol = 0.0;
  double eta_max = 0.5;     // CG tolerance min(eta_max, sqrt(|g| / |g0|))
  double cg_rtol = 0.0;     // > 0 replaces the forcing sequence by a fixed tolerance
  int cg_max_iter = 200;

  void validate() const;
};

struct OptimizationResult {
  Vec x;
  double value = 0.0;
  Vec gradient;
  OptimizationTrace trace;
  bool converged() const { return trace.termination == OptTermination::converged; }
};

/// Inexact Newton-CG with Armijo backtracking. On negative curvature the CG
/// iterate before the failure is used, or -P g if that happens at once.
OptimizationResult newton_cg(const ObjectiveBundle& f, const Vec& x0, const NewtonCgConfig& cfg);

struct BfgsConfig {
  LineSearchConfig line_search;
  int max_iter = 400;
  double grad_rtol = 1e-6;
  double grad_atol = 0.0;
  int memory = 50;
  double damping = 0.2;   // threshold a in theta
  int spd_probes = 0;     // random <Bv, v> > 0 checks after each update

  void validate() const;
};

struct BfgsPair {
  Vec r, y;      // damped step and gradient change
  double rho;    // 1 / r^T y
  double theta;  // 1 for an undamped update
};

struct BfgsResult : OptimizationResult {
  std::vector<BfgsPair> history;  // every update made, including pairs that left the window
};

/// theta for the damped pair r = theta s + (1 - theta) B y.
double bfgs_theta(double sy, double yby, double a);

/// Damped limited-memory BFGS. initial_inverse(x) gives B0 at the current
/// point; an empty function means the identity.
BfgsResult damped_bfgs(const ObjectiveBundle& f, const Vec& x0, const BfgsConfig& cfg,
                       const std::function<VecMap(const Vec&)>& initial_inverse);

}  // namespace jinv
