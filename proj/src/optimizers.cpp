#include "jinv/optimizers.hpp"

#include <chrono>
#include <cmath>
#include <deque>
#include <limits>
#include <ostream>
#include <random>
#include <stdexcept>

#include "jinv/errors.hpp"
#include "jinv/field_io.hpp"

namespace jinv {

ObjectiveBundle make_bundle(std::function<double(const Vec&)> value, std::function<Vec(const Vec&)> gradient,
                            std::function<Vec(const Vec&, const Vec&)> hvp, std::function<VecMap(const Vec&)> precond) {
  ObjectiveBundle b;
  b.value = value;
  b.linearize = [value, gradient, hvp, precond](const Vec& x) {
    Linearized l;
    l.value = value(x);
    l.gradient = gradient(x);
    if (hvp) l.hvp = [hvp, x](const Vec& v) { return hvp(x, v); };
    if (precond) l.precondition = precond(x);
    return l;
  };
  return b;
}

void LineSearchConfig::validate() const {
  if (!(c1 > 0.0 && c1 < 1.0)) throw ConfigError("line search: c1 must lie in (0, 1)");
  if (!(factor > 0.0 && factor < 1.0)) throw ConfigError("line search: backtrack factor must lie in (0, 1)");
  if (max_steps < 0) throw ConfigError("line search: max steps must be nonnegative");
  if (!(initial_step > 0.0)) throw ConfigError("line search: initial step must be positive");
}

LineSearchResult armijo_backtrack(const std::function<double(const Vec&)>& f, const Vec& x, double f0,
                                  const Vec& g, const Vec& p, const LineSearchConfig& ls) {
  const double slope = g.dot(p);
  if (!(slope < 0.0)) throw std::invalid_argument("armijo_backtrack: direction is not a descent direction");
  LineSearchResult res;
  double a = ls.initial_step;
  for (int j = 0; j <= ls.max_steps; ++j, a *= ls.factor) {
    Vec xt = x + a * p;
    double ft;
    try {
      ft = f(xt);
    } catch (const SolverError&) {
      ft = std::numeric_limits<double>::infinity();
    }
    res.trials = j + 1;
    if (std::isfinite(ft) && ft <= f0 + ls.c1 * a * slope) {
      res.accepted = true;
      res.step = a;
      res.value = ft;
      res.x = std::move(xt);
      return res;
    }
  }
  return res;
}

std::string to_string(OptTermination t) {
  switch (t) {
    case OptTermination::converged: return "converged";
    case OptTermination::max_iter: return "max_iter";
    case OptTermination::line_search_failed: return "line_search_failed";
  }
  return "unknown";
}

void write_trace_csv(std::ostream& os, const OptimizationTrace& trace) {
  os << "iteration,objective,grad_norm,step,cg_iters,cg_reason\n";
  for (const auto& r : trace.rows)
    os << r.iteration << "," << format_double(r.objective) << "," << format_double(r.grad_norm) << ","
       << format_double(r.step) << "," << r.cg_iters << "," << r.cg_reason << "\n";
}

void NewtonCgConfig::validate() const {
  line_search.validate();
  if (max_iter < 0) throw ConfigError("newton-cg: max iterations must be nonnegative");
  if (!(grad_rtol >= 0.0) || !(grad_atol >= 0.0)) throw ConfigError("newton-cg: tolerances must be nonnegative");
  if (!(eta_max > 0.0 && eta_max < 1.0)) throw ConfigError("newton-cg: eta_max must lie in (0, 1)");
  if (!(cg_rtol >= 0.0 && cg_rtol < 1.0)) throw ConfigError("newton-cg: cg_rtol must lie in [0, 1)");
  if (cg_max_iter < 1) throw ConfigError("newton-cg: cg_max_iter must be positive");
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

}  // namespace

OptimizationResult newton_cg(const ObjectiveBundle& f, const Vec& x0, const NewtonCgConfig& cfg) {
  cfg.validate();
  const auto start = Clock::now();
  OptimizationResult res;
  res.x = x0;
  Linearized lin = f.linearize(res.x);
  if (!lin.hvp) throw std::invalid_argument("newton_cg: objective provides no Hessian action");
  const double g0 = lin.gradient.norm();
  const double target = std::max(cfg.grad_rtol * g0, cfg.grad_atol);
  res.trace.rows.push_back({0, lin.value, g0, 0.0, 0, "", seconds_since(start)});

  for (int it = 1;; ++it) {
    const double gn = lin.gradient.norm();
    if (gn <= target) {
      res.trace.termination = OptTermination::converged;
      break;
    }
    if (it > cfg.max_iter) {
      res.trace.termination = OptTermination::max_iter;
      break;
    }
    const double eta = cfg.cg_rtol > 0.0 ? cfg.cg_rtol : std::min(cfg.eta_max, std::sqrt(gn / g0));
    LinearOperator h;
    h.dim = static_cast<std::size_t>(res.x.size());
    h.apply = lin.hvp;
    h.precondition = lin.precondition;
    const CgReport cg = pcg_solve(h, -lin.gradient, eta, cfg.cg_max_iter);
    Vec p = cg.x;
    if (!(p.dot(lin.gradient) < 0.0)) {
      p = lin.precondition ? Vec(-lin.precondition(lin.gradient)) : Vec(-lin.gradient);
      if (!(p.dot(lin.gradient) < 0.0)) p = -lin.gradient;
    }
    const auto ls = armijo_backtrack(f.value, res.x, lin.value, lin.gradient, p, cfg.line_search);
    if (!ls.accepted) {
      res.trace.rows.push_back({it, lin.value, gn, 0.0, cg.iterations, std::string(to_string(cg.termination)),
                                seconds_since(start)});
      res.trace.termination = OptTermination::line_search_failed;
      break;
    }
    res.x = ls.x;
    lin = f.linearize(res.x);
    res.trace.rows.push_back({it, lin.value, lin.gradient.norm(), ls.step, cg.iterations,
                              std::string(to_string(cg.termination)), seconds_since(start)});
  }
  res.value = lin.value;
  res.gradient = lin.gradient;
  return res;
}

void BfgsConfig::validate() const {
  line_search.validate();
  if (max_iter < 0) throw ConfigError("bfgs: max iterations must be nonnegative");
  if (!(grad_rtol >= 0.0) || !(grad_atol >= 0.0)) throw ConfigError("bfgs: tolerances must be nonnegative");
  if (memory < 1) throw ConfigError("bfgs: memory must be positive");
  if (!(damping > 0.0 && damping < 1.0)) throw ConfigError("bfgs: damping threshold must lie in (0, 1)");
  if (spd_probes < 0) throw ConfigError("bfgs: spd_probes must be nonnegative");
}

double bfgs_theta(double sy, double yby, double a) {
  if (sy >= a * yby) return 1.0;
  return (1.0 - a) * yby / (yby - sy);
}

namespace {

// Inverse-Hessian action of the pair window on top of h0.
Vec two_loop(const std::deque<BfgsPair>& pairs, const VecMap& h0, const Vec& v) {
  Vec q = v;
  std::vector<double> alpha(pairs.size());
  for (std::size_t i = pairs.size(); i-- > 0;) {
    alpha[i] = pairs[i].rho * pairs[i].r.dot(q);
    q -= alpha[i] * pairs[i].y;
  }
  Vec z = h0 ? h0(q) : q;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const double b = pairs[i].rho * pairs[i].y.dot(z);
    z += (alpha[i] - b) * pairs[i].r;
  }
  return z;
}

}  // namespace

BfgsResult damped_bfgs(const ObjectiveBundle& f, const Vec& x0, const BfgsConfig& cfg,
                       const std::function<VecMap(const Vec&)>& initial_inverse) {
  cfg.validate();
  const auto start = Clock::now();
  BfgsResult res;
  res.x = x0;
  Linearized lin = f.linearize(res.x);
  const double g0 = lin.gradient.norm();
  const double target = std::max(cfg.grad_rtol * g0, cfg.grad_atol);
  res.trace.rows.push_back({0, lin.value, g0, 0.0, 0, "", seconds_since(start)});
  std::deque<BfgsPair> pairs;
  std::mt19937_64 rng(1);
  std::normal_distribution<double> nd;

  for (int it = 1;; ++it) {
    const double gn = lin.gradient.norm();
    if (gn <= target) {
      res.trace.termination = OptTermination::converged;
      break;
    }
    if (it > cfg.max_iter) {
      res.trace.termination = OptTermination::max_iter;
      break;
    }
    const VecMap h0 = initial_inverse ? initial_inverse(res.x) : VecMap{};
    Vec p = -two_loop(pairs, h0, lin.gradient);
    if (!(p.dot(lin.gradient) < 0.0)) {
      pairs.clear();
      p = h0 ? Vec(-h0(lin.gradient)) : Vec(-lin.gradient);
      if (!(p.dot(lin.gradient) < 0.0)) p = -lin.gradient;
    }
    const auto ls = armijo_backtrack(f.value, res.x, lin.value, lin.gradient, p, cfg.line_search);
    if (!ls.accepted) {
      res.trace.rows.push_back({it, lin.value, gn, 0.0, 0, "", seconds_since(start)});
      res.trace.termination = OptTermination::line_search_failed;
      break;
    }
    Linearized next = f.linearize(ls.x);
    const Vec s = ls.x - res.x;
    const Vec y = next.gradient - lin.gradient;
    const Vec by = two_loop(pairs, h0, y);
    const double sy = s.dot(y), yby = y.dot(by);
    std::string reason = "skipped";
    if (yby > 0.0 && std::isfinite(yby)) {
      const double theta = bfgs_theta(sy, yby, cfg.damping);
      BfgsPair pr{theta * s + (1.0 - theta) * by, y, 0.0, theta};
      const double ry = pr.r.dot(y);
      if (ry > 0.0) {
        pr.rho = 1.0 / ry;
        reason = theta < 1.0 ? "damped" : "undamped";
        pairs.push_back(pr);
        res.history.push_back(pr);
        if (static_cast<int>(pairs.size()) > cfg.memory) pairs.pop_front();
      }
    }
    res.x = ls.x;
    lin = std::move(next);
    for (int k = 0; k < cfg.spd_probes; ++k) {
      Vec v(res.x.size());
      for (auto& e : v) e = nd(rng);
      const VecMap probe_h0 = initial_inverse ? initial_inverse(res.x) : VecMap{};
      if (!(v.dot(two_loop(pairs, probe_h0, v)) > 0.0))
        throw std::logic_error("damped_bfgs: inverse Hessian approximation lost positive definiteness");
    }
    res.trace.rows.push_back({it, lin.value, lin.gradient.norm(), ls.step, 0, reason, seconds_since(start)});
  }
  res.value = lin.value;
  res.gradient = lin.gradient;
  return res;
}

}  // namespace jinv
