#include "jinv/harness.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "jinv/errors.hpp"
#include "jinv/fem.hpp"
#include "jinv/field_io.hpp"

namespace jinv {

namespace fs = std::filesystem;

// ---- phantoms ----

bool Shape::contains(const Point& p) const {
  switch (kind) {
    case Kind::layer: return p.y() < geom[0];
    case Kind::rect: return p.x() >= geom[0] && p.x() <= geom[1] && p.y() >= geom[2] && p.y() <= geom[3];
    case Kind::disc: return (p - Point(geom[0], geom[1])).norm() <= geom[2];
  }
  return false;
}

double Phantom::operator()(const Point& p) const {
  double v = background;
  for (const auto& s : shapes)
    if (s.contains(p)) v = s.value;
  return v;
}

void Phantom::validate() const {
  if (!std::isfinite(background)) throw ConfigError("phantom: nonfinite background");
  auto unit = [](double v) { return v >= 0.0 && v <= 1.0; };
  for (const auto& s : shapes) {
    if (!std::isfinite(s.value)) throw ConfigError("phantom: nonfinite shape value");
    for (double g : s.geom)
      if (!std::isfinite(g)) throw ConfigError("phantom: nonfinite shape geometry");
    bool ok = true;
    switch (s.kind) {
      case Shape::Kind::layer: ok = unit(s.geom[0]); break;
      case Shape::Kind::rect:
        ok = unit(s.geom[0]) && unit(s.geom[1]) && unit(s.geom[2]) && unit(s.geom[3]) && s.geom[0] < s.geom[1] &&
             s.geom[2] < s.geom[3];
        break;
      case Shape::Kind::disc:
        ok = s.geom[2] > 0.0 && s.geom[0] - s.geom[2] >= 0.0 && s.geom[0] + s.geom[2] <= 1.0 &&
             s.geom[1] - s.geom[2] >= 0.0 && s.geom[1] + s.geom[2] <= 1.0;
        break;
    }
    if (!ok) throw ConfigError("phantom: shape outside the unit square or degenerate");
  }
}

Shape parse_shape(std::string_view text) {
  std::istringstream is{std::string(text)};
  std::string kind;
  is >> kind;
  Shape s;
  std::size_t count = 0;
  if (kind == "layer") {
    s.kind = Shape::Kind::layer;
    count = 1;
  } else if (kind == "rect") {
    s.kind = Shape::Kind::rect;
    count = 4;
  } else if (kind == "disc") {
    s.kind = Shape::Kind::disc;
    count = 3;
  } else {
    throw ConfigError("unknown shape '" + kind + "' (expected layer, rect or disc)");
  }
  std::vector<double> nums;
  std::string tok;
  while (is >> tok) {
    double v = 0.0;
    std::size_t used = 0;
    try {
      v = std::stod(tok, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != tok.size()) throw ConfigError("shape '" + std::string(text) + "': bad number '" + tok + "'");
    nums.push_back(v);
  }
  if (nums.size() != count + 1)
    throw ConfigError("shape '" + std::string(text) + "': expected " + std::to_string(count + 1) + " numbers");
  s.value = nums.back();
  nums.pop_back();
  s.geom = nums;
  return s;
}

Phantom phantom_from_config(const FlatConfig& cfg, const std::string& prefix) {
  Phantom ph;
  ph.background = cfg.get_double(prefix + ".background");
  std::map<int, Shape> ordered;
  const std::string shape_prefix = prefix + ".shape.";
  for (const auto& key : cfg.keys_with_prefix(shape_prefix)) {
    const std::string idx = key.substr(shape_prefix.size());
    int k = 0;
    try {
      std::size_t used = 0;
      k = std::stoi(idx, &used);
      if (used != idx.size()) throw std::invalid_argument(idx);
    } catch (const std::exception&) {
      throw ConfigError(cfg.source() + ": bad shape key '" + key + "'");
    }
    ordered[k] = parse_shape(cfg.get_string(key));
  }
  for (auto& [k, s] : ordered) ph.shapes.push_back(std::move(s));
  ph.validate();
  return ph;
}

Vec phantom_values(const Phantom& ph, const FunctionSpace& p1) {
  const auto& pts = p1.dof_coordinates();
  Vec v(static_cast<Eigen::Index>(pts.size()));
  for (std::size_t i = 0; i < pts.size(); ++i) v[static_cast<Eigen::Index>(i)] = ph(pts[i]);
  return v;
}

// ---- layouts ----

std::string_view to_string(Family f) {
  switch (f) {
    case Family::poisson_poisson: return "poisson_poisson";
    case Family::acoustic_ab: return "acoustic_ab";
    case Family::poisson_acoustic: return "poisson_acoustic";
  }
  return "unknown";
}

Family parse_family(std::string_view name) {
  if (name == "poisson_poisson") return Family::poisson_poisson;
  if (name == "acoustic_ab") return Family::acoustic_ab;
  if (name == "poisson_acoustic") return Family::poisson_acoustic;
  throw ConfigError("unknown experiment family '" + std::string(name) + "'");
}

namespace {

// Points (i/d, j/d) for i, j in [lo, hi].
std::vector<Point> lattice(int lo, int hi, double d) {
  std::vector<Point> pts;
  for (int j = lo; j <= hi; ++j)
    for (int i = lo; i <= hi; ++i) pts.emplace_back(i / d, j / d);
  return pts;
}

std::vector<Point> top_receivers() {
  std::vector<Point> r;
  for (int k = 1; k <= 20; ++k) r.emplace_back(k / 21.0, 1.0);
  return r;
}

}  // namespace

ObservationLayout build_observation_layout(Family family, std::string_view variant) {
  ObservationLayout l;
  switch (family) {
    case Family::poisson_poisson:
      if (variant == "quadrant") {
        l.points = lattice(26, 50, 51.0);
        return l;
      }
      if (variant == "full") {
        l.points = lattice(1, 50, 51.0);
        return l;
      }
      break;
    case Family::acoustic_ab:
      if (variant == "top") {
        l.receivers = top_receivers();
        for (double x : {0.1, 0.25, 0.4, 0.6, 0.75, 0.9}) l.sources.emplace_back(x, 1.0);
        return l;
      }
      break;
    case Family::poisson_acoustic:
      if (variant == "default") {
        l.points = lattice(1, 20, 21.0);
        l.receivers = top_receivers();
        l.sources.emplace_back(0.5, 0.1);
        return l;
      }
      break;
  }
  throw ConfigError("unknown observation layout '" + std::string(variant) + "' for family " +
                    std::string(to_string(family)));
}

// ---- fields ----

Vec smooth_field(const FunctionSpace& p1, const Vec& m, int steps) {
  if (steps < 0) throw std::invalid_argument("smooth_field: negative step count");
  const Vec ones = Vec::Ones(static_cast<Eigen::Index>(p1.mesh().num_triangles()));
  const SparseMatrix k = assemble_weighted_stiffness(p1, std::span<const double>(ones.data(), ones.size()));
  const Vec lumped = assemble_mass(p1) * Vec::Ones(m.size());
  const double tau = p1.mesh().h() * p1.mesh().h() / 8.0;
  Vec v = m;
  for (int s = 0; s < steps; ++s) v -= tau * (k * v).cwiseQuotient(lumped);
  return v;
}

double relative_medium_misfit(const FunctionSpace& p1, const Vec& m_rec, const Vec& m_true) {
  if (m_rec.size() != m_true.size() || static_cast<std::size_t>(m_true.size()) != p1.num_dofs())
    throw std::invalid_argument("relative_medium_misfit: size mismatch");
  const SparseMatrix mass = assemble_mass(p1);
  const double denom = std::sqrt(m_true.dot(mass * m_true));
  if (!(denom > 0.0)) throw std::invalid_argument("relative_medium_misfit: truth field has zero norm");
  const Vec d = m_rec - m_true;
  return 100.0 * std::sqrt(std::max(0.0, d.dot(mass * d))) / denom;
}

// ---- configuration ----

namespace {

std::array<std::string, 2> param_names(Family f) {
  switch (f) {
    case Family::poisson_poisson: return {"m1", "m2"};
    case Family::acoustic_ab: return {"alpha", "beta"};
    case Family::poisson_acoustic: return {"m", "alpha"};
  }
  return {"", ""};
}

std::string method_label(RegKind k) {
  return k == RegKind::tv_independent ? std::string("independent") : std::string(to_string(k));
}

RegConfig reg_from_config(const FlatConfig& cfg, const std::string& prefix) {
  RegConfig r;
  r.kind = parse_reg_kind(cfg.get_string(prefix + ".kind"));
  r.gamma1 = cfg.get_optional_double(prefix + ".gamma1");
  r.gamma2 = cfg.get_optional_double(prefix + ".gamma2");
  r.gamma = cfg.get_optional_double(prefix + ".gamma");
  r.eps_tv = cfg.get_optional_double(prefix + ".eps_tv");
  r.eps_joint = cfg.get_optional_double(prefix + ".eps_joint");
  r.precond_shift = cfg.get_optional_double(prefix + ".precond_shift");
  r.validate();
  return r;
}

LineSearchConfig line_search_from_config(const FlatConfig& cfg) {
  LineSearchConfig ls;
  ls.c1 = cfg.get_double("solver.c1", ls.c1);
  ls.factor = cfg.get_double("solver.backtrack", ls.factor);
  ls.max_steps = cfg.get_int("solver.max_backtrack", ls.max_steps);
  return ls;
}

}  // namespace

void ExperimentConfig::validate() const {
  if (n < 2) throw ConfigError("mesh.n must be at least 2");
  if (methods.empty()) throw ConfigError("experiment runs no method");
  if (smoothing_steps < 0) throw ConfigError("init.smoothing_steps must be nonnegative");
  for (const auto& p : params) p.truth.validate();
  for (const auto& m : methods) m.reg.validate();
  for (double s : noise)
    if (!(s >= 0.0) || !std::isfinite(s)) throw ConfigError("noise levels must be nonnegative");
  if (family != Family::poisson_poisson) {
    if (!(wave.final_time > 0.0) || !(wave.c_max > 0.0) || !(wave.f0 > 0.0) || !(wave.beta > 0.0))
      throw ConfigError("wave settings must be positive");
    if (!(wave.cfl > 0.0 && wave.cfl <= kStableCfl))
      throw ConfigError("wave.cfl must lie in (0, " + format_double(kStableCfl) + "]");
    if (std::isnan(wave.snr_db)) throw ConfigError("wave.snr_db is not a number");
  }
  newton.validate();
  bfgs.validate();
}

ExperimentConfig experiment_from_config(const FlatConfig& cfg) {
  ExperimentConfig e;
  e.name = cfg.get_string("experiment.name", e.name);
  e.family = parse_family(cfg.get_string("experiment.family"));
  e.n = cfg.get_int("mesh.n", e.n);
  e.seed = cfg.get_uint64("seed", e.seed);
  e.output_dir = cfg.get_string("output.dir", e.output_dir.string());
  e.smoothing_steps = cfg.get_int("init.smoothing_steps", e.smoothing_steps);

  const auto names = param_names(e.family);
  for (int k = 0; k < 2; ++k) {
    auto& p = e.params[k];
    p.name = names[k];
    p.truth = phantom_from_config(cfg, "phantom." + p.name);
    const std::string init_key = "init." + p.name;
    const std::string fallback = e.family == Family::poisson_poisson ? "0" : "smoothed";
    const std::string init = cfg.get_string(init_key, fallback);
    if (init != "smoothed") {
      std::size_t used = 0;
      try {
        p.initial = std::stod(init, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != init.size()) throw ConfigError(cfg.source() + ": " + init_key + " must be a number or 'smoothed'");
    }
  }

  if (e.family == Family::poisson_poisson) {
    e.layouts = {cfg.get_string("obs.m1.layout", "quadrant"), cfg.get_string("obs.m2.layout", "full")};
    e.noise = {cfg.get_double("noise.m1", 0.02), cfg.get_double("noise.m2", 0.02)};
  } else {
    const std::string fallback = e.family == Family::acoustic_ab ? "top" : "default";
    e.layouts = {cfg.get_string("obs.layout", fallback), ""};
    if (e.family == Family::poisson_acoustic) e.noise = {cfg.get_double("noise.m", 0.01), 0.0};
    auto& w = e.wave;
    w.final_time = cfg.get_double("wave.final_time", w.final_time);
    w.c_max = cfg.get_double("wave.c_max", w.c_max);
    w.cfl = cfg.get_double("wave.cfl", w.cfl);
    w.f0 = cfg.get_double("wave.f0", w.f0);
    w.t0 = cfg.get_optional_double("wave.t0");
    w.snr_db = cfg.get_double("wave.snr_db", w.snr_db);
    if (e.family == Family::poisson_acoustic) w.beta = cfg.get_double("wave.beta", w.beta);
    const std::string profile = cfg.get_string("wave.profile", "gaussian");
    if (profile == "gaussian")
      w.profile = SourceProfile::gaussian;
    else if (profile == "point")
      w.profile = SourceProfile::point;
    else
      throw ConfigError(cfg.source() + ": wave.profile must be gaussian or point");
  }

  const RegConfig joint = reg_from_config(cfg, "reg");
  if (cfg.get_bool("baseline", true) && joint.kind != RegKind::tv_independent) {
    RegConfig base;
    base.kind = RegKind::tv_independent;
    base.gamma1 = cfg.get_double("baseline.gamma1");
    base.gamma2 = cfg.get_double("baseline.gamma2");
    base.eps_tv = cfg.get_double("baseline.eps_tv");
    base.precond_shift = cfg.get_optional_double("baseline.precond_shift");
    base.validate();
    e.methods.push_back({method_label(base.kind), base});
  }
  e.methods.push_back({method_label(joint.kind), joint});

  const std::string hess = cfg.get_string("solver.hessian", "gauss_newton");
  if (hess == "gauss_newton")
    e.hessian = HessianMode::gauss_newton;
  else if (hess == "full")
    e.hessian = HessianMode::full;
  else
    throw ConfigError(cfg.source() + ": solver.hessian must be gauss_newton or full");
  if (cfg.has("solver.optimizer")) {
    const std::string opt = cfg.get_string("solver.optimizer");
    const std::string want = joint.kind == RegKind::nuclear ? "damped_bfgs" : "newton_cg";
    if (opt != want)
      throw ConfigError(cfg.source() + ": regularizer " + std::string(to_string(joint.kind)) + " is solved with " +
                        want + ", not '" + opt + "'");
  }
  e.newton.line_search = line_search_from_config(cfg);
  e.newton.max_iter = cfg.get_int("solver.max_iter", e.newton.max_iter);
  e.newton.grad_rtol = cfg.get_double("solver.grad_rtol", e.newton.grad_rtol);
  e.newton.grad_atol = cfg.get_double("solver.grad_atol", e.newton.grad_atol);
  e.newton.eta_max = cfg.get_double("solver.eta_max", e.newton.eta_max);
  e.newton.cg_rtol = cfg.get_double("solver.cg_rtol", e.newton.cg_rtol);
  e.newton.cg_max_iter = cfg.get_int("solver.cg_max_iter", e.newton.cg_max_iter);
  e.bfgs.line_search = e.newton.line_search;
  e.bfgs.max_iter = cfg.get_int("bfgs.max_iter", e.bfgs.max_iter);
  e.bfgs.grad_rtol = cfg.get_double("bfgs.grad_rtol", e.newton.grad_rtol);
  e.bfgs.grad_atol = cfg.get_double("bfgs.grad_atol", e.newton.grad_atol);
  e.bfgs.memory = cfg.get_int("bfgs.memory", e.bfgs.memory);
  e.bfgs.damping = cfg.get_double("bfgs.damping", e.bfgs.damping);

  cfg.check_unused();
  e.validate();
  for (const auto& l : e.layouts)
    if (!l.empty()) build_observation_layout(e.family, l);
  return e;
}

ExperimentConfig load_experiment(const fs::path& path) { return experiment_from_config(FlatConfig::load(path)); }

// ---- data ----

namespace {

WaveConfig wave_config(const ExperimentConfig& cfg, const StructuredMesh& mesh, const ObservationLayout& l) {
  std::vector<WaveSource> sources;
  for (const auto& p : l.sources) sources.push_back({p, cfg.wave.f0, cfg.wave.delay()});
  WaveConfig w = make_wave_config(mesh, cfg.wave.final_time, cfg.wave.c_max, cfg.wave.cfl, std::move(sources),
                                  l.receivers);
  w.profile = cfg.wave.profile;
  return w;
}

// Wave parameters [alpha; beta] of the poisson_acoustic family from alpha.
Vec with_fixed_beta(const Vec& alpha, double beta) { return stack_pair(alpha, Vec::Constant(alpha.size(), beta)); }

void check_speed(const Vec& x, double c_max, const char* what) {
  const auto n = x.size() / 2;
  if (x.head(n).minCoeff() <= 0.0 || x.tail(n).minCoeff() <= 0.0)
    throw ConfigError(std::string(what) + ": alpha and beta must be positive");
  const double c = (x.tail(n).array() / x.head(n).array()).sqrt().maxCoeff();
  if (c > c_max) throw ConfigError(std::string(what) + ": wave speed " + format_double(c) + " exceeds wave.c_max");
}

}  // namespace

ExperimentData generate_data(const ExperimentConfig& cfg) {
  cfg.validate();
  ExperimentData d;
  d.mesh = build_mesh(cfg.n);
  d.p1 = build_space(d.mesh, 1);
  std::array<Vec, 2> truth, init;
  for (int k = 0; k < 2; ++k) {
    truth[k] = phantom_values(cfg.params[k].truth, *d.p1);
    init[k] = cfg.params[k].initial ? Vec(Vec::Constant(truth[k].size(), *cfg.params[k].initial))
                                    : smooth_field(*d.p1, truth[k], cfg.smoothing_steps);
  }
  d.truth = stack_pair(truth[0], truth[1]);
  d.initial = stack_pair(init[0], init[1]);

  switch (cfg.family) {
    case Family::poisson_poisson:
      for (int k = 0; k < 2; ++k) {
        d.layouts[k] = build_observation_layout(cfg.family, cfg.layouts[k]);
        PoissonProblem pb(d.mesh, d.layouts[k].points);
        d.poisson[k] = pb.synthesize_data(truth[k], cfg.noise[k], cfg.seed + k);
      }
      break;
    case Family::acoustic_ab: {
      d.layouts[0] = build_observation_layout(cfg.family, cfg.layouts[0]);
      d.wave = wave_config(cfg, *d.mesh, d.layouts[0]);
      check_speed(d.truth, cfg.wave.c_max, "truth");
      check_speed(d.initial, cfg.wave.c_max, "initial guess");
      AcousticProblem prob(d.mesh, d.wave);
      d.record = prob.synthesize_records(d.truth, cfg.wave.snr_db, cfg.seed);
      break;
    }
    case Family::poisson_acoustic: {
      d.layouts[0] = build_observation_layout(cfg.family, cfg.layouts[0]);
      PoissonProblem pb(d.mesh, d.layouts[0].points);
      d.poisson[0] = pb.synthesize_data(truth[0], cfg.noise[0], cfg.seed);
      d.wave = wave_config(cfg, *d.mesh, d.layouts[0]);
      check_speed(with_fixed_beta(truth[1], cfg.wave.beta), cfg.wave.c_max, "truth");
      check_speed(with_fixed_beta(init[1], cfg.wave.beta), cfg.wave.c_max, "initial guess");
      AcousticProblem prob(d.mesh, d.wave);
      d.record = prob.synthesize_records(with_fixed_beta(truth[1], cfg.wave.beta), cfg.wave.snr_db, cfg.seed + 1);
      break;
    }
  }
  return d;
}

void write_data(const ExperimentConfig& cfg, const ExperimentData& data, const fs::path& dir) {
  fs::create_directories(dir / "truth");
  fs::create_directories(dir / "initial");
  fs::create_directories(dir / "data");
  const auto n = static_cast<Eigen::Index>(data.p1->num_dofs());
  for (int k = 0; k < 2; ++k) {
    const auto& name = cfg.params[k].name;
    write_field(dir / "truth" / (name + ".field"), ScalarField(data.p1, data.truth.segment(k * n, n)));
    write_field(dir / "initial" / (name + ".field"), ScalarField(data.p1, data.initial.segment(k * n, n)));
  }
  switch (cfg.family) {
    case Family::poisson_poisson:
      write_observations(dir / "data" / "m1.obs", data.poisson[0]);
      write_observations(dir / "data" / "m2.obs", data.poisson[1]);
      break;
    case Family::acoustic_ab: write_record(dir / "data" / "waves.trace", data.record, data.wave); break;
    case Family::poisson_acoustic:
      write_observations(dir / "data" / "m.obs", data.poisson[0]);
      write_record(dir / "data" / "waves.trace", data.record, data.wave);
      break;
  }
}

// ---- objectives ----

namespace {

// Data misfit of a stacked pair: value and linearization.
struct Misfit {
  std::function<double(const Vec&)> value;
  std::function<Linearized(const Vec&)> linearize;
};

Misfit poisson_pair_misfit(const ExperimentData& d, HessianMode mode) {
  auto p1 = std::make_shared<PoissonProblem>(d.mesh, d.poisson[0].points);
  auto p2 = std::make_shared<PoissonProblem>(d.mesh, d.poisson[1].points);
  const Vec d1 = d.poisson[0].values, d2 = d.poisson[1].values;
  const auto n = static_cast<Eigen::Index>(d.p1->num_dofs());
  Misfit m;
  m.value = [=](const Vec& x) { return p1->misfit_value(x.head(n), d1) + p2->misfit_value(x.tail(n), d2); };
  m.linearize = [=](const Vec& x) {
    auto l1 = std::make_shared<PoissonLinearization>(p1->linearize(x.head(n), d1));
    auto l2 = std::make_shared<PoissonLinearization>(p2->linearize(x.tail(n), d2));
    Linearized l;
    l.value = l1->misfit() + l2->misfit();
    l.gradient = stack_pair(l1->gradient(), l2->gradient());
    l.hvp = [=](const Vec& v) { return stack_pair(l1->hvp(v.head(n), mode), l2->hvp(v.tail(n), mode)); };
    return l;
  };
  return m;
}

Misfit acoustic_misfit(const ExperimentData& d, HessianMode mode) {
  auto prob = std::make_shared<AcousticProblem>(d.mesh, d.wave);
  const SeismicRecord rec = d.record;
  Misfit m;
  m.value = [=](const Vec& x) { return prob->misfit_value(x, rec); };
  m.linearize = [=](const Vec& x) {
    auto lin = std::make_shared<AcousticLinearization>(prob->linearize(x, rec));
    Linearized l;
    l.value = lin->misfit();
    l.gradient = lin->gradient();
    l.hvp = [=](const Vec& v) { return lin->hvp(v, mode); };
    return l;
  };
  return m;
}

Misfit poisson_acoustic_misfit(const ExperimentData& d, double beta, HessianMode mode) {
  auto pb = std::make_shared<PoissonProblem>(d.mesh, d.poisson[0].points);
  auto wave = std::make_shared<AcousticProblem>(d.mesh, d.wave);
  const Vec data = d.poisson[0].values;
  const SeismicRecord rec = d.record;
  const auto n = static_cast<Eigen::Index>(d.p1->num_dofs());
  Misfit m;
  m.value = [=](const Vec& x) {
    return pb->misfit_value(x.head(n), data) + wave->misfit_value(with_fixed_beta(x.tail(n), beta), rec);
  };
  m.linearize = [=](const Vec& x) {
    auto lp = std::make_shared<PoissonLinearization>(pb->linearize(x.head(n), data));
    auto lw = std::make_shared<AcousticLinearization>(wave->linearize(with_fixed_beta(x.tail(n), beta), rec));
    Linearized l;
    l.value = lp->misfit() + lw->misfit();
    l.gradient = stack_pair(lp->gradient(), lw->gradient().head(n));
    l.hvp = [=](const Vec& v) {
      const Vec dir = stack_pair(v.tail(n), Vec::Zero(n));
      return stack_pair(lp->hvp(v.head(n), mode), lw->hvp(dir, mode).head(n));
    };
    return l;
  };
  return m;
}

}  // namespace

ObjectiveBundle experiment_objective(const ExperimentConfig& cfg, const ExperimentData& data,
                                     const JointRegularizer& reg) {
  Misfit mis;
  switch (cfg.family) {
    case Family::poisson_poisson: mis = poisson_pair_misfit(data, cfg.hessian); break;
    case Family::acoustic_ab: mis = acoustic_misfit(data, cfg.hessian); break;
    case Family::poisson_acoustic: mis = poisson_acoustic_misfit(data, cfg.wave.beta, cfg.hessian); break;
  }
  auto r = std::make_shared<const JointRegularizer>(reg);
  ObjectiveBundle b;
  b.value = [mis, r](const Vec& x) { return mis.value(x) + r->value(x); };
  b.linearize = [mis, r](const Vec& x) {
    Linearized l = mis.linearize(x);
    const ValueGrad vg = r->value_grad(x);
    l.value += vg.value;
    l.gradient += vg.gradient;
    if (r->has_hessian()) {
      const VecMap h = l.hvp;
      l.hvp = [h, r, x](const Vec& v) { return Vec(h(v) + r->hessian_apply(x, v)); };
      l.precondition = r->preconditioner(x);
    } else {
      l.hvp = {};
    }
    return l;
  };
  return b;
}

// ---- runs ----

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  const ExperimentData data = generate_data(cfg);
  const fs::path out = cfg.output_dir;
  write_data(cfg, data, out);
  const auto n = static_cast<Eigen::Index>(data.p1->num_dofs());

  ExperimentResult res;
  std::string failures;
  for (const auto& method : cfg.methods) {
    const JointRegularizer reg(method.reg, data.p1);
    const ObjectiveBundle f = experiment_objective(cfg, data, reg);
    MethodOutcome o;
    o.method = method.label;
    o.x = data.initial;
    try {
      OptimizationResult r;
      if (method.reg.kind == RegKind::nuclear)
        r = damped_bfgs(f, data.initial, cfg.bfgs, [&reg](const Vec& x) { return reg.preconditioner(x); });
      else
        r = newton_cg(f, data.initial, cfg.newton);
      o.x = r.x;
      o.trace = r.trace;
      if (r.trace.termination == OptTermination::line_search_failed)
        o.failure = "line search failed after " + std::to_string(r.trace.rows.size() - 1) + " iterations";
    } catch (const SolverError& e) {
      o.failure = e.what();
    }
    const fs::path dir = out / method.label;
    fs::create_directories(dir);
    for (int k = 0; k < 2; ++k) {
      o.misfit[k] = relative_medium_misfit(*data.p1, o.x.segment(k * n, n), data.truth.segment(k * n, n));
      write_field(dir / (cfg.params[k].name + ".field"), ScalarField(data.p1, o.x.segment(k * n, n)));
      res.rows.push_back({cfg.name, method.label, cfg.params[k].name, o.misfit[k]});
    }
    std::ofstream trace(dir / "trace.csv");
    write_trace_csv(trace, o.trace);
    if (!o.failure.empty()) failures += (failures.empty() ? "" : "; ") + method.label + ": " + o.failure;
    res.methods.push_back(std::move(o));
  }
  std::ofstream csv(out / "misfits.csv");
  write_misfits_csv(csv, res.rows);
  csv.close();
  if (!failures.empty()) throw SolverError(failures);
  return res;
}

// ---- misfit tables ----

void write_misfits_csv(std::ostream& os, const std::vector<MisfitRow>& rows) {
  os << "experiment,method,parameter,misfit_percent\n";
  for (const auto& r : rows)
    os << r.experiment << "," << r.method << "," << r.parameter << "," << format_double(r.misfit_percent) << "\n";
}

std::vector<MisfitRow> read_misfits_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != "experiment,method,parameter,misfit_percent")
    throw ConfigError("misfit table: bad header");
  std::vector<MisfitRow> rows;
  int lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> cols;
    std::stringstream ss(line);
    std::string c;
    while (std::getline(ss, c, ',')) cols.push_back(c);
    MisfitRow r;
    std::size_t used = 0;
    if (cols.size() == 4) {
      try {
        r.misfit_percent = std::stod(cols[3], &used);
      } catch (const std::exception&) {
        used = 0;
      }
    }
    if (cols.size() != 4 || used != cols[3].size() || !(r.misfit_percent >= 0.0))
      throw ConfigError("misfit table: bad line " + std::to_string(lineno));
    r.experiment = cols[0];
    r.method = cols[1];
    r.parameter = cols[2];
    rows.push_back(r);
  }
  return rows;
}

std::string method_display_name(std::string_view method) {
  if (method == "independent") return "independent";
  if (method == "cross_gradient") return "cross-grad";
  if (method == "normalized_cross_gradient") return "n-cross-grad";
  if (method == "vtv") return "vectorial TV";
  if (method == "nuclear") return "nuclear norm";
  return std::string(method);
}

void write_report(std::ostream& os, const std::vector<MisfitRow>& rows) {
  static const char* kMethods[] = {"independent", "cross_gradient", "normalized_cross_gradient", "vtv", "nuclear"};
  std::vector<std::pair<std::string, std::string>> columns;
  std::map<std::tuple<std::string, std::string, std::string>, double> value;
  for (const auto& r : rows) {
    if (std::find(std::begin(kMethods), std::end(kMethods), r.method) == std::end(kMethods))
      throw ConfigError("misfit table: unknown method '" + r.method + "'");
    const std::pair<std::string, std::string> col{r.experiment, r.parameter};
    if (std::find(columns.begin(), columns.end(), col) == columns.end()) columns.push_back(col);
    if (!value.emplace(std::make_tuple(r.experiment, r.parameter, r.method), r.misfit_percent).second)
      throw ConfigError("misfit table: duplicate row " + r.experiment + "," + r.method + "," + r.parameter);
  }
  const int w0 = 14;
  auto pad = [](std::string s, std::size_t width) {
    if (s.size() < width) s.insert(0, width - s.size(), ' ');
    return s;
  };
  // cells end in '%' plus a flag character; headers leave room for the flag
  std::vector<std::size_t> width;
  for (const auto& [e, p] : columns) width.push_back(std::max<std::size_t>(20, e.size() + p.size() + 4));
  os << std::string(w0, ' ');
  for (std::size_t c = 0; c < columns.size(); ++c)
    os << pad(columns[c].first + ":" + columns[c].second + " ", width[c]);
  os << "\n";
  bool flagged = false;
  for (const char* m : kMethods) {
    std::string name = method_display_name(m);
    os << name << std::string(w0 - name.size(), ' ');
    for (std::size_t c = 0; c < columns.size(); ++c) {
      const auto& [e, p] = columns[c];
      const std::size_t w = width[c];
      auto it = value.find({e, p, m});
      if (it == value.end()) {
        os << pad("- ", w);
        continue;
      }
      std::ostringstream cell;
      cell.setf(std::ios::fixed);
      cell.precision(1);
      cell << it->second << "%";
      auto base = value.find({e, p, "independent"});
      if (std::string(m) != "independent" && base != value.end() && it->second > base->second) {
        cell << "*";
        flagged = true;
      } else {
        cell << " ";
      }
      os << pad(cell.str(), w);
    }
    os << "\n";
  }
  if (flagged) os << "* misfit above the independent reconstruction\n";
}

// ---- spectra ----

Vec spectrum_pair(const FunctionSpace& p1, std::string_view variant, int smoothing_steps) {
  Phantom a, b;
  a.background = 0.5;
  a.shapes = {parse_shape("layer 0.5 1.5"), parse_shape("rect 0.55 0.85 0.55 0.8 0"),
              parse_shape("disc 0.3 0.7 0.15 1.5")};
  b.background = 1.0;
  b.shapes = {parse_shape("layer 0.5 0"), parse_shape("rect 0.55 0.85 0.55 0.8 2"),
              parse_shape("disc 0.3 0.7 0.15 0")};
  if (variant == "different")
    b.shapes.insert(b.shapes.begin() + 1, parse_shape("rect 0.5 1 0 0.5 0.5"));
  else if (variant != "coincide")
    throw ConfigError("unknown spectrum pair '" + std::string(variant) + "' (coincide, different)");
  return stack_pair(smooth_field(p1, phantom_values(a, p1), smoothing_steps),
                    smooth_field(p1, phantom_values(b, p1), smoothing_steps));
}

void write_spectrum_csv(std::ostream& os, const std::vector<double>& eigenvalues) {
  for (double v : eigenvalues) os << format_double(v) << "\n";
}

}  // namespace jinv
