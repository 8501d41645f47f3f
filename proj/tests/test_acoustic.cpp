#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "jinv/acoustic_model.hpp"
#include "jinv/errors.hpp"
#include "jinv/fem.hpp"
#include "support.hpp"

using namespace jinv;
using testing::best_fd_error;
using testing::random_vec;
using testing::rel_err;

namespace {

std::vector<Point> receiver_line(int count, double y) {
  std::vector<Point> r;
  for (int i = 0; i < count; ++i) r.emplace_back((i + 0.5) / count, y);
  return r;
}

// alpha, beta close to 1 with smooth bumps; wave speed stays below 1.3.
Vec smooth_medium(const AcousticProblem& pb, double amp) {
  const auto& xs = pb.param_space().dof_coordinates();
  const auto n = static_cast<Eigen::Index>(xs.size());
  Vec x(2 * n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Point& p = xs[static_cast<std::size_t>(i)];
    x[i] = 1.0 + amp * std::sin(std::numbers::pi * p.x()) * p.y();
    x[n + i] = 1.0 + amp * std::cos(2.0 * p.x() * p.y());
  }
  return x;
}

struct Setup {
  std::shared_ptr<const StructuredMesh> mesh;
  AcousticProblem pb;
};

Setup small_setup(int n = 10, double c_cfl = kDefaultCfl) {
  auto mesh = build_mesh(n);
  auto cfg = make_wave_config(*mesh, 1.5, 1.5, c_cfl, {{Point(0.3, 0.8)}, {Point(0.7, 0.8)}},
                              receiver_line(6, 0.9));
  return {mesh, AcousticProblem(mesh, cfg)};
}

}  // namespace

TEST_CASE("ricker wavelet") {
  CHECK(ricker(0.75, 2.0, 0.75) == 1.0);
  // Zero crossings at s = +-1 / (pi f0 sqrt 2).
  const double s = 1.0 / (std::numbers::pi * 2.0 * std::sqrt(2.0));
  CHECK(std::abs(ricker(0.75 + s, 2.0, 0.75)) < 1e-15);
  CHECK(ricker(0.75 - 0.3, 2.0, 0.75) == doctest::Approx(ricker(0.75 + 0.3, 2.0, 0.75)));
  CHECK(ricker(0.2, 2.0, 0.75) == doctest::Approx((1 - 2 * 1.21 * std::numbers::pi * std::numbers::pi) *
                                                  std::exp(-1.21 * std::numbers::pi * std::numbers::pi)));
  CHECK_THROWS(ricker(0.0, 0.0, 0.0));
}

TEST_CASE("wave config and CFL guard") {
  auto mesh = build_mesh(16);
  const auto cfg = make_wave_config(*mesh, 1.5, 2.0, 0.25, {{Point(0.5, 0.5)}}, {Point(0.5, 0.9)});
  CHECK(cfg.dt() <= 0.25 * mesh->h() / 2.0 * (1 + 1e-12));
  CHECK(1.5 / (cfg.steps - 1) > 0.25 * mesh->h() / 2.0);
  CHECK_THROWS_AS(make_wave_config(*mesh, 1.5, 2.0, 0.5, {}, {}), ConfigError);
  CHECK_THROWS_AS(make_wave_config(*mesh, 1.5, 2.0, 0.0, {}, {}), ConfigError);
  CHECK_THROWS_AS(make_wave_config(*mesh, -1.0, 2.0, 0.25, {}, {}), ConfigError);
  WaveConfig bad = cfg;
  bad.steps = cfg.steps / 2;
  CHECK_THROWS_AS(AcousticProblem(mesh, bad), ConfigError);
  WaveConfig none = cfg;
  none.sources.clear();
  CHECK_THROWS_AS(AcousticProblem(mesh, none), ConfigError);
}

TEST_CASE("stable step limit of the lumped P2 scheme") {
  // Leapfrog is stable for dt < 2 / sqrt(lambda_max(M^-1 K)); check the constant against a dense solve.
  for (int n : {3, 6}) {
    auto mesh = build_mesh(n);
    auto space = build_space(mesh, 2);
    const std::vector<double> ones(mesh->num_triangles(), 1.0);
    const Eigen::MatrixXd k = Eigen::MatrixXd(assemble_weighted_stiffness(*space, ones));
    Vec m = Vec::Zero(k.rows());
    for (std::size_t t = 0; t < mesh->num_triangles(); ++t) {
      const double a = mesh->triangle_area(t);
      const auto& d = space->cell_dofs(t);
      for (int i = 0; i < 3; ++i) m[d[i]] += a / 19;
      for (int i = 3; i < 6; ++i) m[d[i]] += 16 * a / 57;
    }
    const Vec s = m.cwiseSqrt().cwiseInverse();
    const Eigen::MatrixXd a = s.asDiagonal() * k * s.asDiagonal();
    const double lmax = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(a).eigenvalues().maxCoeff();
    const double limit = 2.0 / std::sqrt(lmax) / mesh->h();
    MESSAGE("N = " << n << " stable dt c / h = " << limit);
    CHECK(kStableCfl < limit);
    CHECK(limit < 0.29);
  }
}

TEST_CASE("zero source gives zero wavefield") {
  auto [mesh, pb] = small_setup();
  WaveConfig cfg = pb.config();
  for (auto& s : cfg.sources) s.t0 = 1e6;  // Ricker underflows to exactly zero
  AcousticProblem quiet(mesh, cfg);
  const History u = quiet.solve_forward(smooth_medium(quiet, 0.2), 0);
  for (const auto& v : u) CHECK(v.lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("source profiles") {
  auto [mesh, pb] = small_setup();
  CHECK(pb.source_vector(0).sum() == doctest::Approx(1.0));
  // Consistent P2 mass has negative vertex couplings, so small negative entries are expected.
  CHECK(pb.source_vector(0).minCoeff() >= -0.05 * pb.source_vector(0).maxCoeff());
  // Two identical sources give identical traces.
  WaveConfig cfg = pb.config();
  cfg.sources = {cfg.sources[0], cfg.sources[0]};
  AcousticProblem twin(mesh, cfg);
  const auto rec = twin.clean_record(smooth_medium(twin, 0.2));
  CHECK(rec.traces[0] == rec.traces[1]);
  CHECK(rec.traces[0].cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("parameter guards") {
  auto [mesh, pb] = small_setup();
  Vec x = smooth_medium(pb, 0.2);
  const auto n = x.size() / 2;
  Vec neg = x;
  neg[3] = -0.1;
  CHECK_THROWS_AS(pb.solve_forward(neg, 0), SolverError);
  Vec fast = x;
  fast.tail(n) *= 4.0;  // c = 2 > c_max = 1.5
  CHECK_THROWS_AS(pb.solve_forward(fast, 0), SolverError);
  CHECK_THROWS_AS(pb.solve_forward(x, 5), std::invalid_argument);
}

TEST_CASE("acoustic misfit gradient") {
  auto [mesh, pb] = small_setup();
  std::mt19937_64 rng(11);
  const Vec xt = smooth_medium(pb, 0.2);
  const auto n = xt.size() / 2;
  const SeismicRecord clean = pb.clean_record(xt);
  CHECK(pb.misfit_value(xt, clean) == 0.0);
  CHECK(pb.misfit_gradient(xt, clean).norm() == 0.0);

  const SeismicRecord d = pb.synthesize_records(xt, 20.0, 3);
  const Vec x0 = smooth_medium(pb, 0.05);
  const auto lin = pb.linearize(x0, d);
  CHECK(lin.misfit() == doctest::Approx(pb.misfit_value(x0, d)).epsilon(1e-12));
  const Vec g = lin.gradient();
  auto f = [&](const Vec& v) { return pb.misfit_value(v, d); };
  for (int k = 0; k < 3; ++k) {
    Vec da = Vec::Zero(2 * n), db = Vec::Zero(2 * n);
    da.head(n) = random_vec(n, rng, 0.1);
    db.tail(n) = random_vec(n, rng, 0.1);
    CHECK(best_fd_error(f, x0, da, g.dot(da)) < 1e-4);
    CHECK(best_fd_error(f, x0, db, g.dot(db)) < 1e-4);
  }
}

TEST_CASE("acoustic Hessian actions") {
  auto [mesh, pb] = small_setup(8);
  std::mt19937_64 rng(12);
  const Vec xt = smooth_medium(pb, 0.2);
  const auto n = xt.size() / 2;
  const SeismicRecord d = pb.synthesize_records(xt, 20.0, 4);
  const Vec x0 = smooth_medium(pb, 0.05);
  const auto lin = pb.linearize(x0, d);

  SUBCASE("Gauss-Newton symmetric positive semidefinite") {
    for (int k = 0; k < 5; ++k) {
      const Vec p = random_vec(2 * n, rng, 0.1);
      CHECK(p.dot(lin.hvp(p, HessianMode::gauss_newton)) >= 0.0);
    }
    const Vec p = random_vec(2 * n, rng, 0.1), q = random_vec(2 * n, rng, 0.1);
    CHECK(rel_err(q.dot(lin.hvp(p, HessianMode::gauss_newton)), p.dot(lin.hvp(q, HessianMode::gauss_newton))) <
          1e-8);
  }
  SUBCASE("full Hessian against gradient differences") {
    auto g = [&](const Vec& v) { return pb.misfit_gradient(v, d); };
    for (int k = 0; k < 2; ++k) {
      const Vec p = random_vec(2 * n, rng, 0.1);
      CHECK(best_fd_error(g, x0, p, lin.hvp(p, HessianMode::full), {1e-4, 1e-5, 1e-6}) < 1e-3);
    }
    const Vec p = random_vec(2 * n, rng, 0.1), q = random_vec(2 * n, rng, 0.1);
    CHECK(rel_err(q.dot(lin.hvp(p, HessianMode::full)), p.dot(lin.hvp(q, HessianMode::full))) < 1e-8);
  }
  SUBCASE("full equals Gauss-Newton at zero residual") {
    const auto lin0 = pb.linearize(xt, pb.clean_record(xt));
    const Vec p = random_vec(2 * n, rng, 0.1);
    CHECK(rel_err(lin0.hvp(p, HessianMode::full), lin0.hvp(p, HessianMode::gauss_newton)) < 1e-10);
  }
}

TEST_CASE("time stepping converges at second order") {
  auto mesh = build_mesh(8);
  auto base = make_wave_config(*mesh, 1.0, 1.5, 0.2, {{Point(0.5, 0.7), 3.0, 0.4}}, receiver_line(5, 0.9));
  std::vector<Eigen::MatrixXd> tr;
  for (int r : {1, 2, 4}) {
    WaveConfig cfg = base;
    cfg.steps = base.steps * r;
    AcousticProblem pb(mesh, cfg);
    const Eigen::MatrixXd full = pb.clean_record(smooth_medium(pb, 0.2)).traces[0];
    Eigen::MatrixXd coarse(full.rows(), base.steps + 1);
    for (int k = 0; k <= base.steps; ++k) coarse.col(k) = full.col(k * r);
    tr.push_back(coarse);
  }
  const double e1 = (tr[0] - tr[1]).norm(), e2 = (tr[1] - tr[2]).norm();
  const double order = std::log2(e1 / e2);
  MESSAGE("observed temporal order " << order);
  CHECK(order >= 1.8);
}

TEST_CASE("discrete energy decays once the source is quiet") {
  auto mesh = build_mesh(10);
  auto cfg = make_wave_config(*mesh, 3.0, 1.5, kDefaultCfl, {{Point(0.5, 0.5), 4.0, 0.3}}, {Point(0.5, 0.9)});
  AcousticProblem pb(mesh, cfg);
  const Vec x = smooth_medium(pb, 0.2);
  const History u = pb.solve_forward(x, 0);
  const auto e = pb.energy(x, u);
  const double dt = cfg.dt();
  const double peak = *std::max_element(e.begin(), e.end());
  int checked = 0;
  for (std::size_t k = 1; k < e.size(); ++k) {
    if (k * dt < 1.2) continue;  // Ricker at f0 = 4 is below 1e-40 here
    CHECK(e[k] >= 0.0);
    CHECK(e[k] <= e[k - 1] + 1e-12 * peak);
    ++checked;
  }
  CHECK(checked > 100);
  CHECK(e.back() < 0.5 * peak);  // three open sides drain energy
}

TEST_CASE("reciprocity with point sources") {
  auto mesh = build_mesh(8);
  const Point a(0.3, 0.6), b(0.7, 0.4);
  auto make = [&](Point s, Point r) {
    auto cfg = make_wave_config(*mesh, 1.0, 1.5, kDefaultCfl, {{s, 3.0, 0.4}}, {r});
    cfg.profile = SourceProfile::point;
    return AcousticProblem(mesh, cfg);
  };
  const AcousticProblem ab = make(a, b), ba = make(b, a);
  const Vec x = smooth_medium(ab, 0.3);
  const Eigen::MatrixXd t1 = ab.clean_record(x).traces[0], t2 = ba.clean_record(x).traces[0];
  CHECK(t1.cwiseAbs().maxCoeff() > 0.0);
  CHECK((t1 - t2).norm() <= 1e-10 * t1.norm());
}

TEST_CASE("record synthesis and trace files") {
  auto [mesh, pb] = small_setup();
  const Vec x = smooth_medium(pb, 0.2);
  const auto clean = pb.clean_record(x);
  const auto r = pb.synthesize_records(x, 20.0, 9);
  CHECK(r.snr_db == 20.0);
  CHECK(pb.synthesize_records(x, 20.0, 9).traces[0] == r.traces[0]);
  CHECK(pb.synthesize_records(x, 20.0, 10).traces[0] != r.traces[0]);
  CHECK(pb.synthesize_records(x, std::numeric_limits<double>::infinity(), 9).traces[0] == clean.traces[0]);
  double sig = 0, noise = 0;
  Eigen::Index cnt = 0;
  for (std::size_t s = 0; s < clean.traces.size(); ++s) {
    sig += clean.traces[s].squaredNorm();
    noise += (r.traces[s] - clean.traces[s]).squaredNorm();
    cnt += clean.traces[s].size();
  }
  const double snr = 10.0 * std::log10(sig / noise);
  CHECK(std::abs(snr - 20.0) < 0.5);

  std::stringstream ss;
  write_record(ss, r, pb.config());
  const auto back = read_record(ss);
  REQUIRE(back.traces.size() == r.traces.size());
  for (std::size_t s = 0; s < r.traces.size(); ++s) CHECK(back.traces[s] == r.traces[s]);
  std::stringstream bad("JINV-TRACE v1\nsource 0 f0 2 receivers 2 steps 3 dt 0.1\n1 2 3\n");
  CHECK_THROWS_AS(read_record(bad), ConfigError);
}
