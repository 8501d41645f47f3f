#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "jinv/acoustic_model.hpp"
#include "jinv/config.hpp"
#include "jinv/mesh.hpp"
#include "jinv/optimizers.hpp"
#include "jinv/poisson_model.hpp"
#include "jinv/regularizers.hpp"

namespace jinv {

// ---- phantoms ----

struct Shape {
  enum class Kind { layer, rect, disc };
  Kind kind = Kind::layer;
  // layer: {y0}; rect: {x0, x1, y0, y1}; disc: {cx, cy, r}
  std::vector<double> geom;
  double value = 0.0;

  bool contains(const Point& p) const;
};

/// Piecewise-constant field: background overwritten by the shapes in order.
struct Phantom {
  double background = 0.0;
  std::vector<Shape> shapes;

  double operator()(const Point& p) const;
  void validate() const;  // ConfigError on nonfinite values or shapes outside the unit square
};

/// "layer <y0> <value>", "rect <x0> <x1> <y0> <y1> <value>", "disc <cx> <cy> <r> <value>".
Shape parse_shape(std::string_view text);

/// Reads <prefix>.background and <prefix>.shape.<k>, k = 1, 2, ... in numeric order.
Phantom phantom_from_config(const FlatConfig& cfg, const std::string& prefix);

/// Phantom sampled at the P1 dofs (mesh vertices).
Vec phantom_values(const Phantom& ph, const FunctionSpace& p1);

// ---- layouts ----

enum class Family { poisson_poisson, acoustic_ab, poisson_acoustic };
std::string_view to_string(Family f);
Family parse_family(std::string_view name);

struct ObservationLayout {
  std::vector<Point> points;     // Poisson observation points
  std::vector<Point> receivers;  // wave receivers
  std::vector<Point> sources;    // wave sources
};

/// Variants:
///   poisson_poisson: "quadrant" (25 x 25 lattice in [0.5, 1]^2), "full" (50 x 50 lattice)
///   acoustic_ab: "top" (6 sources and 20 receivers on y = 1)
///   poisson_acoustic: "default" (20 x 20 lattice, 20 receivers on y = 1, source at (0.5, 0.1))
/// Throws ConfigError for an unknown variant.
ObservationLayout build_observation_layout(Family family, std::string_view variant);

// ---- fields ----

/// k explicit steps m <- m - tau M_L^-1 K m of P1 diffusion with tau = h^2 / 8
/// (natural boundary conditions). Values stay within the input range.
Vec smooth_field(const FunctionSpace& p1, const Vec& m, int steps);

/// 100 |m_rec - m_true|_M / |m_true|_M with the P1 mass matrix.
/// Throws std::invalid_argument when |m_true| = 0 or the sizes differ.
double relative_medium_misfit(const FunctionSpace& p1, const Vec& m_rec, const Vec& m_true);

// ---- experiments ----

struct ParamSpec {
  std::string name;
  Phantom truth;
  std::optional<double> initial;  // constant initial guess; empty means smoothed truth
};

struct MethodSpec {
  std::string label;  // independent, cross_gradient, normalized_cross_gradient, vtv, nuclear
  RegConfig reg;
};

struct WaveSpec {
  double final_time = 1.5;
  double c_max = 3.5;
  double cfl = kDefaultCfl;
  double f0 = 2.0;
  std::optional<double> t0;  // default 1.5 / f0
  double snr_db = 20.0;
  double beta = 1.0;  // fixed beta of the poisson_acoustic family
  SourceProfile profile = SourceProfile::gaussian;

  double delay() const { return t0 ? *t0 : 1.5 / f0; }
};

struct ExperimentConfig {
  std::string name = "experiment";
  Family family = Family::poisson_poisson;
  int n = 16;
  std::array<ParamSpec, 2> params;
  std::array<std::string, 2> layouts;  // poisson_poisson: one per field; otherwise layouts[0]
  std::array<double, 2> noise{0.02, 0.02};  // RMS-relative Poisson noise per Poisson field
  WaveSpec wave;
  std::uint64_t seed = 1;
  int smoothing_steps = 20;
  std::vector<MethodSpec> methods;  // run in this order
  HessianMode hessian = HessianMode::gauss_newton;
  NewtonCgConfig newton;
  BfgsConfig bfgs;
  std::filesystem::path output_dir = "out";

  void validate() const;
};

/// Builds an experiment from flat keys. Unknown keys are a ConfigError.
ExperimentConfig experiment_from_config(const FlatConfig& cfg);
ExperimentConfig load_experiment(const std::filesystem::path& path);

struct MisfitRow {
  std::string experiment;
  std::string method;
  std::string parameter;
  double misfit_percent = 0.0;
};

struct MethodOutcome {
  std::string method;
  Vec x;  // stacked pair
  std::array<double, 2> misfit{};
  OptimizationTrace trace;
  std::string failure;  // empty on success
};

struct ExperimentResult {
  std::vector<MethodOutcome> methods;
  std::vector<MisfitRow> rows;
};

/// Synthetic data for one experiment: truth pair, data and initial guess.
struct ExperimentData {
  std::shared_ptr<const StructuredMesh> mesh;
  std::shared_ptr<const FunctionSpace> p1;
  Vec truth;    // stacked
  Vec initial;  // stacked
  std::array<ObservationData, 2> poisson;  // used entries depend on the family
  SeismicRecord record;
  WaveConfig wave;
  std::array<ObservationLayout, 2> layouts;
};

ExperimentData generate_data(const ExperimentConfig& cfg);

/// Writes truth and initial fields plus observation and trace files under dir.
void write_data(const ExperimentConfig& cfg, const ExperimentData& data, const std::filesystem::path& dir);

/// Runs every method, writing <out>/<method>/<param>.field, <out>/<method>/trace.csv,
/// <out>/truth, <out>/data and <out>/misfits.csv. A method that fails keeps its last
/// iterate and trace; after all methods ran a SolverError names the failures.
ExperimentResult run_experiment(const ExperimentConfig& cfg);

/// Objective of one method: data misfit of the family plus the joint regularizer.
ObjectiveBundle experiment_objective(const ExperimentConfig& cfg, const ExperimentData& data,
                                     const JointRegularizer& reg);

// ---- misfit tables ----

// Columns: experiment,method,parameter,misfit_percent
void write_misfits_csv(std::ostream& os, const std::vector<MisfitRow>& rows);
std::vector<MisfitRow> read_misfits_csv(std::istream& is);

/// Table with one row per method in the order independent, cross-grad,
/// n-cross-grad, vectorial TV, nuclear norm and one column per
/// (experiment, parameter). Joint entries above the independent value of
/// the same column are marked with '*'.
void write_report(std::ostream& os, const std::vector<MisfitRow>& rows);

std::string method_display_name(std::string_view method);

// ---- spectra ----

/// Truth pairs of the two Poisson experiments for Hessian spectra, optionally
/// smoothed: "coincide" (shared interfaces) or "different" (m2 has an extra
/// interface along x = 0.5 in the lower half). ConfigError otherwise.
Vec spectrum_pair(const FunctionSpace& p1, std::string_view variant, int smoothing_steps = 0);

void write_spectrum_csv(std::ostream& os, const std::vector<double>& eigenvalues);

}  // namespace jinv
