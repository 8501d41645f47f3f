// jinv command-line tool. Exit codes: 0 ok, 1 failed checks or I/O error,
// 2 configuration error, 3 solver failure.

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>

#include "jinv/checks.hpp"
#include "jinv/errors.hpp"
#include "jinv/harness.hpp"

using namespace jinv;

namespace {

struct RunOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
};

void add_run_options(CLI::App* cmd, RunOptions& o) {
  cmd->add_option("--config", o.config, "experiment config file")->required();
  cmd->add_option("--seed", o.seed, "override the noise seed");
  cmd->add_option("--out", o.out, "override the output directory");
}

ExperimentConfig load(const RunOptions& o) {
  ExperimentConfig cfg = load_experiment(o.config);
  if (o.seed) cfg.seed = *o.seed;
  if (o.out) cfg.output_dir = *o.out;
  return cfg;
}

int generate_data_cmd(const RunOptions& o) {
  const ExperimentConfig cfg = load(o);
  write_data(cfg, generate_data(cfg), cfg.output_dir);
  std::cout << "wrote " << cfg.output_dir.string() << "\n";
  return 0;
}

int invert_cmd(const RunOptions& o) {
  const ExperimentConfig cfg = load(o);
  const ExperimentResult r = run_experiment(cfg);
  for (const auto& m : r.methods) {
    std::printf("%-28s %6.2f%% %6.2f%%  %zu iterations, %s\n", m.method.c_str(), m.misfit[0], m.misfit[1],
                m.trace.rows.empty() ? std::size_t{0} : m.trace.rows.size() - 1,
                std::string(to_string(m.trace.termination)).c_str());
  }
  std::cout << "wrote " << (cfg.output_dir / "misfits.csv").string() << "\n";
  return 0;
}

struct SpectrumOptions {
  std::string reg = "vtv";
  int mesh = 20;
  double eps = 1e-4;
  std::string pair = "different";
  int smoothing = 0;
  bool block_diagonal = false;
  std::string out;
};

int spectrum_cmd(const SpectrumOptions& o) {
  const RegKind kind = parse_reg_kind(o.reg);
  if (kind == RegKind::nuclear) throw ConfigError("spectrum: the nuclear norm has no Hessian");
  if (o.mesh < 1) throw ConfigError("spectrum: --mesh must be positive");
  if (!(o.eps > 0.0)) throw ConfigError("spectrum: --eps must be positive");
  if (o.block_diagonal && kind != RegKind::cross_gradient && kind != RegKind::normalized_cross_gradient)
    throw ConfigError("spectrum: --block-diagonal needs a cross-gradient kind");
  auto p1 = build_space(build_mesh(o.mesh), 1);
  const Spectrum s = reg_hessian_spectrum(kind, *p1, spectrum_pair(*p1, o.pair, o.smoothing), o.eps);
  const auto& ev = o.block_diagonal ? s.block_diagonal_eigenvalues : s.eigenvalues;
  if (o.out.empty()) {
    write_spectrum_csv(std::cout, ev);
  } else {
    std::ofstream f(o.out);
    if (!f) throw std::runtime_error("cannot write " + o.out);
    write_spectrum_csv(f, ev);
  }
  std::fprintf(stderr, "%zu eigenvalues, min %.6g, max %.6g, negative fraction %.4f\n", ev.size(), ev.front(),
               ev.back(), negative_fraction(ev));
  return 0;
}

int report_cmd(const std::vector<std::string>& inputs, const std::string& out) {
  std::vector<MisfitRow> rows;
  for (const auto& path : inputs) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open " + path);
    auto part = read_misfits_csv(f);
    rows.insert(rows.end(), part.begin(), part.end());
  }
  if (out.empty()) {
    write_report(std::cout, rows);
  } else {
    std::ofstream f(out);
    if (!f) throw std::runtime_error("cannot write " + out);
    write_report(f, rows);
  }
  return 0;
}

int check_cmd(std::uint64_t seed) {
  int failed = 0;
  for (const auto& r : run_fd_checks(seed)) {
    std::printf("%s %-34s error %.3e  tolerance %.0e\n", r.passed() ? "PASS" : "FAIL", r.name.c_str(), r.error,
                r.tolerance);
    failed += !r.passed();
  }
  return failed ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Joint inversion with coupled regularizers"};
  app.require_subcommand(1);

  RunOptions gen_opts, inv_opts;
  auto* gen = app.add_subcommand("generate-data", "synthesize observations and traces from the phantoms");
  add_run_options(gen, gen_opts);
  auto* inv = app.add_subcommand("invert", "run the independent baseline and the configured joint method");
  add_run_options(inv, inv_opts);

  SpectrumOptions spec_opts;
  auto* spec = app.add_subcommand("spectrum", "dense Hessian spectrum of one regularizer");
  spec->add_option("--reg", spec_opts.reg, "tv, cg, ncg or vtv")->required();
  spec->add_option("--mesh", spec_opts.mesh, "cells per side");
  spec->add_option("--eps", spec_opts.eps, "smoothing parameter");
  spec->add_option("--pair", spec_opts.pair, "field pair: coincide or different");
  spec->add_option("--smoothing", spec_opts.smoothing, "diffusion steps applied to the phantom pair");
  spec->add_flag("--block-diagonal", spec_opts.block_diagonal, "block-diagonal part of a cross-gradient Hessian");
  spec->add_option("--out", spec_opts.out, "CSV file (default stdout)");

  std::vector<std::string> report_inputs;
  std::string report_out;
  auto* rep = app.add_subcommand("report", "merge misfits.csv files into one table");
  rep->add_option("inputs", report_inputs, "misfits.csv files")->required();
  rep->add_option("--out", report_out, "output file (default stdout)");

  std::uint64_t check_seed = 1;
  auto* chk = app.add_subcommand("check", "finite-difference checks of all derivatives");
  chk->add_option("--seed", check_seed, "random seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*gen) return generate_data_cmd(gen_opts);
    if (*inv) return invert_cmd(inv_opts);
    if (*spec) return spectrum_cmd(spec_opts);
    if (*rep) return report_cmd(report_inputs, report_out);
    if (*chk) return check_cmd(check_seed);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const SolverError& e) {
    std::cerr << "solver failure: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
