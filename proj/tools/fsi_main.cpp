#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "fsi/config.hpp"
#include "fsi/diagnostics.hpp"
#include "fsi/driver.hpp"
#include "fsi/io.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 2;
constexpr int kSolverError = 3;
constexpr int kLedgerViolation = 4;

fsi::ParsedConfig read_config(const std::string& path) {
  if (path.empty()) return {};
  return fsi::load_config(path);
}

void print_warnings(const std::vector<fsi::ConfigIssue>& w) {
  for (const auto& i : w) fmt::print(stderr, "warning: {}\n", fsi::format_issue(i));
}

std::vector<double> collar_lengths(const fsi::RunConfig& c) {
  std::vector<double> out;
  const double dx = c.params.container.spacing().maxCoeff();
  for (double cells : c.collar_widths) out.push_back(cells * dx);
  return out;
}

void print_summary(const fsi::RunSummary& s) {
  fmt::print("windows {}  h {}  eps {}\n", s.windows, s.h, s.eps);
  fmt::print("  mismatch integral  {:.6e}\n", s.mismatch_integral);
  fmt::print("  max mass in mask   {:.6e} (relative)\n", s.max_mass_in_mask);
  fmt::print("  min wall distance  {:.6e}\n", s.min_wall_distance);
  fmt::print("  min det            {:.6e}\n", s.min_det);
  fmt::print("  max K              {:.6e}\n", s.max_K);
  fmt::print("  energy drift       {:.6e}\n", s.drift);
  fmt::print("  ledger violations  {}\n", s.violations);
}

int cmd_run(const std::string& config_path, const std::string& out_override, bool quiet) {
  fsi::ParsedConfig pc = read_config(config_path);
  print_warnings(pc.warnings);
  fsi::RunConfig& c = pc.config;
  if (!out_override.empty()) c.output_dir = out_override;
  fsi::RunOptions opts;
  opts.snapshot_every = c.snapshot_every;
  opts.collar_widths = collar_lengths(c);
  if (!quiet)
    opts.progress = [](const fsi::WindowReport& w) {
      fmt::print("window {:4d}  t {:.4f}  wall {:.4e}  det {:.4f}  mass {:.10f}\n", w.window, w.time,
                 w.min_wall_distance, w.min_det, w.mass);
    };
  fsi::OutputOptions oo;
  oo.vtk = c.write_vtk;
  try {
    const fsi::RunResult r = fsi::run_scheme(c.params, c.preset, opts);
    fsi::write_outputs(r, c.output_dir, oo);
    fsi::write_text((std::filesystem::path(c.output_dir) / "config.txt").string(), fsi::write_config(c));
    print_summary(fsi::summarize_run(r));
    return kOk;
  } catch (const fsi::SchemeError& e) {
    fmt::print(stderr, "solver error in window {}: {}\n", e.window(), e.what());
    fsi::write_outputs(e.partial(), c.output_dir, oo);
    fmt::print(stderr, "partial outputs written to {}\n", c.output_dir);
    return kSolverError;
  }
}

int cmd_check_energy(const std::string& path, double budget_rel, double budget_abs) {
  const fsi::EnergyLedger ledger = fsi::load_ledger_csv(path);
  const double budget = budget_abs >= 0.0 ? budget_abs : budget_rel * std::abs(ledger.initial_total());
  const auto v = fsi::ledger_check(ledger, budget);
  fmt::print("rows {}  budget {:.6e}  drift {:.6e}  violations {}\n", ledger.rows.size(), budget,
             ledger.max_relative_drift(), v.size());
  for (const auto& x : v) fmt::print("  row {} t {:.6e} excess {:.6e}\n", x.row, x.time, x.excess);
  for (std::size_t r : fsi::monotonicity_failures(ledger)) fmt::print("  cumulative column decreases at row {}\n", r);
  return v.empty() ? kOk : kLedgerViolation;
}

int cmd_classify(const std::string& input, const std::string& fixture, const std::vector<double>& origin,
                 const std::vector<double>& extent, double wall_tol, double self_tol, const std::string& out) {
  const fsi::FluidGrid box(fsi::Vec2(origin[0], origin[1]), fsi::Vec2(extent[0], extent[1]), {64, 64});
  fsi::DeformationField d;
  if (!fixture.empty()) {
    d = fsi::make_fixture(fsi::fixture_from_name(fixture), box, wall_tol);
  } else {
    d = fsi::deformation_from_snapshot(fsi::load_snapshot(input));
  }
  const auto c = fsi::classify_boundary(d, box, {wall_tol, self_tol, -1.0});
  const auto lemmas = fsi::lemma_checks(d, c);
  const std::string report = fsi::classification_report(c, lemmas, fsi::interface_area(d, c));
  if (out.empty()) {
    fmt::print("{}", report);
  } else {
    fsi::write_text(out, report);
  }
  return kOk;
}

int cmd_cusp(int levels, int resolution, const std::string& out) {
  const auto t0 = std::chrono::steady_clock::now();
  const fsi::CantorProfile p = fsi::fat_cantor_profile(levels, resolution);
  const double sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const std::string report = fsi::cantor_report(p, sec);
  if (out.empty()) {
    fmt::print("{}", report);
  } else {
    fsi::write_text(out, report);
  }
  return kOk;
}

int cmd_study(const std::string& config_path, const std::string& which, const std::vector<double>& values,
              const std::string& out_override) {
  fsi::ParsedConfig pc = read_config(config_path);
  print_warnings(pc.warnings);
  fsi::RunConfig base = pc.config;
  if (!out_override.empty()) base.output_dir = out_override;
  std::string csv = which == "h" ? "h,N" : "eps";
  csv += ",mismatch_integral,max_mass_in_mask,min_wall_distance,min_det,max_K,min_interface_area,drift,violations";
  for (std::size_t k = 0; k < base.collar_widths.size(); ++k) csv += fmt::format(",collar_{}", k);
  csv += "\n";
  int status = kOk;
  for (double v : values) {
    fsi::SchemeParams p = base.params;
    if (which == "h") {
      const double n = p.T / v;
      if (std::abs(n - std::round(n)) > 1e-9 * n)
        throw fsi::InvalidArgumentError(fmt::format("T = {} is not a multiple of h = {}", p.T, v));
      p.N = static_cast<int>(std::round(n));
    } else {
      p.eps = v;
    }
    std::vector<std::string> warnings;
    p.validate(&warnings);
    fsi::RunOptions opts;
    opts.collar_widths = collar_lengths(base);
    fsi::RunSummary s;
    try {
      s = fsi::summarize_run(fsi::run_scheme(p, base.preset, opts));
    } catch (const fsi::SchemeError& e) {
      fmt::print(stderr, "{} = {}: solver error in window {}: {}\n", which, v, e.window(), e.what());
      s = fsi::summarize_run(e.partial());
      status = kSolverError;
    }
    fmt::print("{} = {}\n", which, v);
    print_summary(s);
    csv += which == "h" ? fmt::format("{},{}", fsi::format_double(v), p.N) : fsi::format_double(v);
    for (double x : {s.mismatch_integral, s.max_mass_in_mask, s.min_wall_distance, s.min_det, s.max_K,
                     s.min_interface_area, s.drift})
      csv += "," + fsi::format_double(x);
    csv += fmt::format(",{}", s.violations);
    for (double x : s.collar_integral) csv += "," + fsi::format_double(x);
    csv += "\n";
  }
  std::filesystem::create_directories(base.output_dir);
  const auto path = std::filesystem::path(base.output_dir) / ("study_" + which + ".csv");
  fsi::write_text(path.string(), csv);
  fmt::print("wrote {}\n", path.string());
  return status;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Penalized viscoelastic solid in a compressible fluid"};
  app.require_subcommand(1);

  std::string config, out;
  bool quiet = false, print_config = false;
  auto* run = app.add_subcommand("run", "run the coupled scheme");
  run->add_option("-c,--config", config, "key = value configuration file");
  run->add_option("-o,--output", out, "output directory, overrides output_dir");
  run->add_flag("-q,--quiet", quiet, "no per-window progress");
  run->add_flag("--print-config", print_config, "print the effective configuration and exit");

  std::string ledger_path;
  double budget_rel = 1e-3, budget_abs = -1.0;
  auto* check = app.add_subcommand("check-energy", "check a ledger CSV against the energy inequality");
  check->add_option("ledger", ledger_path, "ledger CSV")->required();
  check->add_option("--budget-rel", budget_rel, "budget relative to |total(0)|");
  check->add_option("--budget", budget_abs, "absolute budget, overrides --budget-rel");

  std::string input, fixture, report_out;
  std::vector<double> origin{0.0, 0.0}, extent{1.0, 1.0};
  double wall_tol = 1e-3, self_tol = 1e-3;
  auto* classify = app.add_subcommand("classify", "contact classification of a deformation snapshot");
  auto* in_opt = classify->add_option("input", input, "solid snapshot file");
  auto* fx_opt = classify->add_option("--fixture", fixture, "separated | wall-flush | fold | triple-point");
  in_opt->excludes(fx_opt);
  classify->add_option("--origin", origin, "container origin")->expected(2);
  classify->add_option("--extent", extent, "container extent")->expected(2);
  classify->add_option("--wall-tol", wall_tol, "wall tolerance");
  classify->add_option("--self-tol", self_tol, "self-contact tolerance");
  classify->add_option("-o,--output", report_out, "report file, default stdout");

  int levels = 12, resolution = 1 << 20;
  auto* cusp = app.add_subcommand("cusp-demo", "fat Cantor positivity profile");
  cusp->add_option("-L,--levels", levels, "construction levels");
  cusp->add_option("-n,--resolution", resolution, "sample cells on [0, 1]");
  cusp->add_option("-o,--output", report_out, "report file, default stdout");

  std::vector<double> hs{4e-2, 2e-2, 1e-2}, epss{0.1, 0.05, 0.025};
  auto* study_h = app.add_subcommand("study-h", "coupling window refinement sweep");
  study_h->add_option("-c,--config", config, "configuration file");
  study_h->add_option("-o,--output", out, "output directory");
  study_h->add_option("--windows", hs, "window lengths h");
  auto* study_eps = app.add_subcommand("study-eps", "eps sweep");
  study_eps->add_option("-c,--config", config, "configuration file");
  study_eps->add_option("-o,--output", out, "output directory");
  study_eps->add_option("--eps", epss, "eps values");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    if (*run) {
      if (print_config) {
        fsi::ParsedConfig pc = read_config(config);
        print_warnings(pc.warnings);
        fmt::print("{}", fsi::write_config(pc.config));
        return kOk;
      }
      return cmd_run(config, out, quiet);
    }
    if (*check) return cmd_check_energy(ledger_path, budget_rel, budget_abs);
    if (*classify) {
      if (input.empty() && fixture.empty()) throw fsi::InvalidArgumentError("classify needs an input file or --fixture");
      return cmd_classify(input, fixture, origin, extent, wall_tol, self_tol, report_out);
    }
    if (*cusp) return cmd_cusp(levels, resolution, report_out);
    if (*study_h) return cmd_study(config, "h", hs, out);
    if (*study_eps) return cmd_study(config, "eps", epss, out);
  } catch (const fsi::ConfigError& e) {
    fmt::print(stderr, "{}\n", e.what());
    return kConfigError;
  } catch (const fsi::InvalidArgumentError& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kConfigError;
  } catch (const fsi::ResolutionError& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kConfigError;
  } catch (const fsi::IoError& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kConfigError;
  } catch (const fsi::Error& e) {
    fmt::print(stderr, "solver error: {}\n", e.what());
    return kSolverError;
  }
  return kOk;
}
