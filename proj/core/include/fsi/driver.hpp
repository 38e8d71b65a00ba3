#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "fsi/contact.hpp"
#include "fsi/error.hpp"
#include "fsi/fluid_solver.hpp"
#include "fsi/ledger.hpp"
#include "fsi/material.hpp"
#include "fsi/solid_solver.hpp"

namespace fsi {

enum class Preset { Quiescent, FallingDisk, WallImpact };

std::string preset_name(Preset p);
Preset preset_from_name(const std::string& name);

// A violated parameter rule, keyed by the config key it is reported against.
struct ParamIssue {
  std::string key;
  std::string message;
  bool warning = false;
};

struct SchemeParams {
  double T = 0.5;
  int N = 50;
  double eps = 0.05;       // contact, artificial pressure, regularization, solid viscosity
  double varsigma = 1e-3;  // density damping
  FluidGrid container{Vec2(0.0, 0.0), Vec2(1.0, 1.0), {64, 64}};
  Index2 solid_resolution{17, 17};
  double solid_side = 0.25;
  double fluid_mass = 1.0;
  double solid_speed = 1.5;  // |v0| of the moving presets
  double rho_noise = 0.0;    // relative amplitude of a seeded perturbation of rho0
  std::uint64_t seed = 0;
  FluidParams fluid;
  MaterialParams material;
  SspParams ssp;

  double h() const { return T / N; }
  // Nested parameter sets with the shared eps, varsigma and h filled in.
  FluidParams fluid_params() const;
  SspParams ssp_params() const;
  ContactParams contact_params() const;
  std::vector<ParamIssue> issues() const;
  // Throws InvalidArgumentError listing every violation; soft issues go to warnings.
  void validate(std::vector<std::string>* warnings = nullptr) const;
  bool operator==(const SchemeParams&) const = default;
};

struct InitialData {
  DeformationField solid;
  FluidState fluid;
};

// Minimizer of E_eps + K near state with its weighted center held fixed.
DeformationField relax_solid(const DeformationField& state, const SchemeParams& params);

// Preset initial data; the solid is relaxed to equilibrium before the density
// is laid out around it.
InitialData make_initial(const SchemeParams& params, Preset preset);

// eta0 composed with X - eps nu(X) psi(X).
DeformationField pull_in_initial(const DeformationField& eta0, double eps,
                                 const std::function<Vec2(const Vec2&)>& nu,
                                 const std::function<double(const Vec2&)>& psi);
// Pull-in away from the container walls, active within 3 eps of a wall.
DeformationField pull_in_from_walls(const DeformationField& eta0, const FluidGrid& container, double eps);

struct Snapshot {
  int window = 0;
  double time = 0.0;
  FluidState fluid;
  DeformationField solid;
};

struct WindowReport {
  int window = 0;
  double time = 0.0;
  double min_wall_distance = 0.0;
  double min_pair_distance = 0.0;
  double min_det = 0.0;
  double max_K = 0.0;
  double interface_area = 0.0;
  double mismatch_sq_dt = 0.0;
  double mass = 0.0;
  double max_mass_in_mask = 0.0;
  double min_rho = 0.0;  // over every fluid substep of the window
  double clipped_mass = 0.0;
  Vec2 center = Vec2::Zero();
  Vec2 fluid_impulse = Vec2::Zero();
  int fluid_substeps = 0;
  std::vector<double> collar;
};

struct RunOptions {
  int snapshot_every = 0;  // windows between snapshots, 0 for first and last only
  std::vector<double> collar_widths;
  std::function<void(const WindowReport&)> progress;
};

struct RunResult {
  SchemeParams params;
  Preset preset = Preset::Quiescent;
  EnergyLedger ledger;
  std::vector<double> budget;  // per ledger row
  std::vector<Snapshot> snapshots;
  std::vector<CouplingTrace> traces;  // trace produced by each window
  std::vector<WindowReport> windows;
  std::vector<MmStepRecord> mm_records;
  std::vector<std::string> warnings;
  double initial_mass = 0.0;
  DeformationField solid;
  FluidState fluid;
};

class SchemeError : public Error {
 public:
  SchemeError(const std::string& what, int window, std::shared_ptr<const RunResult> partial)
      : Error(what), window_(window), partial_(std::move(partial)) {}
  int window() const { return window_; }
  const RunResult& partial() const { return *partial_; }

 private:
  int window_;
  std::shared_ptr<const RunResult> partial_;
};

// budget(t) = (1e-6 + M tol + substeps 1e-10) |total(0)|
double tolerance_budget(const SchemeParams& params, double total0, int substeps);

RunResult run_scheme(const SchemeParams& params, Preset preset, const RunOptions& options = {});
RunResult run_scheme(const SchemeParams& params, const InitialData& initial, Preset preset,
                     const RunOptions& options = {});

// Run-level quantities used by the refinement studies.
struct RunSummary {
  double h = 0.0;
  double eps = 0.0;
  int windows = 0;
  double mismatch_integral = 0.0;   // sum of the windowed time integrals of |U - v|^2
  double max_mass_in_mask = 0.0;    // relative to the initial mass
  double final_mass = 0.0;          // relative to the initial mass
  double min_wall_distance = 0.0;
  double min_det = 0.0;
  double max_K = 0.0;
  double min_interface_area = 0.0;
  std::vector<double> collar_integral;  // time integral per collar width
  double drift = 0.0;
  std::size_t violations = 0;  // ledger rows beyond 1e-3 |total(0)|
};

RunSummary summarize_run(const RunResult& run);

// L2 norm over the solid of the traced fluid velocity minus the solid velocity.
double coupling_mismatch(const DeformationField& solid, const FluidState& fluid);
// Per window: sqrt of (1/h) times the time integral of the squared mismatch.
std::vector<double> coupling_mismatch(const RunResult& run);

}  // namespace fsi
