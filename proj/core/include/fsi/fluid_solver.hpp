#pragma once

#include <memory>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCholesky>

#include "fsi/grid.hpp"
#include "fsi/kinematics.hpp"
#include "fsi/solid_solver.hpp"

namespace fsi {

struct FluidParams {
  double gamma = 2.0;
  double beta = 4.0;
  double mu = 0.1;
  double zeta = 0.1;
  double eps = 0.05;
  double varsigma = 1e-3;
  double cfl = 0.4;
  double floor_rel = 1e-10;       // density floor relative to the mean initial density
  bool eps_viscosity_in_solid = true;  // false: full viscosity on the whole container

  // Throws on hard violations; soft ones (gamma <= 12/7) are appended to warnings.
  void validate(std::vector<std::string>* warnings = nullptr) const;
  double pressure(double rho) const;
  double sound_speed_sq(double rho) const;
  double potential(double rho) const;             // rho^gamma / (gamma - 1)
  double artificial_potential(double rho) const;  // eps rho^beta / (beta - 1)
  double potential_derivative(double rho) const;  // of the sum of both potentials
  bool operator==(const FluidParams&) const = default;
};

struct FluidState {
  FluidGrid grid;
  Eigen::VectorXd rho;  // cells
  Eigen::VectorXd u;    // x-faces, zero on the walls
  Eigen::VectorXd v;    // y-faces, zero on the walls
  double time = 0.0;

  FluidState() = default;
  explicit FluidState(const FluidGrid& g, double rho0 = 0.0);
  double mass() const;
};

// Eulerian image of the solid for one fluid substep.
struct SolidCoupling {
  SolidMask mask;
  Eigen::VectorXd mx, my;  // penalty masses on x- and y-faces
  Eigen::VectorXd vx, vy;  // solid velocity on faces
  Eigen::VectorXd node_weight;  // sum over samples of ref_area * phi_j
};

SolidCoupling make_coupling(const DeformationField& state, const FluidGrid& fluid);
SolidCoupling empty_coupling(const FluidGrid& fluid);
// Adjoint of the face transfer: fluid velocity carried back to solid nodes.
Eigen::VectorXd trace_to_nodes(const SolidCoupling& c, const FluidState& s, int nodes);

struct ContinuityResult {
  Eigen::VectorXd rho;
  Eigen::VectorXd fx, fy;  // mass fluxes through faces (mass per time)
  double clipped_mass = 0.0;
  double sink_work = 0.0;     // per unit time, pressure-law form
  double damping_work = 0.0;  // per unit time
};

struct MomentumResult {
  Eigen::VectorXd u, v;
  double viscous_dissipation = 0.0;  // per unit time
};

struct FluidEnergy {
  double kinetic = 0.0;
  double pressure_pot = 0.0;
  double artificial_pot = 0.0;
  double total() const { return kinetic + pressure_pot + artificial_pot; }
};

// Increments accumulated over one minimizing-movement substep.
struct FspSubstepRow {
  double time = 0.0;
  FluidEnergy energy;
  double visc = 0.0;
  double match = 0.0;         // (dt/2h) sum m_f |u - v_f|^2
  double fluid_gain = 0.0;    // (dt/2h) sum m_f |v_f|^2
  double stored = 0.0;        // (dt/2h) |U|^2 on the solid nodes
  double transfer_loss = 0.0; // (dt/2h) (sum m_f |u|^2 - |U|^2)
  double sink = 0.0;
  double damping = 0.0;
  double clipped_mass = 0.0;
  double mismatch_sq_dt = 0.0;  // integral of |U - v|^2 on the solid
  double mass = 0.0;
  double mass_in_mask = 0.0;
  double min_rho = 0.0;  // over the CFL substeps
  int substeps = 0;
};

struct FspResult {
  FluidState state;
  CouplingTrace trace;
  std::vector<FspSubstepRow> rows;  // one per minimizing-movement substep
  std::vector<double> bin_stored;   // (dt_mm/2h) |U_bin|^2 per bin
  Eigen::Vector2d fluid_impulse = Eigen::Vector2d::Zero();  // integral of -(1/h) sum m_f (u - v_f)
};

class FluidSolver {
 public:
  FluidSolver(const FluidGrid& grid, const FluidParams& params, double density_floor);

  const FluidGrid& grid() const { return grid_; }
  const FluidParams& params() const { return params_; }

  FluidEnergy energy(const FluidState& s) const;
  double max_stable_dt(const FluidState& s) const;

  ContinuityResult continuity_substep(const FluidState& s, const SolidMask& mask, double dt);
  MomentumResult momentum_substep(const FluidState& s, const ContinuityResult& c,
                                  const SolidCoupling& coupling, double h, double dt);

  // One coupling window against a solid trajectory (M + 1 states).
  FspResult solve_fsp(const FluidState& start, const SspResult& solid, double h, int window);

 private:
  int unknown_x(int i, int j) const;
  int unknown_y(int i, int j) const;
  SparseMatrix strain_operator(const SolidMask& mask) const;
  void check_cfl(const FluidState& s, double dt) const;

  FluidGrid grid_;
  FluidParams params_;
  double floor_;
  int nux_, nuy_;
  double diffusion_dt_ = -1.0;
  std::unique_ptr<Eigen::SimplicialLDLT<SparseMatrix>> diffusion_;
  std::unique_ptr<Eigen::SimplicialLDLT<SparseMatrix>> momentum_;
};

// Standalone forms of the substeps for callers without a solver object.
Eigen::VectorXd continuity_substep(const FluidState& s, const SolidMask& mask, const FluidParams& p, double dt);
MomentumResult momentum_substep(const FluidState& s, const SolidCoupling& coupling, const FluidParams& p,
                                double h, double dt);

}  // namespace fsi
