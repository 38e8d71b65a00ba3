#pragma once

#include <vector>

#include <Eigen/Core>

#include "fsi/contact.hpp"
#include "fsi/kinematics.hpp"
#include "fsi/material.hpp"
#include "fsi/optimizer.hpp"

namespace fsi {

struct SspParams {
  double h = 1e-2;
  int M = 4;
  double rel_tol = 1e-8;  // gradient tolerance relative to 1 + |J(eta_k)|
  int max_iterations = 200;
  double armijo_c1 = 1e-4;
  double backtrack = 0.5;
  OptimizerMethod method = OptimizerMethod::Newton;

  double dt() const { return h / M; }
  void validate() const;
  bool operator==(const SspParams&) const = default;
};

// Fluid velocity sampled on the solid nodes, one field per substep.
struct CouplingTrace {
  int source_window = -1;  // -1 marks the initial velocity
  double t0 = 0.0;
  double h = 0.0;
  std::vector<Eigen::VectorXd> U;
};

CouplingTrace constant_trace(const Eigen::VectorXd& v, int M, double t0, double h);

struct MmStepRecord {
  double E_before = 0.0;  // E_eps(eta_k)
  double K_before = 0.0;
  double E_after = 0.0;   // E_eps(eta_k+1)
  double K_after = 0.0;
  double R_eps = 0.0;       // R_eps(eta_k, v)
  double mismatch_sq = 0.0; // |v - U_k|^2 on the solid
  double U_sq = 0.0;
  double v_sq = 0.0;
  double J_start = 0.0;
  double J_end = 0.0;
  double residual = 0.0;  // gradient norm of J at the accepted point
  double tolerance = 0.0;
  double step_norm = 0.0;
  int iterations = 0;

  // E+K after + 2 dt R + dt/(2h)|v-U|^2 - (E+K before + dt/(2h)|U|^2)
  double estimate_gap(double dt, double h) const;
  double estimate_budget() const;
  bool estimate_holds(double dt, double h) const { return estimate_gap(dt, h) <= estimate_budget(); }
};

struct MmStepResult {
  DeformationField state;
  MmStepRecord record;
};

struct SspResult {
  std::vector<DeformationField> states;  // M + 1 states; state k+1 carries v_k
  std::vector<MmStepRecord> records;
};

class SolidSolver {
 public:
  SolidSolver(const SolidGrid& grid, const FluidGrid& container, const MaterialParams& mat,
              const ContactParams& contact, const SspParams& ssp);

  const SolidDiscretization& disc() const { return disc_; }
  const MaterialModel& material() const { return material_; }
  const ContactModel& contact() const { return contact_; }
  const SspParams& params() const { return ssp_; }
  double eps() const { return contact_.params().eps; }

  double E_eps(const Eigen::VectorXd& x) const;
  double K(const Eigen::VectorXd& x) const { return contact_.penalty(x); }
  double R_eps(const Eigen::VectorXd& x_k, const Eigen::VectorXd& v) const;
  // Trapezoid-weighted squared L2 norm of a nodal vector field on the solid.
  double l2_sq(const Eigen::VectorXd& v) const;

  MmStepResult mm_step(const DeformationField& eta_k, const Eigen::VectorXd& U_k) const;
  SspResult solve_ssp(const DeformationField& start, const CouplingTrace& trace) const;

 private:
  SolidDiscretization disc_;
  MaterialModel material_;
  ContactModel contact_;
  SspParams ssp_;
};

MmStepResult mm_step(const DeformationField& eta_k, const Eigen::VectorXd& U_k, const SspParams& params,
                     const MaterialParams& mat, const ContactParams& contact, const FluidGrid& container);
SspResult solve_ssp(const DeformationField& start, const CouplingTrace& trace, const SspParams& params,
                    const MaterialParams& mat, const ContactParams& contact, const FluidGrid& container);

}  // namespace fsi
