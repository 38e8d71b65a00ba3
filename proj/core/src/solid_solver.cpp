#include "fsi/solid_solver.hpp"

#include <cmath>
#include <string>

#include "fsi/error.hpp"

namespace fsi {

void SspParams::validate() const {
  if (!(h > 0.0)) throw InvalidArgumentError("window length h must be > 0");
  if (M < 1) throw InvalidArgumentError("substep count M must be >= 1");
  if (!(rel_tol > 0.0)) throw InvalidArgumentError("optimizer tolerance must be > 0");
  if (max_iterations < 1) throw InvalidArgumentError("max iterations must be >= 1");
  if (!(armijo_c1 > 0.0 && armijo_c1 < 1.0)) throw InvalidArgumentError("armijo constant must be in (0, 1)");
  if (!(backtrack > 0.0 && backtrack < 1.0)) throw InvalidArgumentError("backtracking factor must be in (0, 1)");
}

CouplingTrace constant_trace(const Eigen::VectorXd& v, int M, double t0, double h) {
  CouplingTrace t;
  t.source_window = -1;
  t.t0 = t0;
  t.h = h;
  t.U.assign(static_cast<std::size_t>(M), v);
  return t;
}

double MmStepRecord::estimate_gap(double dt, double h) const {
  const double lhs = E_after + K_after + 2.0 * dt * R_eps + dt / (2.0 * h) * mismatch_sq;
  const double rhs = E_before + K_before + dt / (2.0 * h) * U_sq;
  return lhs - rhs;
}

double MmStepRecord::estimate_budget() const {
  return residual * step_norm + 1e-12 * (1.0 + std::abs(J_start));
}

SolidSolver::SolidSolver(const SolidGrid& grid, const FluidGrid& container, const MaterialParams& mat,
                         const ContactParams& contact, const SspParams& ssp)
    : disc_(grid, mat.k0),
      material_(disc_, mat),
      contact_(grid, disc_.weights(), container, contact),
      ssp_(ssp) {
  mat.validate(2);
  ssp.validate();
}

double SolidSolver::E_eps(const Eigen::VectorXd& x) const {
  const double e = material_.energy(x);
  if (e == kInfinity) return kInfinity;
  return e + std::pow(eps(), material_.params().a0) * material_.norm_sq(x);
}

double SolidSolver::R_eps(const Eigen::VectorXd& x_k, const Eigen::VectorXd& v) const {
  return material_.dissipation(x_k, v) + eps() * material_.norm_sq(v);
}

double SolidSolver::l2_sq(const Eigen::VectorXd& v) const {
  const Eigen::VectorXd& w = disc_.weights();
  double s = 0.0;
  for (int k = 0; k < disc_.nodes(); ++k) s += w[k] * v.segment<2>(2 * k).squaredNorm();
  return s;
}

MmStepResult SolidSolver::mm_step(const DeformationField& eta_k, const Eigen::VectorXd& U_k) const {
  const double dt = ssp_.dt(), h = ssp_.h, e = eps();
  const double ca = std::pow(e, material_.params().a0);
  const Eigen::VectorXd& xk = eta_k.positions;
  const Eigen::VectorXd& w = disc_.weights();
  const int n = disc_.nodes();
  if (U_k.size() != xk.size()) throw InvalidArgumentError("coupling velocity has the wrong size");

  const Eigen::VectorXd target = dt * U_k;
  auto motion = [&](const Eigen::VectorXd& delta) {
    double s = 0.0;
    for (int k = 0; k < n; ++k) s += w[k] * (delta.segment<2>(2 * k) - target.segment<2>(2 * k)).squaredNorm();
    return s / (2.0 * h * dt);
  };

  Objective J;
  J.value = [&](const Eigen::VectorXd& x) {
    const double E = E_eps(x);
    if (E == kInfinity) return kInfinity;
    const double Kv = contact_.penalty(x);
    if (Kv == kInfinity) return kInfinity;
    const Eigen::VectorXd delta = x - xk;
    return E + Kv + R_eps(xk, delta) / dt + motion(delta);
  };
  J.gradient = [&](const Eigen::VectorXd& x) {
    Eigen::VectorXd g = Eigen::VectorXd::Zero(x.size());
    material_.add_energy_gradient(x, g);
    material_.add_norm_gradient(x, ca, g);
    contact_.add_gradient(x, g);
    const Eigen::VectorXd delta = x - xk;
    material_.add_dissipation_gradient(xk, delta, 1.0 / dt, g);
    material_.add_norm_gradient(delta, e / dt, g);
    for (int k = 0; k < n; ++k)
      g.segment<2>(2 * k) += w[k] / (h * dt) * (delta.segment<2>(2 * k) - target.segment<2>(2 * k));
    return g;
  };
  J.hessian = [&](const Eigen::VectorXd& x) {
    std::vector<Eigen::Triplet<double>> t;
    material_.add_energy_hessian(x, 1.0, t, false);
    material_.add_norm_hessian(ca + e / dt, t);
    contact_.add_hessian(x, 1.0, t);
    material_.add_dissipation_hessian(xk, 1.0 / dt, t);
    for (int k = 0; k < n; ++k)
      for (int c = 0; c < 2; ++c) t.emplace_back(2 * k + c, 2 * k + c, w[k] / (h * dt));
    SparseMatrix H(x.size(), x.size());
    H.setFromTriplets(t.begin(), t.end());
    return H;
  };

  MmStepRecord rec;
  rec.E_before = E_eps(xk);
  rec.K_before = contact_.penalty(xk);
  if (rec.E_before == kInfinity || rec.K_before == kInfinity)
    throw InfiniteEnergyError("minimizing movement started from a state with infinite energy");
  rec.J_start = J.value(xk);

  OptimizerOptions opts;
  opts.method = ssp_.method;
  opts.grad_tol = ssp_.rel_tol * (1.0 + std::abs(rec.J_start));
  opts.max_iterations = ssp_.max_iterations;
  opts.armijo_c1 = ssp_.armijo_c1;
  opts.backtrack = ssp_.backtrack;
  const OptimizerResult res = minimize(J, xk, opts);

  MmStepResult out;
  out.state = eta_k;
  out.state.positions = res.x;
  out.state.velocity = (res.x - xk) / dt;
  out.state.time = eta_k.time + dt;
  const Eigen::VectorXd& v = out.state.velocity;

  rec.E_after = E_eps(res.x);
  rec.K_after = contact_.penalty(res.x);
  rec.R_eps = R_eps(xk, v);
  rec.mismatch_sq = l2_sq(v - U_k);
  rec.U_sq = l2_sq(U_k);
  rec.v_sq = l2_sq(v);
  rec.J_end = res.value;
  rec.residual = res.grad_norm;
  rec.tolerance = opts.grad_tol;
  rec.step_norm = (res.x - xk).norm();
  rec.iterations = res.iterations;
  out.record = rec;
  return out;
}

SspResult SolidSolver::solve_ssp(const DeformationField& start, const CouplingTrace& trace) const {
  if (static_cast<int>(trace.U.size()) != ssp_.M)
    throw InvalidArgumentError("coupling trace has " + std::to_string(trace.U.size()) + " substeps, expected " +
                               std::to_string(ssp_.M));
  SspResult out;
  out.states.reserve(static_cast<std::size_t>(ssp_.M) + 1);
  out.states.push_back(start);
  for (int k = 0; k < ssp_.M; ++k) {
    try {
      MmStepResult step = mm_step(out.states.back(), trace.U[static_cast<std::size_t>(k)]);
      out.records.push_back(step.record);
      out.states.push_back(std::move(step.state));
    } catch (const OptimizerStallError& e) {
      throw OptimizerStallError("substep " + std::to_string(k) + ": " + e.what(), e.state(), e.residual());
    } catch (const InfiniteEnergyError& e) {
      throw InfiniteEnergyError("substep " + std::to_string(k) + ": " + e.what());
    }
  }
  return out;
}

MmStepResult mm_step(const DeformationField& eta_k, const Eigen::VectorXd& U_k, const SspParams& params,
                     const MaterialParams& mat, const ContactParams& contact, const FluidGrid& container) {
  return SolidSolver(eta_k.grid, container, mat, contact, params).mm_step(eta_k, U_k);
}

SspResult solve_ssp(const DeformationField& start, const CouplingTrace& trace, const SspParams& params,
                    const MaterialParams& mat, const ContactParams& contact, const FluidGrid& container) {
  return SolidSolver(start.grid, container, mat, contact, params).solve_ssp(start, trace);
}

}  // namespace fsi
