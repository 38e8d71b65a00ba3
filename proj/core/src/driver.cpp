#include "fsi/driver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "fsi/diagnostics.hpp"

namespace fsi {

namespace {

double smoothstep(double t) {
  t = std::clamp(t, 0.0, 1.0);
  return t * t * (3.0 - 2.0 * t);
}

double rect_distance(const Vec2& p, const Vec2& lo, const Vec2& hi) {
  const double dx = std::max({lo.x() - p.x(), 0.0, p.x() - hi.x()});
  const double dy = std::max({lo.y() - p.y(), 0.0, p.y() - hi.y()});
  return std::hypot(dx, dy);
}

}  // namespace

std::string preset_name(Preset p) {
  switch (p) {
    case Preset::Quiescent: return "quiescent";
    case Preset::FallingDisk: return "falling-disk";
    case Preset::WallImpact: return "wall-impact";
  }
  return "unknown";
}

Preset preset_from_name(const std::string& name) {
  if (name == "quiescent") return Preset::Quiescent;
  if (name == "falling-disk") return Preset::FallingDisk;
  if (name == "wall-impact") return Preset::WallImpact;
  throw InvalidArgumentError("unknown preset '" + name + "' (quiescent, falling-disk, wall-impact)");
}

FluidParams SchemeParams::fluid_params() const {
  FluidParams p = fluid;
  p.eps = eps;
  p.varsigma = varsigma;
  return p;
}

SspParams SchemeParams::ssp_params() const {
  SspParams p = ssp;
  p.h = h();
  return p;
}

ContactParams SchemeParams::contact_params() const { return ContactParams{eps}; }

std::vector<ParamIssue> SchemeParams::issues() const {
  std::vector<ParamIssue> out;
  auto check = [&](bool ok, const char* key, const char* msg) {
    if (!ok) out.push_back({key, msg, false});
  };
  check(T > 0.0 && std::isfinite(T), "T", "T must be > 0");
  check(N >= 1, "N", "N must be >= 1");
  check(eps > 0.0 && std::isfinite(eps), "eps", "eps must be > 0");
  check(varsigma > 0.0 && std::isfinite(varsigma), "varsigma", "varsigma must be > 0");
  check(container.extent.minCoeff() > 0.0, "container_extent", "container extent must be > 0");
  check(container.resolution[0] >= 8 && container.resolution[1] >= 8, "fluid_resolution",
        "fluid resolution must be >= 8 per axis");
  check(solid_resolution[0] >= 4 && solid_resolution[1] >= 4, "solid_resolution",
        "solid resolution must be >= 4 per axis");
  check(solid_side > 0.0, "solid_side", "solid side must be > 0");
  check(solid_side < container.extent.minCoeff(), "solid_side", "solid must fit in the container");
  check(fluid_mass > 0.0, "fluid_mass", "fluid mass must be > 0");
  check(solid_speed >= 0.0, "solid_speed", "solid speed must be >= 0");
  check(rho_noise >= 0.0 && rho_noise < 1.0, "rho_noise", "rho noise must be in [0, 1)");

  check(fluid.gamma > 1.0, "gamma", "gamma must be > 1");
  check(fluid.beta >= std::max(4.0, 2.0 * fluid.gamma), "beta", "beta must be >= max(4, 2 gamma)");
  check(fluid.mu > 0.0, "mu", "mu must be > 0");
  check(fluid.zeta > 0.0, "zeta", "zeta must be > 0");
  check(fluid.cfl > 0.0 && fluid.cfl <= 1.0, "cfl", "cfl must be in (0, 1]");
  check(fluid.floor_rel >= 0.0, "floor_rel", "density floor must be >= 0");
  if (fluid.gamma > 1.0 && fluid.gamma <= 12.0 / 7.0)
    out.push_back({"gamma", "gamma <= 12/7: outside the existence hypothesis gamma > 12/7", true});

  const MaterialParams& m = material;
  check(m.lambda_e >= 0.0, "lambda_e", "lambda_e must be >= 0");
  check(m.mu_e > 0.0, "mu_e", "mu_e must be > 0");
  check(m.q > 2.0, "q", "q must exceed the dimension");
  check(!(m.q > 2.0) || m.a > 2.0 * m.q / (m.q - 2.0), "a", "a must exceed d*q/(q-d)");
  check(m.k0 >= 3, "k0", "k0 must be >= 3");
  check(m.a0 > 0.0, "a0", "a0 must be > 0");
  check(solid_resolution[0] > m.k0 && solid_resolution[1] > m.k0, "solid_resolution",
        "solid resolution must exceed k0 per axis");

  check(ssp.M >= 1, "M", "substep count M must be >= 1");
  check(ssp.rel_tol > 0.0, "rel_tol", "optimizer tolerance must be > 0");
  check(ssp.max_iterations >= 1, "max_iterations", "max iterations must be >= 1");
  check(ssp.armijo_c1 > 0.0 && ssp.armijo_c1 < 1.0, "armijo_c1", "armijo constant must be in (0, 1)");
  check(ssp.backtrack > 0.0 && ssp.backtrack < 1.0, "backtrack", "backtracking factor must be in (0, 1)");
  return out;
}

void SchemeParams::validate(std::vector<std::string>* warnings) const {
  std::string msg;
  for (const ParamIssue& i : issues()) {
    if (i.warning) {
      if (warnings != nullptr) warnings->push_back(i.message);
    } else {
      msg += "\n  " + i.key + ": " + i.message;
    }
  }
  if (!msg.empty()) throw InvalidArgumentError("invalid scheme parameters:" + msg);
}

DeformationField relax_solid(const DeformationField& state, const SchemeParams& params) {
  const SolidSolver ss(state.grid, params.container, params.material, params.contact_params(), params.ssp_params());
  const MaterialModel& mat = ss.material();
  const ContactModel& con = ss.contact();
  const double ca = std::pow(params.eps, params.material.a0);
  const Eigen::VectorXd& w = ss.disc().weights();
  const double area = w.sum();
  const int n = state.node_count();
  auto center = [&](const Eigen::VectorXd& x) {
    Vec2 c = Vec2::Zero();
    for (int k = 0; k < n; ++k) c += w[k] * x.segment<2>(2 * k);
    return Vec2(c / area);
  };
  const Vec2 c0 = center(state.positions);
  const double pin = 1e3;
  Objective J;
  J.value = [&](const Eigen::VectorXd& x) {
    const double E = ss.E_eps(x);
    if (E == kInfinity) return kInfinity;
    const double K = con.penalty(x);
    if (K == kInfinity) return kInfinity;
    return E + K + 0.5 * pin * area * (center(x) - c0).squaredNorm();
  };
  J.gradient = [&](const Eigen::VectorXd& x) {
    Eigen::VectorXd g = Eigen::VectorXd::Zero(x.size());
    mat.add_energy_gradient(x, g);
    mat.add_norm_gradient(x, ca, g);
    con.add_gradient(x, g);
    const Vec2 dc = center(x) - c0;
    for (int k = 0; k < n; ++k) g.segment<2>(2 * k) += pin * w[k] * dc;
    return g;
  };
  J.hessian = [&](const Eigen::VectorXd& x) {
    std::vector<Eigen::Triplet<double>> t;
    mat.add_energy_hessian(x, 1.0, t, false);
    mat.add_norm_hessian(ca, t);
    con.add_hessian(x, 1.0, t);
    SparseMatrix H(x.size(), x.size());
    H.setFromTriplets(t.begin(), t.end());
    Eigen::VectorXd wv(x.size());
    for (int k = 0; k < n; ++k) wv.segment<2>(2 * k).setConstant(w[k]);
    // rank-two pin term, dense in the node block
    SparseMatrix P(x.size(), x.size());
    std::vector<Eigen::Triplet<double>> pt;
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b)
        for (int c = 0; c < 2; ++c) pt.emplace_back(2 * a + c, 2 * b + c, pin * w[a] * w[b] / area);
    P.setFromTriplets(pt.begin(), pt.end());
    return SparseMatrix(H + P);
  };
  OptimizerOptions opts;
  opts.grad_tol = 1e-10 * (1.0 + std::abs(J.value(state.positions)));
  opts.max_iterations = 500;
  DeformationField out = state;
  out.positions = minimize(J, state.positions, opts).x;
  return out;
}

InitialData make_initial(const SchemeParams& params, Preset preset) {
  const FluidGrid& box = params.container;
  const Vec2 mid = box.origin + 0.5 * box.extent;
  const double side = params.solid_side;
  Vec2 center = mid;
  Vec2 v0 = Vec2::Zero();
  switch (preset) {
    case Preset::Quiescent: break;
    case Preset::FallingDisk:
      center = mid + Vec2(0.0, 0.1 * box.extent.y());
      v0 = Vec2(0.0, -params.solid_speed);
      break;
    case Preset::WallImpact:
      center = Vec2(box.origin.x() + 0.1 * box.extent.x() + 0.5 * side, mid.y());
      v0 = Vec2(-params.solid_speed, 0.0);
      break;
  }
  const Vec2 lo = center - Vec2(0.5 * side, 0.5 * side);
  const SolidGrid grid(lo, Vec2(side, side), params.solid_resolution);
  InitialData d;
  d.solid = relax_solid(DeformationField(grid), params);
  for (int k = 0; k < grid.node_count(); ++k) d.solid.velocity.segment<2>(2 * k) = v0;

  const SolidMask mask = rasterize_solid(d.solid, box);
  d.fluid = FluidState(box, 0.0);
  std::mt19937_64 rng(params.seed);
  std::uniform_real_distribution<double> noise(-1.0, 1.0);
  Vec2 blo = d.solid.position(0), bhi = blo;
  for (int k = 0; k < grid.node_count(); ++k) {
    blo = blo.cwiseMin(d.solid.position(k));
    bhi = bhi.cwiseMax(d.solid.position(k));
  }
  double mass = 0.0;
  for (int c = 0; c < box.cell_count(); ++c) {
    double r = 0.0;
    if (mask.coverage[static_cast<std::size_t>(c)] == 0.0)
      r = preset == Preset::Quiescent ? 1.0 : smoothstep(rect_distance(box.cell_center(c), blo, bhi) / params.eps);
    const double z = noise(rng);
    d.fluid.rho[c] = r * (1.0 + params.rho_noise * z);
    mass += d.fluid.rho[c];
  }
  d.fluid.rho *= params.fluid_mass / (mass * box.cell_volume());
  return d;
}

DeformationField pull_in_initial(const DeformationField& eta0, double eps,
                                 const std::function<Vec2(const Vec2&)>& nu,
                                 const std::function<double(const Vec2&)>& psi) {
  if (!(eps >= 0.0)) throw InvalidArgumentError("pull-in eps must be >= 0");
  DeformationField phi(eta0.grid);
  DeformationField out = eta0;
  bool moved = false;
  for (int k = 0; k < eta0.node_count(); ++k) {
    const Vec2 X = eta0.grid.node_position(k);
    const double s = psi(X);
    if (eps == 0.0 || s == 0.0) continue;
    const Vec2 Y = X - eps * s * nu(X);
    phi.positions.segment<2>(2 * k) = Y;
    out.positions.segment<2>(2 * k) = interpolate_position(eta0, Y);
    moved = true;
  }
  if (!moved) return eta0;
  const double det = deformation_gradient(phi).min_det;
  if (!(det > 0.0))
    throw PullInFailureError("pull-in map is not orientation preserving (min det " + std::to_string(det) +
                             "); eps too large");
  const double out_det = deformation_gradient(out).min_det;
  if (!(out_det > 0.0))
    throw PullInFailureError("pulled-in deformation has min det " + std::to_string(out_det));
  return out;
}

DeformationField pull_in_from_walls(const DeformationField& eta0, const FluidGrid& container, double eps) {
  if (eps == 0.0) return eta0;
  const double reach = 3.0 * eps;
  auto distance = [&](const Vec2& X, Vec2* n) {
    return wall_distance(container, interpolate_position(eta0, X), n);
  };
  return pull_in_initial(
      eta0, eps,
      [&](const Vec2& X) {
        Vec2 n;
        distance(X, &n);
        return Vec2(-n);
      },
      [&](const Vec2& X) { return 1.0 - smoothstep(distance(X, nullptr) / reach); });
}

double tolerance_budget(const SchemeParams& params, double total0, int substeps) {
  return (1e-6 + params.ssp.M * params.ssp.rel_tol + substeps * 1e-10) * std::abs(total0);
}

RunResult run_scheme(const SchemeParams& params, Preset preset, const RunOptions& options) {
  return run_scheme(params, make_initial(params, preset), preset, options);
}

RunResult run_scheme(const SchemeParams& params, const InitialData& initial, Preset preset,
                     const RunOptions& options) {
  auto result = std::make_shared<RunResult>();
  RunResult& r = *result;
  params.validate(&r.warnings);
  r.params = params;
  r.preset = preset;

  const SspParams ssp = params.ssp_params();
  const FluidParams fp = params.fluid_params();
  const ContactParams cp = params.contact_params();
  const double h = ssp.h, dt = ssp.dt();
  const int M = ssp.M;
  const FluidGrid& box = params.container;

  DeformationField solid = initial.solid;
  const ContactClassification cls0 = classify_boundary(solid, box, {cp.eps, 1e-3 * params.solid_side, -1.0});
  if (cls0.count(ContactLabel::C) > 0) solid = pull_in_from_walls(solid, box, cp.eps);
  FluidState fluid = initial.fluid;
  if (!(fluid.rho.minCoeff() >= 0.0)) throw InvalidArgumentError("initial density must be nonnegative");

  const SolidSolver ss(solid.grid, box, params.material, cp, ssp);
  const double mean_rho = fluid.mass() / (box.extent.x() * box.extent.y());
  FluidSolver fs(box, fp, fp.floor_rel * mean_rho);
  const Eigen::VectorXd& w = ss.disc().weights();
  double total_w = w.sum();
  auto center_of = [&](const DeformationField& s) {
    Vec2 c = Vec2::Zero();
    for (int k = 0; k < s.node_count(); ++k) c += w[k] * s.position(k);
    return Vec2(c / total_w);
  };

  CouplingTrace trace = constant_trace(solid.velocity, M, 0.0, h);
  std::vector<double> prev_bins(static_cast<std::size_t>(M), dt / (2.0 * h) * ss.l2_sq(solid.velocity));
  r.initial_mass = fluid.mass();

  LedgerRow row;
  const FluidEnergy fe0 = fs.energy(fluid);
  row.kinetic_fluid = fe0.kinetic;
  row.pressure_pot = fe0.pressure_pot;
  row.artificial_pot = fe0.artificial_pot;
  row.E = ss.E_eps(solid.positions);
  row.K = ss.K(solid.positions);
  for (double b : prev_bins) row.kinetic_solid += b;
  row.total = fe0.total() + row.E + row.K + row.kinetic_solid;
  const double total0 = row.total;
  if (!std::isfinite(total0)) throw InfiniteEnergyError("initial data have infinite energy");
  r.ledger.rows.push_back(row);
  r.budget.push_back(tolerance_budget(params, total0, 0));
  r.snapshots.push_back({0, 0.0, fluid, solid});

  int substeps = 0;
  for (int n = 0; n < params.N; ++n) {
    try {
      if (trace.source_window != n - 1)
        throw Error("coupling trace from window " + std::to_string(trace.source_window) + " offered to window " +
                    std::to_string(n));
      const SspResult sr = ss.solve_ssp(solid, trace);
      const FspResult fr = fs.solve_fsp(fluid, sr, h, n);

      WindowReport rep;
      rep.window = n;
      rep.min_wall_distance = std::numeric_limits<double>::infinity();
      rep.min_pair_distance = std::numeric_limits<double>::infinity();
      rep.min_det = std::numeric_limits<double>::infinity();
      rep.min_rho = std::numeric_limits<double>::infinity();
      double stored = 0.0;
      for (int k = 0; k < M; ++k) {
        const MmStepRecord& rec = sr.records[static_cast<std::size_t>(k)];
        const FspSubstepRow& fsr = fr.rows[static_cast<std::size_t>(k)];
        const Eigen::VectorXd& x = sr.states[static_cast<std::size_t>(k) + 1].positions;
        row.R_cum += 2.0 * dt * rec.R_eps;
        row.penalty_match_cum += dt / (2.0 * h) * rec.mismatch_sq + fsr.match;
        row.penalty_U_cum += dt / (2.0 * h) * rec.v_sq - fsr.fluid_gain + fsr.transfer_loss;
        row.visc_diss_cum += fsr.visc;
        row.sink_work_cum += fsr.sink;
        row.damping_work_cum += fsr.damping;
        stored += fsr.stored;
        row.kinetic_solid = stored;
        for (int q = k + 1; q < M; ++q) row.kinetic_solid += prev_bins[static_cast<std::size_t>(q)];
        row.E = rec.E_after;
        row.K = rec.K_after;
        row.kinetic_fluid = fsr.energy.kinetic;
        row.pressure_pot = fsr.energy.pressure_pot;
        row.artificial_pot = fsr.energy.artificial_pot;
        row.time = fsr.time;
        row.total = row.kinetic_fluid + row.pressure_pot + row.artificial_pot + row.E + row.K + row.kinetic_solid;
        ++substeps;
        const double budget = tolerance_budget(params, total0, substeps);
        row.violation = std::max(0.0, row.total + row.cumulative() - total0 - budget);
        r.ledger.rows.push_back(row);
        r.budget.push_back(budget);
        r.mm_records.push_back(rec);

        rep.min_wall_distance = std::min(rep.min_wall_distance, ss.contact().min_wall_distance(x));
        rep.min_pair_distance = std::min(rep.min_pair_distance, ss.contact().min_pair_distance(x));
        rep.min_det = std::min(rep.min_det, ss.material().min_det(x));
        rep.max_K = std::max(rep.max_K, rec.K_after);
        rep.mismatch_sq_dt += fsr.mismatch_sq_dt;
        rep.max_mass_in_mask = std::max(rep.max_mass_in_mask, fsr.mass_in_mask);
        rep.min_rho = std::min(rep.min_rho, fsr.min_rho);
        rep.clipped_mass += fsr.clipped_mass;
        rep.fluid_substeps += fsr.substeps;
      }
      double bins = 0.0;
      for (double b : fr.bin_stored) bins += b;
      row.penalty_U_cum += stored - bins;
      prev_bins = fr.bin_stored;

      solid = sr.states.back();
      fluid = fr.state;
      trace = fr.trace;
      r.traces.push_back(fr.trace);

      rep.time = fluid.time;
      rep.mass = fluid.mass();
      rep.min_rho = std::min(rep.min_rho, fluid.rho.minCoeff());
      rep.center = center_of(solid);
      rep.fluid_impulse = fr.fluid_impulse;
      const ContactClassification cls = classify_boundary(solid, box, {1e-3 * params.solid_side, 1e-3 * params.solid_side, -1.0});
      rep.interface_area = interface_area(solid, cls);
      if (!options.collar_widths.empty())
        rep.collar = collar_pressure_profile(fluid, solid, rasterize_solid(solid, box), fp, options.collar_widths);
      r.windows.push_back(rep);
      if (options.progress) options.progress(rep);

      const bool last = n + 1 == params.N;
      if (last || (options.snapshot_every > 0 && (n + 1) % options.snapshot_every == 0))
        r.snapshots.push_back({n + 1, fluid.time, fluid, solid});
    } catch (const Error& e) {
      r.solid = solid;
      r.fluid = fluid;
      throw SchemeError("window " + std::to_string(n) + ": " + e.what(), n, result);
    }
  }
  r.solid = solid;
  r.fluid = fluid;
  return std::move(r);
}

double coupling_mismatch(const DeformationField& solid, const FluidState& fluid) {
  const SolidCoupling c = make_coupling(solid, fluid.grid);
  const Eigen::VectorXd U = trace_to_nodes(c, fluid, solid.node_count());
  const std::vector<double> w = quadrature_weights(solid.grid.nodes());
  double s = 0.0;
  for (int k = 0; k < solid.node_count(); ++k)
    s += w[static_cast<std::size_t>(k)] * (U.segment<2>(2 * k) - solid.node_velocity(k)).squaredNorm();
  return std::sqrt(s);
}

std::vector<double> coupling_mismatch(const RunResult& run) {
  std::vector<double> out;
  for (const WindowReport& w : run.windows) out.push_back(std::sqrt(w.mismatch_sq_dt / run.params.h()));
  return out;
}

RunSummary summarize_run(const RunResult& run) {
  RunSummary s;
  s.h = run.params.h();
  s.eps = run.params.eps;
  s.windows = static_cast<int>(run.windows.size());
  s.min_wall_distance = std::numeric_limits<double>::infinity();
  s.min_det = std::numeric_limits<double>::infinity();
  s.min_interface_area = std::numeric_limits<double>::infinity();
  const double m0 = run.initial_mass > 0.0 ? run.initial_mass : 1.0;
  for (const WindowReport& w : run.windows) {
    s.mismatch_integral += w.mismatch_sq_dt;
    s.max_mass_in_mask = std::max(s.max_mass_in_mask, w.max_mass_in_mask / m0);
    s.final_mass = w.mass / m0;
    s.min_wall_distance = std::min(s.min_wall_distance, w.min_wall_distance);
    s.min_det = std::min(s.min_det, w.min_det);
    s.max_K = std::max(s.max_K, w.max_K);
    s.min_interface_area = std::min(s.min_interface_area, w.interface_area);
    if (s.collar_integral.size() < w.collar.size()) s.collar_integral.resize(w.collar.size(), 0.0);
    for (std::size_t c = 0; c < w.collar.size(); ++c) s.collar_integral[c] += s.h * w.collar[c];
  }
  s.drift = run.ledger.max_relative_drift();
  s.violations = ledger_check(run.ledger, 1e-3 * std::abs(run.ledger.initial_total())).size();
  return s;
}

}  // namespace fsi
