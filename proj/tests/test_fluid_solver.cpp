#include <doctest.h>

#include <cmath>
#include <random>

#include "fsi/driver.hpp"
#include "fsi/error.hpp"
#include "fsi/fluid_solver.hpp"
#include "support.hpp"

using namespace fsi;

namespace {

const FluidGrid kGrid(Vec2(0, 0), Vec2(1, 1), {16, 16});

FluidParams params(double eps = 0.05, double varsigma = 1e-3) {
  FluidParams p;
  p.eps = eps;
  p.varsigma = varsigma;
  return p;
}

// Random interior face velocities, zero on the walls.
void randomize_velocity(FluidState& s, std::mt19937_64& rng, double amp) {
  std::uniform_real_distribution<double> u(-amp, amp);
  const int nx = s.grid.resolution[0], ny = s.grid.resolution[1];
  for (int j = 0; j < ny; ++j)
    for (int i = 1; i < nx; ++i) s.u[i + (nx + 1) * j] = u(rng);
  for (int j = 1; j < ny; ++j)
    for (int i = 0; i < nx; ++i) s.v[i + nx * j] = u(rng);
}

SolidMask full_mask(const FluidGrid& g) {
  SolidMask m = empty_mask(g);
  std::fill(m.coverage.begin(), m.coverage.end(), 1.0);
  std::fill(m.weight.begin(), m.weight.end(), 1.0);
  return m;
}

// Solid trajectory parked outside the container.
SspResult absent_solid(int M) {
  const DeformationField far(SolidGrid(Vec2(5, 5), Vec2(0.2, 0.2), {5, 5}));
  SspResult r;
  r.states.assign(static_cast<std::size_t>(M) + 1, far);
  r.records.resize(static_cast<std::size_t>(M));
  return r;
}

}  // namespace

TEST_CASE("pressure law") {
  FluidParams p;
  p.gamma = 2.0;
  p.beta = 4.0;
  p.eps = 0.1;
  CHECK(p.pressure(2.0) == doctest::Approx(5.6));
  CHECK(p.potential(2.0) == doctest::Approx(4.0));
  CHECK(p.artificial_potential(2.0) == doctest::Approx(0.1 * 16.0 / 3.0));
}

TEST_CASE("fluid parameter checks") {
  std::vector<std::string> w;
  FluidParams p;
  p.gamma = 1.5;
  p.validate(&w);
  REQUIRE(w.size() == 1);
  CHECK(w[0].find("12/7") != std::string::npos);
  p.beta = 2.5;
  CHECK_THROWS_AS(p.validate(), InvalidArgumentError);
}

TEST_CASE("pressure potential of a uniform state") {
  const FluidGrid g(Vec2(0, 0), Vec2(2, 2), {8, 8});
  FluidSolver s(g, params(0.0), 0.0);
  const FluidEnergy e = s.energy(FluidState(g, 1.0));
  CHECK(e.pressure_pot == doctest::Approx(4.0).epsilon(1e-14));
  CHECK(e.artificial_pot == 0.0);
  CHECK(e.kinetic == 0.0);
}

TEST_CASE("continuity substep oracles") {
  const FluidGrid g(Vec2(0, 0), Vec2(8, 8), {8, 8});
  const FluidState s(g, 1.0);
  const Eigen::VectorXd same = continuity_substep(s, empty_mask(g), params(), 0.1);
  CHECK((same.array() - 1.0).abs().maxCoeff() < 1e-14);
  const Eigen::VectorXd sunk = continuity_substep(s, full_mask(g), params(0.05, 0.0), 0.1);
  CHECK((sunk.array() - 0.9).abs().maxCoeff() < 1e-14);
}

TEST_CASE("empty mask conserves mass") {
  std::mt19937_64 rng(4);
  for (double varsigma : {0.0, 1e-2}) {
    FluidState s(kGrid, 1.0);
    std::uniform_real_distribution<double> r(0.5, 1.5);
    for (int c = 0; c < kGrid.cell_count(); ++c) s.rho[c] = r(rng);
    randomize_velocity(s, rng, 0.5);
    FluidSolver solver(kGrid, params(0.05, varsigma), 1e-10);
    const double m0 = s.mass();
    for (int step = 0; step < 20; ++step) {
      const double dt = solver.max_stable_dt(s);
      const ContinuityResult c = solver.continuity_substep(s, empty_mask(kGrid), dt);
      const MomentumResult m = solver.momentum_substep(s, c, empty_coupling(kGrid), 0.01, dt);
      s.rho = c.rho;
      s.u = m.u;
      s.v = m.v;
      CHECK(s.rho.minCoeff() >= 0.0);
    }
    CHECK(std::abs(s.mass() - m0) <= 1e-12 * m0);
  }
}

TEST_CASE("fluid at rest stays at rest") {
  const FluidGrid g(Vec2(0, 0), Vec2(8, 8), {8, 8});
  const FluidState s(g, 1.0);
  const MomentumResult m = momentum_substep(s, empty_coupling(g), params(), 0.01, 0.1);
  CHECK(m.u.cwiseAbs().maxCoeff() < 1e-15);
  CHECK(m.v.cwiseAbs().maxCoeff() < 1e-15);

  FluidSolver solver(kGrid, params(), 1e-10);
  const FspResult r = solver.solve_fsp(FluidState(kGrid, 1.0), absent_solid(4), 0.02, 0);
  CHECK((r.state.rho.array() - 1.0).abs().maxCoeff() < 1e-14);
  CHECK(r.state.u.cwiseAbs().maxCoeff() < 1e-14);
  for (const FspSubstepRow& row : r.rows) {
    CHECK(row.visc < 1e-28);
    CHECK(row.sink == 0.0);
    CHECK(row.damping < 1e-28);
    CHECK(row.match == 0.0);
  }
}

TEST_CASE("matched solid velocity exerts no penalty force") {
  // no-slip walls leave rest as the only uniform face velocity
  const FluidState s(kGrid, 1.0);
  SolidCoupling c = empty_coupling(kGrid);
  c.mask = full_mask(kGrid);
  for (Eigen::Index f = 0; f < c.mx.size(); ++f) {
    c.mx[f] = kGrid.cell_volume();
    c.vx[f] = s.u[f];
  }
  SolidCoupling unpenalized = c;
  unpenalized.mx.setZero();
  FluidSolver solver(kGrid, params(), 1e-10);
  const ContinuityResult cont = solver.continuity_substep(s, c.mask, 1e-3);
  const MomentumResult a = solver.momentum_substep(s, cont, c, 0.01, 1e-3);
  const MomentumResult b = solver.momentum_substep(s, cont, unpenalized, 0.01, 1e-3);
  CHECK((a.u - b.u).cwiseAbs().maxCoeff() < 1e-15);
  CHECK((a.v - b.v).cwiseAbs().maxCoeff() < 1e-15);

  // a mismatched solid velocity drags the fluid toward it
  SolidCoupling drag = c;
  drag.vx.setConstant(1.0);
  const MomentumResult d = solver.momentum_substep(s, cont, drag, 0.01, 1e-3);
  CHECK(d.u[8 + 17 * 8] > b.u[8 + 17 * 8]);
}

TEST_CASE("fluid energy does not grow without a solid") {
  std::mt19937_64 rng(7);
  FluidState s(kGrid, 1.0);
  std::uniform_real_distribution<double> r(0.8, 1.2);
  for (int c = 0; c < kGrid.cell_count(); ++c) s.rho[c] = r(rng);
  randomize_velocity(s, rng, 0.3);
  FluidSolver solver(kGrid, params(0.05, 0.0), 1e-10);
  const FspResult res = solver.solve_fsp(s, absent_solid(8), 0.04, 0);
  double prev = solver.energy(s).total();
  const double scale = prev;
  for (const FspSubstepRow& row : res.rows) {
    CHECK(row.energy.total() <= prev + 1e-8 * scale);
    CHECK(row.min_rho >= 0.0);
    CHECK(row.clipped_mass <= 1e-8 * s.mass());
    prev = row.energy.total();
  }
}

TEST_CASE("penalty impulses balance across the coupling") {
  SchemeParams p;
  p.N = 1;
  p.T = 0.02;
  const InitialData init = make_initial(p, Preset::FallingDisk);
  const SspParams ssp = p.ssp_params();
  const SolidSolver solid(init.solid.grid, p.container, p.material, p.contact_params(), ssp);
  const SspResult traj = solid.solve_ssp(init.solid, constant_trace(init.solid.velocity, ssp.M, 0.0, ssp.h));
  FluidSolver fluid(p.container, p.fluid_params(), p.fluid.floor_rel * init.fluid.mass() / p.container.extent.prod());
  const FspResult fr = fluid.solve_fsp(init.fluid, traj, ssp.h, 0);

  const std::vector<double> w = quadrature_weights(traj.states.front().grid.nodes());
  Vec2 solid_side = Vec2::Zero();
  for (int k = 0; k < ssp.M; ++k) {
    const Eigen::VectorXd& U = fr.trace.U[static_cast<std::size_t>(k)];
    const Eigen::VectorXd& v = traj.states[static_cast<std::size_t>(k) + 1].velocity;
    for (std::size_t j = 0; j < w.size(); ++j)
      solid_side += ssp.dt() / ssp.h * w[j] * (U.segment<2>(2 * j) - v.segment<2>(2 * j));
  }
  REQUIRE(fr.fluid_impulse.norm() > 0.0);
  CHECK((fr.fluid_impulse + solid_side).norm() <= 0.02 * fr.fluid_impulse.norm());
}
