#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "fsi/contact.hpp"
#include "fsi/diagnostics.hpp"
#include "fsi/driver.hpp"
#include "fsi/fluid_solver.hpp"
#include "fsi/kinematics.hpp"
#include "fsi/material.hpp"
#include "fsi/solid_solver.hpp"

using namespace fsi;

namespace {

const FluidGrid kUnitBox(Vec2(0, 0), Vec2(1, 1), {64, 64});

DeformationField square(int n) { return DeformationField(SolidGrid(Vec2(0.35, 0.35), Vec2(0.3, 0.3), {n, n})); }

}  // namespace

static void BM_ElasticGradient(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const DeformationField d = square(n);
  const MaterialParams m;
  const SolidDiscretization disc(d.grid, m.k0);
  const MaterialModel model(disc, m);
  Eigen::VectorXd g(d.positions.size());
  for (auto _ : state) {
    g.setZero();
    model.add_energy_gradient(d.positions, g);
    benchmark::DoNotOptimize(g.data());
  }
  state.SetItemsProcessed(state.iterations() * d.node_count());
}
BENCHMARK(BM_ElasticGradient)->Arg(17)->Arg(33)->Arg(65);

static void BM_ContactPenalty(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const DeformationField d = DeformationField(SolidGrid(Vec2(0.02, 0.35), Vec2(0.3, 0.3), {n, n}));
  const SolidDiscretization disc(d.grid, MaterialParams{}.k0);
  const ContactModel contact(d.grid, disc.weights(), kUnitBox, ContactParams{0.05});
  for (auto _ : state) benchmark::DoNotOptimize(contact.penalty(d.positions));
  state.SetItemsProcessed(state.iterations() * d.node_count());
}
BENCHMARK(BM_ContactPenalty)->Arg(17)->Arg(33)->Arg(65);

static void BM_SpatialHashPairs(benchmark::State& state) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Vec2> pts(static_cast<std::size_t>(state.range(0)));
  for (Vec2& p : pts) p = Vec2(u(rng), u(rng));
  const double r = 0.01;
  for (auto _ : state) {
    const SpatialHash hash(r, pts);
    benchmark::DoNotOptimize(hash.pairs_within(r));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_SpatialHashPairs)->Arg(1 << 10)->Arg(1 << 14);

static void BM_Rasterize(benchmark::State& state) {
  const DeformationField d = square(17);
  const FluidGrid box(Vec2(0, 0), Vec2(1, 1), {static_cast<int>(state.range(0)), static_cast<int>(state.range(0))});
  for (auto _ : state) benchmark::DoNotOptimize(rasterize_solid(d, box));
}
BENCHMARK(BM_Rasterize)->Arg(64)->Arg(128);

static void BM_MmStep(benchmark::State& state) {
  SchemeParams p;
  const DeformationField d = square(17);
  const SolidSolver solver(d.grid, kUnitBox, p.material, p.contact_params(), p.ssp_params());
  const Eigen::VectorXd U = Eigen::VectorXd::Constant(d.positions.size(), 0.1);
  for (auto _ : state) benchmark::DoNotOptimize(solver.mm_step(d, U));
}
BENCHMARK(BM_MmStep)->Unit(benchmark::kMillisecond);

static void BM_FluidSubstep(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const FluidGrid g(Vec2(0, 0), Vec2(1, 1), {n, n});
  FluidState s(g, 1.0);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.8, 1.2);
  for (int c = 0; c < g.cell_count(); ++c) s.rho[c] = u(rng);
  FluidSolver solver(g, FluidParams{}, 1e-10);
  const DeformationField d = square(17);
  const SolidCoupling coupling = empty_coupling(g);
  const SolidMask mask = rasterize_solid(d, g);
  const double dt = solver.max_stable_dt(s);
  for (auto _ : state) {
    const ContinuityResult c = solver.continuity_substep(s, mask, dt);
    benchmark::DoNotOptimize(solver.momentum_substep(s, c, coupling, 1e-2, dt));
  }
  state.SetItemsProcessed(state.iterations() * g.cell_count());
}
BENCHMARK(BM_FluidSubstep)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

static void BM_FatCantor(benchmark::State& state) {
  const int levels = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(fat_cantor_profile(levels, 1 << 20));
}
BENCHMARK(BM_FatCantor)->Arg(8)->Arg(12)->Unit(benchmark::kMillisecond);

static void BM_SchemeWindow(benchmark::State& state) {
  SchemeParams p;
  p.N = 1;
  p.T = p.h();
  const InitialData init = make_initial(p, Preset::FallingDisk);
  for (auto _ : state) benchmark::DoNotOptimize(run_scheme(p, init, Preset::FallingDisk));
}
BENCHMARK(BM_SchemeWindow)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
