#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "fsi/error.hpp"
#include "fsi/optimizer.hpp"
#include "fsi/solid_solver.hpp"
#include "support.hpp"

using namespace fsi;

namespace {

const FluidGrid kBox(Vec2(-2, -2), Vec2(4, 4), {16, 16});
const SolidGrid kSolid(Vec2(-0.5, -0.5), Vec2(1, 1), {9, 9});

SspParams ssp_params() {
  SspParams p;
  p.h = 0.02;
  p.M = 4;
  return p;
}

// Stationary point of E_eps + K found by Newton from the identity.
DeformationField stationary(const SolidSolver& s) {
  const double ca = std::pow(s.eps(), s.material().params().a0);
  Objective f;
  f.value = [&](const Eigen::VectorXd& x) { return s.E_eps(x) + s.K(x); };
  f.gradient = [&](const Eigen::VectorXd& x) {
    Eigen::VectorXd g = Eigen::VectorXd::Zero(x.size());
    s.material().add_energy_gradient(x, g);
    s.material().add_norm_gradient(x, ca, g);
    s.contact().add_gradient(x, g);
    return g;
  };
  f.hessian = [&](const Eigen::VectorXd& x) {
    std::vector<Eigen::Triplet<double>> t;
    s.material().add_energy_hessian(x, 1.0, t);
    s.material().add_norm_hessian(ca, t);
    s.contact().add_hessian(x, 1.0, t);
    SparseMatrix H(x.size(), x.size());
    H.setFromTriplets(t.begin(), t.end());
    return H;
  };
  OptimizerOptions o;
  o.grad_tol = 1e-12;
  DeformationField d(s.disc().grid());
  d.positions = minimize(f, d.positions, o).x;
  return d;
}

Vec2 center(const SolidSolver& s, const Eigen::VectorXd& x) {
  const Eigen::VectorXd& w = s.disc().weights();
  Vec2 c = Vec2::Zero();
  for (int k = 0; k < s.disc().nodes(); ++k) c += w[k] * x.segment<2>(2 * k);
  return c / w.sum();
}

}  // namespace

TEST_CASE("optimizer reproduces a hand-solved scalar minimizer") {
  // J(x) = k x^2/2 + (r/dt)(x - xk)^2 + (x - xk - dt U)^2 / (2 h dt)
  const double k = 3.0, r = 0.7, xk = 0.4;
  for (double dt : {0.01, 0.005})
    for (double h : {0.04, 0.02})
      for (double U : {-1.0, 0.5, 2.0}) {
        Objective J;
        J.value = [&](const Eigen::VectorXd& x) {
          const double d = x[0] - xk;
          return 0.5 * k * x[0] * x[0] + r / dt * d * d + (d - dt * U) * (d - dt * U) / (2 * h * dt);
        };
        J.gradient = [&](const Eigen::VectorXd& x) {
          const double d = x[0] - xk;
          return Eigen::VectorXd::Constant(1, k * x[0] + 2 * r / dt * d + (d - dt * U) / (h * dt));
        };
        const double exact = (2 * r / dt * xk + (xk + dt * U) / (h * dt)) / (k + 2 * r / dt + 1 / (h * dt));
        OptimizerOptions o;
        o.grad_tol = 1e-10;
        for (OptimizerMethod m : {OptimizerMethod::GradientDescent, OptimizerMethod::Newton}) {
          o.method = m;
          if (m == OptimizerMethod::Newton)
            J.hessian = [&](const Eigen::VectorXd&) {
              SparseMatrix H(1, 1);
              H.insert(0, 0) = k + 2 * r / dt + 1 / (h * dt);
              return H;
            };
          const OptimizerResult res = minimize(J, Eigen::VectorXd::Constant(1, xk), o);
          const double curvature = k + 2 * r / dt + 1 / (h * dt);
          CHECK(std::abs(res.x[0] - exact) <= 1e-10 / curvature * 10);
        }
      }
}

TEST_CASE("optimizer rejects infeasible trials and reports stalls") {
  Objective f;
  // log barrier at x = 0 with minimum at x = 0.01
  f.value = [](const Eigen::VectorXd& x) {
    return x[0] <= 0.0 ? std::numeric_limits<double>::infinity() : 100.0 * x[0] - std::log(x[0]);
  };
  f.gradient = [](const Eigen::VectorXd& x) { return Eigen::VectorXd::Constant(1, 100.0 - 1.0 / x[0]); };
  OptimizerOptions o;
  o.method = OptimizerMethod::GradientDescent;
  o.grad_tol = 1e-6;
  o.max_iterations = 10000;
  const OptimizerResult r = minimize(f, Eigen::VectorXd::Constant(1, 1.0), o);
  CHECK(r.x[0] == doctest::Approx(0.01).epsilon(1e-5));
  CHECK(r.rejected_trials > 0);

  o.max_iterations = 1;
  CHECK_THROWS_AS(minimize(f, Eigen::VectorXd::Constant(1, 1.0), o), OptimizerStallError);
}

TEST_CASE("newton stops at round-off on a singular hessian") {
  // flat along x1, so every Newton step needs a small diagonal shift
  Objective f;
  f.value = [](const Eigen::VectorXd& x) { return 0.5 * (x[0] - 1.0) * (x[0] - 1.0); };
  f.gradient = [](const Eigen::VectorXd& x) { return Eigen::Vector2d(x[0] - 1.0, 0.0).eval(); };
  f.hessian = [](const Eigen::VectorXd&) {
    SparseMatrix H(2, 2);
    H.insert(0, 0) = 1.0;
    return H;
  };
  OptimizerOptions o;
  o.grad_tol = 0.0;
  o.max_iterations = 50;
  const OptimizerResult r = minimize(f, Eigen::Vector2d(3.0, 0.5), o);
  CHECK(r.roundoff_stop);
  // decrement (x - 1)^2 <= 4 eps (1 + f)
  CHECK(std::abs(r.x[0] - 1.0) <= std::sqrt(8.0 * std::numeric_limits<double>::epsilon()));
  CHECK(r.x[1] == 0.5);
}

TEST_CASE("stationary solid stays put") {
  SspParams p = ssp_params();
  const SolidSolver s(kSolid, kBox, MaterialParams{}, ContactParams{0.05}, p);
  const DeformationField eta = stationary(s);
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(eta.positions.size());
  const MmStepResult r = s.mm_step(eta, zero);
  CHECK((r.state.positions - eta.positions).norm() <= 1e-9);
  CHECK(r.record.estimate_holds(p.dt(), p.h));

  const SspResult traj = s.solve_ssp(eta, constant_trace(zero, p.M, 0.0, p.h));
  REQUIRE(traj.states.size() == static_cast<std::size_t>(p.M + 1));
  for (const DeformationField& st : traj.states) CHECK((st.positions - eta.positions).norm() <= 1e-9);
}

TEST_CASE("constant coupling velocity drags the solid") {
  const SspParams p = ssp_params();
  const SolidSolver s(kSolid, kBox, MaterialParams{}, ContactParams{0.05}, p);
  const DeformationField eta = stationary(s);
  Eigen::VectorXd c(eta.positions.size());
  for (int k = 0; k < eta.node_count(); ++k) c.segment<2>(2 * k) = Vec2(0.6, -0.8);
  const SspResult traj = s.solve_ssp(eta, constant_trace(c, p.M, 0.0, p.h));
  double last = 0.0;
  for (const DeformationField& st : traj.states) {
    const double along = (center(s, st.positions) - center(s, eta.positions)).dot(Vec2(0.6, -0.8));
    CHECK(along >= last);
    last = along;
  }
  CHECK(last > 0.0);
}

TEST_CASE("every step satisfies the minimizing-movement estimate") {
  const SspParams p = ssp_params();
  const FluidGrid box(Vec2(0, 0), Vec2(1, 1), {16, 16});
  const SolidSolver s(SolidGrid(Vec2(0.3, 0.1), Vec2(0.4, 0.4), {9, 9}), box, MaterialParams{}, ContactParams{0.05},
                      p);
  std::mt19937_64 rng(12);
  DeformationField eta(s.disc().grid());
  CouplingTrace trace;
  trace.h = p.h;
  for (int k = 0; k < p.M; ++k) trace.U.push_back(fsi::test::random_vector(static_cast<int>(eta.positions.size()), rng) +
                                                   Eigen::VectorXd::Constant(eta.positions.size(), -0.5));
  for (int window = 0; window < 3; ++window) {
    const SspResult r = s.solve_ssp(eta, trace);
    for (std::size_t k = 0; k < r.records.size(); ++k) {
      const MmStepRecord& rec = r.records[k];
      CHECK(rec.estimate_holds(p.dt(), p.h));
      CHECK(rec.J_end <= rec.J_start);
      if (k > 0) {
        CHECK(rec.E_before == r.records[k - 1].E_after);
        CHECK(rec.K_before == r.records[k - 1].K_after);
      }
    }
    for (const DeformationField& st : r.states) {
      CHECK(deformation_gradient(st).min_det > 0.0);
      CHECK(std::isfinite(s.K(st.positions)));
    }
    eta = r.states.back();
    trace.t0 += p.h;
  }
}

TEST_CASE("solid solver is deterministic") {
  const SspParams p = ssp_params();
  const SolidSolver s(kSolid, kBox, MaterialParams{}, ContactParams{0.05}, p);
  std::mt19937_64 rng(1);
  const DeformationField eta = fsi::test::random_state(kSolid, rng);
  Eigen::VectorXd c = Eigen::VectorXd::Constant(eta.positions.size(), 0.3);
  const SspResult a = s.solve_ssp(eta, constant_trace(c, p.M, 0.0, p.h));
  const SspResult b = s.solve_ssp(eta, constant_trace(c, p.M, 0.0, p.h));
  for (std::size_t k = 0; k < a.states.size(); ++k) CHECK(a.states[k].positions == b.states[k].positions);
}

TEST_CASE("gradient descent variant reaches the same step") {
  SspParams p = ssp_params();
  p.M = 1;
  p.rel_tol = 1e-6;
  p.max_iterations = 20000;
  const SolidGrid g(Vec2(-0.5, -0.5), Vec2(1, 1), {5, 5});
  MaterialParams m;
  m.k0 = 3;
  const SolidSolver newton(g, kBox, m, ContactParams{0.05}, p);
  p.method = OptimizerMethod::GradientDescent;
  const SolidSolver gd(g, kBox, m, ContactParams{0.05}, p);
  const DeformationField eta(g);
  const Eigen::VectorXd c = Eigen::VectorXd::Constant(eta.positions.size(), 0.2);
  const MmStepResult a = newton.mm_step(eta, c), b = gd.mm_step(eta, c);
  CHECK(b.record.J_end == doctest::Approx(a.record.J_end).epsilon(1e-8));
  CHECK(b.record.estimate_holds(p.dt(), p.h));
}

TEST_CASE("ssp parameter checks") {
  SspParams p;
  CHECK_NOTHROW(p.validate());
  p.M = 0;
  CHECK_THROWS_AS(p.validate(), InvalidArgumentError);
  const SolidSolver s(kSolid, kBox, MaterialParams{}, ContactParams{0.05}, ssp_params());
  CHECK_THROWS_AS(s.mm_step(DeformationField(kSolid), Eigen::VectorXd::Zero(3)), InvalidArgumentError);
}
