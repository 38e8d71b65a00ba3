#include <doctest.h>

#include <random>

#include "fsi/error.hpp"
#include "fsi/grid.hpp"

using namespace fsi;

namespace {

ScalarField sample(const Lattice& l, double (*f)(const Vec2&)) {
  ScalarField s(l);
  for (int k = 0; k < l.size(); ++k) s(k) = f(l.point(k));
  return s;
}

Lattice unit_nodes(int n) { return SolidGrid(Vec2(0, 0), Vec2(1, 1), {n, n}).nodes(); }

}  // namespace

TEST_CASE("grid spacing and layout") {
  const SolidGrid s(Vec2(0, 0), Vec2(2, 1), {5, 9});
  CHECK(s.spacing().x() == doctest::Approx(0.5));
  CHECK(s.spacing().y() == doctest::Approx(0.125));
  CHECK_THROWS_AS(SolidGrid(Vec2(0, 0), Vec2(1, 1), {3, 5}), ResolutionError);

  const FluidGrid f(Vec2(0, 0), Vec2(1, 1), {8, 16});
  CHECK(f.x_faces().size() == 9 * 16);
  CHECK(f.y_faces().size() == 8 * 17);
  CHECK(f.cell_volume() == doctest::Approx(1.0 / 128));
  CHECK_THROWS_AS(FluidGrid(Vec2(0, 0), Vec2(1, 1), {7, 8}), ResolutionError);
}

TEST_CASE("gradient of a linear field") {
  const ScalarField f = sample(unit_nodes(9), [](const Vec2& p) { return 2.0 * p.x(); });
  const VectorField g = gradient(f);
  for (int k = 0; k < g.points(); ++k) {
    CHECK(g(k, 0) == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(std::abs(g(k, 1)) < 1e-12);
  }
}

TEST_CASE("constant fields differentiate to zero") {
  const ScalarField f = sample(unit_nodes(7), [](const Vec2&) { return 3.25; });
  for (double v : gradient(f).values) CHECK(v == 0.0);
  for (double v : hessian(f).values) CHECK(v == 0.0);
  for (double v : laplacian(f).values) CHECK(v == 0.0);
}

TEST_CASE("hessian of x^2 is exact") {
  const ScalarField f = sample(unit_nodes(9), [](const Vec2& p) { return p.x() * p.x(); });
  const TensorField h = hessian(f);
  for (int k = 0; k < h.points(); ++k) {
    CHECK(h(k, 0) == doctest::Approx(2.0).epsilon(1e-10));
    CHECK(std::abs(h(k, 1)) < 1e-10);
    CHECK(std::abs(h(k, 2)) < 1e-10);
    CHECK(std::abs(h(k, 3)) < 1e-10);
  }
}

TEST_CASE("second order stencils are exact on quadratics at every node") {
  const ScalarField f = sample(unit_nodes(6), [](const Vec2& p) { return 1 + p.x() - 3 * p.y() + p.x() * p.y() + 2 * p.y() * p.y(); });
  const VectorField g = gradient(f);
  const Lattice l = f.lattice;
  for (int k = 0; k < l.size(); ++k) {
    const Vec2 p = l.point(k);
    CHECK(g(k, 0) == doctest::Approx(1 + p.y()).epsilon(1e-11));
    CHECK(g(k, 1) == doctest::Approx(-3 + p.x() + 4 * p.y()).epsilon(1e-11));
  }
  const ScalarField lap = laplacian(f);
  for (double v : lap.values) CHECK(v == doctest::Approx(4.0).epsilon(1e-9));
}

TEST_CASE("differentiate is linear") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-1, 1);
  const Lattice l = unit_nodes(8);
  ScalarField a(l), b(l), c(l);
  const double s = 1.7, t = -0.3;
  for (int k = 0; k < l.size(); ++k) {
    a(k) = u(rng);
    b(k) = u(rng);
    c(k) = s * a(k) + t * b(k);
  }
  const TensorField ha = hessian(a), hb = hessian(b), hc = hessian(c);
  for (std::size_t i = 0; i < hc.values.size(); ++i)
    CHECK(hc.values[i] == doctest::Approx(s * ha.values[i] + t * hb.values[i]).epsilon(1e-12).scale(1e3));
}

TEST_CASE("stencil underflow") {
  const ScalarField f(SolidGrid(Vec2(0, 0), Vec2(1, 1), {4, 4}).nodes());
  CHECK_NOTHROW(gradient(f));
  CHECK_THROWS_AS(hessian(f), StencilUnderflowError);
}

TEST_CASE("trapezoid quadrature") {
  CHECK(integrate(sample(unit_nodes(5), [](const Vec2&) { return 1.0; })) == doctest::Approx(1.0).epsilon(1e-14));
  const Lattice big = SolidGrid(Vec2(0, 0), Vec2(2, 2), {9, 9}).nodes();
  CHECK(integrate(sample(big, [](const Vec2&) { return 3.0; })) == doctest::Approx(12.0).epsilon(1e-14));
  const double lin = integrate(sample(unit_nodes(11), [](const Vec2& p) { return p.x(); }));
  CHECK(std::abs(lin - 0.5) <= 1e-12);
  const double cells = integrate(sample(FluidGrid(Vec2(0, 0), Vec2(1, 1), {8, 8}).cells(), [](const Vec2& p) { return p.x(); }));
  CHECK(std::abs(cells - 0.5) <= 1e-12);
}

TEST_CASE("integration is bitwise deterministic and positive") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0, 1);
  ScalarField f(unit_nodes(17));
  for (double& v : f.values) v = u(rng);
  const double a = integrate(f), b = integrate(f);
  CHECK(a == b);
  CHECK(a >= 0.0);
}

TEST_CASE("non-finite values are rejected") {
  ScalarField f(unit_nodes(5));
  f(3) = std::nan("");
  CHECK_THROWS_AS(integrate(f), InvalidArgumentError);
}
