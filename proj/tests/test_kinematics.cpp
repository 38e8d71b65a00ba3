#include <doctest.h>

#include <cmath>
#include <random>

#include <Eigen/LU>

#include "fsi/error.hpp"
#include "fsi/kinematics.hpp"
#include "support.hpp"

using namespace fsi;
using fsi::test::unit_solid;

namespace {

DeformationField affine(const SolidGrid& g, const Mat2& A, const Vec2& b = Vec2::Zero()) {
  return DeformationField::from_map(g, [&](const Vec2& X) { return Vec2(A * X + b); });
}

}  // namespace

TEST_CASE("deformation gradient of identity, dilation and reflection") {
  const SolidGrid g = unit_solid(9);
  const DeformationGradient id = deformation_gradient(DeformationField(g));
  for (int k = 0; k < g.node_count(); ++k) {
    CHECK(id.F(k, 0) == doctest::Approx(1.0));
    CHECK(std::abs(id.F(k, 1)) < 1e-12);
    CHECK(std::abs(id.F(k, 2)) < 1e-12);
    CHECK(id.F(k, 3) == doctest::Approx(1.0));
    CHECK(id.det(k) == doctest::Approx(1.0));
  }
  const DeformationGradient dil = deformation_gradient(affine(g, 2.0 * Mat2::Identity()));
  for (int k = 0; k < g.node_count(); ++k) {
    CHECK(dil.F(k, 0) == doctest::Approx(2.0));
    CHECK(dil.F(k, 3) == doctest::Approx(2.0));
    CHECK(dil.det(k) == doctest::Approx(4.0));
  }
  CHECK(dil.min_det == doctest::Approx(4.0));
  Mat2 swap;
  swap << 0, 1, 1, 0;
  const DeformationGradient refl = deformation_gradient(affine(g, swap));
  CHECK(refl.min_det == doctest::Approx(-1.0));
}

TEST_CASE("affine det is exact at every node") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-0.4, 0.4);
  for (int trial = 0; trial < 5; ++trial) {
    Mat2 A;
    A << 1 + u(rng), u(rng), u(rng), 1 + u(rng);
    const DeformationGradient d = deformation_gradient(affine(unit_solid(7), A, Vec2(u(rng), u(rng))));
    for (int k = 0; k < d.det.points(); ++k) CHECK(std::abs(d.det(k) - A.determinant()) <= 1e-12);
  }
}

TEST_CASE("Ciarlet-Necas residual") {
  const SolidGrid g = unit_solid(17);
  const double hp = 1.0 / 256;
  CHECK(cn_residual(DeformationField(g), 256) <= 2.0 * hp * 4.0);
  CHECK(cn_residual(affine(g, 2.0 * Mat2::Identity()), 256) <= 2.0 * (2.0 / 256) * 8.0);

  Mat2 swap;
  swap << 0, 1, 1, 0;
  CHECK_THROWS_AS(cn_residual(affine(g, swap), 64), DegenerateJacobianError);
}

TEST_CASE("Ciarlet-Necas residual measures the overlap of a folded strip") {
  fsi::test::Horseshoe shoe;
  shoe.g = 0.02;
  shoe.drop = 0.07;
  const SolidGrid strip(Vec2(0, 0), Vec2(1.0, shoe.w), {129, 9});
  const DeformationField d = DeformationField::from_map(strip, shoe);
  REQUIRE(deformation_gradient(d).min_det > 0.0);
  const double A = shoe.overlap_area();
  CHECK(cn_residual(d, 256) == doctest::Approx(A).epsilon(0.05));
}

TEST_CASE("Ciarlet-Necas residual converges at first order for an injective map") {
  Mat2 A;
  A << std::cos(0.3), -std::sin(0.3), std::sin(0.3), std::cos(0.3);
  A *= 1.1;
  A(0, 1) += 0.15;
  const DeformationField d = affine(unit_solid(17), A);
  const int probes[] = {32, 64, 128, 256, 512};
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  for (int p : probes) {
    const double x = std::log(1.0 / p);
    double worst = 0.0;
    // envelope over a few offsets of the probe grid
    for (int q = p; q <= p + 3; ++q) worst = std::max(worst, cn_residual(d, q));
    const double y = std::log(worst);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++n;
  }
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  MESSAGE("cn residual slope " << slope);
  CHECK(slope >= 0.9);
}

TEST_CASE("rasterization of an aligned square") {
  const FluidGrid box(Vec2(0, 0), Vec2(1, 1), {16, 16});
  const SolidGrid g(Vec2(0.25, 0.25), Vec2(0.5, 0.5), {9, 9});
  const SolidMask m = rasterize_solid(DeformationField(g), box);
  for (int c = 0; c < box.cell_count(); ++c) {
    const Vec2 x = box.cell_center(c);
    const bool inside = x.x() > 0.25 && x.x() < 0.75 && x.y() > 0.25 && x.y() < 0.75;
    CHECK(m.coverage[static_cast<std::size_t>(c)] == doctest::Approx(inside ? 1.0 : 0.0).epsilon(1e-9));
    if (inside) CHECK(m.weight[static_cast<std::size_t>(c)] == doctest::Approx(1.0).epsilon(1e-9));
    if (!inside) CHECK(m.weight[static_cast<std::size_t>(c)] == 0.0);
  }
  CHECK(m.covered_volume() == doctest::Approx(0.25).epsilon(1e-9));
}

TEST_CASE("rasterization far from a window and under dilation") {
  const FluidGrid box(Vec2(0, 0), Vec2(1, 1), {16, 16});
  const SolidGrid g(Vec2(0.1, 0.1), Vec2(0.2, 0.2), {9, 9});
  const SolidMask m = rasterize_solid(DeformationField(g), box);
  for (int c = 0; c < box.cell_count(); ++c)
    if (box.cell_center(c).x() > 0.5) CHECK(m.coverage[static_cast<std::size_t>(c)] == 0.0);

  const DeformationField dil = affine(g, 2.0 * Mat2::Identity());
  const SolidMask md = rasterize_solid(dil, box);
  int covered = 0;
  for (int c = 0; c < box.cell_count(); ++c)
    if (md.coverage[static_cast<std::size_t>(c)] > 0.0) {
      CHECK(md.weight[static_cast<std::size_t>(c)] == doctest::Approx(0.25).epsilon(0.02));
      ++covered;
    }
  CHECK(covered > 0);
}

TEST_CASE("coverage volume matches the integrated Jacobian") {
  std::mt19937_64 rng(5);
  const FluidGrid box(Vec2(-1, -1), Vec2(3, 3), {32, 32});
  const DeformationField d = fsi::test::random_state(unit_solid(17), rng);
  const SolidMask m = rasterize_solid(d, box);
  const double vol = m.covered_volume();
  const double tol = cn_residual(d, 256) + 2.0 * box.spacing().maxCoeff() * image_perimeter(d) / 8.0;
  CHECK(std::abs(vol - integrated_jacobian(d)) <= tol);
}

TEST_CASE("inverse map") {
  const SolidGrid g = unit_solid(9);
  const auto id = inverse_map(DeformationField(g), Vec2(0.3, 0.7));
  REQUIRE(id.has_value());
  CHECK((*id - Vec2(0.3, 0.7)).norm() < 1e-10);
  const auto dil = inverse_map(affine(g, 2.0 * Mat2::Identity()), Vec2(1.0, 0.5));
  REQUIRE(dil.has_value());
  CHECK((*dil - Vec2(0.5, 0.25)).norm() < 1e-10);
  CHECK_FALSE(inverse_map(DeformationField(g), Vec2(1.5, 0.5)).has_value());
}

TEST_CASE("inverse map undoes the forward map at quadrature points") {
  std::mt19937_64 rng(9);
  const SolidGrid g = unit_solid(17);
  const DeformationField d = fsi::test::random_state(g, rng);
  const double h = g.spacing().minCoeff();
  for (int k = 0; k < g.node_count(); k += 7) {
    const Vec2 X = g.node_position(k);
    const auto back = inverse_map(d, d.position(k));
    REQUIRE(back.has_value());
    CHECK((*back - X).norm() <= 1e-8 * h);
  }
}

TEST_CASE("admissibility") {
  const FluidGrid box(Vec2(0, 0), Vec2(1, 1), {16, 16});
  const SolidGrid g(Vec2(0.3, 0.3), Vec2(0.4, 0.4), {9, 9});
  const AdmissibilityReport ok = admissibility_check(DeformationField(g), box);
  CHECK(ok.admissible);
  CHECK(ok.contained);

  Mat2 swap;
  swap << 0, 1, 1, 0;
  const AdmissibilityReport refl = admissibility_check(affine(g, swap), box);
  CHECK_FALSE(refl.admissible);
  CHECK(refl.min_det < 0.0);

  const AdmissibilityReport out = admissibility_check(affine(g, 3.0 * Mat2::Identity()), box);
  CHECK_FALSE(out.contained);
  CHECK_FALSE(out.admissible);
}
