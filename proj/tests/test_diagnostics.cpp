#include <doctest.h>

#include <cmath>

#include "fsi/diagnostics.hpp"
#include "fsi/error.hpp"
#include "support.hpp"

using namespace fsi;

namespace {

const FluidGrid kBox(Vec2(0, 0), Vec2(1, 1), {32, 32});

}  // namespace

TEST_CASE("boundary loop") {
  const SolidGrid g(Vec2(0, 0), Vec2(1, 1), {5, 4});
  const std::vector<int> b = boundary_nodes(g);
  CHECK(b.size() == 2 * (5 + 4) - 4);
  CHECK(b.front() == g.node(0, 0));
  CHECK(b[1] == g.node(1, 0));
  CHECK(b.back() == g.node(0, 1));
}

TEST_CASE("fixture classification") {
  SUBCASE("separated") {
    const DeformationField d = make_fixture(Fixture::Separated, kBox);
    const ContactClassification c = classify_boundary(d, kBox);
    CHECK(c.count(ContactLabel::I) == static_cast<int>(c.nodes.size()));
    CHECK(lemma_checks(d, c).all_passed());
  }
  SUBCASE("wall flush") {
    const DeformationField d = make_fixture(Fixture::WallFlush, kBox);
    const ContactClassification c = classify_boundary(d, kBox);
    CHECK(c.count(ContactLabel::C) == 17);
    CHECK(c.count(ContactLabel::N) == 0);
    CHECK(lemma_checks(d, c).all_passed());
  }
  SUBCASE("fold") {
    const DeformationField d = make_fixture(Fixture::Fold, kBox);
    const ContactClassification c = classify_boundary(d, kBox);
    CHECK(c.count(ContactLabel::N) > 0);
    CHECK(c.count(ContactLabel::C) == 0);
    const LemmaReport r = lemma_checks(d, c);
    CHECK(r.all_passed());
    CHECK(r.max_multiplicity == 2);
  }
  SUBCASE("triple point") {
    const DeformationField d = make_fixture(Fixture::TriplePoint, kBox);
    const ContactClassification c = classify_boundary(d, kBox);
    const LemmaReport r = lemma_checks(d, c);
    CHECK_FALSE(r.multiplicity.passed);
    CHECK(r.max_multiplicity >= 3);
    CHECK(r.multiplicity.witness.size() >= 3);
    CHECK(r.partition.passed);
  }
  CHECK(fixture_from_name("fold") == Fixture::Fold);
  CHECK_THROWS_AS(fixture_from_name("origami"), InvalidArgumentError);
}

TEST_CASE("interface area") {
  const SolidGrid g(Vec2(0.25, 0.25), Vec2(0.5, 0.5), {17, 17});
  const DeformationField id(g);
  CHECK(interface_area(id, classify_boundary(id, kBox)) == doctest::Approx(2.0).epsilon(1e-10));
  CHECK(std::abs(interface_area(id, classify_boundary(id, kBox)) - 2.0) <= 1e-10);

  const FluidGrid big(Vec2(-2, -2), Vec2(4, 4), {16, 16});
  const DeformationField unit(fsi::test::unit_solid(9));
  const DeformationField twice =
      DeformationField::from_map(unit.grid, [](const Vec2& X) { return Vec2(2.0 * X - Vec2(1.0, 1.0)); });
  CHECK(interface_area(unit, classify_boundary(unit, big)) == doctest::Approx(4.0).epsilon(1e-12));
  CHECK(interface_area(twice, classify_boundary(twice, big)) == doctest::Approx(8.0).epsilon(1e-12));

  // contact nodes drop out of the interface with their half edges
  const DeformationField flush = make_fixture(Fixture::WallFlush, kBox);
  const double side = 0.25;
  CHECK(interface_area(flush, classify_boundary(flush, kBox)) ==
        doctest::Approx(3.0 * side - side / 16.0).epsilon(1e-12));

  const DeformationField sheared =
      DeformationField::from_map(unit.grid, [](const Vec2& X) { return Vec2(X.x() + 0.5 * X.y(), X.y()); });
  CHECK(interface_area(sheared, classify_boundary(sheared, big)) ==
        doctest::Approx(2.0 + 2.0 * std::sqrt(1.25)).epsilon(1e-12));
}

TEST_CASE("collar pressure profile") {
  const DeformationField solid = make_fixture(Fixture::Separated, kBox);
  const SolidMask mask = rasterize_solid(solid, kBox);
  FluidParams p;
  const std::vector<double> widths{0.05, 0.1, 0.2, 2.0};
  CHECK(collar_pressure_profile(FluidState(kBox, 0.0), solid, mask, p, widths) == std::vector<double>(4, 0.0));

  const std::vector<double> c = collar_pressure_profile(FluidState(kBox, 1.0), solid, mask, p, widths);
  for (std::size_t k = 1; k < c.size(); ++k) CHECK(c[k] > c[k - 1]);
  double fluid_volume = 0.0;
  for (const double chi : mask.coverage) fluid_volume += (1.0 - chi) * kBox.cell_volume();
  CHECK(c.back() == doctest::Approx(p.pressure(1.0) * fluid_volume).epsilon(1e-12));
}

TEST_CASE("fat Cantor profile") {
  const CantorProfile one = fat_cantor_profile(1, 1024);
  CHECK(one.exact_positivity == 0.25);
  CHECK(one.positivity_measure == doctest::Approx(0.25).epsilon(1e-12));
  const CantorProfile three = fat_cantor_profile(3, 4096);
  CHECK(three.exact_positivity == 0.4375);
  CHECK(three.lo.size() == 7);
  CHECK(std::abs(three.positivity_measure - three.exact_positivity) <= 2.0 * 7 / 4096);
  for (std::size_t i = 1; i < three.lo.size(); ++i) CHECK(three.hi[i - 1] < three.lo[i]);

  const int n = 1 << 20;
  const CantorProfile twelve = fat_cantor_profile(12, n);
  CHECK(std::abs(twelve.complement_measure - 0.5) <= 1e-3);
  CHECK(std::abs(twelve.positivity_measure - twelve.exact_positivity) <= 2.0 * static_cast<double>(twelve.lo.size()) / n);
  CHECK(*std::min_element(twelve.f.begin(), twelve.f.end()) >= 0.0);

  CHECK_THROWS_AS(fat_cantor_profile(12, 4096), ResolutionError);
  CHECK_THROWS_AS(fat_cantor_profile(0, 4096), InvalidArgumentError);
}
