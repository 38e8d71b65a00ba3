#include "fsi/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <Eigen/LU>

#include "fsi/contact.hpp"
#include "fsi/error.hpp"

namespace fsi {

namespace {

double segment_distance(const Vec2& p, const Vec2& a, const Vec2& b) {
  const Vec2 ab = b - a;
  const double len2 = ab.squaredNorm();
  const double t = len2 > 0.0 ? std::clamp((p - a).dot(ab) / len2, 0.0, 1.0) : 0.0;
  return (p - (a + t * ab)).norm();
}

double ref_separation(const SolidGrid& g, const ClassificationTolerances& tol) {
  if (tol.ref_separation >= 0.0) return tol.ref_separation;
  return 4.0 * g.spacing().maxCoeff();
}

}  // namespace

int ContactClassification::count(ContactLabel l) const {
  return static_cast<int>(std::count(labels.begin(), labels.end(), l));
}

std::vector<int> boundary_nodes(const SolidGrid& g) {
  const int nx = g.resolution[0], ny = g.resolution[1];
  std::vector<int> out;
  for (int i = 0; i < nx; ++i) out.push_back(g.node(i, 0));
  for (int j = 1; j < ny; ++j) out.push_back(g.node(nx - 1, j));
  for (int i = nx - 2; i >= 0; --i) out.push_back(g.node(i, ny - 1));
  for (int j = ny - 2; j >= 1; --j) out.push_back(g.node(0, j));
  return out;
}

ContactClassification classify_boundary(const DeformationField& state, const FluidGrid& container,
                                        const ClassificationTolerances& tol) {
  if (!(tol.wall >= 0.0) || !(tol.self > 0.0)) throw InvalidArgumentError("classification tolerances must be positive");
  ContactClassification c;
  c.nodes = boundary_nodes(state.grid);
  c.wall_tol = tol.wall;
  c.self_tol = tol.self;
  c.ref_separation = ref_separation(state.grid, tol);
  const std::size_t n = c.nodes.size();
  std::vector<Vec2> pos(n);
  for (std::size_t a = 0; a < n; ++a) pos[a] = state.position(c.nodes[a]);

  c.partners.assign(n, {});
  const double radius = std::nextafter(tol.self, std::numeric_limits<double>::infinity());
  const SpatialHash hash(radius, pos);
  for (const auto& [a, b] : hash.pairs_within(radius)) {
    const Vec2 ra = state.grid.node_position(c.nodes[static_cast<std::size_t>(a)]);
    const Vec2 rb = state.grid.node_position(c.nodes[static_cast<std::size_t>(b)]);
    if ((ra - rb).norm() < c.ref_separation) continue;
    c.partners[static_cast<std::size_t>(a)].push_back(b);
    c.partners[static_cast<std::size_t>(b)].push_back(a);
  }
  c.labels.assign(n, ContactLabel::I);
  for (std::size_t a = 0; a < n; ++a) {
    std::sort(c.partners[a].begin(), c.partners[a].end());
    if (wall_distance(container, pos[a]) <= tol.wall)
      c.labels[a] = ContactLabel::C;
    else if (!c.partners[a].empty())
      c.labels[a] = ContactLabel::N;
  }
  return c;
}

double interface_area(const DeformationField& state, const ContactClassification& c) {
  const DeformationGradient dg = deformation_gradient(state);
  const std::size_t n = c.nodes.size();
  double area = 0.0;
  for (std::size_t e = 0; e < n; ++e) {
    const std::size_t a = e, b = (e + 1) % n;
    const Vec2 ra = state.grid.node_position(c.nodes[a]);
    const Vec2 rb = state.grid.node_position(c.nodes[b]);
    const Vec2 t = rb - ra;
    const double len = t.norm();
    const Vec2 normal(t.y() / len, -t.x() / len);  // outward for a counter-clockwise loop
    for (const std::size_t q : {a, b}) {
      if (c.labels[q] != ContactLabel::I) continue;
      const int k = c.nodes[q];
      Mat2 F;
      F << dg.F(k, 0), dg.F(k, 1), dg.F(k, 2), dg.F(k, 3);
      const double det = F.determinant();
      if (!(det > 0.0))
        throw DegenerateJacobianError("det F = " + std::to_string(det) + " at boundary node " + std::to_string(k));
      area += 0.5 * len * det * (F.inverse().transpose() * normal).norm();
    }
  }
  return area;
}

LemmaReport lemma_checks(const DeformationField& state, const ContactClassification& c) {
  LemmaReport r;
  r.injective_on_C.name = "injective on C";
  r.multiplicity.name = "multiplicity at most 2";
  r.partition.name = "labels partition the boundary";
  const std::size_t n = c.nodes.size();

  std::vector<int> seen(static_cast<std::size_t>(state.node_count()), 0);
  for (const int k : c.nodes) ++seen[static_cast<std::size_t>(k)];
  if (c.labels.size() != n) r.partition.passed = false;
  for (std::size_t a = 0; a < n && a < c.labels.size(); ++a) {
    const ContactLabel l = c.labels[a];
    if (seen[static_cast<std::size_t>(c.nodes[a])] != 1 ||
        (l != ContactLabel::C && l != ContactLabel::I && l != ContactLabel::N)) {
      r.partition.passed = false;
      r.partition.witness.push_back(c.nodes[a]);
    }
  }

  for (std::size_t a = 0; a < n; ++a) {
    if (c.labels[a] != ContactLabel::C) continue;
    for (const int b : c.partners[a])
      if (static_cast<std::size_t>(b) > a && c.labels[static_cast<std::size_t>(b)] == ContactLabel::C) {
        r.injective_on_C.passed = false;
        r.injective_on_C.witness.push_back(c.nodes[a]);
        r.injective_on_C.witness.push_back(c.nodes[static_cast<std::size_t>(b)]);
      }
  }

  for (std::size_t a = 0; a < n; ++a) {
    if (c.labels[a] != ContactLabel::N) continue;
    // partners closer than ref_separation in the reference are one preimage
    const std::vector<int>& p = c.partners[a];
    std::vector<int> cluster(p.size());
    int clusters = 0;
    for (std::size_t i = 0; i < p.size(); ++i) cluster[i] = -1;
    for (std::size_t i = 0; i < p.size(); ++i) {
      if (cluster[i] >= 0) continue;
      cluster[i] = clusters;
      std::vector<std::size_t> stack{i};
      while (!stack.empty()) {
        const std::size_t s = stack.back();
        stack.pop_back();
        const Vec2 rs = state.grid.node_position(c.nodes[static_cast<std::size_t>(p[s])]);
        for (std::size_t j = 0; j < p.size(); ++j)
          if (cluster[j] < 0 &&
              (state.grid.node_position(c.nodes[static_cast<std::size_t>(p[j])]) - rs).norm() < c.ref_separation) {
            cluster[j] = clusters;
            stack.push_back(j);
          }
      }
      ++clusters;
    }
    const int mult = 1 + clusters;
    r.max_multiplicity = std::max(r.max_multiplicity, mult);
    if (mult > 2) {
      r.multiplicity.passed = false;
      if (r.multiplicity.witness.empty()) {
        r.multiplicity.witness.push_back(c.nodes[a]);
        std::vector<int> first(static_cast<std::size_t>(clusters), -1);
        for (std::size_t i = 0; i < p.size(); ++i)
          if (first[static_cast<std::size_t>(cluster[i])] < 0) first[static_cast<std::size_t>(cluster[i])] = p[i];
        for (const int q : first) r.multiplicity.witness.push_back(c.nodes[static_cast<std::size_t>(q)]);
      }
    }
  }
  return r;
}

std::vector<double> collar_pressure_profile(const FluidState& fluid, const DeformationField& solid,
                                            const SolidMask& mask, const FluidParams& params,
                                            const std::vector<double>& widths) {
  const FluidGrid& g = fluid.grid;
  const std::vector<int> loop = boundary_nodes(solid.grid);
  std::vector<Vec2> poly(loop.size());
  for (std::size_t a = 0; a < loop.size(); ++a) poly[a] = solid.position(loop[a]);
  std::vector<double> out(widths.size(), 0.0);
  const double vol = g.cell_volume();
  for (int c = 0; c < g.cell_count(); ++c) {
    const double chi = mask.coverage.empty() ? 0.0 : mask.coverage[static_cast<std::size_t>(c)];
    if (chi >= 1.0) continue;
    const Vec2 x = g.cell_center(c);
    double d = wall_distance(g, x);
    for (std::size_t a = 0; a < poly.size(); ++a)
      d = std::min(d, segment_distance(x, poly[a], poly[(a + 1) % poly.size()]));
    const double w = (1.0 - chi) * vol * params.pressure(fluid.rho[c]);
    for (std::size_t k = 0; k < widths.size(); ++k)
      if (d < widths[k]) out[k] += w;
  }
  return out;
}

CantorProfile fat_cantor_profile(int levels, int resolution) {
  if (levels < 1) throw InvalidArgumentError("Cantor profile needs at least one level");
  if (levels > 40 || static_cast<double>(resolution) < std::ldexp(1.0, levels + 1))
    throw ResolutionError("grid of " + std::to_string(resolution) + " cells cannot resolve " +
                          std::to_string(levels) + " levels (need >= 2^(L+1))");
  CantorProfile p;
  p.levels = levels;
  struct Gap {
    double lo, hi;
  };
  std::vector<Gap> gaps{{0.0, 1.0}};
  for (int k = 0; k < levels; ++k) {
    const double w = std::ldexp(1.0, -2 * (k + 1));
    p.widths.push_back(w);
    p.amplitudes.push_back(std::ldexp(1.0, -k));
    std::vector<Gap> next;
    next.reserve(2 * gaps.size());
    for (const Gap& gap : gaps) {
      const double mid = 0.5 * (gap.lo + gap.hi);
      p.lo.push_back(mid - 0.5 * w);
      p.hi.push_back(mid + 0.5 * w);
      p.level_of.push_back(k);
      next.push_back({gap.lo, mid - 0.5 * w});
      next.push_back({mid + 0.5 * w, gap.hi});
    }
    gaps = std::move(next);
    p.exact_positivity += std::ldexp(w, k);
  }
  std::vector<std::size_t> order(p.lo.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return p.lo[a] < p.lo[b]; });
  auto permute = [&](auto& v) {
    auto copy = v;
    for (std::size_t i = 0; i < order.size(); ++i) v[i] = copy[order[i]];
  };
  permute(p.lo);
  permute(p.hi);
  permute(p.level_of);

  p.f.assign(static_cast<std::size_t>(resolution), 0.0);
  const double dx = 1.0 / resolution;
  std::size_t positive = 0;
  for (int i = 0; i < resolution; ++i) {
    const double x = (i + 0.5) * dx;
    const auto it = std::upper_bound(p.lo.begin(), p.lo.end(), x);
    if (it == p.lo.begin()) continue;
    const std::size_t b = static_cast<std::size_t>(it - p.lo.begin()) - 1;
    if (!(x < p.hi[b])) continue;
    const double half = 0.5 * (p.hi[b] - p.lo[b]);
    const double z = (x - (p.lo[b] + half)) / half;
    const double g = std::exp(-1.0 / (1.0 - z * z));
    p.f[static_cast<std::size_t>(i)] = p.amplitudes[static_cast<std::size_t>(p.level_of[b])] * g;
    // exp underflows near the support ends, where f is still positive
    if (z * z < 1.0) ++positive;
  }
  p.positivity_measure = static_cast<double>(positive) * dx;
  p.complement_measure = 1.0 - p.positivity_measure;
  return p;
}

DeformationField make_fixture(Fixture f, const FluidGrid& container, double tol) {
  const Vec2 lo = container.origin, ext = container.extent;
  const Vec2 mid = lo + 0.5 * ext;
  switch (f) {
    case Fixture::Separated:
    case Fixture::WallFlush: {
      const double side = 0.25 * ext.minCoeff();
      const SolidGrid g(Vec2::Zero(), Vec2(side, side), {17, 17});
      const Vec2 shift = f == Fixture::Separated ? Vec2(mid - Vec2(0.5 * side, 0.5 * side))
                                                 : Vec2(lo.x() + 0.5 * tol, mid.y() - 0.5 * side);
      return DeformationField::from_map(g, [&](const Vec2& X) { return Vec2(X + shift); });
    }
    case Fixture::Fold: {
      // horseshoe: two straight arms joined by a half annulus, inner faces 2r apart
      const double s = 0.5 * ext.minCoeff();
      const double len = 2.0 * s, w = s / 8.0;
      const SolidGrid g(Vec2::Zero(), Vec2(len, w), {65, 9});
      const double bend = w, arm = 0.5 * (len - bend), r = 0.25 * tol;
      const Vec2 shift = mid + Vec2(0.5 * arm, 0.0);
      return DeformationField::from_map(g, [&](const Vec2& X) {
        const double rho = r + w - X.y();
        Vec2 y;
        if (X.x() <= arm) {
          y = Vec2(X.x() - arm, -rho);
        } else if (X.x() < arm + bend) {
          const double th = std::numbers::pi * (X.x() - arm) / bend - 0.5 * std::numbers::pi;
          y = Vec2(rho * std::cos(th), rho * std::sin(th));
        } else {
          y = Vec2(arm + bend - X.x(), rho);
        }
        return Vec2(y + shift);
      });
    }
    case Fixture::TriplePoint: {
      // a thin strip creased twice so three layers of both faces stack
      const double s = 0.5 * ext.minCoeff();
      const SolidGrid g(Vec2::Zero(), Vec2(1.0, 0.25), {25, 5});
      const double thin = 0.5 * tol / 0.25;
      const Vec2 shift = mid - Vec2(0.5 * s / 3.0, 0.0);
      return DeformationField::from_map(g, [&](const Vec2& X) {
        const double t = 3.0 * X.x();
        const double fold = t <= 1.0 ? t : (t <= 2.0 ? 2.0 - t : t - 2.0);
        return Vec2(shift + Vec2(fold * s / 3.0, thin * X.y()));
      });
    }
  }
  throw InvalidArgumentError("unknown fixture");
}

Fixture fixture_from_name(const std::string& name) {
  if (name == "separated") return Fixture::Separated;
  if (name == "wall-flush") return Fixture::WallFlush;
  if (name == "fold") return Fixture::Fold;
  if (name == "triple-point") return Fixture::TriplePoint;
  throw InvalidArgumentError("unknown fixture '" + name + "' (separated, wall-flush, fold, triple-point)");
}

}  // namespace fsi
