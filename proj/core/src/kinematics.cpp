#include "fsi/kinematics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/LU>

#include "fsi/error.hpp"

namespace fsi {

namespace {

struct CellCoords {
  int ci, cj;
  double xi, zeta;
};

CellCoords locate(const SolidGrid& g, const Vec2& reference) {
  const Vec2 h = g.spacing();
  const double sx = (reference.x() - g.origin.x()) / h.x();
  const double sy = (reference.y() - g.origin.y()) / h.y();
  const int ci = std::clamp(static_cast<int>(std::floor(sx)), 0, g.resolution[0] - 2);
  const int cj = std::clamp(static_cast<int>(std::floor(sy)), 0, g.resolution[1] - 2);
  return {ci, cj, sx - ci, sy - cj};
}

std::array<Vec2, 4> cell_corners(const DeformationField& s, int ci, int cj) {
  const int n00 = s.grid.node(ci, cj);
  const int nx = s.grid.resolution[0];
  return {s.position(n00), s.position(n00 + 1), s.position(n00 + nx), s.position(n00 + nx + 1)};
}

Vec2 bilinear(const std::array<Vec2, 4>& c, double xi, double zeta) {
  return (1 - xi) * (1 - zeta) * c[0] + xi * (1 - zeta) * c[1] + (1 - xi) * zeta * c[2] +
         xi * zeta * c[3];
}

Mat2 bilinear_jacobian(const std::array<Vec2, 4>& c, double xi, double zeta, const Vec2& h) {
  Mat2 J;
  J.col(0) = ((1 - zeta) * (c[1] - c[0]) + zeta * (c[3] - c[2])) / h.x();
  J.col(1) = ((1 - xi) * (c[2] - c[0]) + xi * (c[3] - c[1])) / h.y();
  return J;
}

double cross(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

bool point_in_polygon(const std::array<Vec2, 4>& poly, const Vec2& p) {
  bool inside = false;
  for (int i = 0, j = 3; i < 4; j = i++) {
    const Vec2& a = poly[i];
    const Vec2& b = poly[j];
    if ((a.y() > p.y()) != (b.y() > p.y())) {
      const double x = a.x() + (p.y() - a.y()) * (b.x() - a.x()) / (b.y() - a.y());
      if (p.x() < x) inside = !inside;
    }
  }
  return inside;
}

}  // namespace

DeformationField::DeformationField(const SolidGrid& g)
    : grid(g), positions(2 * g.node_count()), velocity(Eigen::VectorXd::Zero(2 * g.node_count())) {
  for (int k = 0; k < g.node_count(); ++k) positions.segment<2>(2 * k) = g.node_position(k);
}

DeformationField DeformationField::from_map(const SolidGrid& g,
                                            const std::function<Vec2(const Vec2&)>& map) {
  DeformationField s(g);
  for (int k = 0; k < g.node_count(); ++k) s.positions.segment<2>(2 * k) = map(g.node_position(k));
  return s;
}

DeformationGradient deformation_gradient(const DeformationField& state) {
  VectorField eta(state.grid.nodes(), state.time);
  eta.values.assign(state.positions.data(), state.positions.data() + state.positions.size());
  DeformationGradient out{gradient(eta), ScalarField(state.grid.nodes(), state.time), 0.0};
  double min_det = std::numeric_limits<double>::infinity();
  for (int p = 0; p < out.F.points(); ++p) {
    const double d = out.F(p, 0) * out.F(p, 3) - out.F(p, 1) * out.F(p, 2);
    out.det(p) = d;
    min_det = std::min(min_det, d);
  }
  out.min_det = min_det;
  return out;
}

Vec2 interpolate_position(const DeformationField& state, const Vec2& reference) {
  const CellCoords c = locate(state.grid, reference);
  return bilinear(cell_corners(state, c.ci, c.cj), c.xi, c.zeta);
}

Mat2 interpolate_jacobian(const DeformationField& state, const Vec2& reference) {
  const CellCoords c = locate(state.grid, reference);
  return bilinear_jacobian(cell_corners(state, c.ci, c.cj), c.xi, c.zeta, state.grid.spacing());
}

double integrated_jacobian(const DeformationField& state) {
  double area = 0.0;
  for (int cj = 0; cj + 1 < state.grid.resolution[1]; ++cj)
    for (int ci = 0; ci + 1 < state.grid.resolution[0]; ++ci) {
      const auto c = cell_corners(state, ci, cj);
      // counter-clockwise order 00, 10, 11, 01
      area += 0.5 * (cross(c[0], c[1]) + cross(c[1], c[3]) + cross(c[3], c[2]) + cross(c[2], c[0]));
    }
  return area;
}

double image_perimeter(const DeformationField& state) {
  const int nx = state.grid.resolution[0], ny = state.grid.resolution[1];
  double len = 0.0;
  for (int i = 0; i + 1 < nx; ++i) {
    len += (state.position(state.grid.node(i + 1, 0)) - state.position(state.grid.node(i, 0))).norm();
    len += (state.position(state.grid.node(i + 1, ny - 1)) - state.position(state.grid.node(i, ny - 1)))
               .norm();
  }
  for (int j = 0; j + 1 < ny; ++j) {
    len += (state.position(state.grid.node(0, j + 1)) - state.position(state.grid.node(0, j))).norm();
    len += (state.position(state.grid.node(nx - 1, j + 1)) - state.position(state.grid.node(nx - 1, j)))
               .norm();
  }
  return len;
}

double raster_image_area(const DeformationField& state, int probe_resolution) {
  if (probe_resolution < 1) throw InvalidArgumentError("probe resolution must be positive");
  Vec2 lo = state.position(0), hi = lo;
  for (int k = 1; k < state.node_count(); ++k) {
    lo = lo.cwiseMin(state.position(k));
    hi = hi.cwiseMax(state.position(k));
  }
  const Vec2 size = hi - lo;
  const double hp = std::max(size.x(), size.y()) / probe_resolution;
  if (!(hp > 0.0)) return 0.0;
  const int px = std::max(1, static_cast<int>(std::ceil(size.x() / hp)));
  const int py = std::max(1, static_cast<int>(std::ceil(size.y() / hp)));
  std::vector<char> covered(static_cast<std::size_t>(px) * py, 0);
  for (int cj = 0; cj + 1 < state.grid.resolution[1]; ++cj)
    for (int ci = 0; ci + 1 < state.grid.resolution[0]; ++ci) {
      const auto c = cell_corners(state, ci, cj);
      const std::array<Vec2, 4> poly{c[0], c[1], c[3], c[2]};
      Vec2 qlo = poly[0], qhi = poly[0];
      for (const Vec2& v : poly) {
        qlo = qlo.cwiseMin(v);
        qhi = qhi.cwiseMax(v);
      }
      const int i0 = std::max(0, static_cast<int>(std::floor((qlo.x() - lo.x()) / hp - 0.5)));
      const int i1 = std::min(px - 1, static_cast<int>(std::ceil((qhi.x() - lo.x()) / hp - 0.5)));
      const int j0 = std::max(0, static_cast<int>(std::floor((qlo.y() - lo.y()) / hp - 0.5)));
      const int j1 = std::min(py - 1, static_cast<int>(std::ceil((qhi.y() - lo.y()) / hp - 0.5)));
      for (int j = j0; j <= j1; ++j)
        for (int i = i0; i <= i1; ++i) {
          char& flag = covered[static_cast<std::size_t>(i) + static_cast<std::size_t>(px) * j];
          if (flag) continue;
          if (point_in_polygon(poly, lo + Vec2((i + 0.5) * hp, (j + 0.5) * hp))) flag = 1;
        }
    }
  std::size_t count = 0;
  for (char f : covered) count += static_cast<std::size_t>(f);
  return static_cast<double>(count) * hp * hp;
}

double cn_residual(const DeformationField& state, int probe_resolution) {
  const double min_det = deformation_gradient(state).min_det;
  if (!(min_det > 0.0))
    throw DegenerateJacobianError("Ciarlet-Necas residual needs det > 0, min det = " +
                                  std::to_string(min_det));
  return std::abs(raster_image_area(state, probe_resolution) - integrated_jacobian(state));
}

double SolidMask::covered_volume() const {
  double v = 0.0;
  for (double c : coverage) v += c;
  return v * grid.cell_volume();
}

int subdivision_factor(const SolidGrid& solid, const FluidGrid& fluid) {
  const Vec2 hs = solid.spacing(), hf = fluid.spacing();
  const double ratio = std::max(hs.x() / hf.x(), hs.y() / hf.y());
  return std::max(1, static_cast<int>(std::ceil(4.0 * ratio - 1e-12)));
}

SolidMask empty_mask(const FluidGrid& fluid) {
  SolidMask m;
  m.grid = fluid;
  const auto n = static_cast<std::size_t>(fluid.cell_count());
  m.coverage.assign(n, 0.0);
  m.weight.assign(n, 0.0);
  m.ref_area.assign(n, 0.0);
  m.seed.assign(n, -1);
  return m;
}

SolidMask rasterize_solid(const DeformationField& state, const FluidGrid& fluid) {
  SolidMask m = empty_mask(fluid);
  const int s = subdivision_factor(state.grid, fluid);
  m.subdivision = s;
  const Vec2 hs = state.grid.spacing(), hf = fluid.spacing();
  const double dA = hs.x() * hs.y() / (s * s);
  const int nx = state.grid.resolution[0], ny = state.grid.resolution[1];
  m.samples.reserve(static_cast<std::size_t>(nx - 1) * (ny - 1) * s * s);
  std::vector<double> image_area(m.coverage.size(), 0.0);
  for (int cj = 0; cj + 1 < ny; ++cj)
    for (int ci = 0; ci + 1 < nx; ++ci) {
      const auto c = cell_corners(state, ci, cj);
      for (int b = 0; b < s; ++b)
        for (int a = 0; a < s; ++a) {
          const double xi = (a + 0.5) / s, zeta = (b + 0.5) / s;
          SubcellSample smp;
          const int n00 = state.grid.node(ci, cj);
          smp.nodes = {n00, n00 + 1, n00 + nx, n00 + nx + 1};
          smp.phi = {(1 - xi) * (1 - zeta), xi * (1 - zeta), (1 - xi) * zeta, xi * zeta};
          smp.ref_area = dA;
          smp.position = bilinear(c, xi, zeta);
          smp.reference = state.grid.origin + Vec2((ci + xi) * hs.x(), (cj + zeta) * hs.y());
          smp.det = bilinear_jacobian(c, xi, zeta, hs).determinant();
          if (!(smp.det > 0.0))
            throw DegenerateJacobianError("rasterization hit det <= 0 in solid cell (" +
                                          std::to_string(ci) + ", " + std::to_string(cj) + ")");
          const Vec2 rel = (smp.position - fluid.origin).cwiseQuotient(hf);
          const int fi = static_cast<int>(std::floor(rel.x()));
          const int fj = static_cast<int>(std::floor(rel.y()));
          if (fi >= 0 && fj >= 0 && fi < fluid.resolution[0] && fj < fluid.resolution[1]) {
            smp.cell = fluid.cell(fi, fj);
            const auto k = static_cast<std::size_t>(smp.cell);
            m.ref_area[k] += dA;
            image_area[k] += smp.det * dA;
            if (m.seed[k] < 0) m.seed[k] = static_cast<int>(m.samples.size());
          }
          m.samples.push_back(smp);
        }
    }
  const double vol = fluid.cell_volume();
  for (std::size_t k = 0; k < m.coverage.size(); ++k) {
    if (image_area[k] <= 0.0) continue;
    m.coverage[k] = std::min(1.0, image_area[k] / vol);
    m.weight[k] = m.ref_area[k] / image_area[k];
  }
  return m;
}

std::optional<Vec2> inverse_map(const DeformationField& state, const Vec2& point,
                                const SolidMask* cache) {
  const SolidGrid& g = state.grid;
  const Vec2 hs = g.spacing();
  const double tol = 1e-10 * std::min(hs.x(), hs.y());

  Vec2 lo = state.position(0), hi = lo;
  for (int k = 1; k < state.node_count(); ++k) {
    lo = lo.cwiseMin(state.position(k));
    hi = hi.cwiseMax(state.position(k));
  }
  if ((point - lo).minCoeff() < -tol || (hi - point).minCoeff() < -tol) return std::nullopt;

  Vec2 X;
  bool seeded = false;
  if (cache != nullptr) {
    const Vec2 rel = (point - cache->grid.origin).cwiseQuotient(cache->grid.spacing());
    const int fi = static_cast<int>(std::floor(rel.x())), fj = static_cast<int>(std::floor(rel.y()));
    if (fi >= 0 && fj >= 0 && fi < cache->grid.resolution[0] && fj < cache->grid.resolution[1]) {
      const int sid = cache->seed[static_cast<std::size_t>(cache->grid.cell(fi, fj))];
      if (sid < 0) return std::nullopt;
      X = cache->samples[static_cast<std::size_t>(sid)].reference;
      seeded = true;
    }
  }
  if (!seeded) {
    int best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (int k = 0; k < state.node_count(); ++k) {
      const double d = (state.position(k) - point).squaredNorm();
      if (d < best_d) {
        best_d = d;
        best = k;
      }
    }
    X = g.node_position(best);
  }

  const Vec2 rlo = g.origin, rhi = g.origin + g.extent;
  int clamped_run = 0;
  for (int it = 0; it < 50; ++it) {
    const CellCoords c = locate(g, X);
    const auto corners = cell_corners(state, c.ci, c.cj);
    const Vec2 r = bilinear(corners, c.xi, c.zeta) - point;
    if (r.norm() <= tol) return X;
    const Mat2 J = bilinear_jacobian(corners, c.xi, c.zeta, hs);
    const double det = J.determinant();
    if (!(det > 0.0)) throw DegenerateJacobianError("inverse map met det <= 0");
    const Vec2 trial = X - J.inverse() * r;
    const Vec2 next = trial.cwiseMax(rlo).cwiseMin(rhi);
    if ((next - trial).norm() > tol) {
      if (++clamped_run >= 3 || (next - X).norm() <= tol) return std::nullopt;
    } else {
      clamped_run = 0;
    }
    X = next;
  }
  throw NoConvergenceError("inverse map did not converge in 50 iterations");
}

bool inside_container(const FluidGrid& container, const Vec2& p) {
  const Vec2 up = container.upper();
  return p.x() >= container.origin.x() && p.y() >= container.origin.y() && p.x() <= up.x() &&
         p.y() <= up.y();
}

AdmissibilityReport admissibility_check(const DeformationField& state, const FluidGrid& container,
                                        const AdmissibilityTolerances& tol) {
  AdmissibilityReport r;
  r.min_det = deformation_gradient(state).min_det;
  r.contained = true;
  for (int k = 0; k < state.node_count(); ++k)
    if (!inside_container(container, state.position(k))) r.contained = false;
  const double perimeter = image_perimeter(state);
  Vec2 lo = state.position(0), hi = lo;
  for (int k = 1; k < state.node_count(); ++k) {
    lo = lo.cwiseMin(state.position(k));
    hi = hi.cwiseMax(state.position(k));
  }
  const double hp = (hi - lo).maxCoeff() / tol.probe_resolution;
  r.cn_tolerance = tol.cn_tolerance >= 0.0 ? tol.cn_tolerance : 2.0 * hp * perimeter;
  if (r.min_det > 0.0) {
    r.cn_residual = cn_residual(state, tol.probe_resolution);
  } else {
    r.cn_residual = std::numeric_limits<double>::quiet_NaN();
  }
  r.admissible = r.min_det > 0.0 && r.cn_residual <= r.cn_tolerance && r.contained;
  return r;
}

}  // namespace fsi
