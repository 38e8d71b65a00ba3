#include "fsi/grid.hpp"

#include <cmath>
#include <string>

#include "fsi/error.hpp"

namespace fsi {

namespace {

void require_positive(const Vec2& v, const char* what) {
  if (!(v.x() > 0.0 && v.y() > 0.0) || !v.allFinite())
    throw InvalidArgumentError(std::string(what) + " must be positive and finite");
}

void require_finite(const std::vector<double>& values) {
  for (double v : values)
    if (!std::isfinite(v)) throw InvalidArgumentError("field contains non-finite values");
}

void require_points(const Lattice& l, int needed, const char* mode) {
  if (l.count[0] < needed || l.count[1] < needed)
    throw StencilUnderflowError(std::string(mode) + " needs at least " + std::to_string(needed) +
                                " points per axis, lattice has " + std::to_string(l.count[0]) +
                                "x" + std::to_string(l.count[1]));
}

using Triplets = std::vector<Eigen::Triplet<double>>;

// Lift a 1D operator along axis 0 or 1 to the full lattice.
SparseMatrix lift(const SparseMatrix& op1d, const Lattice& l, int axis) {
  const int nx = l.count[0], ny = l.count[1];
  Triplets t;
  t.reserve(static_cast<std::size_t>(op1d.nonZeros()) * (axis == 0 ? ny : nx));
  for (int k = 0; k < op1d.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(op1d, k); it; ++it) {
      const int r = static_cast<int>(it.row()), c = static_cast<int>(it.col());
      if (axis == 0) {
        for (int j = 0; j < ny; ++j) t.emplace_back(l.index(r, j), l.index(c, j), it.value());
      } else {
        for (int i = 0; i < nx; ++i) t.emplace_back(l.index(i, r), l.index(i, c), it.value());
      }
    }
  SparseMatrix m(l.size(), l.size());
  m.setFromTriplets(t.begin(), t.end());
  return m;
}

Eigen::VectorXd component(const std::vector<double>& values, int components, int comp, int n) {
  Eigen::VectorXd v(n);
  for (int p = 0; p < n; ++p) v[p] = values[static_cast<std::size_t>(p) * components + comp];
  return v;
}

}  // namespace

SolidGrid::SolidGrid(Vec2 o, Vec2 e, Index2 r) : origin(o), extent(e), resolution(r) {
  require_positive(extent, "solid extent");
  if (resolution[0] < 4 || resolution[1] < 4)
    throw ResolutionError("solid grid needs at least 4 nodes per axis");
}

Vec2 SolidGrid::spacing() const {
  return Vec2(extent.x() / (resolution[0] - 1), extent.y() / (resolution[1] - 1));
}

Vec2 SolidGrid::node_position(int k) const { return nodes().point(k); }

Lattice SolidGrid::nodes() const { return Lattice{Location::Node, origin, spacing(), resolution}; }

double SolidGrid::cell_area() const {
  const Vec2 h = spacing();
  return h.x() * h.y();
}

FluidGrid::FluidGrid(Vec2 o, Vec2 e, Index2 r) : origin(o), extent(e), resolution(r) {
  require_positive(extent, "container extent");
  if (resolution[0] < 8 || resolution[1] < 8)
    throw ResolutionError("fluid grid needs at least 8 cells per axis");
}

Vec2 FluidGrid::spacing() const {
  return Vec2(extent.x() / resolution[0], extent.y() / resolution[1]);
}

double FluidGrid::cell_volume() const {
  const Vec2 h = spacing();
  return h.x() * h.y();
}

Vec2 FluidGrid::cell_center(int k) const { return cells().point(k); }

Lattice FluidGrid::cells() const {
  const Vec2 h = spacing();
  return Lattice{Location::Cell, origin + 0.5 * h, h, resolution};
}

Lattice FluidGrid::x_faces() const {
  const Vec2 h = spacing();
  return Lattice{Location::XFace, origin + Vec2(0.0, 0.5 * h.y()), h,
                 {resolution[0] + 1, resolution[1]}};
}

Lattice FluidGrid::y_faces() const {
  const Vec2 h = spacing();
  return Lattice{Location::YFace, origin + Vec2(0.5 * h.x(), 0.0), h,
                 {resolution[0], resolution[1] + 1}};
}

SparseMatrix first_derivative_1d(int n, double h) {
  if (n < 3) throw StencilUnderflowError("first derivative needs at least 3 points");
  Triplets t;
  const double c = 1.0 / (2.0 * h);
  t.emplace_back(0, 0, -3.0 * c);
  t.emplace_back(0, 1, 4.0 * c);
  t.emplace_back(0, 2, -1.0 * c);
  for (int i = 1; i < n - 1; ++i) {
    t.emplace_back(i, i - 1, -c);
    t.emplace_back(i, i + 1, c);
  }
  t.emplace_back(n - 1, n - 1, 3.0 * c);
  t.emplace_back(n - 1, n - 2, -4.0 * c);
  t.emplace_back(n - 1, n - 3, 1.0 * c);
  SparseMatrix m(n, n);
  m.setFromTriplets(t.begin(), t.end());
  return m;
}

SparseMatrix second_derivative_1d(int n, double h) {
  if (n < 4) throw StencilUnderflowError("second derivative needs at least 4 points");
  Triplets t;
  const double c = 1.0 / (h * h);
  const double end[4] = {2.0, -5.0, 4.0, -1.0};
  for (int k = 0; k < 4; ++k) {
    t.emplace_back(0, k, end[k] * c);
    t.emplace_back(n - 1, n - 1 - k, end[k] * c);
  }
  for (int i = 1; i < n - 1; ++i) {
    t.emplace_back(i, i - 1, c);
    t.emplace_back(i, i, -2.0 * c);
    t.emplace_back(i, i + 1, c);
  }
  SparseMatrix m(n, n);
  m.setFromTriplets(t.begin(), t.end());
  return m;
}

StencilOperators make_stencils(const Lattice& l, bool second_order) {
  require_points(l, 3, "gradient");
  StencilOperators ops;
  ops.dx = lift(first_derivative_1d(l.count[0], l.spacing.x()), l, 0);
  ops.dy = lift(first_derivative_1d(l.count[1], l.spacing.y()), l, 1);
  if (second_order) {
    require_points(l, 4, "second derivative");
    ops.dxx = lift(second_derivative_1d(l.count[0], l.spacing.x()), l, 0);
    ops.dyy = lift(second_derivative_1d(l.count[1], l.spacing.y()), l, 1);
    ops.dxy = ops.dx * ops.dy;
  }
  return ops;
}

std::vector<double> quadrature_weights(const Lattice& l) {
  std::vector<double> w(static_cast<std::size_t>(l.size()));
  const double cell = l.spacing.x() * l.spacing.y();
  for (int j = 0; j < l.count[1]; ++j)
    for (int i = 0; i < l.count[0]; ++i) {
      double v = cell;
      if (l.location == Location::Node) {
        if (i == 0 || i == l.count[0] - 1) v *= 0.5;
        if (j == 0 || j == l.count[1] - 1) v *= 0.5;
      }
      w[static_cast<std::size_t>(l.index(i, j))] = v;
    }
  return w;
}

template <int Rank>
Field<Rank + 1> gradient(const Field<Rank>& f) {
  require_finite(f.values);
  require_points(f.lattice, 3, "gradient");
  const StencilOperators ops = make_stencils(f.lattice, false);
  Field<Rank + 1> out(f.lattice, f.time);
  const int n = f.points();
  for (int c = 0; c < Field<Rank>::components; ++c) {
    const Eigen::VectorXd v = component(f.values, Field<Rank>::components, c, n);
    const Eigen::VectorXd gx = ops.dx * v, gy = ops.dy * v;
    for (int p = 0; p < n; ++p) {
      out(p, 2 * c) = gx[p];
      out(p, 2 * c + 1) = gy[p];
    }
  }
  return out;
}

template <int Rank>
Field<Rank - 1> divergence(const Field<Rank>& f) {
  static_assert(Rank >= 1);
  require_finite(f.values);
  require_points(f.lattice, 3, "divergence");
  const StencilOperators ops = make_stencils(f.lattice, false);
  Field<Rank - 1> out(f.lattice, f.time);
  const int n = f.points();
  for (int c = 0; c < Field<Rank - 1>::components; ++c) {
    const Eigen::VectorXd d = ops.dx * component(f.values, Field<Rank>::components, 2 * c, n) +
                              ops.dy * component(f.values, Field<Rank>::components, 2 * c + 1, n);
    for (int p = 0; p < n; ++p) out(p, c) = d[p];
  }
  return out;
}

template <int Rank>
Field<Rank + 2> hessian(const Field<Rank>& f) {
  require_finite(f.values);
  require_points(f.lattice, 5, "hessian");
  const StencilOperators ops = make_stencils(f.lattice, true);
  Field<Rank + 2> out(f.lattice, f.time);
  const int n = f.points();
  for (int c = 0; c < Field<Rank>::components; ++c) {
    const Eigen::VectorXd v = component(f.values, Field<Rank>::components, c, n);
    const Eigen::VectorXd hxx = ops.dxx * v, hxy = ops.dxy * v, hyy = ops.dyy * v;
    for (int p = 0; p < n; ++p) {
      out(p, 4 * c) = hxx[p];
      out(p, 4 * c + 1) = hxy[p];
      out(p, 4 * c + 2) = hxy[p];
      out(p, 4 * c + 3) = hyy[p];
    }
  }
  return out;
}

template <int Rank>
Field<Rank> laplacian(const Field<Rank>& f) {
  require_finite(f.values);
  require_points(f.lattice, 5, "laplacian");
  const StencilOperators ops = make_stencils(f.lattice, true);
  Field<Rank> out(f.lattice, f.time);
  const int n = f.points();
  const SparseMatrix lap = ops.dxx + ops.dyy;
  for (int c = 0; c < Field<Rank>::components; ++c) {
    const Eigen::VectorXd l = lap * component(f.values, Field<Rank>::components, c, n);
    for (int p = 0; p < n; ++p) out(p, c) = l[p];
  }
  return out;
}

double integrate(const ScalarField& f) {
  require_finite(f.values);
  const std::vector<double> w = quadrature_weights(f.lattice);
  double sum = 0.0;
  for (std::size_t p = 0; p < w.size(); ++p) sum += w[p] * f.values[p];
  return sum;
}

template Field<1> gradient<0>(const Field<0>&);
template Field<2> gradient<1>(const Field<1>&);
template Field<3> gradient<2>(const Field<2>&);
template Field<0> divergence<1>(const Field<1>&);
template Field<1> divergence<2>(const Field<2>&);
template Field<2> divergence<3>(const Field<3>&);
template Field<2> hessian<0>(const Field<0>&);
template Field<3> hessian<1>(const Field<1>&);
template Field<0> laplacian<0>(const Field<0>&);
template Field<1> laplacian<1>(const Field<1>&);
template Field<2> laplacian<2>(const Field<2>&);

}  // namespace fsi
