#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

namespace fsi {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;
using SparseMatrix = Eigen::SparseMatrix<double>;
using Index2 = std::array<int, 2>;

enum class Location { Node, Cell, XFace, YFace };

// A regular 2D lattice of sample points. Nodes carry trapezoid weights,
// cells and faces carry midpoint weights.
struct Lattice {
  Location location = Location::Node;
  Vec2 origin = Vec2::Zero();  // position of point (0, 0)
  Vec2 spacing = Vec2::Ones();
  Index2 count{0, 0};

  int size() const { return count[0] * count[1]; }
  int index(int i, int j) const { return i + count[0] * j; }
  Vec2 point(int i, int j) const {
    return origin + Vec2(i * spacing.x(), j * spacing.y());
  }
  Vec2 point(int k) const { return point(k % count[0], k / count[0]); }
  bool operator==(const Lattice&) const = default;
};

// Reference rectangle of the solid, sampled at nodes.
struct SolidGrid {
  Vec2 origin = Vec2::Zero();
  Vec2 extent = Vec2::Ones();
  Index2 resolution{17, 17};

  SolidGrid() = default;
  SolidGrid(Vec2 origin, Vec2 extent, Index2 resolution);

  Vec2 spacing() const;
  int node_count() const { return resolution[0] * resolution[1]; }
  int node(int i, int j) const { return i + resolution[0] * j; }
  Vec2 node_position(int k) const;
  Lattice nodes() const;
  double cell_area() const;
  bool operator==(const SolidGrid&) const = default;
};

// Eulerian container: density at cell centers, velocity components on faces.
struct FluidGrid {
  Vec2 origin = Vec2::Zero();
  Vec2 extent = Vec2::Ones();
  Index2 resolution{64, 64};  // cells per axis

  FluidGrid() = default;
  FluidGrid(Vec2 origin, Vec2 extent, Index2 resolution);

  Vec2 spacing() const;
  double cell_volume() const;
  int cell_count() const { return resolution[0] * resolution[1]; }
  int cell(int i, int j) const { return i + resolution[0] * j; }
  Vec2 cell_center(int k) const;
  Lattice cells() const;
  Lattice x_faces() const;  // (nx+1) x ny
  Lattice y_faces() const;  // nx x (ny+1)
  Vec2 upper() const { return origin + extent; }
  bool operator==(const FluidGrid&) const = default;
};

template <int Rank>
constexpr int field_components() {
  static_assert(Rank >= 0 && Rank <= 3);
  return 1 << Rank;
}

// Rank-K field on a lattice. Components are stored point-major in row-major
// index order, so a tensor T_ab sits at component a*2 + b.
template <int Rank>
struct Field {
  static constexpr int components = field_components<Rank>();

  Lattice lattice;
  double time = 0.0;
  std::vector<double> values;

  Field() = default;
  explicit Field(const Lattice& l, double t = 0.0)
      : lattice(l), time(t), values(static_cast<std::size_t>(l.size()) * components, 0.0) {}

  double& operator()(int point, int comp = 0) {
    return values[static_cast<std::size_t>(point) * components + comp];
  }
  double operator()(int point, int comp = 0) const {
    return values[static_cast<std::size_t>(point) * components + comp];
  }
  int points() const { return lattice.size(); }
};

using ScalarField = Field<0>;
using VectorField = Field<1>;
using TensorField = Field<2>;

// Sparse finite-difference operators on a lattice, acting on one scalar
// component stored point by point.
struct StencilOperators {
  SparseMatrix dx, dy, dxx, dyy, dxy;
};

// Second-order first derivative along one axis: central inside,
// one-sided (-3, 4, -1)/(2h) at the ends.
SparseMatrix first_derivative_1d(int n, double h);
// Second derivative: central inside, (2, -5, 4, -1)/h^2 at the ends.
SparseMatrix second_derivative_1d(int n, double h);
StencilOperators make_stencils(const Lattice& lattice, bool second_order = true);

std::vector<double> quadrature_weights(const Lattice& lattice);

template <int Rank>
Field<Rank + 1> gradient(const Field<Rank>& f);
template <int Rank>
Field<Rank - 1> divergence(const Field<Rank>& f);
template <int Rank>
Field<Rank + 2> hessian(const Field<Rank>& f);
template <int Rank>
Field<Rank> laplacian(const Field<Rank>& f);

double integrate(const ScalarField& f);

}  // namespace fsi
