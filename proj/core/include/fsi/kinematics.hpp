#pragma once

#include <array>
#include <functional>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "fsi/grid.hpp"

namespace fsi {

// Nodal deformation and its velocity. Both vectors are interleaved,
// (x0, y0, x1, y1, ...), in SolidGrid node order.
struct DeformationField {
  SolidGrid grid;
  Eigen::VectorXd positions;
  Eigen::VectorXd velocity;
  double time = 0.0;

  DeformationField() = default;
  explicit DeformationField(const SolidGrid& g);  // identity, at rest

  static DeformationField from_map(const SolidGrid& g, const std::function<Vec2(const Vec2&)>& map);

  int node_count() const { return grid.node_count(); }
  Vec2 position(int k) const { return positions.segment<2>(2 * k); }
  Vec2 node_velocity(int k) const { return velocity.segment<2>(2 * k); }
};

struct DeformationGradient {
  TensorField F;
  ScalarField det;
  double min_det = 0.0;
};

DeformationGradient deformation_gradient(const DeformationField& state);

// Bilinear (Q1) interpolant of the nodal positions.
Vec2 interpolate_position(const DeformationField& state, const Vec2& reference);
Mat2 interpolate_jacobian(const DeformationField& state, const Vec2& reference);

// Exact integral of the Q1 Jacobian determinant: the signed area sum of the
// mapped solid cells.
double integrated_jacobian(const DeformationField& state);
// Area of the union of mapped solid cells counted on a probe grid.
double raster_image_area(const DeformationField& state, int probe_resolution);
double image_perimeter(const DeformationField& state);
double cn_residual(const DeformationField& state, int probe_resolution);

struct SubcellSample {
  int cell = -1;  // containing fluid cell, -1 when outside the container
  std::array<int, 4> nodes{};    // solid nodes 00, 10, 01, 11 of the host cell
  std::array<double, 4> phi{};  // their bilinear weights
  double ref_area = 0.0;
  double det = 0.0;
  Vec2 position = Vec2::Zero();
  Vec2 reference = Vec2::Zero();
};

struct SolidMask {
  FluidGrid grid;
  int subdivision = 1;
  std::vector<double> coverage;  // image area fraction per cell, clipped to 1
  std::vector<double> weight;    // mean of 1/det over the cell, 0 if uncovered
  std::vector<double> ref_area;  // reference area mapped into the cell
  std::vector<int> seed;         // first sample landing in the cell, or -1
  std::vector<SubcellSample> samples;

  double covered_volume() const;
};

int subdivision_factor(const SolidGrid& solid, const FluidGrid& fluid);
SolidMask rasterize_solid(const DeformationField& state, const FluidGrid& fluid);
SolidMask empty_mask(const FluidGrid& fluid);

// Reference point X with eta(X) = point, or nullopt when point is not covered.
std::optional<Vec2> inverse_map(const DeformationField& state, const Vec2& point,
                                const SolidMask* cache = nullptr);

struct AdmissibilityTolerances {
  int probe_resolution = 256;
  double cn_tolerance = -1.0;  // negative: 2 * probe spacing * image perimeter
};

struct AdmissibilityReport {
  double min_det = 0.0;
  double cn_residual = 0.0;
  double cn_tolerance = 0.0;
  bool contained = false;
  bool admissible = false;
};

bool inside_container(const FluidGrid& container, const Vec2& p);
AdmissibilityReport admissibility_check(const DeformationField& state, const FluidGrid& container,
                                        const AdmissibilityTolerances& tol = {});

}  // namespace fsi
