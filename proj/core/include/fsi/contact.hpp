#pragma once

#include <cmath>
#include <cstdint>
#include <unordered_map>
#include <utility>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "fsi/grid.hpp"
#include "fsi/kinematics.hpp"

namespace fsi {

struct ContactParams {
  double eps = 0.05;

  double pair_cutoff() const { return std::sqrt(eps); }
  void validate() const;
  bool operator==(const ContactParams&) const = default;
};

struct KappaValue {
  double value = 0.0;
  double derivative = 0.0;  // d/dr of kappa_eps
  double second = 0.0;      // d^2/dr^2 of kappa_eps
};

// kappa(r) = 1/r + r - 2 on (0, 1), 0 beyond, +inf at r <= 0; kappa_eps(r) = kappa(r/eps).
KappaValue kappa_eval(double r, double eps);

// Uniform bucket grid over points. Cell size equals the query radius.
class SpatialHash {
 public:
  SpatialHash(double cell_size, const std::vector<Vec2>& points);

  double cell_size() const { return cell_; }
  std::size_t bucket_count() const { return buckets_.size(); }
  // Indices within distance < radius of p (radius <= cell size), ascending.
  std::vector<int> query(const Vec2& p, double radius) const;
  // Unordered pairs (i < j) with distance < radius, sorted.
  std::vector<std::pair<int, int>> pairs_within(double radius) const;

 private:
  std::int64_t key(int ix, int iy) const;
  std::pair<int, int> cell_of(const Vec2& p) const;

  double cell_;
  std::vector<Vec2> points_;
  std::unordered_map<std::int64_t, std::vector<int>> buckets_;
};

std::vector<std::pair<int, int>> brute_force_pairs(const std::vector<Vec2>& points, double radius);

// Signed distance from p to the rectangle boundary, positive inside; the
// active face normal (pointing inward) is written to normal.
double wall_distance(const FluidGrid& container, const Vec2& p, Vec2* normal = nullptr);

class ContactModel {
 public:
  ContactModel(const SolidGrid& grid, const Eigen::VectorXd& weights, const FluidGrid& container,
               const ContactParams& params);

  const ContactParams& params() const { return params_; }
  double penalty(const Eigen::VectorXd& x) const;
  // Throws InfiniteEnergyError when the penalty is infinite.
  void add_gradient(const Eigen::VectorXd& x, Eigen::VectorXd& g) const;
  // PSD part of the Hessian (kappa'' terms only).
  void add_hessian(const Eigen::VectorXd& x, double scale, std::vector<Eigen::Triplet<double>>& t) const;

  double min_wall_distance(const Eigen::VectorXd& x) const;
  // Smallest deformed distance over admissible pairs closer than eps, or +inf.
  double min_pair_distance(const Eigen::VectorXd& x) const;

 private:
  std::vector<std::pair<int, int>> active_pairs(const Eigen::VectorXd& x) const;

  SolidGrid grid_;
  Eigen::VectorXd weights_;
  FluidGrid container_;
  ContactParams params_;
};

double contact_penalty(const DeformationField& state, const FluidGrid& container,
                       const ContactParams& params);
Eigen::VectorXd contact_penalty_gradient(const DeformationField& state, const FluidGrid& container,
                                         const ContactParams& params);

}  // namespace fsi
