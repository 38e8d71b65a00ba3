#include "fsi/contact.hpp"

#include <algorithm>
#include <limits>
#include <string>

#include "fsi/error.hpp"
#include "fsi/material.hpp"

namespace fsi {

void ContactParams::validate() const {
  if (!(eps > 0.0) || !std::isfinite(eps)) throw InvalidArgumentError("contact eps must be > 0");
}

KappaValue kappa_eval(double r, double eps) {
  if (!(r > 0.0)) return {kInfinity, -kInfinity, kInfinity};
  const double s = r / eps;
  if (s >= 1.0) return {0.0, 0.0, 0.0};
  return {1.0 / s + s - 2.0, (1.0 - 1.0 / (s * s)) / eps, 2.0 / (s * s * s) / (eps * eps)};
}

SpatialHash::SpatialHash(double cell_size, const std::vector<Vec2>& points)
    : cell_(cell_size), points_(points) {
  if (!(cell_ > 0.0)) throw InvalidArgumentError("hash cell size must be positive");
  for (int i = 0; i < static_cast<int>(points_.size()); ++i) {
    const auto [ix, iy] = cell_of(points_[static_cast<std::size_t>(i)]);
    buckets_[key(ix, iy)].push_back(i);
  }
}

std::int64_t SpatialHash::key(int ix, int iy) const {
  return (static_cast<std::int64_t>(ix) << 32) ^ static_cast<std::int64_t>(static_cast<std::uint32_t>(iy));
}

std::pair<int, int> SpatialHash::cell_of(const Vec2& p) const {
  return {static_cast<int>(std::floor(p.x() / cell_)), static_cast<int>(std::floor(p.y() / cell_))};
}

std::vector<int> SpatialHash::query(const Vec2& p, double radius) const {
  if (radius > cell_) throw InvalidArgumentError("hash query radius exceeds cell size");
  std::vector<int> out;
  const auto [cx, cy] = cell_of(p);
  for (int dy = -1; dy <= 1; ++dy)
    for (int dx = -1; dx <= 1; ++dx) {
      const auto it = buckets_.find(key(cx + dx, cy + dy));
      if (it == buckets_.end()) continue;
      for (int j : it->second)
        if ((points_[static_cast<std::size_t>(j)] - p).norm() < radius) out.push_back(j);
    }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<std::pair<int, int>> SpatialHash::pairs_within(double radius) const {
  std::vector<std::pair<int, int>> out;
  for (int i = 0; i < static_cast<int>(points_.size()); ++i)
    for (int j : query(points_[static_cast<std::size_t>(i)], radius))
      if (j > i) out.emplace_back(i, j);
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<std::pair<int, int>> brute_force_pairs(const std::vector<Vec2>& points, double radius) {
  std::vector<std::pair<int, int>> out;
  for (int i = 0; i < static_cast<int>(points.size()); ++i)
    for (int j = i + 1; j < static_cast<int>(points.size()); ++j)
      if ((points[static_cast<std::size_t>(i)] - points[static_cast<std::size_t>(j)]).norm() < radius)
        out.emplace_back(i, j);
  return out;
}

double wall_distance(const FluidGrid& c, const Vec2& p, Vec2* normal) {
  const Vec2 up = c.upper();
  const double d[4] = {p.x() - c.origin.x(), up.x() - p.x(), p.y() - c.origin.y(), up.y() - p.y()};
  const Vec2 n[4] = {Vec2(1, 0), Vec2(-1, 0), Vec2(0, 1), Vec2(0, -1)};
  int k = 0;
  for (int i = 1; i < 4; ++i)
    if (d[i] < d[k]) k = i;
  if (normal != nullptr) *normal = n[k];
  return d[k];
}

ContactModel::ContactModel(const SolidGrid& grid, const Eigen::VectorXd& weights,
                           const FluidGrid& container, const ContactParams& params)
    : grid_(grid), weights_(weights), container_(container), params_(params) {
  params_.validate();
}

std::vector<std::pair<int, int>> ContactModel::active_pairs(const Eigen::VectorXd& x) const {
  const int n = grid_.node_count();
  std::vector<Vec2> pts(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) pts[static_cast<std::size_t>(k)] = x.segment<2>(2 * k);
  const SpatialHash hash(params_.eps, pts);
  const double cutoff = params_.pair_cutoff();
  std::vector<std::pair<int, int>> out;
  for (const auto& [i, j] : hash.pairs_within(params_.eps))
    if ((grid_.node_position(i) - grid_.node_position(j)).norm() >= cutoff) out.emplace_back(i, j);
  return out;
}

double ContactModel::penalty(const Eigen::VectorXd& x) const {
  const int n = grid_.node_count();
  double wall = 0.0;
  for (int k = 0; k < n; ++k) {
    const double v = kappa_eval(wall_distance(container_, x.segment<2>(2 * k)), params_.eps).value;
    if (v == kInfinity) return kInfinity;
    wall += weights_[k] * v;
  }
  double pair = 0.0;
  for (const auto& [i, j] : active_pairs(x)) {
    const double r = (x.segment<2>(2 * i) - x.segment<2>(2 * j)).norm();
    const double v = kappa_eval(r, params_.eps).value;
    if (v == kInfinity) return kInfinity;
    pair += 2.0 * weights_[i] * weights_[j] * v;
  }
  return wall + pair;
}

void ContactModel::add_gradient(const Eigen::VectorXd& x, Eigen::VectorXd& g) const {
  const int n = grid_.node_count();
  for (int k = 0; k < n; ++k) {
    Vec2 normal;
    const double d = wall_distance(container_, x.segment<2>(2 * k), &normal);
    const KappaValue kv = kappa_eval(d, params_.eps);
    if (kv.value == kInfinity)
      throw InfiniteEnergyError("contact penalty infinite: node " + std::to_string(k) + " on the wall");
    if (kv.derivative != 0.0) g.segment<2>(2 * k) += weights_[k] * kv.derivative * normal;
  }
  for (const auto& [i, j] : active_pairs(x)) {
    const Vec2 diff = x.segment<2>(2 * i) - x.segment<2>(2 * j);
    const double r = diff.norm();
    const KappaValue kv = kappa_eval(r, params_.eps);
    if (kv.value == kInfinity)
      throw InfiniteEnergyError("contact penalty infinite: nodes " + std::to_string(i) + " and " +
                                std::to_string(j) + " coincide");
    const Vec2 f = 2.0 * weights_[i] * weights_[j] * kv.derivative * diff / r;
    g.segment<2>(2 * i) += f;
    g.segment<2>(2 * j) -= f;
  }
}

void ContactModel::add_hessian(const Eigen::VectorXd& x, double scale,
                               std::vector<Eigen::Triplet<double>>& t) const {
  const int n = grid_.node_count();
  for (int k = 0; k < n; ++k) {
    Vec2 normal;
    const double d = wall_distance(container_, x.segment<2>(2 * k), &normal);
    const KappaValue kv = kappa_eval(d, params_.eps);
    if (kv.second == 0.0 || !std::isfinite(kv.second)) continue;
    const Mat2 A = scale * weights_[k] * kv.second * normal * normal.transpose();
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b) t.emplace_back(2 * k + a, 2 * k + b, A(a, b));
  }
  for (const auto& [i, j] : active_pairs(x)) {
    const Vec2 diff = x.segment<2>(2 * i) - x.segment<2>(2 * j);
    const double r = diff.norm();
    const KappaValue kv = kappa_eval(r, params_.eps);
    if (!std::isfinite(kv.second)) continue;
    const Vec2 u = diff / r;
    const Mat2 A = scale * 2.0 * weights_[i] * weights_[j] * kv.second * u * u.transpose();
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b) {
        t.emplace_back(2 * i + a, 2 * i + b, A(a, b));
        t.emplace_back(2 * j + a, 2 * j + b, A(a, b));
        t.emplace_back(2 * i + a, 2 * j + b, -A(a, b));
        t.emplace_back(2 * j + a, 2 * i + b, -A(a, b));
      }
  }
}

double ContactModel::min_wall_distance(const Eigen::VectorXd& x) const {
  double m = std::numeric_limits<double>::infinity();
  for (int k = 0; k < grid_.node_count(); ++k) m = std::min(m, wall_distance(container_, x.segment<2>(2 * k)));
  return m;
}

double ContactModel::min_pair_distance(const Eigen::VectorXd& x) const {
  double m = std::numeric_limits<double>::infinity();
  for (const auto& [i, j] : active_pairs(x))
    m = std::min(m, (x.segment<2>(2 * i) - x.segment<2>(2 * j)).norm());
  return m;
}

namespace {
Eigen::VectorXd node_weights(const SolidGrid& g) {
  const std::vector<double> w = quadrature_weights(g.nodes());
  return Eigen::Map<const Eigen::VectorXd>(w.data(), static_cast<Eigen::Index>(w.size()));
}
}  // namespace

double contact_penalty(const DeformationField& state, const FluidGrid& container,
                       const ContactParams& params) {
  return ContactModel(state.grid, node_weights(state.grid), container, params).penalty(state.positions);
}

Eigen::VectorXd contact_penalty_gradient(const DeformationField& state, const FluidGrid& container,
                                         const ContactParams& params) {
  Eigen::VectorXd g = Eigen::VectorXd::Zero(state.positions.size());
  ContactModel(state.grid, node_weights(state.grid), container, params).add_gradient(state.positions, g);
  return g;
}

}  // namespace fsi
