#pragma once

#include <cmath>
#include <functional>
#include <numbers>
#include <random>

#include <Eigen/Core>

#include "fsi/grid.hpp"
#include "fsi/kinematics.hpp"

namespace fsi::test {

inline SolidGrid unit_solid(int n = 17) { return SolidGrid(Vec2(0.0, 0.0), Vec2(1.0, 1.0), {n, n}); }

// Identity plus a random affine stretch and nodal noise of amp x spacing.
inline DeformationField random_state(const SolidGrid& g, std::mt19937_64& rng, double amp = 0.1) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Mat2 A = Mat2::Identity();
  A(0, 0) += 0.1 * u(rng);
  A(1, 1) += 0.1 * u(rng);
  A(0, 1) += 0.1 * u(rng);
  A(1, 0) += 0.1 * u(rng);
  const double hmin = g.spacing().minCoeff();
  DeformationField s(g);
  for (int k = 0; k < g.node_count(); ++k) {
    const Vec2 X = g.node_position(k);
    s.positions.segment<2>(2 * k) = A * X + amp * hmin * Vec2(u(rng), u(rng));
  }
  return s;
}

inline Eigen::VectorXd random_vector(int n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v[i] = u(rng);
  return v;
}

inline Eigen::VectorXd central_difference(const std::function<double(const Eigen::VectorXd&)>& f,
                                          const Eigen::VectorXd& x, double step) {
  Eigen::VectorXd g(x.size());
  Eigen::VectorXd y = x;
  for (int i = 0; i < x.size(); ++i) {
    y[i] = x[i] + step;
    const double fp = f(y);
    y[i] = x[i] - step;
    const double fm = f(y);
    y[i] = x[i];
    g[i] = (fp - fm) / (2.0 * step);
  }
  return g;
}

inline double relative_error(const Eigen::VectorXd& approx, const Eigen::VectorXd& exact) {
  const double scale = exact.norm();
  return scale > 0.0 ? (approx - exact).norm() / scale : approx.norm();
}

// A thin strip of width w folded into a U around a half annulus. The arms face
// each other across a gap g. Reference strip [0, 2 s0 + bend] x [0, w].
struct Horseshoe {
  double w = 0.1;
  double g = 0.025;
  double s0 = 0.35;
  double bend = 0.3;
  Vec2 shift = Vec2(0.2, 0.0);
  // The upper arm sinks by drop over ramp reference length after the bend;
  // drop > g makes the arms overlap.
  double drop = 0.0;
  double ramp = 0.05;

  Vec2 operator()(const Vec2& X) const {
    const double s = X.x(), y = X.y();
    const Vec2 c(s0, w + 0.5 * g);
    Vec2 p;
    if (s <= s0) {
      p = Vec2(s, y);
    } else if (s <= s0 + bend) {
      const double th = std::numbers::pi * (s - s0) / bend;
      const double r = w + 0.5 * g - y;
      p = c + r * Vec2(std::sin(th), -std::cos(th));
    } else {
      const double d = s - s0 - bend;
      p = Vec2(s0 - d, 2.0 * w + g - y - drop * std::min(1.0, d / ramp));
    }
    return p + shift;
  }

  // Area where the arms overlap, for a strip of reference length 2 s0 + bend.
  double overlap_area() const {
    if (drop <= g) return 0.0;
    const double t = drop - g;
    const double in_ramp = t * t * ramp / (2.0 * drop);
    return in_ramp + t * (s0 - ramp);
  }
};

}  // namespace fsi::test
