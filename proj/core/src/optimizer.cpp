#include "fsi/optimizer.hpp"

#include <cmath>
#include <limits>
#include <string>

#include <Eigen/SparseCholesky>

namespace fsi {

namespace {

// Sets shifted when the Hessian needed more than a round-off sized diagonal
// shift (1e-8 of its largest diagonal entry) to become positive definite.
bool newton_direction(const Eigen::SparseMatrix<double>& H, const Eigen::VectorXd& g, Eigen::VectorXd& d,
                      bool& shifted) {
  const double scale = std::max(1e-300, H.diagonal().cwiseAbs().maxCoeff());
  double shift = 0.0;
  Eigen::SparseMatrix<double> I(H.rows(), H.cols());
  I.setIdentity();
  for (int attempt = 0; attempt < 12; ++attempt) {
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt;
    ldlt.compute(shift > 0.0 ? Eigen::SparseMatrix<double>(H + shift * I) : H);
    if (ldlt.info() == Eigen::Success && (ldlt.vectorD().array() > 0.0).all()) {
      d = -ldlt.solve(g);
      if (ldlt.info() == Eigen::Success && d.allFinite() && d.dot(g) < 0.0) {
        shifted = shift > 1e-8 * scale;
        return true;
      }
    }
    shift = shift == 0.0 ? 1e-10 * scale : 10.0 * shift;
  }
  return false;
}

}  // namespace

OptimizerResult minimize(const Objective& f, const Eigen::VectorXd& x0, const OptimizerOptions& opts) {
  OptimizerResult r;
  r.x = x0;
  r.value = f.value(r.x);
  if (!std::isfinite(r.value)) throw InvalidArgumentError("optimizer start point is infeasible");
  const bool newton = opts.method == OptimizerMethod::Newton && static_cast<bool>(f.hessian);
  double gd_step = 1.0;
  Eigen::VectorXd g = f.gradient(r.x);
  for (int it = 0;; ++it) {
    r.grad_norm = g.norm();
    r.iterations = it;
    if (r.grad_norm <= opts.grad_tol) return r;
    if (it >= opts.max_iterations)
      throw OptimizerStallError("optimizer stalled after " + std::to_string(it) +
                                    " iterations, gradient norm " + std::to_string(r.grad_norm),
                                r.x, r.grad_norm);
    Eigen::VectorXd d;
    double alpha = 1.0;
    bool shifted = false;
    const bool descent = !(newton && newton_direction(f.hessian(r.x), g, d, shifted));
    if (descent) {
      d = -g;
      alpha = gd_step;
    }
    const double alpha0 = alpha;
    const double slope = g.dot(d);
    const double fscale = 1.0 + std::abs(r.value);
    if (!descent && !shifted && -slope <= 4.0 * std::numeric_limits<double>::epsilon() * fscale) {
      r.roundoff_stop = true;
      return r;
    }
    bool accepted = false;
    for (int bt = 0; bt < opts.max_backtracks; ++bt, alpha *= opts.backtrack) {
      const Eigen::VectorXd xt = r.x + alpha * d;
      const double ft = f.value(xt);
      if (!std::isfinite(ft)) {
        ++r.rejected_trials;
        continue;
      }
      bool ok = ft <= r.value + opts.armijo_c1 * alpha * slope;
      Eigen::VectorXd gt;
      if (!ok && std::abs(alpha * slope) <= 1e-12 * fscale && ft <= r.value + 1e-14 * fscale) {
        // decrease below round-off: accept when the gradient shrinks
        gt = f.gradient(xt);
        ok = gt.norm() < r.grad_norm;
      }
      if (ok) {
        r.x = xt;
        r.value = ft;
        g = gt.size() ? gt : f.gradient(r.x);
        if (descent) gd_step = alpha == alpha0 ? 2.0 * alpha : alpha;
        accepted = true;
        break;
      }
    }
    if (!accepted)
      throw OptimizerStallError("line search failed at iteration " + std::to_string(it) +
                                    ", gradient norm " + std::to_string(r.grad_norm),
                                r.x, r.grad_norm);
  }
}

}  // namespace fsi
