#pragma once

#include <functional>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "fsi/error.hpp"

namespace fsi {

// Smooth objective that may be +inf outside its feasible set.
struct Objective {
  std::function<double(const Eigen::VectorXd&)> value;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> gradient;
  // Optional model Hessian; indefinite ones are shifted. Without it the
  // optimizer falls back to gradient descent.
  std::function<Eigen::SparseMatrix<double>(const Eigen::VectorXd&)> hessian;
};

enum class OptimizerMethod { Newton, GradientDescent };

struct OptimizerOptions {
  OptimizerMethod method = OptimizerMethod::Newton;
  double grad_tol = 1e-8;
  int max_iterations = 200;
  double armijo_c1 = 1e-4;
  double backtrack = 0.5;
  int max_backtracks = 60;
};

struct OptimizerResult {
  Eigen::VectorXd x;
  double value = 0.0;
  double grad_norm = 0.0;
  int iterations = 0;
  int rejected_trials = 0;  // backtracking trials with infinite value
  // Stopped because the Newton decrement fell to the round-off level of the
  // objective before the gradient reached grad_tol.
  bool roundoff_stop = false;
};

class OptimizerStallError : public Error {
 public:
  OptimizerStallError(const std::string& what, Eigen::VectorXd state, double residual)
      : Error(what), state_(std::move(state)), residual_(residual) {}
  const Eigen::VectorXd& state() const { return state_; }
  double residual() const { return residual_; }

 private:
  Eigen::VectorXd state_;
  double residual_;
};

// Descent with Armijo backtracking from a feasible start. Trial points with
// infinite value are rejected by the line search. Newton iterations also stop
// when g^T H^-1 g <= 4 machine eps (1 + |f|), where no representable step
// lowers f further.
OptimizerResult minimize(const Objective& f, const Eigen::VectorXd& x0, const OptimizerOptions& opts);

}  // namespace fsi
