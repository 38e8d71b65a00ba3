#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <utility>
#include <vector>

#include <Eigen/Core>
#include <Eigen/LU>
#include <Eigen/SparseCore>

#include "fsi/grid.hpp"
#include "fsi/kinematics.hpp"

namespace fsi {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

struct MaterialParams {
  double lambda_e = 1.0;
  double mu_e = 1.0;
  double a = 8.0;
  double q = 4.0;
  int k0 = 3;
  double a0 = 2.0;

  // Throws InvalidArgumentError when the invariants fail in dimension d.
  void validate(int d = 2) const;
  bool operator==(const MaterialParams&) const = default;
};

// Pointwise prototype density, written for any dimension.
template <int D>
struct PrototypeDensity {
  using Mat = Eigen::Matrix<double, D, D>;

  static double value(const Mat& F, const MaterialParams& m) {
    const double J = F.determinant();
    if (!(J > 0.0)) return kInfinity;
    const Mat G = F.transpose() * F - Mat::Identity();
    const double tr = G.trace();
    return 0.5 * m.lambda_e * tr * tr + m.mu_e * G.squaredNorm() + std::pow(J, -m.a);
  }

  // dW/dF
  static Mat first_piola(const Mat& F, const MaterialParams& m) {
    const Mat G = F.transpose() * F - Mat::Identity();
    const Mat S = m.lambda_e * G.trace() * Mat::Identity() + 2.0 * m.mu_e * G;
    const double J = F.determinant();
    return 2.0 * F * S - m.a * std::pow(J, -m.a) * F.inverse().transpose();
  }

  // Second derivative as a bilinear form on D*D matrices in row-major order.
  static Eigen::Matrix<double, D * D, D * D> tangent(const Mat& F, const MaterialParams& m) {
    constexpr int n = D * D;
    const Mat G = F.transpose() * F - Mat::Identity();
    const Mat S = m.lambda_e * G.trace() * Mat::Identity() + 2.0 * m.mu_e * G;
    const double J = F.determinant();
    const double Ja = std::pow(J, -m.a);
    const Mat Finv = F.inverse();
    std::array<Mat, n> E, dG, A;
    for (int i = 0; i < n; ++i) {
      E[i].setZero();
      E[i](i / D, i % D) = 1.0;
      dG[i] = E[i].transpose() * F + F.transpose() * E[i];
      A[i] = Finv * E[i];
    }
    Eigen::Matrix<double, n, n> H;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        const double quad = m.lambda_e * dG[i].trace() * dG[j].trace() +
                            2.0 * m.mu_e * (dG[i].array() * dG[j].array()).sum() +
                            (S.array() * (E[i].transpose() * E[j] + E[j].transpose() * E[i]).array()).sum();
        const double barrier = m.a * m.a * Ja * A[i].trace() * A[j].trace() + m.a * Ja * (A[i] * A[j]).trace();
        H(i, j) = quad + barrier;
      }
    return H;
  }
};

// Stencils, quadrature weights and regularization Gram matrix for one solid grid.
// One block of the discrete W^{k0,2} norm: sum of weight * (op v)^2.
struct RegularizationTerm {
  SparseMatrix op;
  Eigen::VectorXd weight;
};

class SolidDiscretization {
 public:
  explicit SolidDiscretization(const SolidGrid& grid, int k0 = 3);

  const SolidGrid& grid() const { return grid_; }
  int nodes() const { return grid_.node_count(); }
  int dofs() const { return 2 * grid_.node_count(); }
  const StencilOperators& ops() const { return ops_; }
  const Eigen::VectorXd& weights() const { return weights_; }
  int k0() const { return k0_; }
  // Q with |eta|^2_{W^{k0,2}} = sum over components of eta_c^T Q eta_c.
  const SparseMatrix& gram() const { return gram_; }
  const std::vector<RegularizationTerm>& terms() const { return terms_; }

  struct Row {
    std::vector<std::pair<int, double>> entries;
  };
  // Stencil rows per node: dx, dy, dxx, dxy, dyy.
  const std::vector<std::array<Row, 5>>& rows() const { return rows_; }

 private:
  SolidGrid grid_;
  int k0_;
  StencilOperators ops_;
  Eigen::VectorXd weights_;
  SparseMatrix gram_;
  std::vector<RegularizationTerm> terms_;
  std::vector<std::array<Row, 5>> rows_;
};

std::vector<RegularizationTerm> regularization_terms(const SolidGrid& grid, int k0);
SparseMatrix regularization_gram(const SolidGrid& grid, int k0);

// Energy and dissipation on interleaved nodal vectors.
class MaterialModel {
 public:
  MaterialModel(const SolidDiscretization& disc, const MaterialParams& params);

  const MaterialParams& params() const { return params_; }
  const SolidDiscretization& disc() const { return *disc_; }

  double energy(const Eigen::VectorXd& x) const;
  // Adds dE/dx to g. Throws InfiniteEnergyError when det <= 0.
  void add_energy_gradient(const Eigen::VectorXd& x, Eigen::VectorXd& g) const;
  // Adds scale times the energy Hessian, with each node's first-gradient block
  // projected to PSD when project is set. The second-gradient block is PSD as is.
  void add_energy_hessian(const Eigen::VectorXd& x, double scale,
                          std::vector<Eigen::Triplet<double>>& t, bool project = true) const;

  double dissipation(const Eigen::VectorXd& x, const Eigen::VectorXd& b) const;
  void add_dissipation_gradient(const Eigen::VectorXd& x, const Eigen::VectorXd& b, double scale,
                                Eigen::VectorXd& g) const;
  void add_dissipation_hessian(const Eigen::VectorXd& x, double scale,
                               std::vector<Eigen::Triplet<double>>& t) const;

  double norm_sq(const Eigen::VectorXd& x) const;
  void add_norm_gradient(const Eigen::VectorXd& x, double scale, Eigen::VectorXd& g) const;
  void add_norm_hessian(double scale, std::vector<Eigen::Triplet<double>>& t) const;

  double min_det(const Eigen::VectorXd& x) const;

 private:
  struct Local {
    Eigen::VectorXd fxx, fxy, fyx, fyy;
    Eigen::VectorXd hx[3], hy[3];
  };
  Local locals(const Eigen::VectorXd& x, bool second) const;

  const SolidDiscretization* disc_;
  MaterialParams params_;
};

double elastic_energy(const DeformationField& state, const MaterialParams& mat);
Eigen::VectorXd elastic_energy_gradient(const DeformationField& state, const MaterialParams& mat);
double dissipation_rate(const DeformationField& state, const Eigen::VectorXd& vel,
                        const MaterialParams& mat);
Eigen::VectorXd dissipation_gradient(const DeformationField& state, const Eigen::VectorXd& vel,
                                     const MaterialParams& mat);
double regularization_norm_sq(const DeformationField& state, const Eigen::VectorXd& field, int k0);

struct RegularizedForms {
  double E_eps = 0.0;
  Eigen::VectorXd dE_eps;
  double R_eps = 0.0;
  Eigen::VectorXd dR_eps;
};

RegularizedForms regularized_forms(const DeformationField& state, const Eigen::VectorXd& vel,
                                   const MaterialParams& mat, double eps);

}  // namespace fsi
