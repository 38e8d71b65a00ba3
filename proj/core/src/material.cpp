#include "fsi/material.hpp"

#include <string>

#include <Eigen/Eigenvalues>

#include "fsi/error.hpp"

namespace fsi {

namespace {

using Triplets = std::vector<Eigen::Triplet<double>>;
using Strided = Eigen::Map<const Eigen::VectorXd, 0, Eigen::InnerStride<2>>;
using StridedMut = Eigen::Map<Eigen::VectorXd, 0, Eigen::InnerStride<2>>;

Strided comp(const Eigen::VectorXd& x, int c) { return Strided(x.data() + c, x.size() / 2); }
StridedMut comp(Eigen::VectorXd& x, int c) { return StridedMut(x.data() + c, x.size() / 2); }

// Forward differences of order k, (n-k) x n.
SparseMatrix forward_difference(int n, int k, double h) {
  SparseMatrix d(n, n);
  d.setIdentity();
  for (int o = 0; o < k; ++o) {
    const int rows = n - o - 1;
    Triplets t;
    for (int i = 0; i < rows; ++i) {
      t.emplace_back(i, i, -1.0 / h);
      t.emplace_back(i, i + 1, 1.0 / h);
    }
    SparseMatrix step(rows, n - o);
    step.setFromTriplets(t.begin(), t.end());
    d = (step * d).eval();
  }
  return d;
}

SparseMatrix kron(const SparseMatrix& a, const SparseMatrix& b) {
  Triplets t;
  for (int ka = 0; ka < a.outerSize(); ++ka)
    for (SparseMatrix::InnerIterator ia(a, ka); ia; ++ia)
      for (int kb = 0; kb < b.outerSize(); ++kb)
        for (SparseMatrix::InnerIterator ib(b, kb); ib; ++ib)
          t.emplace_back(ia.row() * b.rows() + ib.row(), ia.col() * b.cols() + ib.col(),
                         ia.value() * ib.value());
  SparseMatrix m(a.rows() * b.rows(), a.cols() * b.cols());
  m.setFromTriplets(t.begin(), t.end());
  return m;
}

template <int N>
Eigen::Matrix<double, N, N> project_psd(const Eigen::Matrix<double, N, N>& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix<double, N, N>> es(0.5 * (m + m.transpose()));
  Eigen::Matrix<double, N, 1> ev = es.eigenvalues().cwiseMax(0.0);
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

void add_local(const std::vector<const SolidDiscretization::Row*>& rows, const std::vector<int>& comps,
               const Eigen::MatrixXd& H, Triplets& t) {
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows.size(); ++j) {
      const double h = H(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      if (h == 0.0) continue;
      for (const auto& [ci, vi] : rows[i]->entries)
        for (const auto& [cj, vj] : rows[j]->entries)
          t.emplace_back(2 * ci + comps[i], 2 * cj + comps[j], h * vi * vj);
    }
}

}  // namespace

void MaterialParams::validate(int d) const {
  std::string err;
  if (!(lambda_e >= 0.0)) err += "lambda_e must be >= 0; ";
  if (!(mu_e > 0.0)) err += "mu_e must be > 0; ";
  if (!(q > d)) err += "q must exceed the dimension; ";
  if (q > d && !(a > d * q / (q - d))) err += "a must exceed d*q/(q-d); ";
  if (k0 < 3) err += "k0 must be >= 3; ";
  if (!(a0 > 0.0)) err += "a0 must be > 0; ";
  if (!err.empty()) throw InvalidArgumentError("material parameters: " + err);
}

std::vector<RegularizationTerm> regularization_terms(const SolidGrid& grid, int k0) {
  const int nx = grid.resolution[0], ny = grid.resolution[1];
  if (nx <= k0 || ny <= k0)
    throw StencilUnderflowError("regularization of order " + std::to_string(k0) + " needs more nodes");
  const Vec2 h = grid.spacing();
  const int n = nx * ny;
  const std::vector<double> trap = quadrature_weights(grid.nodes());
  std::vector<RegularizationTerm> terms;
  for (int total = 0; total <= k0; ++total)
    for (int ax = total; ax >= 0; --ax) {
      const int ay = total - ax;
      RegularizationTerm term;
      term.op = kron(forward_difference(ny, ay, h.y()), forward_difference(nx, ax, h.x()));
      term.weight.resize(term.op.rows());
      if (total == 0) {
        for (int p = 0; p < n; ++p) term.weight[p] = trap[static_cast<std::size_t>(p)];
      } else {
        term.weight.setConstant(h.x() * h.y());
      }
      terms.push_back(std::move(term));
    }
  return terms;
}

SparseMatrix regularization_gram(const SolidGrid& grid, int k0) {
  const int n = grid.node_count();
  SparseMatrix Q(n, n);
  for (const RegularizationTerm& t : regularization_terms(grid, k0))
    Q += SparseMatrix(t.op.transpose() * t.weight.asDiagonal() * t.op);
  return Q;
}

SolidDiscretization::SolidDiscretization(const SolidGrid& grid, int k0)
    : grid_(grid), k0_(k0), ops_(make_stencils(grid.nodes(), true)) {
  const std::vector<double> w = quadrature_weights(grid.nodes());
  weights_ = Eigen::Map<const Eigen::VectorXd>(w.data(), static_cast<Eigen::Index>(w.size()));
  terms_ = regularization_terms(grid, k0);
  gram_ = regularization_gram(grid, k0);
  rows_.resize(static_cast<std::size_t>(grid.node_count()));
  const SparseMatrix* mats[5] = {&ops_.dx, &ops_.dy, &ops_.dxx, &ops_.dxy, &ops_.dyy};
  for (int m = 0; m < 5; ++m) {
    const Eigen::SparseMatrix<double, Eigen::RowMajor> r(*mats[m]);
    for (int p = 0; p < r.outerSize(); ++p)
      for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(r, p); it; ++it)
        if (it.value() != 0.0)
          rows_[static_cast<std::size_t>(p)][static_cast<std::size_t>(m)].entries.emplace_back(
              static_cast<int>(it.col()), it.value());
  }
}

MaterialModel::MaterialModel(const SolidDiscretization& disc, const MaterialParams& params)
    : disc_(&disc), params_(params) {
  if (disc.k0() != params.k0)
    throw InvalidArgumentError("discretization built for a different regularization order");
}

MaterialModel::Local MaterialModel::locals(const Eigen::VectorXd& x, bool second) const {
  const StencilOperators& o = disc_->ops();
  Local l;
  const Eigen::VectorXd ex = comp(x, 0), ey = comp(x, 1);
  l.fxx = o.dx * ex;
  l.fxy = o.dy * ex;
  l.fyx = o.dx * ey;
  l.fyy = o.dy * ey;
  if (second) {
    l.hx[0] = o.dxx * ex;
    l.hx[1] = o.dxy * ex;
    l.hx[2] = o.dyy * ex;
    l.hy[0] = o.dxx * ey;
    l.hy[1] = o.dxy * ey;
    l.hy[2] = o.dyy * ey;
  }
  return l;
}

double MaterialModel::min_det(const Eigen::VectorXd& x) const {
  const Local l = locals(x, false);
  return (l.fxx.cwiseProduct(l.fyy) - l.fxy.cwiseProduct(l.fyx)).minCoeff();
}

double MaterialModel::energy(const Eigen::VectorXd& x) const {
  const Local l = locals(x, true);
  const Eigen::VectorXd& w = disc_->weights();
  double sum = 0.0;
  for (int p = 0; p < disc_->nodes(); ++p) {
    Mat2 F;
    F << l.fxx[p], l.fxy[p], l.fyx[p], l.fyy[p];
    const double W = PrototypeDensity<2>::value(F, params_);
    if (W == kInfinity) return kInfinity;
    const double N = l.hx[0][p] * l.hx[0][p] + 2.0 * l.hx[1][p] * l.hx[1][p] + l.hx[2][p] * l.hx[2][p] +
                     l.hy[0][p] * l.hy[0][p] + 2.0 * l.hy[1][p] * l.hy[1][p] + l.hy[2][p] * l.hy[2][p];
    sum += w[p] * (W + std::pow(N, 0.5 * params_.q) / params_.q);
  }
  return sum;
}

void MaterialModel::add_energy_gradient(const Eigen::VectorXd& x, Eigen::VectorXd& g) const {
  const Local l = locals(x, true);
  const Eigen::VectorXd& w = disc_->weights();
  const int n = disc_->nodes();
  Eigen::VectorXd P[4], Qx[3], Qy[3];
  for (auto& v : P) v.resize(n);
  for (int k = 0; k < 3; ++k) {
    Qx[k].resize(n);
    Qy[k].resize(n);
  }
  for (int p = 0; p < n; ++p) {
    Mat2 F;
    F << l.fxx[p], l.fxy[p], l.fyx[p], l.fyy[p];
    if (!(F.determinant() > 0.0))
      throw InfiniteEnergyError("elastic energy is infinite: det <= 0 at node " + std::to_string(p));
    const Mat2 Pk = w[p] * PrototypeDensity<2>::first_piola(F, params_);
    P[0][p] = Pk(0, 0);
    P[1][p] = Pk(0, 1);
    P[2][p] = Pk(1, 0);
    P[3][p] = Pk(1, 1);
    const double N = l.hx[0][p] * l.hx[0][p] + 2.0 * l.hx[1][p] * l.hx[1][p] + l.hx[2][p] * l.hx[2][p] +
                     l.hy[0][p] * l.hy[0][p] + 2.0 * l.hy[1][p] * l.hy[1][p] + l.hy[2][p] * l.hy[2][p];
    const double c = N > 0.0 ? w[p] * std::pow(N, 0.5 * params_.q - 1.0) : 0.0;
    Qx[0][p] = c * l.hx[0][p];
    Qx[1][p] = 2.0 * c * l.hx[1][p];
    Qx[2][p] = c * l.hx[2][p];
    Qy[0][p] = c * l.hy[0][p];
    Qy[1][p] = 2.0 * c * l.hy[1][p];
    Qy[2][p] = c * l.hy[2][p];
  }
  const StencilOperators& o = disc_->ops();
  comp(g, 0) += o.dx.transpose() * P[0] + o.dy.transpose() * P[1] + o.dxx.transpose() * Qx[0] +
                o.dxy.transpose() * Qx[1] + o.dyy.transpose() * Qx[2];
  comp(g, 1) += o.dx.transpose() * P[2] + o.dy.transpose() * P[3] + o.dxx.transpose() * Qy[0] +
                o.dxy.transpose() * Qy[1] + o.dyy.transpose() * Qy[2];
}

void MaterialModel::add_energy_hessian(const Eigen::VectorXd& x, double scale, Triplets& t, bool project) const {
  const Local l = locals(x, true);
  const Eigen::VectorXd& w = disc_->weights();
  const auto& rows = disc_->rows();
  const std::vector<int> fcomps{0, 0, 1, 1};
  const std::vector<int> hcomps{0, 0, 0, 1, 1, 1};
  for (int p = 0; p < disc_->nodes(); ++p) {
    const auto& r = rows[static_cast<std::size_t>(p)];
    Mat2 F;
    F << l.fxx[p], l.fxy[p], l.fyx[p], l.fyy[p];
    const Eigen::Matrix4d A = PrototypeDensity<2>::tangent(F, params_);
    const Eigen::Matrix4d HF = scale * w[p] * (project ? project_psd<4>(A) : A);
    add_local({&r[0], &r[1], &r[0], &r[1]}, fcomps, HF, t);

    Eigen::Matrix<double, 6, 1> z, Dz;
    z << l.hx[0][p], l.hx[1][p], l.hx[2][p], l.hy[0][p], l.hy[1][p], l.hy[2][p];
    Eigen::Matrix<double, 6, 1> D;
    D << 1, 2, 1, 1, 2, 1;
    Dz = D.cwiseProduct(z);
    const double N = z.dot(Dz);
    if (!(N > 0.0)) continue;
    const double q = params_.q;
    Eigen::Matrix<double, 6, 6> HH = std::pow(N, 0.5 * q - 1.0) * Eigen::Matrix<double, 6, 6>(D.asDiagonal());
    HH += (q - 2.0) * std::pow(N, 0.5 * q - 2.0) * Dz * Dz.transpose();
    HH *= scale * w[p];
    add_local({&r[2], &r[3], &r[4], &r[2], &r[3], &r[4]}, hcomps, HH, t);
  }
}

double MaterialModel::dissipation(const Eigen::VectorXd& x, const Eigen::VectorXd& b) const {
  const Local l = locals(x, false);
  const Local lb = locals(b, false);
  const Eigen::VectorXd& w = disc_->weights();
  double sum = 0.0;
  for (int p = 0; p < disc_->nodes(); ++p) {
    Mat2 F, B;
    F << l.fxx[p], l.fxy[p], l.fyx[p], l.fyy[p];
    B << lb.fxx[p], lb.fxy[p], lb.fyx[p], lb.fyy[p];
    sum += w[p] * (B.transpose() * F + F.transpose() * B).squaredNorm();
  }
  return sum;
}

void MaterialModel::add_dissipation_gradient(const Eigen::VectorXd& x, const Eigen::VectorXd& b,
                                             double scale, Eigen::VectorXd& g) const {
  const Local l = locals(x, false);
  const Local lb = locals(b, false);
  const Eigen::VectorXd& w = disc_->weights();
  const int n = disc_->nodes();
  Eigen::VectorXd P[4];
  for (auto& v : P) v.resize(n);
  for (int p = 0; p < n; ++p) {
    Mat2 F, B;
    F << l.fxx[p], l.fxy[p], l.fyx[p], l.fyy[p];
    B << lb.fxx[p], lb.fxy[p], lb.fyx[p], lb.fyy[p];
    const Mat2 S = B.transpose() * F + F.transpose() * B;
    const Mat2 G = (scale * 4.0 * w[p]) * F * S;
    P[0][p] = G(0, 0);
    P[1][p] = G(0, 1);
    P[2][p] = G(1, 0);
    P[3][p] = G(1, 1);
  }
  const StencilOperators& o = disc_->ops();
  comp(g, 0) += o.dx.transpose() * P[0] + o.dy.transpose() * P[1];
  comp(g, 1) += o.dx.transpose() * P[2] + o.dy.transpose() * P[3];
}

void MaterialModel::add_dissipation_hessian(const Eigen::VectorXd& x, double scale, Triplets& t) const {
  const Local l = locals(x, false);
  const Eigen::VectorXd& w = disc_->weights();
  const auto& rows = disc_->rows();
  const std::vector<int> comps{0, 0, 1, 1};
  for (int p = 0; p < disc_->nodes(); ++p) {
    Mat2 F;
    F << l.fxx[p], l.fxy[p], l.fyx[p], l.fyy[p];
    Mat2 S[4];
    for (int i = 0; i < 4; ++i) {
      Mat2 E = Mat2::Zero();
      E(i / 2, i % 2) = 1.0;
      S[i] = E.transpose() * F + F.transpose() * E;
    }
    Eigen::Matrix4d H;
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) H(i, j) = 2.0 * scale * w[p] * (S[i].array() * S[j].array()).sum();
    const auto& r = rows[static_cast<std::size_t>(p)];
    add_local({&r[0], &r[1], &r[0], &r[1]}, comps, H, t);
  }
}

double MaterialModel::norm_sq(const Eigen::VectorXd& x) const {
  // summed term by term: the assembled Gram matrix cancels catastrophically
  double s = 0.0;
  for (int c = 0; c < 2; ++c) {
    const Eigen::VectorXd v = comp(x, c);
    for (const RegularizationTerm& t : disc_->terms()) {
      const Eigen::VectorXd d = t.op * v;
      s += d.dot(t.weight.cwiseProduct(d));
    }
  }
  return s;
}

void MaterialModel::add_norm_gradient(const Eigen::VectorXd& x, double scale, Eigen::VectorXd& g) const {
  for (int c = 0; c < 2; ++c) {
    const Eigen::VectorXd v = comp(x, c);
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(v.size());
    for (const RegularizationTerm& t : disc_->terms()) acc += t.op.transpose() * t.weight.cwiseProduct(t.op * v);
    comp(g, c) += 2.0 * scale * acc;
  }
}

void MaterialModel::add_norm_hessian(double scale, Triplets& t) const {
  const SparseMatrix& Q = disc_->gram();
  for (int k = 0; k < Q.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(Q, k); it; ++it)
      for (int c = 0; c < 2; ++c)
        t.emplace_back(2 * static_cast<int>(it.row()) + c, 2 * static_cast<int>(it.col()) + c,
                       2.0 * scale * it.value());
}

double elastic_energy(const DeformationField& state, const MaterialParams& mat) {
  const SolidDiscretization disc(state.grid, mat.k0);
  return MaterialModel(disc, mat).energy(state.positions);
}

Eigen::VectorXd elastic_energy_gradient(const DeformationField& state, const MaterialParams& mat) {
  const SolidDiscretization disc(state.grid, mat.k0);
  Eigen::VectorXd g = Eigen::VectorXd::Zero(state.positions.size());
  MaterialModel(disc, mat).add_energy_gradient(state.positions, g);
  return g;
}

double dissipation_rate(const DeformationField& state, const Eigen::VectorXd& vel,
                        const MaterialParams& mat) {
  const SolidDiscretization disc(state.grid, mat.k0);
  return MaterialModel(disc, mat).dissipation(state.positions, vel);
}

Eigen::VectorXd dissipation_gradient(const DeformationField& state, const Eigen::VectorXd& vel,
                                     const MaterialParams& mat) {
  const SolidDiscretization disc(state.grid, mat.k0);
  Eigen::VectorXd g = Eigen::VectorXd::Zero(vel.size());
  MaterialModel(disc, mat).add_dissipation_gradient(state.positions, vel, 1.0, g);
  return g;
}

double regularization_norm_sq(const DeformationField& state, const Eigen::VectorXd& field, int k0) {
  const SolidDiscretization disc(state.grid, k0);
  MaterialParams m;
  m.k0 = k0;
  return MaterialModel(disc, m).norm_sq(field);
}

RegularizedForms regularized_forms(const DeformationField& state, const Eigen::VectorXd& vel,
                                   const MaterialParams& mat, double eps) {
  const SolidDiscretization disc(state.grid, mat.k0);
  const MaterialModel model(disc, mat);
  const double ca = std::pow(eps, mat.a0);
  RegularizedForms f;
  f.E_eps = model.energy(state.positions);
  if (f.E_eps == kInfinity) throw InfiniteEnergyError("regularized energy is infinite: det <= 0");
  f.E_eps += ca * model.norm_sq(state.positions);
  f.dE_eps = Eigen::VectorXd::Zero(state.positions.size());
  model.add_energy_gradient(state.positions, f.dE_eps);
  model.add_norm_gradient(state.positions, ca, f.dE_eps);
  f.R_eps = model.dissipation(state.positions, vel) + eps * model.norm_sq(vel);
  f.dR_eps = Eigen::VectorXd::Zero(vel.size());
  model.add_dissipation_gradient(state.positions, vel, 1.0, f.dR_eps);
  model.add_norm_gradient(vel, eps, f.dR_eps);
  return f;
}

}  // namespace fsi
