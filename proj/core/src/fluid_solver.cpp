#include "fsi/fluid_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "fsi/error.hpp"

namespace fsi {

namespace {

using Triplets = std::vector<Eigen::Triplet<double>>;

int xface(const FluidGrid& g, int i, int j) { return i + (g.resolution[0] + 1) * j; }
int yface(const FluidGrid& g, int i, int j) { return i + g.resolution[0] * j; }

double face_mass_sq(const SolidCoupling& c, const Eigen::VectorXd& u, const Eigen::VectorXd& v) {
  return c.mx.dot(u.cwiseProduct(u)) + c.my.dot(v.cwiseProduct(v));
}

}  // namespace

void FluidParams::validate(std::vector<std::string>* warnings) const {
  std::string err;
  if (!(gamma > 1.0)) err += "gamma must be > 1; ";
  if (!(beta >= std::max(4.0, 2.0 * gamma))) err += "beta must be >= max(4, 2 gamma); ";
  if (!(mu > 0.0)) err += "mu must be > 0; ";
  if (!(zeta > 0.0)) err += "zeta must be > 0; ";
  if (!(eps >= 0.0)) err += "eps must be >= 0; ";
  if (!(varsigma >= 0.0)) err += "varsigma must be >= 0; ";
  if (!(cfl > 0.0 && cfl <= 1.0)) err += "cfl must be in (0, 1]; ";
  if (!(floor_rel >= 0.0)) err += "density floor must be >= 0; ";
  if (!err.empty()) throw InvalidArgumentError("fluid parameters: " + err);
  if (gamma <= 12.0 / 7.0 && warnings != nullptr)
    warnings->push_back("gamma <= 12/7: outside the existence hypothesis gamma > 12/7");
}

double FluidParams::pressure(double rho) const {
  return std::pow(rho, gamma) + eps * std::pow(rho, beta);
}

double FluidParams::sound_speed_sq(double rho) const {
  if (rho <= 0.0) return 0.0;
  return gamma * std::pow(rho, gamma - 1.0) + eps * beta * std::pow(rho, beta - 1.0);
}

double FluidParams::potential(double rho) const { return std::pow(rho, gamma) / (gamma - 1.0); }

double FluidParams::artificial_potential(double rho) const {
  return eps * std::pow(rho, beta) / (beta - 1.0);
}

double FluidParams::potential_derivative(double rho) const {
  return gamma / (gamma - 1.0) * std::pow(rho, gamma - 1.0) +
         eps * beta / (beta - 1.0) * std::pow(rho, beta - 1.0);
}

FluidState::FluidState(const FluidGrid& g, double rho0)
    : grid(g),
      rho(Eigen::VectorXd::Constant(g.cell_count(), rho0)),
      u(Eigen::VectorXd::Zero((g.resolution[0] + 1) * g.resolution[1])),
      v(Eigen::VectorXd::Zero(g.resolution[0] * (g.resolution[1] + 1))) {}

double FluidState::mass() const {
  double m = 0.0;
  for (Eigen::Index c = 0; c < rho.size(); ++c) m += rho[c];
  return m * grid.cell_volume();
}

SolidCoupling empty_coupling(const FluidGrid& fluid) {
  SolidCoupling c;
  c.mask = empty_mask(fluid);
  c.mx = Eigen::VectorXd::Zero((fluid.resolution[0] + 1) * fluid.resolution[1]);
  c.vx = c.mx;
  c.my = Eigen::VectorXd::Zero(fluid.resolution[0] * (fluid.resolution[1] + 1));
  c.vy = c.my;
  return c;
}

SolidCoupling make_coupling(const DeformationField& state, const FluidGrid& fluid) {
  SolidCoupling c = empty_coupling(fluid);
  c.mask = rasterize_solid(state, fluid);
  const int nx = fluid.resolution[0], ny = fluid.resolution[1];
  const auto nc = static_cast<std::size_t>(fluid.cell_count());
  std::vector<double> area(nc, 0.0);
  std::vector<Vec2> mom(nc, Vec2::Zero());
  c.node_weight = Eigen::VectorXd::Zero(state.node_count());
  for (const SubcellSample& s : c.mask.samples) {
    if (s.cell < 0) continue;
    Vec2 vel = Vec2::Zero();
    for (std::size_t q = 0; q < 4; ++q) {
      vel += s.phi[q] * state.node_velocity(s.nodes[q]);
      c.node_weight[s.nodes[q]] += s.ref_area * s.phi[q];
    }
    area[static_cast<std::size_t>(s.cell)] += s.ref_area;
    mom[static_cast<std::size_t>(s.cell)] += s.ref_area * vel;
  }
  for (int j = 0; j < ny; ++j)
    for (int i = 1; i < nx; ++i) {
      const auto L = static_cast<std::size_t>(fluid.cell(i - 1, j));
      const auto R = static_cast<std::size_t>(fluid.cell(i, j));
      const double m = 0.5 * (area[L] + area[R]);
      if (m <= 0.0) continue;
      c.mx[xface(fluid, i, j)] = m;
      c.vx[xface(fluid, i, j)] = 0.5 * (mom[L].x() + mom[R].x()) / m;
    }
  for (int j = 1; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      const auto B = static_cast<std::size_t>(fluid.cell(i, j - 1));
      const auto T = static_cast<std::size_t>(fluid.cell(i, j));
      const double m = 0.5 * (area[B] + area[T]);
      if (m <= 0.0) continue;
      c.my[yface(fluid, i, j)] = m;
      c.vy[yface(fluid, i, j)] = 0.5 * (mom[B].y() + mom[T].y()) / m;
    }
  return c;
}

Eigen::VectorXd trace_to_nodes(const SolidCoupling& c, const FluidState& s, int nodes) {
  const FluidGrid& g = c.mask.grid;
  const int nx = g.resolution[0];
  Eigen::VectorXd U = Eigen::VectorXd::Zero(2 * nodes);
  for (const SubcellSample& smp : c.mask.samples) {
    if (smp.cell < 0) continue;
    const int i = smp.cell % nx, j = smp.cell / nx;
    const Vec2 Us(0.5 * (s.u[xface(g, i, j)] + s.u[xface(g, i + 1, j)]),
                  0.5 * (s.v[yface(g, i, j)] + s.v[yface(g, i, j + 1)]));
    for (std::size_t q = 0; q < 4; ++q) U.segment<2>(2 * smp.nodes[q]) += smp.ref_area * smp.phi[q] * Us;
  }
  for (int k = 0; k < nodes; ++k)
    if (c.node_weight.size() > k && c.node_weight[k] > 0.0) U.segment<2>(2 * k) /= c.node_weight[k];
  return U;
}

FluidSolver::FluidSolver(const FluidGrid& grid, const FluidParams& params, double density_floor)
    : grid_(grid), params_(params), floor_(density_floor) {
  params_.validate();
  nux_ = (grid.resolution[0] - 1) * grid.resolution[1];
  nuy_ = grid.resolution[0] * (grid.resolution[1] - 1);
}

int FluidSolver::unknown_x(int i, int j) const {
  if (i <= 0 || i >= grid_.resolution[0]) return -1;
  return (i - 1) + (grid_.resolution[0] - 1) * j;
}

int FluidSolver::unknown_y(int i, int j) const {
  if (j <= 0 || j >= grid_.resolution[1]) return -1;
  return nux_ + i + grid_.resolution[0] * (j - 1);
}

FluidEnergy FluidSolver::energy(const FluidState& s) const {
  const int nx = grid_.resolution[0], ny = grid_.resolution[1];
  const double vol = grid_.cell_volume();
  FluidEnergy e;
  for (int c = 0; c < grid_.cell_count(); ++c) {
    e.pressure_pot += params_.potential(s.rho[c]) * vol;
    e.artificial_pot += params_.artificial_potential(s.rho[c]) * vol;
  }
  for (int j = 0; j < ny; ++j)
    for (int i = 1; i < nx; ++i) {
      const double r = 0.5 * (s.rho[grid_.cell(i - 1, j)] + s.rho[grid_.cell(i, j)]);
      const double u = s.u[xface(grid_, i, j)];
      e.kinetic += 0.5 * r * u * u * vol;
    }
  for (int j = 1; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      const double r = 0.5 * (s.rho[grid_.cell(i, j - 1)] + s.rho[grid_.cell(i, j)]);
      const double v = s.v[yface(grid_, i, j)];
      e.kinetic += 0.5 * r * v * v * vol;
    }
  return e;
}

double FluidSolver::max_stable_dt(const FluidState& s) const {
  const Vec2 h = grid_.spacing();
  const double hmin = std::min(h.x(), h.y());
  double speed = 0.0, rmax = 0.0;
  for (int c = 0; c < grid_.cell_count(); ++c) {
    speed = std::max(speed, std::sqrt(params_.sound_speed_sq(s.rho[c])));
    rmax = std::max(rmax, s.rho[c]);
  }
  speed += std::max(s.u.cwiseAbs().maxCoeff(), s.v.cwiseAbs().maxCoeff());
  double dt = speed > 0.0 ? params_.cfl * hmin / speed : std::numeric_limits<double>::infinity();
  if (rmax > 0.0) dt = std::min(dt, params_.cfl / rmax);
  return dt;
}

void FluidSolver::check_cfl(const FluidState& s, double dt) const {
  const Vec2 h = grid_.spacing();
  const int nx = grid_.resolution[0], ny = grid_.resolution[1];
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      const double out = std::max(s.u[xface(grid_, i + 1, j)], 0.0) / h.x() +
                         std::max(-s.u[xface(grid_, i, j)], 0.0) / h.x() +
                         std::max(s.v[yface(grid_, i, j + 1)], 0.0) / h.y() +
                         std::max(-s.v[yface(grid_, i, j)], 0.0) / h.y();
      if (dt * out > 1.0)
        throw CflViolationError("CFL violated in cell (" + std::to_string(i) + ", " + std::to_string(j) +
                                "): outflow Courant number " + std::to_string(dt * out));
    }
}

ContinuityResult FluidSolver::continuity_substep(const FluidState& s, const SolidMask& mask, double dt) {
  if (!(dt > 0.0)) throw InvalidArgumentError("substep must be positive");
  check_cfl(s, dt);
  const int nx = grid_.resolution[0], ny = grid_.resolution[1];
  const Vec2 h = grid_.spacing();
  const double vol = grid_.cell_volume();
  ContinuityResult r;
  r.fx = Eigen::VectorXd::Zero(s.u.size());
  r.fy = Eigen::VectorXd::Zero(s.v.size());
  for (int j = 0; j < ny; ++j)
    for (int i = 1; i < nx; ++i) {
      const double u = s.u[xface(grid_, i, j)];
      const double up = u > 0.0 ? s.rho[grid_.cell(i - 1, j)] : s.rho[grid_.cell(i, j)];
      r.fx[xface(grid_, i, j)] = h.y() * u * up;
    }
  for (int j = 1; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      const double v = s.v[yface(grid_, i, j)];
      const double up = v > 0.0 ? s.rho[grid_.cell(i, j - 1)] : s.rho[grid_.cell(i, j)];
      r.fy[yface(grid_, i, j)] = h.x() * v * up;
    }
  Eigen::VectorXd star(grid_.cell_count());
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      const int c = grid_.cell(i, j);
      const double div = r.fx[xface(grid_, i + 1, j)] - r.fx[xface(grid_, i, j)] +
                         r.fy[yface(grid_, i, j + 1)] - r.fy[yface(grid_, i, j)];
      const double rho = s.rho[c];
      const double chi = mask.coverage[static_cast<std::size_t>(c)];
      star[c] = rho - dt / vol * div - dt * chi * rho * rho;
      if (chi > 0.0)
        r.sink_work += chi * vol *
                       (std::pow(rho, params_.gamma + 1.0) / (params_.gamma - 1.0) +
                        params_.eps * std::pow(rho, params_.beta + 1.0) / (params_.beta - 1.0));
    }

  const double wx = h.y() / h.x(), wy = h.x() / h.y();
  if (params_.varsigma > 0.0) {
    if (!diffusion_ || diffusion_dt_ != dt) {
      Triplets t;
      for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i) {
          const int c = grid_.cell(i, j);
          double diag = vol;
          auto link = [&](int n, double w) {
            t.emplace_back(c, n, -dt * params_.varsigma * w);
            diag += dt * params_.varsigma * w;
          };
          if (i > 0) link(grid_.cell(i - 1, j), wx);
          if (i + 1 < nx) link(grid_.cell(i + 1, j), wx);
          if (j > 0) link(grid_.cell(i, j - 1), wy);
          if (j + 1 < ny) link(grid_.cell(i, j + 1), wy);
          t.emplace_back(c, c, diag);
        }
      SparseMatrix A(grid_.cell_count(), grid_.cell_count());
      A.setFromTriplets(t.begin(), t.end());
      diffusion_ = std::make_unique<Eigen::SimplicialLDLT<SparseMatrix>>(A);
      if (diffusion_->info() != Eigen::Success) {
        diffusion_.reset();
        throw LinearSolverError("density diffusion factorization failed");
      }
      diffusion_dt_ = dt;
    }
    r.rho = diffusion_->solve(vol * star);
    if (diffusion_->info() != Eigen::Success || !r.rho.allFinite())
      throw LinearSolverError("density diffusion solve failed");
  } else {
    r.rho = star;
  }
  for (int c = 0; c < grid_.cell_count(); ++c)
    if (r.rho[c] < 0.0) {
      r.clipped_mass += -r.rho[c] * vol;
      r.rho[c] = 0.0;
    }
  if (params_.varsigma > 0.0) {
    auto secant = [&](int a, int b, double w) {
      const double dr = r.rho[b] - r.rho[a];
      return w * (params_.potential_derivative(r.rho[b]) - params_.potential_derivative(r.rho[a])) * dr;
    };
    double work = 0.0;
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < nx; ++i) {
        if (i + 1 < nx) work += secant(grid_.cell(i, j), grid_.cell(i + 1, j), wx);
        if (j + 1 < ny) work += secant(grid_.cell(i, j), grid_.cell(i, j + 1), wy);
      }
    r.damping_work = params_.varsigma * work;
  }
  return r;
}

SparseMatrix FluidSolver::strain_operator(const SolidMask& mask) const {
  const int nx = grid_.resolution[0], ny = grid_.resolution[1];
  const Vec2 h = grid_.spacing();
  const double vol = grid_.cell_volume();
  const double d = 2.0;
  auto kappa = [&](int i, int j) {
    if (!params_.eps_viscosity_in_solid) return 1.0;
    const double chi = mask.coverage[static_cast<std::size_t>(grid_.cell(i, j))];
    return (1.0 - chi) + params_.eps * chi;
  };
  Triplets t;
  int row = 0;
  auto put = [&](int r, int unknown, double coef) {
    if (unknown >= 0 && coef != 0.0) t.emplace_back(r, unknown, coef);
  };
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      const double k = kappa(i, j);
      // d/dx u and d/dy v at the cell center
      const int ul = unknown_x(i, j), ur = unknown_x(i + 1, j);
      const int vb = unknown_y(i, j), vt = unknown_y(i, j + 1);
      const double sd = std::sqrt(2.0 * params_.mu * k * vol);
      const double sb = std::sqrt(params_.zeta * k * vol);
      // row: sd * (ux - div/d)
      put(row, ur, sd * (1.0 - 1.0 / d) / h.x());
      put(row, ul, -sd * (1.0 - 1.0 / d) / h.x());
      put(row, vt, -sd / d / h.y());
      put(row, vb, sd / d / h.y());
      ++row;
      // row: sd * (vy - div/d)
      put(row, vt, sd * (1.0 - 1.0 / d) / h.y());
      put(row, vb, -sd * (1.0 - 1.0 / d) / h.y());
      put(row, ur, -sd / d / h.x());
      put(row, ul, sd / d / h.x());
      ++row;
      // row: sb * div
      put(row, ur, sb / h.x());
      put(row, ul, -sb / h.x());
      put(row, vt, sb / h.y());
      put(row, vb, -sb / h.y());
      ++row;
    }
  for (int j = 0; j <= ny; ++j)
    for (int i = 0; i <= nx; ++i) {
      const bool ex = i == 0 || i == nx, ey = j == 0 || j == ny;
      if (ex && ey) continue;
      double ksum = 0.0;
      int kn = 0;
      for (int cj = j - 1; cj <= j; ++cj)
        for (int ci = i - 1; ci <= i; ++ci)
          if (ci >= 0 && cj >= 0 && ci < nx && cj < ny) {
            ksum += kappa(ci, cj);
            ++kn;
          }
      const double w = vol * (ex ? 0.5 : 1.0) * (ey ? 0.5 : 1.0);
      const double s = std::sqrt(params_.mu * (ksum / kn) * w);
      // du/dy with mirrored ghosts at the walls
      if (!ex) {
        if (j < ny) put(row, unknown_x(i, j), s / h.y());
        else put(row, unknown_x(i, ny - 1), -s / h.y());
        if (j >= 1) put(row, unknown_x(i, j - 1), -s / h.y());
        else put(row, unknown_x(i, 0), s / h.y());
      }
      // dv/dx
      if (!ey) {
        if (i < nx) put(row, unknown_y(i, j), s / h.x());
        else put(row, unknown_y(nx - 1, j), -s / h.x());
        if (i >= 1) put(row, unknown_y(i - 1, j), -s / h.x());
        else put(row, unknown_y(0, j), s / h.x());
      }
      ++row;
    }
  SparseMatrix S(row, nux_ + nuy_);
  S.setFromTriplets(t.begin(), t.end());
  return S;
}

MomentumResult FluidSolver::momentum_substep(const FluidState& s, const ContinuityResult& c,
                                             const SolidCoupling& coupling, double h, double dt) {
  const int nx = grid_.resolution[0], ny = grid_.resolution[1];
  const Vec2 hs = grid_.spacing();
  const double vol = grid_.cell_volume();
  const SolidMask& mask = coupling.mask;
  const Eigen::VectorXd& r0 = s.rho;
  const Eigen::VectorXd& r1 = c.rho;
  const double sv = params_.varsigma;

  Eigen::VectorXd p(grid_.cell_count());
  for (int k = 0; k < grid_.cell_count(); ++k) p[k] = params_.pressure(r1[k]);
  auto rho1 = [&](int i, int j) {
    return r1[grid_.cell(std::clamp(i, 0, nx - 1), std::clamp(j, 0, ny - 1))];
  };
  auto sink = [&](int cell) {
    return mask.coverage[static_cast<std::size_t>(cell)] * r0[cell] * r0[cell];
  };
  const Eigen::VectorXd& fx = c.fx;
  const Eigen::VectorXd& fy = c.fy;
  auto U = [&](int i, int j) { return s.u[xface(grid_, i, j)]; };
  auto V = [&](int i, int j) { return s.v[yface(grid_, i, j)]; };

  const int n = nux_ + nuy_;
  Eigen::VectorXd diag(n), rhs(n);
  for (int j = 0; j < ny; ++j)
    for (int i = 1; i < nx; ++i) {
      const int k = unknown_x(i, j), f = xface(grid_, i, j);
      const int L = grid_.cell(i - 1, j), R = grid_.cell(i, j);
      const double rf0 = 0.5 * (r0[L] + r0[R]), rf1 = 0.5 * (r1[L] + r1[R]);
      const double sf = 0.5 * (sink(L) + sink(R));
      const double Fe = 0.5 * (fx[f] + fx[xface(grid_, i + 1, j)]);
      const double Fw = 0.5 * (fx[xface(grid_, i - 1, j)] + fx[f]);
      const double Fn = j + 1 < ny ? 0.5 * (fy[yface(grid_, i - 1, j + 1)] + fy[yface(grid_, i, j + 1)]) : 0.0;
      const double Fs = j > 0 ? 0.5 * (fy[yface(grid_, i - 1, j)] + fy[yface(grid_, i, j)]) : 0.0;
      const double ue = Fe >= 0.0 ? U(i, j) : U(i + 1, j);
      const double uw = Fw >= 0.0 ? U(i - 1, j) : U(i, j);
      const double un = Fn >= 0.0 ? U(i, j) : (j + 1 < ny ? U(i, j + 1) : 0.0);
      const double us = Fs >= 0.0 ? (j > 0 ? U(i, j - 1) : 0.0) : U(i, j);
      const double conv = Fe * ue - Fw * uw + Fn * un - Fs * us;
      const double rx = (r1[R] - r1[L]) / hs.x();
      const double ry = 0.25 * ((rho1(i - 1, j + 1) - rho1(i - 1, j - 1)) + (rho1(i, j + 1) - rho1(i, j - 1))) / hs.y();
      const double ux = (U(i + 1, j) - U(i - 1, j)) / (2.0 * hs.x());
      const double above = j + 1 < ny ? U(i, j + 1) : -U(i, j);
      const double below = j > 0 ? U(i, j - 1) : -U(i, j);
      const double uy = (above - below) / (2.0 * hs.y());
      const double m = coupling.mx[f];
      diag[k] = vol * rf1 / dt + 0.5 * vol * sf + m / h;
      rhs[k] = vol * rf0 * U(i, j) / dt - conv - (p[R] - p[L]) * hs.y() - sv * vol * (rx * ux + ry * uy) +
               m * coupling.vx[f] / h;
    }
  for (int j = 1; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      const int k = unknown_y(i, j), f = yface(grid_, i, j);
      const int B = grid_.cell(i, j - 1), T = grid_.cell(i, j);
      const double rf0 = 0.5 * (r0[B] + r0[T]), rf1 = 0.5 * (r1[B] + r1[T]);
      const double sf = 0.5 * (sink(B) + sink(T));
      const double Fn = 0.5 * (fy[f] + fy[yface(grid_, i, j + 1)]);
      const double Fs = 0.5 * (fy[yface(grid_, i, j - 1)] + fy[f]);
      const double Fe = i + 1 < nx ? 0.5 * (fx[xface(grid_, i + 1, j - 1)] + fx[xface(grid_, i + 1, j)]) : 0.0;
      const double Fw = i > 0 ? 0.5 * (fx[xface(grid_, i, j - 1)] + fx[xface(grid_, i, j)]) : 0.0;
      const double vn = Fn >= 0.0 ? V(i, j) : V(i, j + 1);
      const double vs = Fs >= 0.0 ? V(i, j - 1) : V(i, j);
      const double ve = Fe >= 0.0 ? V(i, j) : (i + 1 < nx ? V(i + 1, j) : 0.0);
      const double vw = Fw >= 0.0 ? (i > 0 ? V(i - 1, j) : 0.0) : V(i, j);
      const double conv = Fn * vn - Fs * vs + Fe * ve - Fw * vw;
      const double ry = (r1[T] - r1[B]) / hs.y();
      const double rx = 0.25 * ((rho1(i + 1, j - 1) - rho1(i - 1, j - 1)) + (rho1(i + 1, j) - rho1(i - 1, j))) / hs.x();
      const double vy = (V(i, j + 1) - V(i, j - 1)) / (2.0 * hs.y());
      const double right = i + 1 < nx ? V(i + 1, j) : -V(i, j);
      const double left = i > 0 ? V(i - 1, j) : -V(i, j);
      const double vx = (right - left) / (2.0 * hs.x());
      const double m = coupling.my[f];
      diag[k] = vol * rf1 / dt + 0.5 * vol * sf + m / h;
      rhs[k] = vol * rf0 * V(i, j) / dt - conv - (p[T] - p[B]) * hs.x() - sv * vol * (rx * vx + ry * vy) +
               m * coupling.vy[f] / h;
    }

  const SparseMatrix S = strain_operator(mask);
  SparseMatrix A = S.transpose() * S;
  for (int k = 0; k < n; ++k) A.coeffRef(k, k) += diag[k];
  if (!momentum_) momentum_ = std::make_unique<Eigen::SimplicialLDLT<SparseMatrix>>();
  momentum_->compute(A);
  if (momentum_->info() != Eigen::Success) throw LinearSolverError("momentum factorization failed");
  const Eigen::VectorXd x = momentum_->solve(rhs);
  if (momentum_->info() != Eigen::Success || !x.allFinite()) throw LinearSolverError("momentum solve failed");

  MomentumResult out;
  out.u = Eigen::VectorXd::Zero(s.u.size());
  out.v = Eigen::VectorXd::Zero(s.v.size());
  for (int j = 0; j < ny; ++j)
    for (int i = 1; i < nx; ++i) out.u[xface(grid_, i, j)] = x[unknown_x(i, j)];
  for (int j = 1; j < ny; ++j)
    for (int i = 0; i < nx; ++i) out.v[yface(grid_, i, j)] = x[unknown_y(i, j)];
  out.viscous_dissipation = (S * x).squaredNorm();
  // velocity recovery in vacuum outside the solid
  for (int j = 0; j < ny; ++j)
    for (int i = 1; i < nx; ++i) {
      const int f = xface(grid_, i, j);
      if (0.5 * (r1[grid_.cell(i - 1, j)] + r1[grid_.cell(i, j)]) <= floor_ && coupling.mx[f] == 0.0) out.u[f] = 0.0;
    }
  for (int j = 1; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      const int f = yface(grid_, i, j);
      if (0.5 * (r1[grid_.cell(i, j - 1)] + r1[grid_.cell(i, j)]) <= floor_ && coupling.my[f] == 0.0) out.v[f] = 0.0;
    }
  return out;
}

FspResult FluidSolver::solve_fsp(const FluidState& start, const SspResult& solid, double h, int window) {
  const int M = static_cast<int>(solid.records.size());
  if (M < 1 || static_cast<int>(solid.states.size()) != M + 1)
    throw InvalidArgumentError("solid trajectory must hold M + 1 states");
  if (!(start.grid == grid_)) throw InvalidArgumentError("fluid state lives on a different grid");
  const double dt_mm = h / M;
  const SolidGrid& sg = solid.states.front().grid;
  const int nodes = sg.node_count();
  const std::vector<double> wv = quadrature_weights(sg.nodes());
  auto l2 = [&](const Eigen::VectorXd& a) {
    double s = 0.0;
    for (int k = 0; k < nodes; ++k) s += wv[static_cast<std::size_t>(k)] * a.segment<2>(2 * k).squaredNorm();
    return s;
  };

  FspResult r;
  r.state = start;
  r.trace.source_window = window;
  r.trace.t0 = start.time;
  r.trace.h = h;
  r.trace.U.assign(static_cast<std::size_t>(M), Eigen::VectorXd::Zero(2 * nodes));
  r.bin_stored.assign(static_cast<std::size_t>(M), 0.0);

  for (int k = 0; k < M; ++k) {
    FspSubstepRow row;
    row.min_rho = std::numeric_limits<double>::infinity();
    const DeformationField& base = solid.states[static_cast<std::size_t>(k)];
    const Eigen::VectorXd& vk = solid.states[static_cast<std::size_t>(k) + 1].velocity;
    const double dt_max = max_stable_dt(r.state);
    const int m = std::max(1, static_cast<int>(std::ceil(dt_mm / dt_max - 1e-9)));
    const double dt = dt_mm / m;
    Eigen::VectorXd& bin = r.trace.U[static_cast<std::size_t>(k)];
    SolidCoupling coupling;
    for (int sub = 0; sub < m; ++sub) {
      DeformationField eta = base;
      eta.positions = base.positions + ((sub + 1) * dt) * vk;
      eta.velocity = vk;
      try {
        coupling = make_coupling(eta, grid_);
        const ContinuityResult cont = continuity_substep(r.state, coupling.mask, dt);
        const MomentumResult mom = momentum_substep(r.state, cont, coupling, h, dt);
        r.state.rho = cont.rho;
        r.state.u = mom.u;
        r.state.v = mom.v;
        r.state.time += dt;
        row.visc += dt * mom.viscous_dissipation;
        row.sink += dt * cont.sink_work;
        row.damping += dt * cont.damping_work;
        row.clipped_mass += cont.clipped_mass;
        row.min_rho = std::min(row.min_rho, r.state.rho.minCoeff());
      } catch (const Error& e) {
        throw Error("fluid substep at t = " + std::to_string(r.state.time + dt) + ": " + e.what());
      }
      const Eigen::VectorXd du = r.state.u - coupling.vx, dv = r.state.v - coupling.vy;
      const double c = dt / (2.0 * h);
      const double uu = face_mass_sq(coupling, r.state.u, r.state.v);
      row.match += c * face_mass_sq(coupling, du, dv);
      row.fluid_gain += c * face_mass_sq(coupling, coupling.vx, coupling.vy);
      const Eigen::VectorXd Un = trace_to_nodes(coupling, r.state, nodes);
      const double Usq = l2(Un);
      row.stored += c * Usq;
      row.transfer_loss += c * (uu - Usq);
      row.mismatch_sq_dt += dt * l2(Un - vk);
      bin += dt * Un;
      r.fluid_impulse += -(dt / h) * Eigen::Vector2d(coupling.mx.dot(du), coupling.my.dot(dv));
      ++row.substeps;
    }
    bin /= dt_mm;
    r.bin_stored[static_cast<std::size_t>(k)] = dt_mm / (2.0 * h) * l2(bin);
    row.time = r.state.time;
    row.energy = energy(r.state);
    row.mass = r.state.mass();
    double in_mask = 0.0;
    for (int cidx = 0; cidx < grid_.cell_count(); ++cidx)
      in_mask += coupling.mask.coverage[static_cast<std::size_t>(cidx)] * r.state.rho[cidx];
    row.mass_in_mask = in_mask * grid_.cell_volume();
    r.rows.push_back(row);
  }
  return r;
}

Eigen::VectorXd continuity_substep(const FluidState& s, const SolidMask& mask, const FluidParams& p, double dt) {
  FluidSolver solver(s.grid, p, 0.0);
  return solver.continuity_substep(s, mask, dt).rho;
}

MomentumResult momentum_substep(const FluidState& s, const SolidCoupling& coupling, const FluidParams& p,
                                double h, double dt) {
  FluidSolver solver(s.grid, p, 0.0);
  const ContinuityResult c = solver.continuity_substep(s, coupling.mask, dt);
  return solver.momentum_substep(s, c, coupling, h, dt);
}

}  // namespace fsi
