#include "kresling/truss.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <algorithm>
#include <cmath>
#include <limits>

namespace kresling {

void ChainConfig::validate() const {
  if (cells.empty()) throw Error(ErrorCode::InvalidArgument, "chain needs at least one cell");
  for (const auto& c : cells) {
    c.validate();
    if (c.N != cells.front().N) throw Error(ErrorCode::InvalidArgument, "cells must share N");
  }
  if (damping.c_u < 0 || damping.c_phi < 0)
    throw Error(ErrorCode::InvalidArgument, "damping must be non-negative");
  if (n_free() < 1) throw Error(ErrorCode::InvalidArgument, "chain has no free separator");
}

ChainConfig alternating_chain(const Design& base, int n_cells, Boundary far, Damping damping) {
  ChainConfig c;
  c.far = far;
  c.damping = damping;
  for (int i = 0; i < n_cells; ++i) c.cells.push_back(i % 2 == 0 ? base : base.mirrored());
  return c;
}

Damping proportional_damping(const Design& d, double beta) { return {beta * d.m, beta * d.j}; }

void Drive::validate() const {
  if (!(freq > 0)) throw Error(ErrorCode::InvalidArgument, "drive frequency must be positive");
  if (u_amp < 0 || phi_amp < 0) throw Error(ErrorCode::InvalidArgument, "negative drive amplitude");
}

Eigen::MatrixXd Trajectory::channel(int c) const {
  const int nf = n_free();
  Eigen::MatrixXd out(samples(), nf);
  for (int k = 0; k < nf; ++k) out.col(k) = state.col(4 * k + c);
  return out;
}

Trajectory Trajectory::segment(int begin, int count) const {
  Trajectory s;
  s.sample_rate = sample_rate;
  s.t = t.segment(begin, count);
  s.drive = drive.middleRows(begin, count);
  s.state = state.middleRows(begin, count);
  s.diverged = diverged;
  s.divergence_time = divergence_time;
  return s;
}

TrussSystem::TrussSystem(const ChainConfig& chain) : chain_(chain) {
  chain_.validate();
  for (const auto& d : chain_.cells) cells_.emplace_back(d);
  for (int s = chain_.first_free(); s < chain_.first_free() + chain_.n_free(); ++s) {
    const Design& d = chain_.cells[std::max(0, s - 1)];
    inv_m_.push_back(1.0 / d.m);
    inv_j_.push_back(1.0 / d.j);
  }
  F_.assign(cells_.size(), 0.0);
  T_.assign(cells_.size(), 0.0);
}

void TrussSystem::fold_states(const Eigen::Ref<const Eigen::VectorXd>& x,
                              const Eigen::Vector4d& drive,
                              std::vector<FoldState<double>>& folds) const {
  const int nc = chain_.n_cells();
  const int f0 = chain_.first_free();
  const int nf = chain_.n_free();
  auto u = [&](int s) {
    const int k = s - f0;
    if (k >= 0 && k < nf) return x[4 * k];
    return s == 0 ? drive[0] : 0.0;
  };
  auto p = [&](int s) {
    const int k = s - f0;
    if (k >= 0 && k < nf) return x[4 * k + 1];
    return s == 0 ? drive[1] : 0.0;
  };
  folds.resize(nc);
  for (int c = 0; c < nc; ++c) folds[c] = {u(c) - u(c + 1), p(c) - p(c + 1)};
}

void TrussSystem::rhs(const Eigen::Ref<const Eigen::VectorXd>& x, const Eigen::Vector4d& drive,
                      Eigen::Ref<Eigen::VectorXd> dx) const {
  const int nc = chain_.n_cells();
  const int f0 = chain_.first_free();
  const int nf = chain_.n_free();
  double u_prev = f0 == 0 ? x[0] : drive[0];
  double p_prev = f0 == 0 ? x[1] : drive[1];
  for (int c = 0; c < nc; ++c) {
    const int k = c + 1 - f0;
    const bool free_next = k < nf;
    const double u_next = free_next ? x[4 * k] : 0.0;
    const double p_next = free_next ? x[4 * k + 1] : 0.0;
    cells_[c].force_torque({u_prev - u_next, p_prev - p_next}, F_[c], T_[c]);
    u_prev = u_next;
    p_prev = p_next;
  }
  const double cu = chain_.damping.c_u, cp = chain_.damping.c_phi;
  for (int k = 0; k < nf; ++k) {
    const int s = k + f0;
    const double Fin = s > 0 ? F_[s - 1] : 0.0, Tin = s > 0 ? T_[s - 1] : 0.0;
    const double Fout = s < nc ? F_[s] : 0.0, Tout = s < nc ? T_[s] : 0.0;
    const double v = x[4 * k + 2], w = x[4 * k + 3];
    dx[4 * k] = v;
    dx[4 * k + 1] = w;
    dx[4 * k + 2] = (Fin - Fout - cu * v) * inv_m_[k];
    dx[4 * k + 3] = (Tin - Tout - cp * w) * inv_j_[k];
  }
}

double TrussSystem::energy(const Eigen::Ref<const Eigen::VectorXd>& x,
                           const Eigen::Vector4d& drive) const {
  std::vector<FoldState<double>> folds;
  fold_states(x, drive, folds);
  double e = 0.0;
  for (int c = 0; c < chain_.n_cells(); ++c) e += cells_[c].potential(folds[c]);
  for (int k = 0; k < chain_.n_free(); ++k) {
    const double v = x[4 * k + 2], w = x[4 * k + 3];
    e += 0.5 * v * v / inv_m_[k] + 0.5 * w * w / inv_j_[k];
  }
  return e;
}

Eigen::VectorXd equations_of_motion(const ChainConfig& chain, const Eigen::VectorXd& x, double t,
                                    const Drive& drive) {
  TrussSystem sys(chain);
  if (x.size() != sys.state_dim()) throw Error(ErrorCode::InvalidArgument, "state size mismatch");
  Eigen::VectorXd dx(x.size());
  sys.rhs(x, drive.at(t), dx);
  return dx;
}

void rk4_advance(const TrussSystem& sys, const Drive& drive, Eigen::VectorXd& x, double t0,
                 double dt, long n) {
  const int dim = sys.state_dim();
  Eigen::VectorXd k1(dim), k2(dim), k3(dim), k4(dim), y(dim);
  for (long s = 0; s < n; ++s) {
    const double t = t0 + static_cast<double>(s) * dt;
    sys.rhs(x, drive.at(t), k1);
    y.noalias() = x + 0.5 * dt * k1;
    sys.rhs(y, drive.at(t + 0.5 * dt), k2);
    y.noalias() = x + 0.5 * dt * k2;
    sys.rhs(y, drive.at(t + 0.5 * dt), k3);
    y.noalias() = x + dt * k3;
    sys.rhs(y, drive.at(t + dt), k4);
    x += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
}

Trajectory integrate(const ChainConfig& chain, const Drive& drive, double t_end,
                     const IntegrateOptions& opts) {
  drive.validate();
  if (t_end < 0 || opts.t_settle < 0) throw Error(ErrorCode::InvalidArgument, "negative duration");
  if (!(opts.dt > 0) || !(opts.sample_rate > 0))
    throw Error(ErrorCode::InvalidArgument, "dt and sample_rate must be positive");
  TrussSystem sys(chain);
  const int dim = sys.state_dim();
  Eigen::VectorXd x = opts.x0.size() ? opts.x0 : Eigen::VectorXd::Zero(dim);
  if (x.size() != dim) throw Error(ErrorCode::InvalidArgument, "initial state size mismatch");

  const double ratio = 1.0 / (opts.sample_rate * opts.dt);
  const long per_sample = std::max(1L, static_cast<long>(std::ceil(ratio - 1e-9)));
  const double dt = 1.0 / (opts.sample_rate * static_cast<double>(per_sample));
  const long settle = std::lround(opts.t_settle * opts.sample_rate);
  const long n_out = std::lround(t_end * opts.sample_rate) + 1;

  Trajectory tr;
  tr.sample_rate = opts.sample_rate;
  tr.t.resize(n_out);
  tr.drive.resize(n_out, 4);
  tr.state.resize(n_out, dim);

  auto blown = [&](const Eigen::VectorXd& v) { return !v.allFinite() || v.cwiseAbs().maxCoeff() > opts.bound; };
  long sample = 0;
  long recorded = 0;
  try {
    for (; sample < settle + n_out; ++sample) {
      const double t = static_cast<double>(sample) / opts.sample_rate;
      if (sample >= settle) {
        tr.t[recorded] = t;
        tr.drive.row(recorded) = drive.at(t).transpose();
        tr.state.row(recorded) = x.transpose();
        ++recorded;
      }
      if (sample + 1 == settle + n_out) break;
      rk4_advance(sys, drive, x, t, dt, per_sample);
      if (blown(x)) {
        tr.diverged = true;
        tr.divergence_time = static_cast<double>(sample + 1) / opts.sample_rate;
        break;
      }
    }
  } catch (const Error&) {
    tr.diverged = true;
    tr.divergence_time = static_cast<double>(sample) / opts.sample_rate;
  }
  if (recorded < n_out) {
    tr.t.conservativeResize(recorded);
    tr.drive.conservativeResize(recorded, 4);
    tr.state.conservativeResize(recorded, dim);
  }
  return tr;
}

PeriodicOrbitResult periodic_orbit(const ChainConfig& chain, const Drive& drive, double dt,
                                   double tol, int max_iter, const Eigen::VectorXd& guess) {
  drive.validate();
  TrussSystem sys(chain);
  const int dim = sys.state_dim();
  const double period = 1.0 / drive.freq;
  const long steps = static_cast<long>(std::ceil(period / dt - 1e-9));
  const double h = period / static_cast<double>(steps);
  const double omega = 2.0 * std::numbers::pi * drive.freq;

  Eigen::VectorXd wgt(dim);
  for (int k = 0; k < dim / 4; ++k) wgt.segment<4>(4 * k) << 1.0, 1.0, 1.0 / omega, 1.0 / omega;
  const double amp = std::max({drive.u_amp, drive.phi_amp, 1e-12});

  auto flow = [&](const Eigen::VectorXd& x0) {
    Eigen::VectorXd x = x0;
    rk4_advance(sys, drive, x, 0.0, h, steps);
    return x;
  };
  auto scaled_norm = [&](const Eigen::VectorXd& v) { return v.cwiseProduct(wgt).cwiseAbs().maxCoeff(); };

  PeriodicOrbitResult res;
  Eigen::VectorXd x = guess.size() == dim ? guess : Eigen::VectorXd::Zero(dim);
  Eigen::VectorXd r = flow(x) - x;
  auto rel = [&](const Eigen::VectorXd& rv, const Eigen::VectorXd& xv) {
    return scaled_norm(rv) / std::max(scaled_norm(xv), amp);
  };
  res.residual = rel(r, x);
  Eigen::MatrixXd J(dim, dim);
  for (int it = 0; it < max_iter && res.residual > tol; ++it) {
    const double scale = std::max(scaled_norm(x), amp);
    for (int i = 0; i < dim; ++i) {
      const double step = 1e-6 * scale / wgt[i];
      Eigen::VectorXd xp = x;
      xp[i] += step;
      J.col(i) = (flow(xp) - xp - r) / step;
    }
    const Eigen::VectorXd dx = J.fullPivLu().solve(-r);
    double lam = 1.0;
    bool accepted = false;
    for (int ls = 0; ls < 12; ++ls, lam *= 0.5) {
      const Eigen::VectorXd xn = x + lam * dx;
      const Eigen::VectorXd rn = flow(xn) - xn;
      if (!rn.allFinite()) continue;
      const double resn = rel(rn, xn);
      if (resn < res.residual) {
        x = xn;
        r = rn;
        res.residual = resn;
        accepted = true;
        break;
      }
    }
    res.iterations = it + 1;
    if (!accepted) break;
  }
  res.x0 = x;
  res.converged = res.residual <= tol;
  return res;
}

std::vector<FoldState<double>> potential_minima(const Design& d, double u_lo, double u_hi,
                                                double phi_lo, double phi_hi, int grid) {
  if (grid < 3 || !(u_hi > u_lo) || !(phi_hi > phi_lo))
    throw Error(ErrorCode::InvalidArgument, "potential_minima needs a non-empty window and grid >= 3");
  const CellMechanics<double> cell(d);
  auto at = [&](int i, int k) {
    return Eigen::Vector2d(u_lo + (u_hi - u_lo) * i / (grid - 1), phi_lo + (phi_hi - phi_lo) * k / (grid - 1));
  };
  auto energy = [&](const Eigen::Vector2d& y) {
    try {
      return cell.potential({y[0], y[1]});
    } catch (const Error&) {
      return std::numeric_limits<double>::infinity();
    }
  };
  auto grad = [&](const Eigen::Vector2d& y) {
    double F, T;
    cell.force_torque({y[0], y[1]}, F, T);
    return Eigen::Vector2d(F, T);
  };
  auto hess = [&](const Eigen::Vector2d& y) {
    Eigen::Matrix2d H;
    for (int c = 0; c < 2; ++c) {
      Eigen::Vector2d s = Eigen::Vector2d::Zero();
      s[c] = 1e-7;
      H.col(c) = (grad(y + s) - grad(y - s)) / 2e-7;
    }
    return Eigen::Matrix2d(0.5 * (H + H.transpose()));
  };
  Eigen::MatrixXd V(grid, grid);
  for (int i = 0; i < grid; ++i)
    for (int k = 0; k < grid; ++k) V(i, k) = energy(at(i, k));

  std::vector<FoldState<double>> out;
  for (int i = 1; i < grid - 1; ++i)
    for (int k = 1; k < grid - 1; ++k) {
      bool lowest = std::isfinite(V(i, k));
      for (int di = -1; di <= 1 && lowest; ++di)
        for (int dk = -1; dk <= 1; ++dk)
          if ((di || dk) && V(i + di, k + dk) <= V(i, k)) lowest = false;
      if (!lowest) continue;
      Eigen::Vector2d x = at(i, k);
      bool ok = true;
      try {
        for (int it = 0; it < 50 && ok; ++it) {
          const Eigen::Vector2d step = hess(x).ldlt().solve(grad(x));
          ok = step.allFinite();
          x -= step;
          if (step.cwiseAbs().maxCoeff() < 1e-15) break;
        }
        ok = ok && grad(x).norm() < 1e-8 && hess(x).selfadjointView<Eigen::Lower>().eigenvalues().minCoeff() > 0;
      } catch (const Error&) {
        ok = false;
      }
      if (!ok || x[0] < u_lo || x[0] > u_hi || x[1] < phi_lo || x[1] > phi_hi) continue;
      const bool known = std::any_of(out.begin(), out.end(), [&](const FoldState<double>& m) {
        return std::abs(m.du - x[0]) < 1e-6 && std::abs(m.dphi - x[1]) < 1e-5;
      });
      if (!known) out.push_back({x[0], x[1]});
    }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.du < b.du; });
  return out;
}

}  // namespace kresling
