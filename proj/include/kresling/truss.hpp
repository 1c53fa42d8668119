#pragma once

#include <Eigen/Core>
#include <cmath>
#include <limits>
#include <numbers>
#include <utility>
#include <vector>

#include "kresling/geometry.hpp"

namespace kresling {

/// Rest-referenced crease springs of one cell: potential, force and torque.
template <typename Scalar>
class CellMechanics {
 public:
  explicit CellMechanics(const KreslingDesign<Scalar>& d) : d_(d) {
    d_.validate();
    using std::cos;
    using std::sin;
    const Scalar off = d_.chirality() * Scalar(std::numbers::pi) / Scalar(2 * d_.N);
    sin_off_ = sin(off);
    cos_off_ = cos(off);
    cos_pin_ = cos(Scalar(std::numbers::pi) / Scalar(d_.N));
    rest_ = crease_geometry(d_, FoldState<Scalar>{Scalar(0), Scalar(0)});
    // Same arithmetic as the loads, so rest is an exact equilibrium.
    const Lengths l = lengths(FoldState<Scalar>{Scalar(0), Scalar(0)});
    rest_.a = l.a;
    rest_.b = l.b;
    rest_.psi = l.psi;
  }

  const KreslingDesign<Scalar>& design() const { return d_; }
  const GeometryVector<Scalar>& rest() const { return rest_; }

  /// N [ka/2 (a-a0)^2 + kb/2 (b-b0)^2 + kpsi h0 (psi-psi0)^2]
  Scalar potential(const FoldState<Scalar>& f) const {
    const Lengths g = lengths(f);
    const Scalar ea = g.a - rest_.a, eb = g.b - rest_.b, ep = g.psi - rest_.psi;
    return Scalar(d_.N) *
           (Scalar(0.5) * d_.ka * ea * ea + Scalar(0.5) * d_.kb * eb * eb + d_.kpsi * d_.h0 * ep * ep);
  }

  /// F = dV/d(du), T = dV/d(dphi).
  void force_torque(const FoldState<Scalar>& f, Scalar& F, Scalar& T) const {
    const Lengths l = lengths(f);
    const Scalar ca = l.ch * cos_off_ + l.sh * sin_off_, cb = l.ch * cos_off_ - l.sh * sin_off_;
    const Scalar s_tot = Scalar(2) * l.sh * l.ch;
    const Scalar r2 = l.h * l.h + l.D * l.D;
    const Scalar ga = d_.ka * (l.a - rest_.a) / l.a, gb = d_.kb * (l.b - rest_.b) / l.b;
    const Scalar gp = Scalar(2) * d_.kpsi * d_.h0 * (l.psi - rest_.psi) / r2;
    F = Scalar(d_.N) * (-(ga + gb) * l.h - gp * l.D);
    T = Scalar(d_.N) * d_.R * (ga * l.chord_a * ca + gb * l.chord_b * cb - gp * l.h * s_tot);
  }

 private:
  struct Lengths {
    Scalar h, sh, ch, chord_a, chord_b, a, b, D, psi;
  };

  Lengths lengths(const FoldState<Scalar>& f) const {
    using std::atan2;
    using std::cos;
    using std::sin;
    using std::sqrt;
    Lengths l;
    l.h = d_.h0 - f.du;
    if (!(l.h > Scalar(0))) throw Error(ErrorCode::NonPositiveHeight, "cell height must stay positive");
    const Scalar half = Scalar(0.5) * (f.dphi + d_.theta0);
    l.sh = sin(half);
    l.ch = cos(half);
    l.chord_a = Scalar(2) * d_.R * (l.sh * cos_off_ - l.ch * sin_off_);
    l.chord_b = Scalar(2) * d_.R * (l.sh * cos_off_ + l.ch * sin_off_);
    l.a = sqrt(l.h * l.h + l.chord_a * l.chord_a);
    l.b = sqrt(l.h * l.h + l.chord_b * l.chord_b);
    if (!(l.a > Scalar(0)) || !(l.b > Scalar(0)))
      throw Error(ErrorCode::DegenerateGeometry, "zero crease length");
    l.D = d_.R * (cos_pin_ - (Scalar(1) - Scalar(2) * l.sh * l.sh));
    l.psi = atan2(l.h, l.D);
    return l;
  }

  KreslingDesign<Scalar> d_;
  GeometryVector<Scalar> rest_;
  Scalar sin_off_, cos_off_, cos_pin_;
};

template <typename Scalar>
Scalar potential_energy(const KreslingDesign<Scalar>& d, const FoldState<Scalar>& f) {
  return CellMechanics<Scalar>(d).potential(f);
}

template <typename Scalar>
std::pair<Scalar, Scalar> force_torque(const KreslingDesign<Scalar>& d, const FoldState<Scalar>& f) {
  Scalar F, T;
  CellMechanics<Scalar>(d).force_torque(f, F, T);
  return {F, T};
}

enum class Boundary { Free, Fixed };

struct Damping {
  double c_u = 0.0;
  double c_phi = 0.0;
};

/// Stack of cells between separators 0..cells. Separator 0 follows the drive unless
/// near_driven is false, in which case it is free and undriven.
struct ChainConfig {
  std::vector<Design> cells;
  Boundary far = Boundary::Fixed;
  Damping damping;
  bool near_driven = true;

  int n_cells() const { return static_cast<int>(cells.size()); }
  int n_separators() const { return n_cells() + 1; }
  int n_free() const {
    return n_separators() - (near_driven ? 1 : 0) - (far == Boundary::Fixed ? 1 : 0);
  }
  int state_dim() const { return 4 * n_free(); }
  /// First free separator index.
  int first_free() const { return near_driven ? 1 : 0; }
  void validate() const;
};

/// n_cells cells alternating chirality, the first one with the sign of base.theta0.
ChainConfig alternating_chain(const Design& base, int n_cells, Boundary far,
                              Damping damping = {});

/// Mass-proportional dashpots c_u = beta m, c_phi = beta j of the first cell.
Damping proportional_damping(const Design& d, double beta);

struct Drive {
  double u_amp = 0.0;
  double phi_amp = 0.0;
  double freq = 1.0;
  double phase = 0.0;

  void validate() const;
  /// [u0, phi0, du0/dt, dphi0/dt] at time t.
  Eigen::Vector4d at(double t) const {
    const double w = 2.0 * std::numbers::pi * freq;
    const double s = std::sin(w * t + phase), c = std::cos(w * t + phase);
    return {u_amp * s, phi_amp * s, u_amp * w * c, phi_amp * w * c};
  }
};

/// Uniformly sampled record. state rows hold [u, phi, v, w] per free separator.
struct Trajectory {
  double sample_rate = 240.0;
  Eigen::VectorXd t;
  Eigen::MatrixXd drive;
  Eigen::MatrixXd state;
  bool diverged = false;
  double divergence_time = std::numeric_limits<double>::quiet_NaN();

  int samples() const { return static_cast<int>(t.size()); }
  int n_free() const { return static_cast<int>(state.cols() / 4); }
  /// samples x n_free matrix of channel c (0 = u, 1 = phi, 2 = v, 3 = w).
  Eigen::MatrixXd channel(int c) const;
  Trajectory segment(int begin, int count) const;
};

/// Nonlinear truss right-hand side with preallocated cell kernels.
class TrussSystem {
 public:
  explicit TrussSystem(const ChainConfig& chain);

  const ChainConfig& chain() const { return chain_; }
  int state_dim() const { return chain_.state_dim(); }

  /// Fold states of every cell for state x and drive sample.
  void fold_states(const Eigen::Ref<const Eigen::VectorXd>& x, const Eigen::Vector4d& drive,
                   std::vector<FoldState<double>>& folds) const;
  void rhs(const Eigen::Ref<const Eigen::VectorXd>& x, const Eigen::Vector4d& drive,
           Eigen::Ref<Eigen::VectorXd> dx) const;
  /// Kinetic energy of free separators plus the potential of every cell.
  double energy(const Eigen::Ref<const Eigen::VectorXd>& x, const Eigen::Vector4d& drive) const;
  const std::vector<CellMechanics<double>>& mechanics() const { return cells_; }

 private:
  ChainConfig chain_;
  std::vector<CellMechanics<double>> cells_;
  std::vector<double> inv_m_, inv_j_;
  mutable std::vector<double> F_, T_;
};

/// Derivative of the state at time t with the drive prescribing separator 0.
Eigen::VectorXd equations_of_motion(const ChainConfig& chain, const Eigen::VectorXd& x, double t,
                                    const Drive& drive);

struct IntegrateOptions {
  double dt = 1e-5;
  double sample_rate = 240.0;
  /// Simulated time discarded before the first recorded sample.
  double t_settle = 0.0;
  /// Absolute state magnitude treated as blow-up.
  double bound = 1e3;
  /// Initial state at t = 0; empty means rest.
  Eigen::VectorXd x0;
};

/// Classical fixed-step RK4. dt is shrunk so that an integer number of steps spans one
/// sample. Blow-up or a singular fold ends the record and sets diverged.
Trajectory integrate(const ChainConfig& chain, const Drive& drive, double t_end,
                     const IntegrateOptions& opts = {});

/// Fixed-step RK4 over [t0, t0 + n dt] in place.
void rk4_advance(const TrussSystem& sys, const Drive& drive, Eigen::VectorXd& x, double t0,
                 double dt, long n);

struct PeriodicOrbitResult {
  Eigen::VectorXd x0;
  double residual = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Newton shooting for the drive-periodic orbit through t = 0. Intended for a few
/// degrees of freedom since the Jacobian costs state_dim + 1 periods per iteration.
PeriodicOrbitResult periodic_orbit(const ChainConfig& chain, const Drive& drive, double dt = 1e-5,
                                   double tol = 1e-11, int max_iter = 30,
                                   const Eigen::VectorXd& guess = {});

/// Distinct local minima of one cell's potential inside [u_lo, u_hi] x [phi_lo, phi_hi]:
/// grid candidates refined by Newton and kept only where the Hessian is positive definite.
std::vector<FoldState<double>> potential_minima(const Design& d, double u_lo, double u_hi,
                                                double phi_lo, double phi_hi, int grid = 200);

}  // namespace kresling
