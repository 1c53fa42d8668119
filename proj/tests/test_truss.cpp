#include <Eigen/Core>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "doctest.h"
#include "kresling/config.hpp"
#include "kresling/diagnostics.hpp"
#include "kresling/experiment.hpp"
#include "kresling/linear.hpp"
#include "kresling/truss.hpp"

using namespace kresling;

namespace {

ChainConfig single_cell(Boundary far = Boundary::Free) {
  ChainConfig c;
  c.cells = {table_design()};
  c.far = far;
  return c;
}

Drive still() { return Drive{0, 0, 1, 0}; }

}  // namespace

TEST_SUITE("truss") {

TEST_CASE("springs at rest carry no load") {
  for (const double theta : {70.0, -70.0, 45.0}) {
    const auto [F, T] = force_torque(table_design(theta), FoldState<double>{0, 0});
    CHECK(std::abs(F) < 1e-12);
    CHECK(std::abs(T) < 1e-12);
    CHECK(potential_energy(table_design(theta), FoldState<double>{0, 0}) == 0.0);
  }
}

TEST_CASE("force and torque are the gradient of the potential") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> du(-0.006, 0.006), dphi(-0.2, 0.2);
  for (const Design& d : {table_design(), table_design().mirrored()}) {
    const CellMechanics<double> cell(d);
    // Extended-precision differences keep roundoff well below the tolerance.
    const CellMechanics<long double> ref(d.cast<long double>());
    for (int n = 0; n < 100; ++n) {
      const FoldState<double> f{du(rng), dphi(rng)};
      double F, T;
      cell.force_torque(f, F, T);
      const long double h = 1e-7L, u = f.du, p = f.dphi;
      const double Fd = static_cast<double>((ref.potential({u + h, p}) - ref.potential({u - h, p})) / (2 * h));
      const double Td = static_cast<double>((ref.potential({u, p + h}) - ref.potential({u, p - h})) / (2 * h));
      CAPTURE(f.du);
      CAPTURE(f.dphi);
      CHECK(std::abs(Fd - F) <= 1e-6 * std::abs(F));
      CHECK(std::abs(Td - T) <= 1e-6 * std::abs(T));
    }
  }
}

TEST_CASE("axial stiffness of the force matches the linearised coefficient") {
  const Design d = table_design();
  const double h = 1e-7;
  const double dF = (force_torque(d, FoldState<double>{h, 0}).first -
                     force_torque(d, FoldState<double>{-h, 0}).first) /
                    (2 * h);
  const LinearCoefficients c = linearize(d, d.mirrored());
  CHECK(dF == doctest::Approx(c.a11).epsilon(1e-6));
  const double dT = (force_torque(d, FoldState<double>{0, h}).second -
                     force_torque(d, FoldState<double>{0, -h}).second) /
                    (2 * h);
  CHECK(dT == doctest::Approx(c.a22).epsilon(1e-6));
}

TEST_CASE("the tall design is bistable") {
  Design d = table_design();
  d.h0 = 0.05;
  const CellMechanics<double> cell(d);
  const int nu = 200, np = 200;
  const double umin = -0.01, umax = 0.045, pmin = -0.6, pmax = 1.4;
  Eigen::MatrixXd V(nu, np);
  for (int i = 0; i < nu; ++i)
    for (int k = 0; k < np; ++k)
      V(i, k) = cell.potential({umin + (umax - umin) * i / (nu - 1), pmin + (pmax - pmin) * k / (np - 1)});
  // Grid candidates sit along diagonal valleys; Newton on the analytic gradient merges them.
  std::vector<Eigen::Vector2d> minima;
  for (int i = 1; i < nu - 1; ++i)
    for (int k = 1; k < np - 1; ++k) {
      bool lowest = true;
      for (int di = -1; di <= 1; ++di)
        for (int dk = -1; dk <= 1; ++dk)
          if ((di || dk) && V(i + di, k + dk) <= V(i, k)) lowest = false;
      if (!lowest) continue;
      Eigen::Vector2d x(umin + (umax - umin) * i / (nu - 1), pmin + (pmax - pmin) * k / (np - 1));
      auto grad = [&](const Eigen::Vector2d& y) {
        double F, T;
        cell.force_torque({y[0], y[1]}, F, T);
        return Eigen::Vector2d(F, T);
      };
      auto hess = [&](const Eigen::Vector2d& y) {
        Eigen::Matrix2d H;
        const double e = 1e-7;
        for (int c = 0; c < 2; ++c) {
          Eigen::Vector2d s = Eigen::Vector2d::Zero();
          s[c] = e;
          H.col(c) = (grad(y + s) - grad(y - s)) / (2 * e);
        }
        return H;
      };
      for (int it = 0; it < 50; ++it) x -= hess(x).ldlt().solve(grad(x));
      CHECK(grad(x).norm() < 1e-9);
      CHECK(hess(x).selfadjointView<Eigen::Lower>().eigenvalues().minCoeff() > 0);
      bool known = false;
      for (const auto& m : minima) known = known || (m - x).cwiseAbs().maxCoeff() < 1e-6;
      if (!known) minima.push_back(x);
    }
  REQUIRE(minima.size() == 2);
  double far_u = std::max(minima[0][0], minima[1][0]);
  CHECK(std::min(std::abs(minima[0][0]), std::abs(minima[1][0])) < 1e-9);
  CHECK(far_u > 0.01);
  const auto lib = potential_minima(d, umin, umax, pmin, pmax);
  REQUIRE(lib.size() == 2);
  CHECK(std::abs(lib[1].du - far_u) < 1e-8);
  // The short reference design has only the rest minimum in the same window.
  const CellMechanics<double> ref(table_design());
  CHECK(ref.potential({0.0, 0.0}) == 0.0);
}

TEST_CASE("zero drive from rest is an equilibrium") {
  const ChainConfig chain = alternating_chain(table_design(), 6, Boundary::Fixed);
  const Eigen::VectorXd dx = equations_of_motion(chain, Eigen::VectorXd::Zero(chain.state_dim()), 0.3, still());
  CHECK(dx.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("small-drive acceleration matches the linear two-DOF model") {
  const ChainConfig chain = single_cell();
  const Eigen::Matrix2d H = cell_hessian(table_design());
  const Design d = table_design();
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> amp(-1e-5, 1e-5);
  for (int n = 0; n < 20; ++n) {
    Drive drive{std::abs(amp(rng)), std::abs(amp(rng)), 5, std::numbers::pi / 2};
    Eigen::VectorXd x(4);
    x << amp(rng), amp(rng), 0, 0;
    const Eigen::VectorXd dx = equations_of_motion(chain, x, 0.0, drive);
    const Eigen::Vector2d fold(drive.u_amp - x[0], drive.phi_amp - x[1]);
    const Eigen::Vector2d load = H * fold;
    CHECK(dx[2] == doctest::Approx(load[0] / d.m).epsilon(0.01));
    CHECK(dx[3] == doctest::Approx(load[1] / d.j).epsilon(0.01));
  }
}

TEST_CASE("undriven undamped energy drift stays below 1e-6 over one second") {
  ChainConfig chain = alternating_chain(table_design(), 2, Boundary::Free);
  Eigen::VectorXd x0 = Eigen::VectorXd::Zero(chain.state_dim());
  x0 << 1e-3, 0.02, 0, 0, -5e-4, 0.01, 0.01, 0;
  IntegrateOptions o;
  o.dt = 1e-5;
  o.sample_rate = 100;
  o.x0 = x0;
  const Trajectory tr = integrate(chain, still(), 1.0, o);
  REQUIRE_FALSE(tr.diverged);
  const TrussSystem sys(chain);
  const double e0 = sys.energy(x0, Eigen::Vector4d::Zero());
  REQUIRE(e0 > 0);
  double worst = 0;
  for (int i = 0; i < tr.samples(); ++i)
    worst = std::max(worst, std::abs(sys.energy(tr.state.row(i).transpose(), Eigen::Vector4d::Zero()) - e0));
  CHECK(worst / e0 < 1e-6);
}

TEST_CASE("RK4 converges at fourth order") {
  const ChainConfig chain = single_cell();
  const TrussSystem sys(chain);
  const Drive drive{1e-3, 0, 5, 0};
  const double t_end = 0.05;
  auto run = [&](long n) {
    Eigen::VectorXd x = Eigen::VectorXd::Zero(4);
    rk4_advance(sys, drive, x, 0.0, t_end / static_cast<double>(n), n);
    return x;
  };
  const Eigen::VectorXd ref = run(40000);
  const double e1 = (run(1000) - ref).norm(), e2 = (run(2000) - ref).norm();
  CHECK(e1 / e2 > 12.0);
  CHECK(e1 / e2 < 20.0);
}

TEST_CASE("axial momentum is conserved with both ends free") {
  ChainConfig chain = alternating_chain(table_design(), 3, Boundary::Free);
  chain.near_driven = false;
  REQUIRE(chain.n_free() == 4);
  Eigen::VectorXd x0 = Eigen::VectorXd::Zero(chain.state_dim());
  x0[0] = 1e-3;
  x0[2] = 0.05;
  x0[5] = 0.01;
  x0[10] = -0.02;
  IntegrateOptions o;
  o.dt = 1e-5;
  o.sample_rate = 200;
  o.x0 = x0;
  const Trajectory tr = integrate(chain, still(), 0.5, o);
  REQUIRE_FALSE(tr.diverged);
  const Eigen::VectorXd p = tr.channel(2).rowwise().sum();
  CHECK((p.array() - p[0]).abs().maxCoeff() < 1e-12);
  CHECK(std::abs(p[0] - 0.03) < 1e-15);
}

TEST_CASE("integration is deterministic and t_end = 0 gives one snapshot") {
  const ChainConfig chain = alternating_chain(table_design(), 4, Boundary::Fixed);
  const Drive drive{1e-4, 0, 50, 0};
  const Trajectory a = integrate(chain, drive, 0.2), b = integrate(chain, drive, 0.2);
  CHECK((a.state.array() == b.state.array()).all());
  CHECK(a.samples() == 49);
  const Trajectory z = integrate(chain, drive, 0.0);
  CHECK(z.samples() == 1);
  CHECK(z.state.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("blow-up is reported with its time instead of aborting") {
  const ChainConfig chain = single_cell();
  IntegrateOptions o;
  o.bound = 1e-4;
  const Trajectory tr = integrate(chain, Drive{1e-3, 0, 5, 0}, 1.0, o);
  CHECK(tr.diverged);
  CHECK(tr.divergence_time > 0);
  CHECK(tr.divergence_time < 1.0);
  CHECK(tr.samples() < 241);
  CHECK(tr.state.allFinite());
}

TEST_CASE("nonlinear single-cell response has a secondary spectral peak") {
  const Experiment e = make_experiment(preset("single5hz"));
  const Trajectory tr = simulate(e, 5.0);
  REQUIRE_FALSE(tr.diverged);
  const PowerSpectrum s = power_spectrum(tr.channel(0).col(0), tr.sample_rate);
  const auto peaks = spectral_peaks(s, 1e-6);
  REQUIRE(peaks.size() >= 2);
  CHECK(peaks[0] == doctest::Approx(5.0).epsilon(0.05));
  bool other = false;
  for (std::size_t i = 1; i < peaks.size(); ++i) other = other || std::abs(peaks[i] - 5.0) > 1.0;
  CHECK(other);
}

TEST_CASE("stop-band drive decays along the chain") {
  Experiment e = make_experiment(preset("chain"));
  e.t_end = 1.0;
  const Trajectory tr = simulate(e, 50.0);
  REQUIRE_FALSE(tr.diverged);
  const Eigen::MatrixXd u = tr.channel(0);
  const double near = u.col(0).cwiseAbs().maxCoeff();
  const double far = u.col(15).cwiseAbs().maxCoeff();
  CAPTURE(near);
  CAPTURE(far);
  CHECK(far * 100 < near);
}

TEST_CASE("invalid chains and drives are rejected") {
  ChainConfig empty;
  CHECK_THROWS_AS(TrussSystem{empty}, Error);
  ChainConfig mixed = single_cell();
  Design other = table_design();
  other.N = 7;
  mixed.cells.push_back(other);
  CHECK_THROWS_AS(TrussSystem{mixed}, Error);
  CHECK_THROWS_AS(integrate(single_cell(), Drive{1e-3, 0, 0, 0}, 1.0), Error);
  CHECK_THROWS_AS(integrate(single_cell(), Drive{-1e-3, 0, 5, 0}, 1.0), Error);
}

}
