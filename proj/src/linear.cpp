#include "kresling/linear.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <numbers>

namespace kresling {

namespace {

using cd = std::complex<double>;

template <typename Fn>
double richardson(Fn&& estimate, double step) {
  return (4.0 * estimate(0.5 * step) - estimate(step)) / 3.0;
}

}  // namespace

Eigen::Matrix2d cell_hessian(const Design& d, double rel_step) {
  const CellMechanics<double> cell(d);
  auto V = [&](double du, double dp) { return cell.potential({du, dp}); };
  const double hu0 = rel_step * d.h0, hp0 = rel_step;
  const double v0 = V(0, 0);
  const double huu = richardson(
      [&](double s) { return (V(s * hu0, 0) - 2 * v0 + V(-s * hu0, 0)) / (s * s * hu0 * hu0); }, 1.0);
  const double hpp = richardson(
      [&](double s) { return (V(0, s * hp0) - 2 * v0 + V(0, -s * hp0)) / (s * s * hp0 * hp0); }, 1.0);
  const double hup = richardson(
      [&](double s) {
        const double a = s * hu0, b = s * hp0;
        return (V(a, b) - V(a, -b) - V(-a, b) + V(-a, -b)) / (4 * a * b);
      },
      1.0);
  Eigen::Matrix2d H;
  H << huu, hup, hup, hpp;
  return H;
}

LinearCoefficients linearize(const Design& first, const Design& second, double rel_step) {
  const Eigen::Matrix2d A = cell_hessian(first, rel_step), B = cell_hessian(second, rel_step);
  LinearCoefficients c;
  c.a11 = A(0, 0);
  c.a12 = A(0, 1);
  c.a21 = A(1, 0);
  c.a22 = A(1, 1);
  c.b11 = B(0, 0);
  c.b12 = B(0, 1);
  c.b21 = B(1, 0);
  c.b22 = B(1, 1);
  return c;
}

Eigen::Matrix4cd dynamical_matrix(const LinearCoefficients& c, double m, double j, double h0,
                                  double k) {
  const double q = 2.0 * h0 * k;
  const cd e = std::exp(cd(0, -q));
  const Eigen::Matrix2d A = c.alpha(), B = c.beta();
  // Separator blocks in (u, phi): K11 = K22 = A + B, K12 = -(A + B e^{-iq}).
  Eigen::Matrix4cd K = Eigen::Matrix4cd::Zero();
  const int iu[2] = {0, 1}, ip[2] = {2, 3};
  const int idx[2][2] = {{iu[0], ip[0]}, {iu[1], ip[1]}};
  for (int r = 0; r < 2; ++r)
    for (int s = 0; s < 2; ++s) {
      K(idx[0][r], idx[0][s]) = A(r, s) + B(r, s);
      K(idx[1][r], idx[1][s]) = A(r, s) + B(r, s);
      K(idx[0][r], idx[1][s]) = -(A(r, s) + B(r, s) * e);
      K(idx[1][r], idx[0][s]) = -(A(s, r) + B(s, r) * std::conj(e));
    }
  const Eigen::Vector4d w(1 / std::sqrt(m), 1 / std::sqrt(m), 1 / std::sqrt(j), 1 / std::sqrt(j));
  return w.asDiagonal() * K * w.asDiagonal();
}

BandStructure dispersion(const LinearCoefficients& c, double m, double j, double h0, int n_k) {
  if (n_k < 2) throw Error(ErrorCode::InvalidArgument, "n_k must be at least 2");
  BandStructure bs;
  bs.h0 = h0;
  bs.m = m;
  bs.j = j;
  bs.k = Eigen::VectorXd::LinSpaced(n_k, -std::numbers::pi / (2 * h0), std::numbers::pi / (2 * h0));
  bs.omega.resize(n_k, 4);
  bs.modes.resize(n_k);
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix4cd> es;
  for (int i = 0; i < n_k; ++i) {
    const Eigen::Matrix4cd D = dynamical_matrix(c, m, j, h0, bs.k[i]);
    es.compute(D);
    if (es.info() != Eigen::Success) throw Error(ErrorCode::NumericalFailure, "eigensolver failed");
    const Eigen::Vector4d lam = es.eigenvalues();
    const double tol = 1e-6 * lam.cwiseAbs().maxCoeff();
    if (lam.minCoeff() < -tol) throw Error(ErrorCode::NumericalFailure, "negative eigenvalue");
    bs.omega.row(i) = lam.cwiseMax(0.0).cwiseSqrt().transpose();
    bs.modes[i] = es.eigenvectors();
  }
  return bs;
}

BandGap band_gap(const BandStructure& bands) {
  const double to_hz = 0.5 / std::numbers::pi;
  return {bands.omega.col(1).maxCoeff() * to_hz, bands.omega.col(2).minCoeff() * to_hz};
}

double zak_phase(const BandStructure& bands, std::array<int, 2> pair, double leak_threshold) {
  const int n = static_cast<int>(bands.k.size());
  if (n < 3) throw Error(ErrorCode::InvalidArgument, "Wilson loop needs at least 3 k points");
  if (pair[0] < 1 || pair[1] > 4 || pair[0] >= pair[1])
    throw Error(ErrorCode::InvalidArgument, "band pair must be increasing within 1..4");
  const double G = std::numbers::pi / bands.h0;
  const bool closed = std::abs(bands.k[n - 1] - bands.k[0] - G) < 1e-9 * G;
  const int unique = closed ? n - 1 : n;

  std::vector<int> other;
  for (int b = 1; b <= 4; ++b)
    if (b != pair[0] && b != pair[1]) other.push_back(b - 1);

  auto select = [&](const Eigen::Matrix4cd& U) {
    Eigen::Matrix<cd, 4, 2> P;
    P.col(0) = U.col(pair[0] - 1);
    P.col(1) = U.col(pair[1] - 1);
    return P;
  };
  // Orbital offsets of all basis states are zero, so the closing gauge factor is identity.
  cd prod(1.0, 0.0);
  for (int i = 0; i < unique; ++i) {
    const int nxt = (i + 1) % unique;
    const Eigen::Matrix<cd, 4, 2> Pi = select(bands.modes[i]), Pn = select(bands.modes[nxt]);
    double leak = 0.0;
    for (int b : other) leak += (bands.modes[i].col(b).adjoint() * Pn).squaredNorm();
    if (leak > leak_threshold)
      throw Error(ErrorCode::GapClosure, "band pair mixes with excluded bands along the loop");
    const cd det = (Pi.adjoint() * Pn).determinant();
    if (std::abs(det) == 0.0) throw Error(ErrorCode::GapClosure, "singular overlap");
    prod *= det / std::abs(det);
  }
  double phi = -std::arg(prod);
  phi = std::fmod(phi, 2 * std::numbers::pi);
  if (phi < 0) phi += 2 * std::numbers::pi;
  if (phi >= 2 * std::numbers::pi) phi -= 2 * std::numbers::pi;
  return phi;
}

SupercellModes supercell_modes(const LinearCoefficients& c, double m, double j, int n_unit_cells,
                               Boundary boundary) {
  if (n_unit_cells < 2) throw Error(ErrorCode::InvalidArgument, "need at least two unit cells");
  const int n_cells = 2 * n_unit_cells;
  const int n_sep = n_cells + 1;
  const bool fixed = boundary == Boundary::Fixed;
  const int first = fixed ? 1 : 0;
  const int nf = fixed ? n_sep - 2 : n_sep;
  auto slot = [&](int s) { return s - first; };
  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(2 * nf, 2 * nf);
  for (int cell = 0; cell < n_cells; ++cell) {
    const Eigen::Matrix2d H = cell % 2 == 0 ? c.alpha() : c.beta();
    const int s0 = slot(cell), s1 = slot(cell + 1);
    const bool f0 = s0 >= 0 && s0 < nf, f1 = s1 >= 0 && s1 < nf;
    if (f0) K.block<2, 2>(2 * s0, 2 * s0) += H;
    if (f1) K.block<2, 2>(2 * s1, 2 * s1) += H;
    if (f0 && f1) {
      K.block<2, 2>(2 * s0, 2 * s1) -= H;
      K.block<2, 2>(2 * s1, 2 * s0) -= H.transpose();
    }
  }
  Eigen::VectorXd w(2 * nf);
  for (int s = 0; s < nf; ++s) w.segment<2>(2 * s) << 1 / std::sqrt(m), 1 / std::sqrt(j);
  const Eigen::MatrixXd D = w.asDiagonal() * K * w.asDiagonal();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(D);
  if (es.info() != Eigen::Success) throw Error(ErrorCode::NumericalFailure, "eigensolver failed");

  SupercellModes out;
  out.modes = es.eigenvectors();
  out.freq_hz = es.eigenvalues().cwiseMax(0.0).cwiseSqrt() / (2 * std::numbers::pi);
  out.ipr.resize(2 * nf);
  out.end_weight.resize(2 * nf);
  const int edge = std::max(1, nf / 8);
  for (int i = 0; i < 2 * nf; ++i) {
    Eigen::VectorXd p(nf);
    for (int s = 0; s < nf; ++s) p[s] = out.modes.block<2, 1>(2 * s, i).squaredNorm();
    const double tot = p.sum();
    out.ipr[i] = p.squaredNorm() / (tot * tot);
    out.end_weight[i] = (p.head(edge).sum() + p.tail(edge).sum()) / tot;
  }
  return out;
}

}  // namespace kresling
