#pragma once

#include <Eigen/Core>
#include <array>
#include <complex>
#include <vector>

#include "kresling/truss.hpp"

namespace kresling {

/// Hessian entries of the two cells of a unit cell. a.. belong to the first cell, b.. to the
/// second; index 1 is axial and 2 is rotational.
struct LinearCoefficients {
  double a11 = 0, b11 = 0;
  double a12 = 0, b12 = 0;
  double a21 = 0, b21 = 0;
  double a22 = 0, b22 = 0;

  Eigen::Matrix2d alpha() const { return (Eigen::Matrix2d() << a11, a12, a21, a22).finished(); }
  Eigen::Matrix2d beta() const { return (Eigen::Matrix2d() << b11, b12, b21, b22).finished(); }
};

/// Rest-state Hessian of the cell potential in (du, dphi) by Richardson-refined central
/// differences. Steps are rel_step * h0 and rel_step * 1 rad.
Eigen::Matrix2d cell_hessian(const Design& d, double rel_step = 1e-8);

LinearCoefficients linearize(const Design& first, const Design& second, double rel_step = 1e-8);

struct BandStructure {
  double h0 = 0;
  double m = 0;
  double j = 0;
  /// Wave numbers [rad/m].
  Eigen::VectorXd k;
  /// n_k x 4 angular frequencies [rad/s], ascending per row.
  Eigen::MatrixXd omega;
  /// Unit eigenvectors in the basis [sqrt(m) u1, sqrt(m) u2, sqrt(j) phi1, sqrt(j) phi2].
  std::vector<Eigen::Matrix4cd> modes;
};

/// Mass-weighted Bloch dynamical matrix at wave number k for lattice constant 2 h0.
Eigen::Matrix4cd dynamical_matrix(const LinearCoefficients& c, double m, double j, double h0,
                                  double k);

/// Bands over k in [-pi/(2 h0), pi/(2 h0)] on n_k evenly spaced points (endpoints included).
BandStructure dispersion(const LinearCoefficients& c, double m, double j, double h0, int n_k);

struct BandGap {
  double lower_hz = 0;  ///< max of band 2
  double upper_hz = 0;  ///< min of band 3
};

BandGap band_gap(const BandStructure& bands);

/// Two-band Wilson-loop phase in [0, 2 pi) for 1-based bands {pair[0], pair[1]}.
/// The loop runs over the unique k points with an explicit closing overlap.
double zak_phase(const BandStructure& bands, std::array<int, 2> pair, double leak_threshold = 0.5);

struct SupercellModes {
  Eigen::VectorXd freq_hz;
  /// Mass-weighted eigenvectors, rows ordered [u, phi] per free separator.
  Eigen::MatrixXd modes;
  /// Inverse participation ratio over separators.
  Eigen::VectorXd ipr;
  /// Weight fraction on the outer eighth of separators at each end.
  Eigen::VectorXd end_weight;
};

/// Truncated chain of n_unit_cells unit cells (2 n_unit_cells cells). Fixed pins both end
/// separators; Free leaves them unconstrained.
SupercellModes supercell_modes(const LinearCoefficients& c, double m, double j, int n_unit_cells,
                               Boundary boundary);

}  // namespace kresling
