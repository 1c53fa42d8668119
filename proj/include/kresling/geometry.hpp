#pragma once

#include <Eigen/Core>
#include <array>
#include <cmath>
#include <numbers>

#include "kresling/error.hpp"

namespace kresling {

/// Static design and mechanical parameters of one Kresling cell (SI units).
/// A negative theta0 denotes the opposite chirality.
template <typename Scalar>
struct KreslingDesign {
  Scalar h0;
  Scalar theta0;
  Scalar R;
  int N;
  Scalar m;
  Scalar j;
  Scalar ka;
  Scalar kb;
  Scalar kpsi;

  bool valid() const {
    using std::abs;
    return h0 > Scalar(0) && R > Scalar(0) && N >= 3 && m > Scalar(0) && j > Scalar(0) &&
           ka > Scalar(0) && kb > Scalar(0) && kpsi > Scalar(0) &&
           abs(theta0) < Scalar(std::numbers::pi);
  }

  void validate() const {
    if (!valid()) throw Error(ErrorCode::InvalidArgument, "invalid Kresling design");
  }

  /// +1 for positive chirality, -1 otherwise.
  Scalar chirality() const { return theta0 < Scalar(0) ? Scalar(-1) : Scalar(1); }

  KreslingDesign mirrored() const {
    KreslingDesign d = *this;
    d.theta0 = -theta0;
    return d;
  }

  template <typename Other>
  KreslingDesign<Other> cast() const {
    return {Other(h0), Other(theta0), Other(R), N,  Other(m),
            Other(j),  Other(ka),     Other(kb), Other(kpsi)};
  }
};

using Design = KreslingDesign<double>;

/// Reference design: h0 = 30 mm, theta0 = 70 deg, R = 36 mm, N = 6.
inline Design table_design(double theta0_deg = 70.0) {
  return {0.030, theta0_deg * std::numbers::pi / 180.0, 0.036, 6, 58.8e-3, 6.77e-5,
          6055.0, 3743.0, 7.277e-3};
}

template <typename Scalar>
struct FoldState {
  Scalar du;
  Scalar dphi;
};

template <typename Scalar>
struct GeometryVector {
  Scalar h;
  Scalar a;
  Scalar b;
  Scalar psi;
  Scalar alpha;
  Scalar beta;
};

namespace detail {

/// Signed horizontal crease chords 2R sin(dphi/2 + theta0/2 -/+ s pi/(2N)).
template <typename Scalar>
inline void crease_chords(const KreslingDesign<Scalar>& d, const FoldState<Scalar>& f, Scalar& ca,
                          Scalar& cb) {
  using std::sin;
  const Scalar half = Scalar(0.5) * (f.dphi + d.theta0);
  const Scalar off = d.chirality() * Scalar(std::numbers::pi) / Scalar(2 * d.N);
  ca = Scalar(2) * d.R * sin(half - off);
  cb = Scalar(2) * d.R * sin(half + off);
}

}  // namespace detail

/// Instantaneous cell geometry at a fold state. Requires h = h0 - du > 0.
template <typename Scalar>
GeometryVector<Scalar> crease_geometry(const KreslingDesign<Scalar>& d, const FoldState<Scalar>& f) {
  using std::abs;
  using std::atan2;
  using std::cos;
  using std::sqrt;
  const Scalar h = d.h0 - f.du;
  if (!(h > Scalar(0))) throw Error(ErrorCode::NonPositiveHeight, "cell height must stay positive");
  Scalar ca, cb;
  detail::crease_chords(d, f, ca, cb);
  GeometryVector<Scalar> g;
  g.h = h;
  g.a = sqrt(h * h + ca * ca);
  g.b = sqrt(h * h + cb * cb);
  if (!(g.a > Scalar(0)) || !(g.b > Scalar(0)))
    throw Error(ErrorCode::DegenerateGeometry, "zero crease length");
  g.psi = atan2(h, d.R * (cos(Scalar(std::numbers::pi) / Scalar(d.N)) - cos(f.dphi + d.theta0)));
  g.alpha = atan2(abs(ca), h);
  g.beta = atan2(abs(cb), h);
  return g;
}

constexpr int kFeaturesPerCell = 12;

inline const std::array<const char*, kFeaturesPerCell>& feature_labels() {
  static const std::array<const char*, kFeaturesPerCell> labels = {
      "h", "a", "b", "psi", "alpha", "beta", "sin_alpha", "cos_alpha", "sin_beta", "cos_beta",
      "sin_psi", "cos_psi"};
  return labels;
}

/// Fixed-order control features [h, a, b, psi, alpha, beta, sin/cos alpha, sin/cos beta, sin/cos psi].
template <typename Scalar>
Eigen::Matrix<Scalar, kFeaturesPerCell, 1> control_features(const GeometryVector<Scalar>& g) {
  using std::cos;
  using std::sin;
  Eigen::Matrix<Scalar, kFeaturesPerCell, 1> v;
  v << g.h, g.a, g.b, g.psi, g.alpha, g.beta, sin(g.alpha), cos(g.alpha), sin(g.beta), cos(g.beta),
      sin(g.psi), cos(g.psi);
  return v;
}

}  // namespace kresling
