#include <Eigen/Eigenvalues>
#include <cmath>
#include <complex>
#include <numbers>
#include <random>

#include "doctest.h"
#include "kresling/linear.hpp"

using namespace kresling;

namespace {

constexpr double kPi = std::numbers::pi;

struct Reference {
  Design d = table_design();
  LinearCoefficients c = linearize(d, d.mirrored());
};

const Reference& ref() {
  static const Reference r;
  return r;
}

std::vector<int> in_gap(const SupercellModes& s, const BandGap& g) {
  std::vector<int> idx;
  for (Eigen::Index i = 0; i < s.freq_hz.size(); ++i)
    if (s.freq_hz[i] > g.lower_hz && s.freq_hz[i] < g.upper_hz) idx.push_back(static_cast<int>(i));
  return idx;
}

}  // namespace

TEST_SUITE("linear") {

TEST_CASE("coefficients of the reference pair") {
  const LinearCoefficients& c = ref().c;
  CHECK(c.a11 == doctest::Approx(26850).epsilon(0.005));
  CHECK(c.a12 == doctest::Approx(-819.8).epsilon(0.005));
  CHECK(c.a22 == doctest::Approx(26.07).epsilon(0.005));
  CHECK(c.b11 == doctest::Approx(c.a11).epsilon(1e-9));
  CHECK(c.b12 == doctest::Approx(-c.a12).epsilon(1e-9));
  CHECK(c.b22 == doctest::Approx(c.a22).epsilon(1e-9));
}

TEST_CASE("Hessian is symmetric") {
  const LinearCoefficients& c = ref().c;
  CHECK(c.a21 == doctest::Approx(c.a12).epsilon(1e-7));
  CHECK(c.b21 == doctest::Approx(c.b12).epsilon(1e-7));
}

TEST_CASE("coefficients are linear in the spring constants") {
  Design d = table_design();
  d.ka *= 2;
  d.kb *= 2;
  d.kpsi *= 2;
  const LinearCoefficients c2 = linearize(d, d.mirrored());
  const LinearCoefficients& c = ref().c;
  CHECK(c2.a11 == doctest::Approx(2 * c.a11).epsilon(1e-7));
  CHECK(c2.a12 == doctest::Approx(2 * c.a12).epsilon(1e-7));
  CHECK(c2.a22 == doctest::Approx(2 * c.a22).epsilon(1e-7));
  CHECK(c2.b12 == doctest::Approx(2 * c.b12).epsilon(1e-7));
}

TEST_CASE("dynamical matrix is Hermitian and time-reversal symmetric") {
  const Design& d = ref().d;
  const BandStructure bs = dispersion(ref().c, d.m, d.j, d.h0, 201);
  for (int i = 0; i < 201; ++i) {
    const Eigen::Matrix4cd D = dynamical_matrix(ref().c, d.m, d.j, d.h0, bs.k[i]);
    CHECK((D - D.adjoint()).cwiseAbs().maxCoeff() < 1e-12 * D.norm());
    for (int b = 0; b < 4; ++b) {
      CHECK(bs.omega(i, b) == doctest::Approx(bs.omega(200 - i, b)).epsilon(1e-9).scale(bs.omega.maxCoeff()));
      if (b) CHECK(bs.omega(i, b) >= bs.omega(i, b - 1));
      CHECK(bs.modes[i].col(b).norm() == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
  CHECK(bs.omega(100, 0) < 1e-6 * bs.omega.maxCoeff());
  CHECK(std::abs(bs.k[100]) < 1e-9);
}

TEST_CASE("upper bands meet at the zone edge") {
  const Design& d = ref().d;
  const BandStructure bs = dispersion(ref().c, d.m, d.j, d.h0, 201);
  CHECK(bs.omega(200, 3) - bs.omega(200, 2) < 1e-6 * bs.omega(200, 3));
  CHECK(bs.omega(200, 1) - bs.omega(200, 0) < 1e-6 * bs.omega(200, 1));
}

TEST_CASE("band gap edges") {
  const Design& d = ref().d;
  const BandGap g = band_gap(dispersion(ref().c, d.m, d.j, d.h0, 201));
  CHECK(g.lower_hz == doctest::Approx(20.0).epsilon(0.05));
  CHECK(g.upper_hz == doctest::Approx(198.0).epsilon(0.05));
}

TEST_CASE("Zak phases of both band pairs are pi and grid-converged") {
  const Design& d = ref().d;
  const BandStructure b201 = dispersion(ref().c, d.m, d.j, d.h0, 201);
  const BandStructure b401 = dispersion(ref().c, d.m, d.j, d.h0, 401);
  for (const auto pair : {std::array<int, 2>{1, 2}, std::array<int, 2>{3, 4}}) {
    const double z = zak_phase(b201, pair);
    CHECK(std::abs(z - kPi) < 0.01 * kPi);
    CHECK(std::abs(z - zak_phase(b401, pair)) < 1e-3);
  }
}

TEST_CASE("Zak phase is gauge invariant") {
  const Design& d = ref().d;
  BandStructure bs = dispersion(ref().c, d.m, d.j, d.h0, 201);
  const double z12 = zak_phase(bs, {1, 2}), z34 = zak_phase(bs, {3, 4});
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> phase(0, 2 * kPi);
  for (auto& U : bs.modes)
    for (int b = 0; b < 4; ++b) U.col(b) *= std::polar(1.0, phase(rng));
  CHECK(std::abs(zak_phase(bs, {1, 2}) - z12) < 1e-10);
  CHECK(std::abs(zak_phase(bs, {3, 4}) - z34) < 1e-10);
}

TEST_CASE("Zak phase rejects a pair that mixes with the other bands") {
  const Design& d = ref().d;
  const BandStructure bs = dispersion(ref().c, d.m, d.j, d.h0, 201);
  CHECK_THROWS_AS(zak_phase(bs, {2, 1}), Error);
  bool gap_closure = false;
  try {
    zak_phase(bs, {2, 3}, 1e-12);
  } catch (const Error& e) {
    gap_closure = e.code() == ErrorCode::GapClosure;
  }
  CHECK(gap_closure);
}

TEST_CASE("truncated chain hosts two end-localised in-gap modes") {
  const Design& d = ref().d;
  const BandStructure bs = dispersion(ref().c, d.m, d.j, d.h0, 401);
  const BandGap g = band_gap(bs);
  const SupercellModes s = supercell_modes(ref().c, d.m, d.j, 16, Boundary::Fixed);
  const auto idx = in_gap(s, g);
  REQUIRE(idx.size() == 2);
  for (int i : idx) {
    CHECK(s.freq_hz[i] == doctest::Approx(145.0).epsilon(0.02));
    CHECK(s.end_weight[i] > 0.5);
  }
  CHECK(std::abs(s.freq_hz[idx[0]] - s.freq_hz[idx[1]]) < 0.01 * s.freq_hz[idx[0]]);

  const double to_hz = 0.5 / kPi, tol = 0.005 * bs.omega.maxCoeff() * to_hz;
  const double lo1 = bs.omega.col(0).minCoeff() * to_hz, hi2 = bs.omega.col(1).maxCoeff() * to_hz;
  const double lo3 = bs.omega.col(2).minCoeff() * to_hz, hi4 = bs.omega.col(3).maxCoeff() * to_hz;
  for (Eigen::Index i = 0; i < s.freq_hz.size(); ++i) {
    if (i == idx[0] || i == idx[1]) continue;
    const double f = s.freq_hz[i];
    CAPTURE(f);
    CHECK(((f >= lo1 - tol && f <= hi2 + tol) || (f >= lo3 - tol && f <= hi4 + tol)));
  }
}

TEST_CASE("in-gap frequencies converge with chain length") {
  const Design& d = ref().d;
  const BandGap g = band_gap(dispersion(ref().c, d.m, d.j, d.h0, 201));
  const SupercellModes s16 = supercell_modes(ref().c, d.m, d.j, 16, Boundary::Fixed);
  const SupercellModes s24 = supercell_modes(ref().c, d.m, d.j, 24, Boundary::Fixed);
  const auto i16 = in_gap(s16, g), i24 = in_gap(s24, g);
  REQUIRE(i16.size() == 2);
  REQUIRE(i24.size() == 2);
  for (int k = 0; k < 2; ++k)
    CHECK(std::abs(s16.freq_hz[i16[k]] / s24.freq_hz[i24[k]] - 1) < 1e-3);
}

TEST_CASE("free chain keeps a rigid-body mode") {
  const Design& d = ref().d;
  const SupercellModes s = supercell_modes(ref().c, d.m, d.j, 4, Boundary::Free);
  CHECK(s.freq_hz[0] < 1e-3);
  CHECK(s.freq_hz.size() == 2 * 9);
  CHECK_THROWS_AS(supercell_modes(ref().c, d.m, d.j, 1, Boundary::Fixed), Error);
}

}
