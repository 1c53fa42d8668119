#include <Eigen/SVD>
#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "kresling/diagnostics.hpp"

using namespace kresling;

namespace {

constexpr double kPi = std::numbers::pi;

Eigen::VectorXd logistic(int n, double x0) {
  Eigen::VectorXd x(n);
  x[0] = x0;
  for (int i = 1; i < n; ++i) x[i] = 4 * x[i - 1] * (1 - x[i - 1]);
  return x;
}

Eigen::VectorXd sinusoid(int n, double f, double fs, double phase = 0) {
  Eigen::VectorXd x(n);
  for (int i = 0; i < n; ++i) x[i] = std::sin(2 * kPi * f * i / fs + phase);
  return x;
}

LyapunovOptions map_options() {
  LyapunovOptions o;
  o.embed_dim = 2;
  o.delay = 1;
  o.mean_period = 1;
  o.horizon = 20;
  o.fit_fraction = 0.15;
  return o;
}

}  // namespace

TEST_SUITE("diagnostics") {

TEST_CASE("singular spectrum trivial cases") {
  CHECK(singular_spectrum(Eigen::MatrixXd::Zero(4, 17)).sigma.cwiseAbs().maxCoeff() == 0.0);
  const SvdSpectrum s = singular_spectrum(Eigen::MatrixXd::Identity(4, 17), 145.0, 0.6);
  CHECK(s.sigma.size() == 4);
  CHECK((s.sigma.array() - 1.0).abs().maxCoeff() < 1e-14);
  CHECK(s.freq_hz == 145.0);
  CHECK(s.train_ratio == 0.6);
}

TEST_CASE("singular values are sorted and reconstruct K") {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> n;
  Eigen::MatrixXd K(31, 40);
  for (Eigen::Index i = 0; i < K.size(); ++i) K.data()[i] = n(rng) * std::pow(10.0, (i % 7) - 3);
  const SvdSpectrum s = singular_spectrum(K);
  for (Eigen::Index i = 1; i < s.sigma.size(); ++i) CHECK(s.sigma[i] <= s.sigma[i - 1]);
  CHECK(s.sigma.minCoeff() >= 0);
  Eigen::BDCSVD<Eigen::MatrixXd> svd(K, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::MatrixXd R = svd.matrixU() * s.sigma.asDiagonal() * svd.matrixV().transpose();
  CHECK((K - R).norm() < 1e-10 * K.norm());
}

TEST_CASE("sinusoid concentrates in its bin") {
  const PowerSpectrum s = power_spectrum(sinusoid(1200, 5.0, 240.0), 240.0);
  Eigen::Index k;
  s.power.maxCoeff(&k);
  CHECK(s.freq_hz[k] == doctest::Approx(5.0));
  CHECK(s.power[k] > 0.99 * s.power.sum());
  const auto peaks = spectral_peaks(s);
  REQUIRE_FALSE(peaks.empty());
  CHECK(peaks[0] == doctest::Approx(5.0));
}

TEST_CASE("raw periodogram satisfies Parseval") {
  std::mt19937_64 rng(17);
  std::normal_distribution<double> n;
  for (const int len : {256, 257, 1000}) {
    Eigen::VectorXd x(len);
    for (int i = 0; i < len; ++i) x[i] = 0.3 + n(rng);
    const PowerSpectrum s = power_spectrum(x, 240.0, {false, false, false});
    CHECK(std::abs(s.power.sum() - x.squaredNorm() / len) < 1e-8 * x.squaredNorm() / len);
  }
  CHECK_THROWS_AS(power_spectrum(Eigen::VectorXd::Ones(15), 240.0), Error);
}

TEST_CASE("band power sums the selected bins") {
  const PowerSpectrum s = power_spectrum(sinusoid(2400, 2.0, 240.0) + 0.1 * sinusoid(2400, 30.0, 240.0), 240.0);
  CHECK(band_power(s, 0.1, 4.0) > 50 * band_power(s, 20.0, 40.0));
  CHECK(band_power(s, 0.0, 1e9) == doctest::Approx(s.power.sum()));
}

TEST_CASE("periodic signal has near-zero Lyapunov exponent") {
  const LyapunovEstimate e = lyapunov_rosenstein(sinusoid(3000, 5.0, 240.0));
  CHECK(std::abs(e.lambda) < 0.05);
  CHECK(e.fit_end > e.fit_begin);
  CHECK(e.divergence.allFinite());
}

TEST_CASE("logistic map exponent is ln 2") {
  const LyapunovEstimate e = lyapunov_rosenstein(logistic(3000, 0.3141), map_options());
  CHECK(e.lambda == doctest::Approx(std::log(2.0)).epsilon(0.15));
}

TEST_CASE("chaos beats periodicity across seeds") {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u(0.05, 0.95), ph(0, 2 * kPi);
  for (int s = 0; s < 20; ++s) {
    const double chaos = lyapunov_rosenstein(logistic(1500, u(rng)), map_options()).lambda;
    const double periodic = lyapunov_rosenstein(sinusoid(1500, 7.0, 240.0, ph(rng)), map_options()).lambda;
    CHECK(periodic < chaos);
  }
  CHECK_THROWS_AS(lyapunov_rosenstein(logistic(400, 0.2)), Error);
}

TEST_CASE("distance correlation properties") {
  std::mt19937_64 rng(23);
  std::normal_distribution<double> n;
  Eigen::VectorXd x(2000), y(2000);
  for (int i = 0; i < 2000; ++i) x[i] = n(rng), y[i] = n(rng);
  CHECK(distance_correlation(x, x) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(distance_correlation(x, y) < 0.1);

  const Eigen::VectorXd a = x.head(300);
  const Eigen::VectorXd b = a.array().square() + 0.3 * y.head(300).array();
  const double r = distance_correlation(a, b);
  CHECK(r > 0);
  CHECK(r < 1);
  CHECK(distance_correlation(b, a) == doctest::Approx(r).epsilon(1e-12));
  CHECK(distance_correlation((-3.0 * a).array() + 7.0, b) == doctest::Approx(r).epsilon(1e-10));

  bool degenerate = false;
  try {
    distance_correlation(Eigen::VectorXd::Constant(50, 2.0), a.head(50));
  } catch (const Error& e) {
    degenerate = e.code() == ErrorCode::DegenerateInput;
  }
  CHECK(degenerate);
}

TEST_CASE("three separated clusters receive ordered labels") {
  const std::vector<double> s2{1e-6, 2e-6, 1.5e-6, 1e-2, 2e-2, 1e2, 3e2, 2e2};
  const auto th = auto_thresholds(s2);
  REQUIRE(th.has_value());
  const auto c = classify_motion(s2, th);
  for (int i = 0; i < 3; ++i) CHECK(c[i].regime == Regime::Chaotic);
  for (int i = 3; i < 5; ++i) CHECK(c[i].regime == Regime::Interwell);
  for (int i = 5; i < 8; ++i) CHECK(c[i].regime == Regime::Intrawell);
}

TEST_CASE("monotone values without separation stay unknown") {
  std::vector<double> s2;
  for (int i = 0; i < 20; ++i) s2.push_back(std::pow(10.0, 0.1 * i));
  CHECK_FALSE(auto_thresholds(s2).has_value());
  for (const auto& c : classify_motion(s2, auto_thresholds(s2))) CHECK(c.regime == Regime::Unknown);
}

TEST_CASE("explicit thresholds, margins and divergence flags") {
  Thresholds t{1e-3, 1e1, 0.2};
  const std::vector<double> s2{1e-5, 1.2e-3, 1.0, 1e3, 0.0};
  const auto c = classify_motion(s2, t, {false, false, true, false, true});
  CHECK(c[0].regime == Regime::Chaotic);
  CHECK(c[1].regime == Regime::Unknown);
  CHECK(c[2].regime == Regime::Interwell);
  CHECK(c[3].regime == Regime::Intrawell);
  CHECK(c[4].regime == Regime::Unknown);
  CHECK(c[2].interwell_candidate);
  CHECK(c[4].interwell_candidate);
  CHECK_FALSE(c[0].interwell_candidate);
  CHECK(std::string(to_string(Regime::Chaotic)) == "chaotic");
}

}
