#include "kresling/diagnostics.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <numeric>
#include <unsupported/Eigen/FFT>

namespace kresling {

SvdSpectrum singular_spectrum(const Eigen::MatrixXd& K, double freq_hz, double train_ratio) {
  SvdSpectrum s;
  s.sigma = Eigen::BDCSVD<Eigen::MatrixXd>(K).singularValues();
  s.freq_hz = freq_hz;
  s.train_ratio = train_ratio;
  return s;
}

PowerSpectrum power_spectrum(const Eigen::VectorXd& x, double sample_rate,
                             const SpectrumOptions& opts) {
  const Eigen::Index n = x.size();
  if (n < 16) throw Error(ErrorCode::TooShort, "spectrum needs at least 16 samples");
  if (!(sample_rate > 0)) throw Error(ErrorCode::InvalidArgument, "sample rate must be positive");
  std::vector<double> buf(x.data(), x.data() + n);
  if (opts.remove_mean) {
    const double mu = x.mean();
    for (double& v : buf) v -= mu;
  }
  if (opts.normalize) {
    double mx = 0;
    for (double v : buf) mx = std::max(mx, std::abs(v));
    if (mx > 0)
      for (double& v : buf) v /= mx;
  }
  if (opts.hann)
    for (Eigen::Index i = 0; i < n; ++i)
      buf[i] *= 0.5 - 0.5 * std::cos(2 * std::numbers::pi * double(i) / double(n - 1));
  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> spec;
  fft.fwd(spec, buf);
  const Eigen::Index half = n / 2;
  PowerSpectrum out;
  out.freq_hz.resize(half + 1);
  out.power.resize(half + 1);
  const double nn = double(n) * double(n);
  for (Eigen::Index k = 0; k <= half; ++k) {
    const bool paired = k > 0 && !(n % 2 == 0 && k == half);
    out.freq_hz[k] = double(k) * sample_rate / double(n);
    out.power[k] = (paired ? 2.0 : 1.0) * std::norm(spec[static_cast<std::size_t>(k)]) / nn;
  }
  return out;
}

double band_power(const PowerSpectrum& s, double lo_hz, double hi_hz) {
  double acc = 0;
  for (Eigen::Index k = 0; k < s.freq_hz.size(); ++k)
    if (s.freq_hz[k] >= lo_hz && s.freq_hz[k] < hi_hz) acc += s.power[k];
  return acc;
}

std::vector<double> spectral_peaks(const PowerSpectrum& s, double rel_floor) {
  const Eigen::Index n = s.power.size();
  const double floor = rel_floor * s.power.maxCoeff();
  std::vector<std::pair<double, double>> peaks;
  for (Eigen::Index k = 1; k + 1 < n; ++k)
    if (s.power[k] > floor && s.power[k] > s.power[k - 1] && s.power[k] >= s.power[k + 1])
      peaks.emplace_back(s.power[k], s.freq_hz[k]);
  std::sort(peaks.begin(), peaks.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  std::vector<double> f;
  for (const auto& p : peaks) f.push_back(p.second);
  return f;
}

int autocorrelation_zero_crossing(const Eigen::VectorXd& x) {
  const Eigen::Index n = x.size();
  const Eigen::VectorXd c = x.array() - x.mean();
  const double c0 = c.squaredNorm();
  if (!(c0 > 0)) return 1;
  for (Eigen::Index lag = 1; lag < n; ++lag) {
    const double r = c.head(n - lag).dot(c.tail(n - lag));
    if (r <= 0) return static_cast<int>(lag);
  }
  return 1;
}

int mean_period(const Eigen::VectorXd& x) {
  const PowerSpectrum s = power_spectrum(x, 1.0, {true, false, false});
  const double tot = s.power.tail(s.power.size() - 1).sum();
  if (!(tot > 0)) return 1;
  const double fbar =
      s.freq_hz.tail(s.power.size() - 1).dot(s.power.tail(s.power.size() - 1)) / tot;
  return std::max(1, static_cast<int>(std::lround(1.0 / fbar)));
}

LyapunovEstimate lyapunov_rosenstein(const Eigen::VectorXd& x, const LyapunovOptions& opts) {
  const Eigen::Index N = x.size();
  if (N < 500) throw Error(ErrorCode::TooShort, "Rosenstein estimate needs at least 500 samples");
  if (opts.embed_dim < 1 || !(opts.fit_fraction > 0) || opts.fit_fraction > 1)
    throw Error(ErrorCode::InvalidArgument, "bad Lyapunov options");
  LyapunovEstimate est;
  est.embed_dim = opts.embed_dim;
  est.delay = opts.delay > 0 ? opts.delay : autocorrelation_zero_crossing(x);
  est.mean_period = opts.mean_period > 0 ? opts.mean_period : mean_period(x);
  const Eigen::Index M = N - Eigen::Index(opts.embed_dim - 1) * est.delay;
  if (M < 20) throw Error(ErrorCode::TooShort, "embedding leaves too few points");
  Eigen::Index horizon = opts.horizon > 0 ? opts.horizon : std::max(20, 10 * est.mean_period);
  horizon = std::min<Eigen::Index>(horizon, M / 4);
  if (horizon < 2) throw Error(ErrorCode::TooShort, "divergence horizon too short");

  Eigen::MatrixXd E(opts.embed_dim, M);
  for (int d = 0; d < opts.embed_dim; ++d) E.row(d) = x.segment(Eigen::Index(d) * est.delay, M).transpose();

  // Nearest neighbour with temporal exclusion; ties resolve to the lowest index.
  std::vector<Eigen::Index> nn(M, -1);
  for (Eigen::Index i = 0; i < M; ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index jx = 0; jx < M; ++jx) {
      if (std::abs(i - jx) <= est.mean_period) continue;
      const double d = (E.col(i) - E.col(jx)).squaredNorm();
      if (d > 0 && d < best) {
        best = d;
        nn[i] = jx;
      }
    }
  }
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(horizon);
  Eigen::VectorXi cnt = Eigen::VectorXi::Zero(horizon);
  Eigen::Index pairs = 0;
  for (Eigen::Index i = 0; i < M; ++i) {
    const Eigen::Index jx = nn[i];
    if (jx < 0) continue;
    ++pairs;
    for (Eigen::Index k = 0; k < horizon && i + k < M && jx + k < M; ++k) {
      const double d = (E.col(i + k) - E.col(jx + k)).norm();
      if (d > 0) {
        sum[k] += std::log(d);
        ++cnt[k];
      }
    }
  }
  if (pairs < 10) throw Error(ErrorCode::InsufficientNeighbors, "too few neighbour pairs");
  est.divergence.resize(horizon);
  for (Eigen::Index k = 0; k < horizon; ++k)
    est.divergence[k] = cnt[k] ? sum[k] / cnt[k] : std::numeric_limits<double>::quiet_NaN();
  est.fit_begin = 0;
  est.fit_end = std::max(2, static_cast<int>(std::lround(opts.fit_fraction * double(horizon))));
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  for (int k = est.fit_begin; k < est.fit_end; ++k) {
    if (std::isnan(est.divergence[k])) continue;
    sx += k;
    sy += est.divergence[k];
    sxx += double(k) * k;
    sxy += k * est.divergence[k];
    ++n;
  }
  if (n < 2) throw Error(ErrorCode::InsufficientNeighbors, "divergence curve undefined in fit range");
  est.lambda = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  return est;
}

double distance_correlation(const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
  const Eigen::Index n = x.size();
  if (n != y.size()) throw Error(ErrorCode::InvalidArgument, "series lengths differ");
  if (n < 10) throw Error(ErrorCode::TooShort, "distance correlation needs at least 10 samples");
  Eigen::VectorXd ra = Eigen::VectorXd::Zero(n), rb = Eigen::VectorXd::Zero(n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index k = 0; k < n; ++k) {
      ra[i] += std::abs(x[i] - x[k]);
      rb[i] += std::abs(y[i] - y[k]);
    }
  ra /= double(n);
  rb /= double(n);
  const double ga = ra.mean(), gb = rb.mean();
  double sab = 0, saa = 0, sbb = 0;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index k = 0; k < n; ++k) {
      const double A = std::abs(x[i] - x[k]) - ra[i] - ra[k] + ga;
      const double B = std::abs(y[i] - y[k]) - rb[i] - rb[k] + gb;
      sab += A * B;
      saa += A * A;
      sbb += B * B;
    }
  if (!(saa > 0) || !(sbb > 0)) throw Error(ErrorCode::DegenerateInput, "constant series");
  const double r2 = sab / std::sqrt(saa * sbb);
  return std::sqrt(std::clamp(r2, 0.0, 1.0));
}

const char* to_string(Regime r) {
  switch (r) {
    case Regime::Intrawell: return "intrawell";
    case Regime::Interwell: return "interwell";
    case Regime::Chaotic: return "chaotic";
    case Regime::Unknown: return "unknown";
  }
  return "unknown";
}

std::vector<Classification> classify_motion(const std::vector<double>& sigma2,
                                            const std::optional<Thresholds>& thresholds,
                                            const std::vector<bool>& diverged) {
  std::vector<Classification> out(sigma2.size());
  const bool usable = thresholds && thresholds->chaotic_below > 0 &&
                      thresholds->chaotic_below < thresholds->intrawell_above;
  for (std::size_t i = 0; i < sigma2.size(); ++i) {
    Classification& c = out[i];
    c.interwell_candidate = i < diverged.size() && diverged[i];
    const double v = sigma2[i];
    if (!usable || !(v > 0) || !std::isfinite(v)) continue;
    const double lv = std::log10(v);
    const double lo = std::log10(thresholds->chaotic_below), hi = std::log10(thresholds->intrawell_above);
    const double m = thresholds->margin_log10;
    if (std::abs(lv - lo) < m || std::abs(lv - hi) < m) continue;
    c.regime = lv < lo ? Regime::Chaotic : (lv > hi ? Regime::Intrawell : Regime::Interwell);
  }
  return out;
}

std::optional<Thresholds> auto_thresholds(const std::vector<double>& sigma2, double min_gap_log10) {
  std::vector<double> lv;
  for (double v : sigma2)
    if (v > 0 && std::isfinite(v)) lv.push_back(std::log10(v));
  if (lv.size() < 3) return std::nullopt;
  std::sort(lv.begin(), lv.end());
  std::vector<std::pair<double, std::size_t>> gaps;
  for (std::size_t i = 0; i + 1 < lv.size(); ++i) gaps.emplace_back(lv[i + 1] - lv[i], i);
  std::sort(gaps.begin(), gaps.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  if (gaps[1].first < min_gap_log10) return std::nullopt;
  std::size_t a = gaps[0].second, b = gaps[1].second;
  if (a > b) std::swap(a, b);
  Thresholds t;
  t.chaotic_below = std::pow(10.0, 0.5 * (lv[a] + lv[a + 1]));
  t.intrawell_above = std::pow(10.0, 0.5 * (lv[b] + lv[b + 1]));
  return t;
}

}  // namespace kresling
