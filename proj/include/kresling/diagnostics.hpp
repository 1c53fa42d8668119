#pragma once

#include <Eigen/Core>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "kresling/error.hpp"

namespace kresling {

struct SvdSpectrum {
  Eigen::VectorXd sigma;
  double freq_hz = std::numeric_limits<double>::quiet_NaN();
  double train_ratio = std::numeric_limits<double>::quiet_NaN();
};

/// Descending singular values of K.
SvdSpectrum singular_spectrum(const Eigen::MatrixXd& K, double freq_hz = std::numeric_limits<double>::quiet_NaN(),
                              double train_ratio = std::numeric_limits<double>::quiet_NaN());

struct SpectrumOptions {
  bool remove_mean = true;
  bool normalize = true;
  bool hann = false;
};

struct PowerSpectrum {
  Eigen::VectorXd freq_hz;
  Eigen::VectorXd power;
};

/// One-sided periodogram. Without preprocessing the bins sum to mean(x^2).
PowerSpectrum power_spectrum(const Eigen::VectorXd& x, double sample_rate,
                             const SpectrumOptions& opts = {});

/// Sum of power over bins with lo <= f < hi.
double band_power(const PowerSpectrum& s, double lo_hz, double hi_hz);

/// Frequencies of local power maxima above rel_floor * max power, strongest first.
std::vector<double> spectral_peaks(const PowerSpectrum& s, double rel_floor = 1e-3);

/// First lag where the sample autocorrelation crosses zero (at least 1).
int autocorrelation_zero_crossing(const Eigen::VectorXd& x);

/// Reciprocal of the power-weighted mean frequency, in samples (at least 1).
int mean_period(const Eigen::VectorXd& x);

struct LyapunovOptions {
  int embed_dim = 3;
  /// 0 selects the first autocorrelation zero-crossing.
  int delay = 0;
  /// Temporal exclusion for neighbours; 0 selects the mean period.
  int mean_period = 0;
  /// Length of the divergence curve; 0 selects max(20, 10 mean periods) capped by the data.
  int horizon = 0;
  /// Leading fraction of the divergence curve used for the slope.
  double fit_fraction = 0.2;
};

struct LyapunovEstimate {
  /// Largest exponent per sample.
  double lambda = 0;
  int embed_dim = 0;
  int delay = 0;
  int mean_period = 0;
  int fit_begin = 0;
  int fit_end = 0;
  /// Mean log divergence per step.
  Eigen::VectorXd divergence;

  double per_second(double sample_rate) const { return lambda * sample_rate; }
};

LyapunovEstimate lyapunov_rosenstein(const Eigen::VectorXd& x, const LyapunovOptions& opts = {});

/// Sample distance correlation in [0, 1].
double distance_correlation(const Eigen::VectorXd& x, const Eigen::VectorXd& y);

enum class Regime { Intrawell, Interwell, Chaotic, Unknown };

const char* to_string(Regime r);

struct Thresholds {
  /// Values below are chaotic.
  double chaotic_below = 0;
  /// Values above are intrawell.
  double intrawell_above = 0;
  /// Values within this log10 distance of a cut are unknown.
  double margin_log10 = 0;
};

struct Classification {
  Regime regime = Regime::Unknown;
  bool interwell_candidate = false;
};

/// Labels by sigma_2 band; a diverged rollout marks an interwell candidate independently.
std::vector<Classification> classify_motion(const std::vector<double>& sigma2,
                                            const std::optional<Thresholds>& thresholds,
                                            const std::vector<bool>& diverged = {});

/// Cuts at the two widest gaps of log10 sigma_2 when both exceed min_gap_log10.
std::optional<Thresholds> auto_thresholds(const std::vector<double>& sigma2,
                                          double min_gap_log10 = 0.3);

}  // namespace kresling
