#pragma once

#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "kresling/config.hpp"
#include "kresling/diagnostics.hpp"
#include "kresling/gidmd.hpp"
#include "kresling/linear.hpp"

namespace kresling {

/// Typed view of a Config. Every field has a value after make_experiment.
struct Experiment {
  std::string kind = "single";
  Design base;
  ChainConfig chain;
  Drive drive;
  double t_end = 5.0;
  IntegrateOptions integrate;
  /// Start on the drive-periodic orbit instead of rest.
  bool periodic_start = false;

  std::vector<double> freqs;
  double train_ratio = 0.6;
  std::vector<double> train_ratios;
  FitSettings fit;
  DmdcOptions dmdc;

  int n_k = 201;
  int supercell_cells = 16;
  Boundary supercell_boundary = Boundary::Fixed;

  LyapunovOptions lyapunov;
  /// 1-based singular value used for classification and ratio sweeps.
  int sigma_index = 2;
  /// Empty selects cut points from the data.
  std::optional<Thresholds> thresholds;
  SpectrumOptions spectrum;

  unsigned seed = 0;
  int workers = 1;
};

/// Throws ConfigError on missing or malformed keys.
Experiment make_experiment(const Config& config);

/// Simulated record at drive frequency freq (the configured drive otherwise unchanged).
Trajectory simulate(const Experiment& e, double freq);

/// Unit-cell coefficients of the base design and its mirror.
LinearCoefficients unit_cell_coefficients(const Experiment& e);

struct FrequencyPoint {
  double freq_hz = 0;
  bool simulation_diverged = false;
  FitReport fit;
  SvdSpectrum spectrum;
  /// Largest Lyapunov exponents [1/s] of u1 and u2; NaN when not computed.
  double lambda_u1 = std::numeric_limits<double>::quiet_NaN();
  double lambda_u2 = std::numeric_limits<double>::quiet_NaN();
  PowerSpectrum power_u1;
  /// Non-empty when this point failed; the sweep continues.
  std::string error;
  ErrorCode error_code = ErrorCode::NumericalFailure;

  bool failed() const { return !error.empty(); }
  bool diverged() const { return simulation_diverged || fit.prediction.diverged; }
};

struct SweepOptions {
  bool lyapunov = false;
  bool power = false;
};

/// Simulate, fit and analyse every configured frequency on e.workers threads.
std::vector<FrequencyPoint> sweep_frequencies(const Experiment& e, const SweepOptions& opts = {});

/// Run fn(i) for i in [0, n) on up to workers threads. Exceptions propagate after all finish.
template <typename Fn>
void parallel_for(int n, int workers, Fn&& fn);

}  // namespace kresling

#include "kresling/detail/parallel.hpp"
