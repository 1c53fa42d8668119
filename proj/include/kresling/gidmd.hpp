#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

#include "kresling/truss.hpp"

namespace kresling {

/// Training snapshots. Columns are time; S = Xp - X.
struct SnapshotSet {
  Eigen::MatrixXd X;
  Eigen::MatrixXd Xp;
  Eigen::MatrixXd Y;
  Eigen::MatrixXd S;
  std::vector<std::string> x_labels;
  std::vector<std::string> y_labels;
  double dt_snapshot = 0;
  double t_begin = 0;
  double t_end = 0;
};

std::vector<std::string> state_labels(const ChainConfig& chain);
/// Drive state, 12 features per cell, trailing constant.
std::vector<std::string> control_labels(const ChainConfig& chain);
int control_dim(const ChainConfig& chain);

/// Control vector for state x and drive sample [u0, phi0, v0, w0].
void control_vector(const TrussSystem& sys, const Eigen::Ref<const Eigen::VectorXd>& x,
                    const Eigen::Vector4d& drive, Eigen::Ref<Eigen::VectorXd> y);

/// Uses the first round(train_ratio * samples) samples of traj.
SnapshotSet assemble(const Trajectory& traj, const ChainConfig& chain, double train_ratio);

enum class Scaling { None, Rms };

struct StlsOptions {
  double eta = 0.0;
  int max_iter = 10;
  /// Relative singular-value cutoff of every least-squares solve.
  double rcond = 1e-10;
  /// Rms divides each row of Y and S by its root mean square before fitting; eta then
  /// applies to the dimensionless coefficients.
  Scaling scaling = Scaling::None;
};

struct StlsResult {
  /// Coefficients in physical units.
  Eigen::MatrixXd K;
  /// Coefficients in the units thresholding acted on (equal to K without scaling).
  Eigen::MatrixXd K_fit;
  int iterations = 0;
  bool rank_deficient = false;
  std::vector<int> empty_rows;
};

/// Sequential thresholded least squares for S ~ K Y.
StlsResult stls(const Eigen::MatrixXd& S, const Eigen::MatrixXd& Y, const StlsOptions& opts);

struct GiDmdModel {
  Eigen::MatrixXd K;
  Eigen::MatrixXd K_fit;
  double eta = 0;
  double rcond = 1e-10;
  Scaling scaling = Scaling::None;
  std::vector<std::string> x_labels;
  std::vector<std::string> y_labels;
  double t_train_begin = 0;
  double t_train_end = 0;
  int iterations_used = 0;
  bool rank_deficient = false;
};

GiDmdModel fit_stls(const SnapshotSet& set, const StlsOptions& opts);

struct DmdcOptions {
  /// Displacement state [u, phi] per separator with drive [u0, phi0]; false uses the full
  /// 4-channel state and drive.
  bool displacement_only = true;
  /// Truncation rank of [X; U]; 0 selects the smallest rank holding `energy` of the squared
  /// singular values.
  int rank_total = 0;
  /// Output-space rank; 0 keeps the full state.
  int rank_state = 0;
  double energy = 0.9999;
};

struct DmdcModel {
  Eigen::MatrixXd A;
  Eigen::MatrixXd B;
  int rank_total = 0;
  int rank_state = 0;
  bool displacement_only = true;
};

/// Unknown-B DMDc from snapshots X -> Xp with inputs U.
DmdcModel fit_dmdc(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Xp, const Eigen::MatrixXd& U,
                   int rank_total, int rank_state);
DmdcModel fit_dmdc(const SnapshotSet& set, const DmdcOptions& opts);

/// Rows of the full state and drive that a DMDc model sees.
std::vector<int> dmdc_state_rows(int state_dim, bool displacement_only);
std::vector<int> dmdc_drive_rows(bool displacement_only);

struct Rollout {
  /// Predicted states, one row per step including the initial state.
  Eigen::MatrixXd state;
  bool diverged = false;
  int diverged_step = -1;
};

/// Closed-loop x_{t+1} = x_t + K y_t with features recomputed from predicted displacements.
Rollout rollout(const GiDmdModel& model, const ChainConfig& chain, const Eigen::VectorXd& x0,
                const Eigen::MatrixXd& drive, double bound);

/// x_{t+1} = A x_t + B d_t on the model's rows; x0 and drive are given in full layout.
Rollout rollout(const DmdcModel& model, const Eigen::VectorXd& x0, const Eigen::MatrixXd& drive,
                double bound);

/// ||truth - pred||_2 / ||truth||_2 over all entries.
double relative_error(const Eigen::MatrixXd& truth, const Eigen::MatrixXd& pred);

struct ChannelErrors {
  double u = 0;
  double phi = 0;
  bool diverged = false;
};

/// Errors of predicted displacement channels on rows [begin, end) of full-layout states.
ChannelErrors channel_errors(const Eigen::MatrixXd& truth, const Eigen::MatrixXd& pred, int begin,
                             int end);

struct FitSettings {
  StlsOptions stls;
  /// Validation-based choice of eta and rcond; stls.eta and stls.rcond are used otherwise.
  bool auto_select = true;
  /// Log-spaced eta candidates relative to the largest unthresholded coefficient, plus 0.
  int eta_points = 10;
  double eta_low = 1e-10;
  double eta_high = 1e-1;
  std::vector<double> rcond_grid{1e-10};
  /// Tail of the training window held out for validation.
  double validation_fraction = 0.2;
  /// Rollout blow-up threshold relative to the training maximum.
  double bound_factor = 1e3;
};

struct SelectionTrial {
  double eta = 0;
  double rcond = 0;
  double score = 0;
};

struct FitReport {
  GiDmdModel model;
  Rollout prediction;
  ChannelErrors held_out;
  int n_train = 0;
  std::vector<SelectionTrial> trials;
};

/// Fit on the first train_ratio of traj, roll out from its first sample, score the rest.
FitReport fit_predict(const Trajectory& traj, const ChainConfig& chain, double train_ratio,
                      const FitSettings& settings);

struct DmdcReport {
  DmdcModel model;
  Rollout prediction;
  ChannelErrors held_out;
};

DmdcReport dmdc_predict(const Trajectory& traj, double train_ratio, const DmdcOptions& opts,
                        double bound_factor = 1e3);

struct SweepRow {
  double ratio = 0;
  double u_error = 0;
  double phi_error = 0;
  bool diverged = false;
  /// Singular values of K; empty when the fit failed.
  Eigen::VectorXd sigma;
};

std::vector<SweepRow> training_sweep(const Trajectory& traj, const ChainConfig& chain,
                                     const std::vector<double>& ratios,
                                     const FitSettings& settings);

}  // namespace kresling
