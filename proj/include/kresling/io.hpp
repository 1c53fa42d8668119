#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

#include "kresling/gidmd.hpp"

namespace kresling {

/// Numeric CSV with one header row.
struct Table {
  std::vector<std::string> header;
  Eigen::MatrixXd data;

  /// Index of column name, or -1.
  int column(const std::string& name) const;
};

void write_table(const std::string& path, const Table& table);
Table read_table(const std::string& path);

/// Length and angle units of an external record. Velocities use the same units per second.
struct Units {
  double length = 1.0;  ///< metres per file unit
  double angle = 1.0;   ///< radians per file unit

  static Units parse(const std::string& length, const std::string& angle);
};

/// Header t,u0,phi0,v0,w0,u1,phi1,v1,w1,... with values divided by units.
Table trajectory_table(const Trajectory& traj, const Units& units = {});
void write_trajectory(const std::string& path, const Trajectory& traj, const Units& units = {});

/// Converts to SI. Missing v/w columns are central differences of displacement (one-sided at
/// the ends); missing drive columns are zero. Time must be uniform.
Trajectory ingest(const Table& table, const Units& units = {});
Trajectory read_trajectory(const std::string& path, const Units& units = {});

/// Central differences in the interior, one-sided at the ends.
Eigen::VectorXd differentiate(const Eigen::VectorXd& x, double dt);

/// K as CSV with row and column labels, plus path + ".json" holding eta, window and layout.
void write_model(const std::string& path, const GiDmdModel& model);
GiDmdModel read_model(const std::string& path);

/// FNV-1a of the concatenated labels, hex encoded.
std::string layout_hash(const std::vector<std::string>& x_labels,
                        const std::vector<std::string>& y_labels);

}  // namespace kresling
