#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

namespace kresling {

struct Series {
  std::string label;
  Eigen::VectorXd x;
  Eigen::VectorXd y;
};

struct LinePlot {
  std::string title;
  std::string x_label;
  std::string y_label;
  bool log_y = false;
  std::vector<Series> series;
};

/// z(i, j) sits at (x(j), y(i)). Non-finite cells are left blank.
struct Heatmap {
  std::string title;
  std::string x_label;
  std::string y_label;
  bool log_z = false;
  Eigen::VectorXd x;
  Eigen::VectorXd y;
  Eigen::MatrixXd z;
};

std::string render_svg(const LinePlot& plot, int width = 640, int height = 400);
std::string render_svg(const Heatmap& map, int width = 640, int height = 400);

void write_text(const std::string& path, const std::string& text);

}  // namespace kresling
