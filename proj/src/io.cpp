#include "kresling/io.hpp"

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>

#include "json.hpp"
#include "kresling/config.hpp"

namespace kresling {

namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string item;
  while (std::getline(ss, item, ',')) {
    while (!item.empty() && (item.back() == '\r' || item.back() == ' ')) item.pop_back();
    std::size_t b = 0;
    while (b < item.size() && item[b] == ' ') ++b;
    out.push_back(item.substr(b));
  }
  return out;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream f(path);
  if (!f) throw Error(ErrorCode::IoError, "cannot write '" + path + "'");
  return f;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw Error(ErrorCode::IoError, "cannot read '" + path + "'");
  return f;
}

}  // namespace

int Table::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return static_cast<int>(i);
  return -1;
}

void write_table(const std::string& path, const Table& table) {
  if (static_cast<Eigen::Index>(table.header.size()) != table.data.cols())
    throw Error(ErrorCode::InvalidArgument, "header and data widths differ");
  std::ofstream f = open_out(path);
  for (std::size_t i = 0; i < table.header.size(); ++i) f << (i ? "," : "") << table.header[i];
  f << '\n';
  for (Eigen::Index r = 0; r < table.data.rows(); ++r) {
    for (Eigen::Index c = 0; c < table.data.cols(); ++c)
      f << (c ? "," : "") << format_double(table.data(r, c));
    f << '\n';
  }
  if (!f) throw Error(ErrorCode::IoError, "write failed for '" + path + "'");
}

Table read_table(const std::string& path) {
  std::ifstream f = open_in(path);
  Table t;
  std::string line;
  if (!std::getline(f, line)) throw Error(ErrorCode::IoError, "'" + path + "' is empty");
  t.header = split(line);
  std::vector<std::vector<double>> rows;
  int lineno = 1;
  while (std::getline(f, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const auto cells = split(line);
    if (cells.size() != t.header.size())
      throw Error(ErrorCode::IoError, path + ":" + std::to_string(lineno) + ": expected " +
                                          std::to_string(t.header.size()) + " fields");
    std::vector<double> row(cells.size());
    for (std::size_t i = 0; i < cells.size(); ++i) {
      char* end = nullptr;
      row[i] = std::strtod(cells[i].c_str(), &end);
      if (cells[i].empty() || *end != '\0')
        throw Error(ErrorCode::IoError, path + ":" + std::to_string(lineno) + ": bad number '" + cells[i] + "'");
    }
    rows.push_back(std::move(row));
  }
  t.data.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(t.header.size()));
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < rows[r].size(); ++c) t.data(r, c) = rows[r][c];
  return t;
}

Units Units::parse(const std::string& length, const std::string& angle) {
  Units u;
  if (length == "mm")
    u.length = 1e-3;
  else if (length != "m")
    throw Error(ErrorCode::ConfigError, "length unit must be m or mm");
  if (angle == "deg")
    u.angle = std::numbers::pi / 180.0;
  else if (angle != "rad")
    throw Error(ErrorCode::ConfigError, "angle unit must be rad or deg");
  return u;
}

Table trajectory_table(const Trajectory& traj, const Units& units) {
  const int T = traj.samples(), nf = traj.n_free();
  Table t;
  t.header = {"t", "u0", "phi0", "v0", "w0"};
  for (int s = 1; s <= nf; ++s)
    for (const char* c : {"u", "phi", "v", "w"}) t.header.push_back(c + std::to_string(s));
  t.data.resize(T, 5 + 4 * nf);
  t.data.col(0) = traj.t;
  t.data.middleCols(1, 4) = traj.drive;
  t.data.rightCols(4 * nf) = traj.state;
  const double scale[4] = {units.length, units.angle, units.length, units.angle};
  for (int c = 1; c < t.data.cols(); ++c) t.data.col(c) /= scale[(c - 1) % 4];
  return t;
}

void write_trajectory(const std::string& path, const Trajectory& traj, const Units& units) {
  write_table(path, trajectory_table(traj, units));
}

Eigen::VectorXd differentiate(const Eigen::VectorXd& x, double dt) {
  const Eigen::Index n = x.size();
  Eigen::VectorXd d = Eigen::VectorXd::Zero(n);
  if (n < 2) return d;
  d(0) = (x(1) - x(0)) / dt;
  d(n - 1) = (x(n - 1) - x(n - 2)) / dt;
  for (Eigen::Index i = 1; i + 1 < n; ++i) d(i) = (x(i + 1) - x(i - 1)) / (2 * dt);
  return d;
}

Trajectory ingest(const Table& table, const Units& units) {
  const int tc = table.column("t");
  if (tc < 0) throw Error(ErrorCode::IoError, "trajectory table has no 't' column");
  const Eigen::Index T = table.data.rows();
  if (T < 2) throw Error(ErrorCode::IoError, "trajectory needs at least two samples");
  Trajectory tr;
  tr.t = table.data.col(tc);
  const double dt = (tr.t(T - 1) - tr.t(0)) / static_cast<double>(T - 1);
  if (!(dt > 0)) throw Error(ErrorCode::IoError, "time must increase");
  // Tolerates timestamps printed with six significant digits.
  for (Eigen::Index i = 1; i < T; ++i)
    if (std::abs(tr.t(i) - tr.t(i - 1) - dt) > 1e-3 * dt)
      throw Error(ErrorCode::IoError, "time samples are not uniform");
  tr.sample_rate = 1.0 / dt;

  auto fill = [&](int s, Eigen::Ref<Eigen::MatrixXd> out, bool required) {
    const std::string id = std::to_string(s);
    const int cu = table.column("u" + id), cp = table.column("phi" + id);
    if (cu < 0 || cp < 0) {
      if (required) throw Error(ErrorCode::IoError, "missing u" + id + " or phi" + id);
      out.setZero();
      return;
    }
    out.col(0) = table.data.col(cu) * units.length;
    out.col(1) = table.data.col(cp) * units.angle;
    const int cv = table.column("v" + id), cw = table.column("w" + id);
    out.col(2) = cv >= 0 ? Eigen::VectorXd(table.data.col(cv) * units.length) : differentiate(out.col(0), dt);
    out.col(3) = cw >= 0 ? Eigen::VectorXd(table.data.col(cw) * units.angle) : differentiate(out.col(1), dt);
  };

  tr.drive.resize(T, 4);
  fill(0, tr.drive, false);
  int nf = 0;
  while (table.column("u" + std::to_string(nf + 1)) >= 0) ++nf;
  if (nf == 0) throw Error(ErrorCode::IoError, "trajectory has no separator columns");
  tr.state.resize(T, 4 * nf);
  for (int s = 1; s <= nf; ++s) fill(s, tr.state.middleCols(4 * (s - 1), 4), true);
  return tr;
}

Trajectory read_trajectory(const std::string& path, const Units& units) {
  return ingest(read_table(path), units);
}

std::string layout_hash(const std::vector<std::string>& x_labels,
                        const std::vector<std::string>& y_labels) {
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&](const std::string& s) {
    for (unsigned char ch : s) {
      h ^= ch;
      h *= 1099511628211ULL;
    }
    h ^= 0xff;
    h *= 1099511628211ULL;
  };
  for (const auto& s : x_labels) mix(s);
  mix("|");
  for (const auto& s : y_labels) mix(s);
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void write_model(const std::string& path, const GiDmdModel& model) {
  if (static_cast<Eigen::Index>(model.x_labels.size()) != model.K.rows() ||
      static_cast<Eigen::Index>(model.y_labels.size()) != model.K.cols())
    throw Error(ErrorCode::InvalidArgument, "model labels do not match K");
  {
    std::ofstream f = open_out(path);
    f << "row";
    for (const auto& y : model.y_labels) f << ',' << y;
    f << '\n';
    for (Eigen::Index r = 0; r < model.K.rows(); ++r) {
      f << model.x_labels[r];
      for (Eigen::Index c = 0; c < model.K.cols(); ++c) f << ',' << format_double(model.K(r, c));
      f << '\n';
    }
    if (!f) throw Error(ErrorCode::IoError, "write failed for '" + path + "'");
  }
  nlohmann::json meta;
  meta["eta"] = model.eta;
  meta["rcond"] = model.rcond;
  meta["scaling"] = model.scaling == Scaling::Rms ? "rms" : "none";
  meta["t_train_begin"] = model.t_train_begin;
  meta["t_train_end"] = model.t_train_end;
  meta["iterations_used"] = model.iterations_used;
  meta["rank_deficient"] = model.rank_deficient;
  meta["rows"] = model.K.rows();
  meta["cols"] = model.K.cols();
  meta["layout_hash"] = layout_hash(model.x_labels, model.y_labels);
  std::ofstream f = open_out(path + ".json");
  f << meta.dump(2) << '\n';
}

GiDmdModel read_model(const std::string& path) {
  GiDmdModel m;
  std::ifstream f = open_in(path);
  std::string line;
  if (!std::getline(f, line)) throw Error(ErrorCode::IoError, "'" + path + "' is empty");
  auto head = split(line);
  if (head.empty() || head[0] != "row") throw Error(ErrorCode::IoError, "'" + path + "' is not a K matrix");
  m.y_labels.assign(head.begin() + 1, head.end());
  std::vector<std::vector<double>> rows;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    auto cells = split(line);
    if (cells.size() != head.size()) throw Error(ErrorCode::IoError, "ragged K matrix in '" + path + "'");
    m.x_labels.push_back(cells[0]);
    std::vector<double> row;
    for (std::size_t i = 1; i < cells.size(); ++i) row.push_back(std::strtod(cells[i].c_str(), nullptr));
    rows.push_back(std::move(row));
  }
  m.K.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(m.y_labels.size()));
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < rows[r].size(); ++c) m.K(r, c) = rows[r][c];

  std::ifstream side = open_in(path + ".json");
  nlohmann::json meta;
  try {
    side >> meta;
    m.eta = meta.at("eta").get<double>();
    m.rcond = meta.at("rcond").get<double>();
    m.scaling = meta.at("scaling").get<std::string>() == "rms" ? Scaling::Rms : Scaling::None;
    m.t_train_begin = meta.at("t_train_begin").get<double>();
    m.t_train_end = meta.at("t_train_end").get<double>();
    m.iterations_used = meta.at("iterations_used").get<int>();
    m.rank_deficient = meta.at("rank_deficient").get<bool>();
    if (meta.at("layout_hash").get<std::string>() != layout_hash(m.x_labels, m.y_labels))
      throw Error(ErrorCode::IoError, "layout hash mismatch for '" + path + "'");
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::IoError, "bad model sidecar: " + std::string(e.what()));
  }
  // K_fit is not persisted.
  m.K_fit = m.K;
  return m;
}

}  // namespace kresling
