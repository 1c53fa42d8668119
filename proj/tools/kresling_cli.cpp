#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <numbers>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "kresling/config.hpp"
#include "kresling/experiment.hpp"
#include "kresling/io.hpp"
#include "kresling/svg.hpp"

namespace fs = std::filesystem;
using namespace kresling;

namespace {

enum Exit { kOk = 0, kConfigError = 2, kNumericalFailure = 3, kDivergence = 4 };

int exit_code(ErrorCode c) {
  switch (c) {
    case ErrorCode::ConfigError:
    case ErrorCode::InvalidArgument:
    case ErrorCode::IoError:
      return kConfigError;
    default:
      return kNumericalFailure;
  }
}

struct Options {
  std::string config_path;
  std::string preset_name;
  std::string out = "out";
  int workers = 0;
  int seed = -1;
  std::string format = "both";
  std::vector<std::string> overrides;
  std::string input;
  std::string length_unit = "m";
  std::string angle_unit = "rad";
};

class Run {
 public:
  Run(std::string command, const Options& o) : command_(std::move(command)), opts_(o) {}

  void load() {
    fs::create_directories(opts_.out);
    config_ = preset(opts_.preset_name.empty() ? "single5hz" : opts_.preset_name);
    if (!opts_.config_path.empty()) config_.merge(Config::load(opts_.config_path));
    for (const auto& kv : opts_.overrides) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw Error(ErrorCode::ConfigError, "--set expects key=value, got '" + kv + "'");
      config_.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (opts_.workers > 0) config_.set("run.workers", opts_.workers);
    if (opts_.seed >= 0) config_.set("run.seed", opts_.seed);
    if (opts_.format != "csv" && opts_.format != "svg" && opts_.format != "both")
      throw Error(ErrorCode::ConfigError, "--format must be csv, svg or both");
    config_.set("output.format", opts_.format);
    experiment_ = make_experiment(config_);
  }

  const Experiment& experiment() const { return experiment_; }
  bool csv() const { return opts_.format != "svg"; }
  bool svg() const { return opts_.format != "csv"; }
  const Options& options() const { return opts_; }

  std::string path(const std::string& name) {
    files_.push_back(name);
    return (fs::path(opts_.out) / name).string();
  }

  void table(const std::string& name, const Table& t) {
    if (csv()) write_table(path(name), t);
  }

  template <typename Plot>
  void plot(const std::string& name, const Plot& p) {
    if (svg()) write_text(path(name), render_svg(p));
  }

  void note(const std::string& key, nlohmann::json value) { summary_[key] = std::move(value); }

  int finish(int code, const std::string& message = {}, const std::string& category = {}) {
    nlohmann::json m;
    m["command"] = command_;
    m["status"] = code;
    m["config_hash"] = config_.hash();
    m["versions"] = {{"kresling", KRESLING_VERSION},
                     {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." +
                                   std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                   std::to_string(EIGEN_MINOR_VERSION)},
                     {"compiler", __VERSION__}};
    m["seed"] = experiment_.seed;
    m["workers"] = experiment_.workers;
    m["files"] = files_;
    m["summary"] = summary_;
    m["runtime_s"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    if (code != kOk && code != kDivergence) {
      nlohmann::json err{{"code", code}, {"category", category}, {"message", message}};
      m["error"] = err;
      std::cerr << err.dump() << '\n';
    }
    if (fs::exists(opts_.out)) {
      write_text((fs::path(opts_.out) / "config.ini").string(), config_.serialize());
      write_text((fs::path(opts_.out) / "manifest.json").string(), m.dump(2) + "\n");
    }
    return code;
  }

 private:
  std::string command_;
  Options opts_;
  Config config_;
  Experiment experiment_;
  std::vector<std::string> files_;
  nlohmann::json summary_ = nlohmann::json::object();
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string tag(double f) { return format_double(f); }

Eigen::VectorXd to_vector(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

Trajectory source(Run& run, double freq) {
  if (!run.options().input.empty())
    return read_trajectory(run.options().input,
                           Units::parse(run.options().length_unit, run.options().angle_unit));
  Trajectory tr = simulate(run.experiment(), freq);
  if (tr.diverged)
    throw Error(ErrorCode::NumericalFailure, "simulation diverged at t = " + format_double(tr.divergence_time));
  return tr;
}

/// The chain layout implied by a trajectory: configured cells when the separator count agrees.
ChainConfig layout_for(const Run& run, const Trajectory& tr) {
  ChainConfig c = run.experiment().chain;
  if (c.n_free() != tr.n_free())
    throw Error(ErrorCode::ConfigError, "trajectory has " + std::to_string(tr.n_free()) +
                                            " free separators but the structure has " +
                                            std::to_string(c.n_free()));
  return c;
}

LinePlot displacement_plot(const std::string& title, const Trajectory& tr, int channel_limit) {
  LinePlot p{title, "t [s]", "u [m]", false, {}};
  const Eigen::MatrixXd u = tr.channel(0);
  for (int s = 0; s < std::min<int>(channel_limit, u.cols()); ++s)
    p.series.push_back({"u" + std::to_string(s + 1), tr.t, u.col(s)});
  return p;
}

int cmd_simulate(Run& run) {
  const Experiment& e = run.experiment();
  bool diverged = false;
  for (double f : e.freqs) {
    const Trajectory tr = simulate(e, f);
    diverged |= tr.diverged;
    run.note("diverged_" + tag(f), tr.diverged);
    run.table("trajectory_" + tag(f) + "hz.csv", trajectory_table(tr));
    run.plot("trajectory_" + tag(f) + "hz.svg", displacement_plot("Axial displacement, " + tag(f) + " Hz", tr, 4));
  }
  return diverged ? kDivergence : kOk;
}

void write_fit_outputs(Run& run, const std::string& stem, const FitReport& rep, const DmdcReport* dmdc) {
  if (run.csv()) {
    write_model(run.path(stem + "_K.csv"), rep.model);
    run.path(stem + "_K.csv.json");
  }
  Heatmap h{"|K| " + stem, "control index", "state index", true, {}, {}, rep.model.K.cwiseAbs()};
  h.x = Eigen::VectorXd::LinSpaced(rep.model.K.cols(), 0, rep.model.K.cols() - 1);
  h.y = Eigen::VectorXd::LinSpaced(rep.model.K.rows(), 0, rep.model.K.rows() - 1);
  run.plot(stem + "_K.svg", h);
  if (dmdc) {
    Table a{{}, dmdc->model.A}, b{{}, dmdc->model.B};
    for (Eigen::Index i = 0; i < a.data.cols(); ++i) a.header.push_back("x" + std::to_string(i));
    for (Eigen::Index i = 0; i < b.data.cols(); ++i) b.header.push_back("d" + std::to_string(i));
    run.table(stem + "_dmdc_A.csv", a);
    run.table(stem + "_dmdc_B.csv", b);
  }
}

int cmd_fit(Run& run, bool predict) {
  const Experiment& e = run.experiment();
  const std::vector<double> freqs = run.options().input.empty() ? e.freqs : std::vector<double>{e.drive.freq};
  bool diverged = false;
  Table errors{{"freq_hz", "gidmd_u", "gidmd_phi", "gidmd_diverged", "dmdc_u", "dmdc_phi", "dmdc_diverged"}, {}};
  errors.data.resize(static_cast<Eigen::Index>(freqs.size()), 7);
  for (std::size_t i = 0; i < freqs.size(); ++i) {
    const double f = freqs[i];
    const Trajectory tr = source(run, f);
    const ChainConfig chain = layout_for(run, tr);
    const FitReport rep = fit_predict(tr, chain, e.train_ratio, e.fit);
    const DmdcReport dm = dmdc_predict(tr, e.train_ratio, e.dmdc, e.fit.bound_factor);
    const std::string stem = run.options().input.empty() ? tag(f) + "hz" : "input";
    write_fit_outputs(run, stem, rep, &dm);
    errors.data.row(static_cast<Eigen::Index>(i)) << f, rep.held_out.u, rep.held_out.phi,
        rep.held_out.diverged ? 1.0 : 0.0, dm.held_out.u, dm.held_out.phi, dm.held_out.diverged ? 1.0 : 0.0;
    diverged |= rep.held_out.diverged;
    run.note("gidmd_" + stem, {{"u", rep.held_out.u}, {"phi", rep.held_out.phi}, {"eta", rep.model.eta},
                               {"rcond", rep.model.rcond}, {"diverged", rep.held_out.diverged}});
    run.note("dmdc_" + stem, {{"u", dm.held_out.u}, {"phi", dm.held_out.phi}, {"rank", dm.model.rank_total}});
    if (predict) {
      Trajectory pred = tr;
      pred.state = rep.prediction.state;
      run.table("prediction_" + stem + ".csv", trajectory_table(pred));
      LinePlot p{"Prediction " + stem, "t [s]", "u1 [m]", false,
                 {{"truth", tr.t, tr.state.col(0)}, {"giDMD", tr.t, rep.prediction.state.col(0)}}};
      if (dm.prediction.state.rows() == tr.samples()) p.series.push_back({"DMDc", tr.t, dm.prediction.state.col(0)});
      run.plot("prediction_" + stem + ".svg", p);
    }
  }
  run.table("errors.csv", errors);
  return diverged ? kDivergence : kOk;
}

int cmd_bands(Run& run) {
  const Experiment& e = run.experiment();
  const LinearCoefficients c = unit_cell_coefficients(e);
  const BandStructure bs = dispersion(c, e.base.m, e.base.j, e.base.h0, e.n_k);
  const BandGap gap = band_gap(bs);
  Table t{{"k", "omega1", "omega2", "omega3", "omega4"}, Eigen::MatrixXd(bs.k.size(), 5)};
  t.data.col(0) = bs.k;
  t.data.rightCols(4) = bs.omega;
  run.table("bands.csv", t);
  Table coef{{"a11", "b11", "a12", "b12", "a21", "b21", "a22", "b22"}, Eigen::MatrixXd(1, 8)};
  coef.data << c.a11, c.b11, c.a12, c.b12, c.a21, c.b21, c.a22, c.b22;
  run.table("coefficients.csv", coef);
  LinePlot p{"Dispersion", "k [rad/m]", "f [Hz]", false, {}};
  for (int b = 0; b < 4; ++b)
    p.series.push_back({"band " + std::to_string(b + 1), bs.k, bs.omega.col(b) / (2 * std::numbers::pi)});
  run.plot("bands.svg", p);
  run.note("gap_hz", {gap.lower_hz, gap.upper_hz});
  run.note("coefficients", {{"a11", c.a11}, {"a12", c.a12}, {"a22", c.a22}});
  return kOk;
}

int cmd_zak(Run& run) {
  const Experiment& e = run.experiment();
  const BandStructure bs = dispersion(unit_cell_coefficients(e), e.base.m, e.base.j, e.base.h0, e.n_k);
  Table t{{"band_a", "band_b", "phase_rad", "phase_over_pi"}, Eigen::MatrixXd(2, 4)};
  int row = 0;
  for (std::array<int, 2> pair : {std::array<int, 2>{1, 2}, std::array<int, 2>{3, 4}}) {
    const double z = zak_phase(bs, pair);
    t.data.row(row++) << pair[0], pair[1], z, z / std::numbers::pi;
    run.note("zak_" + std::to_string(pair[0]) + std::to_string(pair[1]), z);
  }
  run.table("zak.csv", t);
  return kOk;
}

int cmd_supercell(Run& run) {
  const Experiment& e = run.experiment();
  const LinearCoefficients c = unit_cell_coefficients(e);
  const SupercellModes sm = supercell_modes(c, e.base.m, e.base.j, e.supercell_cells, e.supercell_boundary);
  const BandGap gap = band_gap(dispersion(c, e.base.m, e.base.j, e.base.h0, e.n_k));
  const Eigen::Index n = sm.freq_hz.size();
  Table t{{"mode_index", "freq_hz", "localization"}, Eigen::MatrixXd(n, 3)};
  t.data.col(0) = Eigen::VectorXd::LinSpaced(n, 0, static_cast<double>(n - 1));
  t.data.col(1) = sm.freq_hz;
  t.data.col(2) = sm.end_weight;
  run.table("supercell.csv", t);
  std::vector<double> in_gap;
  for (Eigen::Index i = 0; i < n; ++i)
    if (sm.freq_hz(i) > gap.lower_hz && sm.freq_hz(i) < gap.upper_hz) in_gap.push_back(sm.freq_hz(i));
  run.note("in_gap_hz", in_gap);
  LinePlot p{"Supercell modes", "mode index", "f [Hz]", false, {{"modes", t.data.col(0), sm.freq_hz}}};
  run.plot("supercell.svg", p);
  return kOk;
}

/// Writes the per-frequency tables every sweep shares and returns the exit status.
int sweep_tables(Run& run, const std::vector<FrequencyPoint>& pts, bool lyapunov) {
  const Experiment& e = run.experiment();
  Eigen::Index k = 0;
  for (const auto& p : pts) k = std::max(k, p.spectrum.sigma.size());
  const Eigen::Index n = static_cast<Eigen::Index>(pts.size());
  const double nan = std::numeric_limits<double>::quiet_NaN();

  Table sig{{"freq_hz"}, Eigen::MatrixXd::Constant(n, k + 1, nan)};
  for (Eigen::Index i = 0; i < k; ++i) sig.header.push_back("sigma_" + std::to_string(i + 1));
  Table err{{"freq_hz", "u_error", "phi_error", "diverged", "failed"}, Eigen::MatrixXd(n, 5)};
  Table lam{{"freq_hz", "lambda_u1", "lambda_u2"}, Eigen::MatrixXd(n, 3)};
  bool failed = false, diverged = false;
  std::string first_error;
  ErrorCode first_code = ErrorCode::NumericalFailure;
  for (Eigen::Index i = 0; i < n; ++i) {
    const FrequencyPoint& p = pts[i];
    sig.data(i, 0) = p.freq_hz;
    sig.data.row(i).segment(1, p.spectrum.sigma.size()) = p.spectrum.sigma.transpose();
    err.data.row(i) << p.freq_hz, p.failed() ? nan : p.fit.held_out.u, p.failed() ? nan : p.fit.held_out.phi,
        p.diverged() ? 1.0 : 0.0, p.failed() ? 1.0 : 0.0;
    lam.data.row(i) << p.freq_hz, p.lambda_u1, p.lambda_u2;
    if (p.failed() && first_error.empty()) {
      first_error = p.error;
      first_code = p.error_code;
    }
    failed |= p.failed();
    diverged |= p.diverged();
  }
  run.table("sigma.csv", sig);
  run.table("errors.csv", err);
  if (lyapunov) run.table("lyapunov.csv", lam);

  Heatmap h{"Singular values of K", "drive frequency [Hz]", "index", true, sig.data.col(0),
            Eigen::VectorXd::LinSpaced(k, 1, static_cast<double>(k)), sig.data.rightCols(k).transpose()};
  run.plot("sigma.svg", h);
  LinePlot lp{"sigma_" + std::to_string(e.sigma_index), "drive frequency [Hz]", "log10 sigma", true, {}};
  if (e.sigma_index <= k) lp.series.push_back({"", sig.data.col(0), sig.data.col(e.sigma_index)});
  run.plot("sigma_index.svg", lp);
  if (failed) {
    run.note("first_error", first_error);
    return exit_code(first_code);
  }
  return diverged ? kDivergence : kOk;
}

int cmd_sweep_freq(Run& run) {
  const auto pts = sweep_frequencies(run.experiment(), {false, false});
  return sweep_tables(run, pts, false);
}

int cmd_classify(Run& run) {
  const Experiment& e = run.experiment();
  const auto pts = sweep_frequencies(e, {true, false});
  const int status = sweep_tables(run, pts, true);
  std::vector<double> sk, freqs;
  std::vector<bool> div;
  for (const auto& p : pts) {
    if (p.failed() || p.spectrum.sigma.size() < e.sigma_index) continue;
    freqs.push_back(p.freq_hz);
    sk.push_back(p.spectrum.sigma(e.sigma_index - 1));
    div.push_back(p.diverged());
  }
  const auto th = e.thresholds ? e.thresholds : auto_thresholds(sk);
  const auto labels = classify_motion(sk, th, div);
  const Eigen::Index n = static_cast<Eigen::Index>(freqs.size());
  Table t{{"freq_hz", "sigma_k", "lambda_u1", "lambda_u2", "regime", "interwell_candidate"}, Eigen::MatrixXd(n, 6)};
  std::vector<double> ls, a1, a2;
  for (Eigen::Index i = 0; i < n; ++i) {
    double lu1 = 0, lu2 = 0;
    for (const auto& p : pts)
      if (p.freq_hz == freqs[i]) lu1 = p.lambda_u1, lu2 = p.lambda_u2;
    t.data.row(i) << freqs[i], sk[i], lu1, lu2, static_cast<double>(labels[i].regime),
        labels[i].interwell_candidate ? 1.0 : 0.0;
    if (sk[i] > 0 && std::isfinite(lu1) && std::isfinite(lu2)) {
      ls.push_back(std::log10(sk[i]));
      a1.push_back(lu1);
      a2.push_back(lu2);
    }
  }
  run.table("classify.csv", t);
  nlohmann::json regimes = nlohmann::json::array();
  for (Eigen::Index i = 0; i < n; ++i)
    regimes.push_back({{"freq_hz", freqs[i]}, {"regime", to_string(labels[i].regime)},
                       {"interwell_candidate", labels[i].interwell_candidate}});
  run.note("regimes", regimes);
  run.note("regime_codes", "0 intrawell, 1 interwell, 2 chaotic, 3 unknown");
  if (th) run.note("thresholds", {th->chaotic_below, th->intrawell_above});
  if (ls.size() >= 3) {
    try {
      const double d1 = distance_correlation(to_vector(ls), to_vector(a1));
      const double d2 = distance_correlation(to_vector(ls), to_vector(a2));
      run.table("dcor.csv", Table{{"dcor_u1", "dcor_u2"}, (Eigen::MatrixXd(1, 2) << d1, d2).finished()});
      run.note("dcor", {d1, d2});
    } catch (const Error& err) {
      run.note("dcor_error", err.what());
    }
  }
  LinePlot p{"sigma_k against Lyapunov exponent", "lambda_u1 [1/s]", "log10 sigma_k", false,
             {{"", to_vector(a1), to_vector(ls)}}};
  run.plot("classify.svg", p);
  return status;
}

int cmd_spectrogram(Run& run) {
  const Experiment& e = run.experiment();
  const auto pts = sweep_frequencies(e, {false, true});
  Eigen::Index bins = 0;
  for (const auto& p : pts) bins = std::max(bins, p.power_u1.power.size());
  Eigen::MatrixXd z = Eigen::MatrixXd::Constant(bins, static_cast<Eigen::Index>(pts.size()),
                                                std::numeric_limits<double>::quiet_NaN());
  Eigen::VectorXd fy = Eigen::VectorXd::Zero(bins), fx(pts.size());
  int status = kOk;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const auto& p = pts[i];
    fx(static_cast<Eigen::Index>(i)) = p.freq_hz;
    if (p.failed()) {
      status = exit_code(p.error_code);
      continue;
    }
    const auto n = p.power_u1.power.size();
    z.col(static_cast<Eigen::Index>(i)).head(n) = p.power_u1.power;
    if (n == bins) fy = p.power_u1.freq_hz;
    Table t{{"freq_hz", "power"}, Eigen::MatrixXd(n, 2)};
    t.data.col(0) = p.power_u1.freq_hz;
    t.data.col(1) = p.power_u1.power;
    run.table("spectrum_" + tag(p.freq_hz) + "hz.csv", t);
  }
  run.plot("spectrogram.svg", Heatmap{"Power of u1", "drive frequency [Hz]", "frequency [Hz]", true, fx, fy, z});
  return status;
}

int cmd_sweep_ratio(Run& run) {
  const Experiment& e = run.experiment();
  const auto& ratios = e.train_ratios;
  const Eigen::Index nf = static_cast<Eigen::Index>(e.freqs.size()), nr = static_cast<Eigen::Index>(ratios.size());
  const double nan = std::numeric_limits<double>::quiet_NaN();
  std::vector<std::vector<SweepRow>> rows(e.freqs.size());
  std::vector<std::string> errors(e.freqs.size());
  parallel_for(static_cast<int>(nf), e.workers, [&](int i) {
    try {
      const Trajectory tr = simulate(e, e.freqs[i]);
      if (tr.diverged) throw Error(ErrorCode::NumericalFailure, "simulation diverged");
      rows[i] = training_sweep(tr, e.chain, ratios, e.fit);
    } catch (const Error& err) {
      errors[i] = err.what();
    }
  });
  Table t{{"freq_hz", "ratio", "u_error", "phi_error", "diverged", "sigma_k"}, Eigen::MatrixXd(nf * nr, 6)};
  Eigen::MatrixXd eu = Eigen::MatrixXd::Constant(nr, nf, nan), sk = eu;
  bool failed = false, diverged = false;
  for (Eigen::Index i = 0; i < nf; ++i) {
    failed |= !errors[i].empty();
    for (Eigen::Index r = 0; r < nr; ++r) {
      const bool have = static_cast<Eigen::Index>(rows[i].size()) == nr;
      const SweepRow row = have ? rows[i][r] : SweepRow{ratios[r], nan, nan, true, {}};
      const double s = row.sigma.size() >= e.sigma_index ? row.sigma(e.sigma_index - 1) : nan;
      t.data.row(i * nr + r) << e.freqs[i], ratios[r], row.u_error, row.phi_error, row.diverged ? 1.0 : 0.0, s;
      // Diverged cells stay blank in the maps.
      if (!row.diverged) eu(r, i) = row.u_error, sk(r, i) = s;
      diverged |= row.diverged;
    }
  }
  run.table("ratio_sweep.csv", t);
  run.plot("ratio_error.svg", Heatmap{"Held-out u error", "drive frequency [Hz]", "training ratio", true,
                                      Eigen::Map<const Eigen::VectorXd>(e.freqs.data(), nf), to_vector(ratios), eu});
  run.plot("ratio_sigma.svg", Heatmap{"sigma_" + std::to_string(e.sigma_index), "drive frequency [Hz]",
                                      "training ratio", true, Eigen::Map<const Eigen::VectorXd>(e.freqs.data(), nf),
                                      to_vector(ratios), sk});
  if (failed) return kNumericalFailure;
  return diverged ? kDivergence : kOk;
}

int cmd_ingest(Run& run) {
  if (run.options().input.empty()) throw Error(ErrorCode::ConfigError, "ingest needs --input");
  const Trajectory tr = read_trajectory(run.options().input, Units::parse(run.options().length_unit, run.options().angle_unit));
  run.table("trajectory.csv", trajectory_table(tr));
  run.plot("trajectory.svg", displacement_plot("Ingested axial displacement", tr, 4));
  run.note("samples", tr.samples());
  run.note("sample_rate", tr.sample_rate);
  run.note("free_separators", tr.n_free());
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Kresling origami truss simulation, giDMD identification and diagnostics"};
  app.require_subcommand(1);
  Options o;
  app.add_option("--config", o.config_path, "Config file overlaid on the preset");
  app.add_option("--preset", o.preset_name, "Base preset: single5hz, chain or dual");
  app.add_option("--out", o.out, "Output directory");
  app.add_option("--workers", o.workers, "Worker threads for sweeps");
  app.add_option("--seed", o.seed, "Recorded in the manifest; every run is deterministic");
  app.add_option("--format", o.format, "csv, svg or both");
  app.add_option("--set", o.overrides, "Override a key, e.g. --set drive.freq=17");

  struct Sub {
    const char* name;
    const char* help;
    int (*fn)(Run&);
  };
  const Sub subs[] = {
      {"simulate", "Simulate trajectories at every sweep frequency", cmd_simulate},
      {"fit", "Fit giDMD and DMDc models", [](Run& r) { return cmd_fit(r, false); }},
      {"predict", "Fit, roll out and score predictions", [](Run& r) { return cmd_fit(r, true); }},
      {"bands", "Dispersion of the unit cell", cmd_bands},
      {"zak", "Zak phases of band pairs", cmd_zak},
      {"supercell", "Modes of the truncated chain", cmd_supercell},
      {"sweep-freq", "K spectra across drive frequencies", cmd_sweep_freq},
      {"sweep-ratio", "Errors and spectra across training ratios", cmd_sweep_ratio},
      {"spectrogram", "Power spectra of u1 across drive frequencies", cmd_spectrogram},
      {"classify", "Lyapunov exponents, motion regimes and distance correlation", cmd_classify},
      {"ingest", "Convert an external trajectory CSV to SI units", cmd_ingest},
  };
  std::vector<std::pair<CLI::App*, const Sub*>> handles;
  for (const Sub& s : subs) {
    CLI::App* sc = app.add_subcommand(s.name, s.help)->fallthrough();
    if (std::string(s.name) == "fit" || std::string(s.name) == "predict" || std::string(s.name) == "ingest") {
      sc->add_option("--input", o.input, "Trajectory CSV instead of simulation");
      sc->add_option("--length-unit", o.length_unit, "m or mm");
      sc->add_option("--angle-unit", o.angle_unit, "rad or deg");
    }
    handles.emplace_back(sc, &s);
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kConfigError;
  }

  for (auto [sc, s] : handles) {
    if (!sc->parsed()) continue;
    Run run(s->name, o);
    try {
      run.load();
      return run.finish(s->fn(run));
    } catch (const Error& e) {
      return run.finish(exit_code(e.code()), e.what(), to_string(e.code()));
    } catch (const std::exception& e) {
      return run.finish(kNumericalFailure, e.what(), "Internal");
    }
  }
  return kConfigError;
}
