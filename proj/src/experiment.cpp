#include "kresling/experiment.hpp"

#include <cmath>
#include <numbers>
#include <set>

namespace kresling {

namespace {

[[noreturn]] void bad(const std::string& key, const std::string& what) {
  throw Error(ErrorCode::ConfigError, "key '" + key + "': " + what);
}

Boundary boundary_of(const Config& c, const std::string& key, const std::string& fallback) {
  const std::string v = c.str(key, fallback);
  if (v == "fixed") return Boundary::Fixed;
  if (v == "free") return Boundary::Free;
  bad(key, "expected fixed or free, got '" + v + "'");
}

double positive(const Config& c, const std::string& key, double fallback) {
  const double v = c.num(key, fallback);
  if (!(v > 0)) bad(key, "must be positive");
  return v;
}

double non_negative(const Config& c, const std::string& key, double fallback) {
  const double v = c.num(key, fallback);
  if (!(v >= 0)) bad(key, "must be non-negative");
  return v;
}

double ratio(const std::string& key, double v) {
  if (!(v > 0 && v <= 1)) bad(key, "ratio must lie in (0, 1]");
  return v;
}

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys = {
    "damping.beta", "design.h0", "design.theta0_deg", "design.R", "design.N", "design.m",
    "design.j", "design.ka", "design.kb", "design.kpsi", "diagnostics.delay",
    "diagnostics.embed_dim", "diagnostics.fit_fraction", "diagnostics.horizon",
    "diagnostics.margin_log10", "diagnostics.mean_period", "diagnostics.sigma_index",
    "diagnostics.spectrum_window", "diagnostics.thresholds", "dmdc.energy", "dmdc.rank_state",
    "dmdc.rank_total", "dmdc.state", "drive.freq", "drive.phase", "drive.phi_amp", "drive.u_amp",
    "gidmd.bound_factor", "gidmd.eta", "gidmd.eta_points", "gidmd.max_iter", "gidmd.rcond_grid",
    "gidmd.scaling", "gidmd.train_ratio", "gidmd.train_ratios", "gidmd.validation_fraction",
    "integrator.bound", "integrator.dt", "integrator.sample_rate", "integrator.start",
    "integrator.t_end", "integrator.t_settle", "linear.n_k", "linear.supercell_boundary",
    "linear.supercell_cells", "output.format", "run.seed", "run.workers", "structure.cells",
    "structure.chirality", "structure.far_boundary", "structure.kind", "sweep.freqs"};
  return keys;
}

}  // namespace

Experiment make_experiment(const Config& c) {
  for (const auto& [key, value] : c.values())
    if (!known_keys().count(key)) bad(key, "unknown key");
  Experiment e;
  e.kind = c.str("structure.kind", "single");

  const Design ref = table_design();
  e.base = {positive(c, "design.h0", ref.h0),
            c.num("design.theta0_deg", 70.0) * std::numbers::pi / 180.0,
            positive(c, "design.R", ref.R),
            c.integer("design.N", ref.N),
            positive(c, "design.m", ref.m),
            positive(c, "design.j", ref.j),
            positive(c, "design.ka", ref.ka),
            positive(c, "design.kb", ref.kb),
            positive(c, "design.kpsi", ref.kpsi)};
  if (!e.base.valid()) throw Error(ErrorCode::ConfigError, "design parameters are not a valid cell");

  int cells = 1;
  std::string far = "free";
  if (e.kind == "chain") {
    cells = 32;
    far = "fixed";
  } else if (e.kind == "dual") {
    cells = 2;
  } else if (e.kind != "single") {
    bad("structure.kind", "expected single, chain or dual");
  }
  cells = c.integer("structure.cells", cells);
  if (cells < 1) bad("structure.cells", "must be at least 1");
  const Damping damping = proportional_damping(e.base, non_negative(c, "damping.beta", 0.0));
  e.chain = alternating_chain(e.base, cells, boundary_of(c, "structure.far_boundary", far), damping);
  const std::string chirality = c.str("structure.chirality", "alternate");
  if (chirality == "uniform") {
    for (auto& d : e.chain.cells) d = e.base;
  } else if (chirality != "alternate") {
    bad("structure.chirality", "expected alternate or uniform");
  }
  e.chain.validate();

  e.drive.u_amp = c.num("drive.u_amp", 1e-3);
  e.drive.phi_amp = c.num("drive.phi_amp", 0.0);
  e.drive.freq = positive(c, "drive.freq", 5.0);
  e.drive.phase = c.num("drive.phase", 0.0);

  e.integrate.dt = positive(c, "integrator.dt", 1e-5);
  e.integrate.sample_rate = positive(c, "integrator.sample_rate", 240.0);
  e.integrate.t_settle = non_negative(c, "integrator.t_settle", 0.0);
  e.integrate.bound = positive(c, "integrator.bound", 1e3);
  e.t_end = positive(c, "integrator.t_end", 5.0);
  const std::string start = c.str("integrator.start", "rest");
  if (start != "rest" && start != "periodic") bad("integrator.start", "expected rest or periodic");
  e.periodic_start = start == "periodic";

  e.freqs = c.list("sweep.freqs", {e.drive.freq});
  for (double f : e.freqs)
    if (!(f > 0)) bad("sweep.freqs", "frequencies must be positive");

  e.train_ratio = ratio("gidmd.train_ratio", c.num("gidmd.train_ratio", 0.6));
  e.train_ratios = c.list("gidmd.train_ratios", {e.train_ratio});
  for (double r : e.train_ratios) ratio("gidmd.train_ratios", r);

  const std::string scaling = c.str("gidmd.scaling", "none");
  if (scaling == "rms")
    e.fit.stls.scaling = Scaling::Rms;
  else if (scaling != "none")
    bad("gidmd.scaling", "expected none or rms");
  const std::string eta = c.str("gidmd.eta", "auto");
  e.fit.auto_select = eta == "auto";
  if (!e.fit.auto_select) e.fit.stls.eta = non_negative(c, "gidmd.eta", 0.0);
  e.fit.rcond_grid = c.list("gidmd.rcond_grid", {1e-10});
  if (e.fit.rcond_grid.empty()) bad("gidmd.rcond_grid", "must not be empty");
  for (double r : e.fit.rcond_grid)
    if (!(r > 0 && r < 1)) bad("gidmd.rcond_grid", "cutoffs must lie in (0, 1)");
  e.fit.stls.rcond = e.fit.rcond_grid.front();
  e.fit.stls.max_iter = c.integer("gidmd.max_iter", 10);
  if (e.fit.stls.max_iter < 1) bad("gidmd.max_iter", "must be at least 1");
  e.fit.eta_points = c.integer("gidmd.eta_points", 10);
  if (e.fit.eta_points < 1) bad("gidmd.eta_points", "must be at least 1");
  e.fit.validation_fraction = c.num("gidmd.validation_fraction", 0.2);
  if (!(e.fit.validation_fraction > 0 && e.fit.validation_fraction < 1))
    bad("gidmd.validation_fraction", "must lie in (0, 1)");
  e.fit.bound_factor = positive(c, "gidmd.bound_factor", 1e3);

  const std::string state = c.str("dmdc.state", "displacement");
  if (state != "displacement" && state != "full") bad("dmdc.state", "expected displacement or full");
  e.dmdc.displacement_only = state == "displacement";
  e.dmdc.rank_total = c.integer("dmdc.rank_total", 0);
  e.dmdc.rank_state = c.integer("dmdc.rank_state", 0);
  if (e.dmdc.rank_total < 0 || e.dmdc.rank_state < 0) bad("dmdc.rank_total", "ranks must be non-negative");
  e.dmdc.energy = c.num("dmdc.energy", 0.9999);
  if (!(e.dmdc.energy > 0 && e.dmdc.energy <= 1)) bad("dmdc.energy", "must lie in (0, 1]");

  e.n_k = c.integer("linear.n_k", 201);
  if (e.n_k < 3) bad("linear.n_k", "must be at least 3");
  e.supercell_cells = c.integer("linear.supercell_cells", 16);
  if (e.supercell_cells < 1) bad("linear.supercell_cells", "must be at least 1");
  e.supercell_boundary = boundary_of(c, "linear.supercell_boundary", "fixed");

  e.lyapunov.embed_dim = c.integer("diagnostics.embed_dim", 3);
  e.lyapunov.delay = c.integer("diagnostics.delay", 0);
  e.lyapunov.mean_period = c.integer("diagnostics.mean_period", 0);
  e.lyapunov.horizon = c.integer("diagnostics.horizon", 0);
  e.lyapunov.fit_fraction = c.num("diagnostics.fit_fraction", 0.2);
  if (e.lyapunov.embed_dim < 1 || e.lyapunov.delay < 0 || e.lyapunov.mean_period < 0 ||
      e.lyapunov.horizon < 0 || !(e.lyapunov.fit_fraction > 0 && e.lyapunov.fit_fraction <= 1))
    bad("diagnostics", "invalid Lyapunov settings");
  e.sigma_index = c.integer("diagnostics.sigma_index", 2);
  if (e.sigma_index < 1) bad("diagnostics.sigma_index", "must be at least 1");
  const std::string th = c.str("diagnostics.thresholds", "auto");
  if (th != "auto") {
    const auto cuts = c.list("diagnostics.thresholds");
    if (cuts.size() != 2 || !(cuts[0] > 0) || !(cuts[0] < cuts[1]))
      bad("diagnostics.thresholds", "expected auto or two increasing positive cut points");
    e.thresholds = Thresholds{cuts[0], cuts[1], c.num("diagnostics.margin_log10", 0.0)};
  }
  const std::string window = c.str("diagnostics.spectrum_window", "none");
  if (window != "none" && window != "hann") bad("diagnostics.spectrum_window", "expected none or hann");
  e.spectrum.hann = window == "hann";

  const int seed = c.integer("run.seed", 0);
  if (seed < 0) bad("run.seed", "must be non-negative");
  e.seed = static_cast<unsigned>(seed);
  e.workers = c.integer("run.workers", 1);
  if (e.workers < 1) bad("run.workers", "must be at least 1");
  return e;
}

Trajectory simulate(const Experiment& e, double freq) {
  Drive drive = e.drive;
  drive.freq = freq;
  IntegrateOptions opts = e.integrate;
  if (e.periodic_start) {
    const PeriodicOrbitResult orbit = periodic_orbit(e.chain, drive, opts.dt);
    if (!orbit.converged)
      throw Error(ErrorCode::NumericalFailure, "periodic orbit search did not converge");
    opts.x0 = orbit.x0;
  }
  return integrate(e.chain, drive, e.t_end, opts);
}

LinearCoefficients unit_cell_coefficients(const Experiment& e) {
  return linearize(e.base, e.base.mirrored());
}

std::vector<FrequencyPoint> sweep_frequencies(const Experiment& e, const SweepOptions& opts) {
  std::vector<FrequencyPoint> out(e.freqs.size());
  parallel_for(static_cast<int>(out.size()), e.workers, [&](int i) {
    FrequencyPoint& p = out[i];
    p.freq_hz = e.freqs[i];
    try {
      const Trajectory traj = simulate(e, p.freq_hz);
      p.simulation_diverged = traj.diverged;
      p.fit = fit_predict(traj, e.chain, e.train_ratio, e.fit);
      p.spectrum = singular_spectrum(p.fit.model.K, p.freq_hz, e.train_ratio);
      const Eigen::MatrixXd u = traj.channel(0);
      if (opts.power) p.power_u1 = power_spectrum(u.col(0), traj.sample_rate, e.spectrum);
      if (opts.lyapunov) {
        p.lambda_u1 = lyapunov_rosenstein(u.col(0), e.lyapunov).per_second(traj.sample_rate);
        if (u.cols() > 1)
          p.lambda_u2 = lyapunov_rosenstein(u.col(1), e.lyapunov).per_second(traj.sample_rate);
      }
    } catch (const Error& err) {
      p.error = err.what();
      p.error_code = err.code();
    }
  });
  return out;
}

}  // namespace kresling
