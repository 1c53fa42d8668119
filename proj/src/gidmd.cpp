#include "kresling/gidmd.hpp"
#include "kresling/diagnostics.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <limits>

namespace kresling {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Eigen::VectorXd row_rms(const Eigen::MatrixXd& M) {
  Eigen::VectorXd r(M.rows());
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    const double v = M.cols() ? std::sqrt(M.row(i).squaredNorm() / M.cols()) : 0.0;
    r[i] = v > 0 ? v : 1.0;
  }
  return r;
}

SnapshotSet assemble_window(const Trajectory& traj, const ChainConfig& chain, int begin, int count) {
  if (count < 10) throw Error(ErrorCode::ShortTrajectory, "fewer than 10 snapshots in window");
  if (begin < 0 || begin + count > traj.samples())
    throw Error(ErrorCode::InvalidArgument, "window outside trajectory");
  const TrussSystem sys(chain);
  if (traj.state.cols() != sys.state_dim())
    throw Error(ErrorCode::InvalidArgument, "trajectory does not match chain layout");
  const int n = count - 1;
  SnapshotSet set;
  set.X = traj.state.middleRows(begin, n).transpose();
  set.Xp = traj.state.middleRows(begin + 1, n).transpose();
  set.S = set.Xp - set.X;
  set.Y.resize(control_dim(chain), n);
  for (int c = 0; c < n; ++c)
    control_vector(sys, set.X.col(c), traj.drive.row(begin + c).transpose(), set.Y.col(c));
  set.x_labels = state_labels(chain);
  set.y_labels = control_labels(chain);
  set.dt_snapshot = 1.0 / traj.sample_rate;
  set.t_begin = traj.t[begin];
  set.t_end = traj.t[begin + count - 1];
  return set;
}

int train_count(int samples, double ratio) {
  if (!(ratio > 0) || ratio > 1) throw Error(ErrorCode::InvalidArgument, "train ratio must be in (0, 1]");
  return static_cast<int>(std::lround(ratio * samples));
}

}  // namespace

std::vector<std::string> state_labels(const ChainConfig& chain) {
  std::vector<std::string> out;
  for (int k = 0; k < chain.n_free(); ++k) {
    const std::string s = std::to_string(chain.first_free() + k);
    for (const char* c : {"u", "phi", "v", "w"}) out.push_back(c + s);
  }
  return out;
}

std::vector<std::string> control_labels(const ChainConfig& chain) {
  std::vector<std::string> out{"u0", "phi0", "v0", "w0"};
  for (int c = 0; c < chain.n_cells(); ++c)
    for (const char* f : feature_labels()) out.push_back(std::string(f) + "_" + std::to_string(c + 1));
  out.push_back("const");
  return out;
}

int control_dim(const ChainConfig& chain) { return 4 + kFeaturesPerCell * chain.n_cells() + 1; }

void control_vector(const TrussSystem& sys, const Eigen::Ref<const Eigen::VectorXd>& x,
                    const Eigen::Vector4d& drive, Eigen::Ref<Eigen::VectorXd> y) {
  thread_local std::vector<FoldState<double>> folds;
  sys.fold_states(x, drive, folds);
  y.head<4>() = drive;
  const auto& cells = sys.chain().cells;
  for (std::size_t c = 0; c < folds.size(); ++c)
    y.segment<kFeaturesPerCell>(4 + kFeaturesPerCell * static_cast<int>(c)) =
        control_features(crease_geometry(cells[c], folds[c]));
  y[y.size() - 1] = 1.0;
}

SnapshotSet assemble(const Trajectory& traj, const ChainConfig& chain, double train_ratio) {
  return assemble_window(traj, chain, 0, train_count(traj.samples(), train_ratio));
}

StlsResult stls(const Eigen::MatrixXd& S, const Eigen::MatrixXd& Y, const StlsOptions& opts) {
  if (S.cols() != Y.cols()) throw Error(ErrorCode::InvalidArgument, "S and Y column counts differ");
  if (opts.eta < 0 || opts.max_iter < 1) throw Error(ErrorCode::InvalidArgument, "bad STLS options");
  const Eigen::Index r = S.rows(), l = Y.rows();
  Eigen::VectorXd sy = Eigen::VectorXd::Ones(l), ss = Eigen::VectorXd::Ones(r);
  if (opts.scaling == Scaling::Rms) {
    sy = row_rms(Y);
    ss = row_rms(S);
  }
  const Eigen::MatrixXd Yn = sy.cwiseInverse().asDiagonal() * Y;
  const Eigen::MatrixXd Sn = ss.cwiseInverse().asDiagonal() * S;

  // Every restricted solve runs in the principal subspace Yn^T ~ U_p W.
  Eigen::BDCSVD<Eigen::MatrixXd> svd(Yn.transpose(), Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd& sig = svd.singularValues();
  Eigen::Index p = 0;
  while (p < sig.size() && sig[p] > opts.rcond * sig[0]) ++p;

  StlsResult res;
  res.K_fit = Eigen::MatrixXd::Zero(r, l);
  res.rank_deficient = p < l;
  if (p == 0) {
    res.K = res.K_fit;
    res.iterations = 1;
    for (Eigen::Index i = 0; i < r; ++i) res.empty_rows.push_back(static_cast<int>(i));
    return res;
  }
  const Eigen::MatrixXd Vp = svd.matrixV().leftCols(p);
  const Eigen::MatrixXd W = sig.head(p).asDiagonal() * Vp.transpose();
  const Eigen::MatrixXd Bt = svd.matrixU().leftCols(p).transpose() * Sn.transpose();
  res.K_fit = (Vp * sig.head(p).cwiseInverse().asDiagonal() * Bt).transpose();

  using Mask = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;
  Mask support = Mask::Constant(r, l, true);
  int it = 0;
  while (it < opts.max_iter) {
    ++it;
    const Mask next = support && (res.K_fit.array().abs() >= opts.eta);
    if ((next == support).all()) break;
    const Mask prev = support;
    support = next;
    for (Eigen::Index i = 0; i < r; ++i) {
      if ((support.row(i) == prev.row(i)).all()) continue;
      std::vector<Eigen::Index> cols;
      for (Eigen::Index c = 0; c < l; ++c)
        if (support(i, c)) cols.push_back(c);
      res.K_fit.row(i).setZero();
      if (cols.empty()) continue;
      Eigen::MatrixXd B(p, static_cast<Eigen::Index>(cols.size()));
      for (std::size_t c = 0; c < cols.size(); ++c) B.col(static_cast<Eigen::Index>(c)) = W.col(cols[c]);
      Eigen::BDCSVD<Eigen::MatrixXd> rs(B, Eigen::ComputeThinU | Eigen::ComputeThinV);
      rs.setThreshold(opts.rcond);
      if (rs.rank() < static_cast<Eigen::Index>(cols.size())) res.rank_deficient = true;
      const Eigen::VectorXd k = rs.solve(Bt.col(i));
      for (std::size_t c = 0; c < cols.size(); ++c) res.K_fit(i, cols[c]) = k[static_cast<Eigen::Index>(c)];
    }
  }
  res.iterations = it;
  if (opts.eta > 0) res.K_fit = (res.K_fit.array().abs() >= opts.eta).select(res.K_fit, 0.0);
  for (Eigen::Index i = 0; i < r; ++i)
    if ((res.K_fit.row(i).array() == 0.0).all()) res.empty_rows.push_back(static_cast<int>(i));
  res.K = ss.asDiagonal() * res.K_fit * sy.cwiseInverse().asDiagonal();
  return res;
}

GiDmdModel fit_stls(const SnapshotSet& set, const StlsOptions& opts) {
  const StlsResult r = stls(set.S, set.Y, opts);
  GiDmdModel m;
  m.K = r.K;
  m.K_fit = r.K_fit;
  m.eta = opts.eta;
  m.rcond = opts.rcond;
  m.scaling = opts.scaling;
  m.x_labels = set.x_labels;
  m.y_labels = set.y_labels;
  m.t_train_begin = set.t_begin;
  m.t_train_end = set.t_end;
  m.iterations_used = r.iterations;
  m.rank_deficient = r.rank_deficient;
  return m;
}

std::vector<int> dmdc_state_rows(int state_dim, bool displacement_only) {
  std::vector<int> rows;
  for (int i = 0; i < state_dim; ++i)
    if (!displacement_only || i % 4 < 2) rows.push_back(i);
  return rows;
}

std::vector<int> dmdc_drive_rows(bool displacement_only) {
  return displacement_only ? std::vector<int>{0, 1} : std::vector<int>{0, 1, 2, 3};
}

DmdcModel fit_dmdc(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Xp, const Eigen::MatrixXd& U,
                   int rank_total, int rank_state) {
  if (X.cols() != Xp.cols() || X.cols() != U.cols() || X.rows() != Xp.rows())
    throw Error(ErrorCode::InvalidArgument, "DMDc snapshot shapes differ");
  const Eigen::Index n = X.rows(), q = U.rows(), T = X.cols();
  Eigen::MatrixXd Om(n + q, T);
  Om << X, U;
  Eigen::BDCSVD<Eigen::MatrixXd> svd(Om, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::Index maxp = std::min(n + q, T);
  if (rank_total < 1 || rank_total > maxp) throw Error(ErrorCode::RankTooLarge, "total rank out of range");
  if (rank_state < 0 || rank_state > std::min(n, T))
    throw Error(ErrorCode::RankTooLarge, "state rank out of range");
  const Eigen::Index p = rank_total;
  const Eigen::VectorXd s = svd.singularValues().head(p);
  if (s.minCoeff() <= 0) throw Error(ErrorCode::NumericalFailure, "zero singular value inside rank");
  const Eigen::MatrixXd Ut = svd.matrixU().leftCols(p);
  const Eigen::MatrixXd G = Xp * svd.matrixV().leftCols(p) * s.cwiseInverse().asDiagonal();
  DmdcModel m;
  m.rank_total = rank_total;
  m.A = G * Ut.topRows(n).transpose();
  m.B = G * Ut.bottomRows(q).transpose();
  m.rank_state = rank_state == 0 ? static_cast<int>(n) : rank_state;
  if (m.rank_state < n) {
    Eigen::BDCSVD<Eigen::MatrixXd> out(Xp, Eigen::ComputeThinU);
    const Eigen::MatrixXd Uh = out.matrixU().leftCols(m.rank_state);
    const Eigen::MatrixXd P = Uh * Uh.transpose();
    m.A = P * m.A * P;
    m.B = P * m.B;
  }
  return m;
}

DmdcModel fit_dmdc(const SnapshotSet& set, const DmdcOptions& opts) {
  const auto rows = dmdc_state_rows(static_cast<int>(set.X.rows()), opts.displacement_only);
  const auto drows = dmdc_drive_rows(opts.displacement_only);
  const Eigen::Index T = set.X.cols();
  Eigen::MatrixXd X(rows.size(), T), Xp(rows.size(), T), U(drows.size(), T);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    X.row(static_cast<Eigen::Index>(i)) = set.X.row(rows[i]);
    Xp.row(static_cast<Eigen::Index>(i)) = set.Xp.row(rows[i]);
  }
  for (std::size_t i = 0; i < drows.size(); ++i) U.row(static_cast<Eigen::Index>(i)) = set.Y.row(drows[i]);
  int rank = opts.rank_total;
  if (rank == 0) {
    Eigen::MatrixXd Om(X.rows() + U.rows(), T);
    Om << X, U;
    const Eigen::VectorXd s = Eigen::BDCSVD<Eigen::MatrixXd>(Om).singularValues();
    const double tot = s.squaredNorm();
    double acc = 0;
    rank = 0;
    while (rank < s.size() && acc < opts.energy * tot) acc += s[rank] * s[rank], ++rank;
    rank = std::max(rank, 1);
  }
  DmdcModel m = fit_dmdc(X, Xp, U, rank, opts.rank_state);
  m.displacement_only = opts.displacement_only;
  return m;
}

Rollout rollout(const GiDmdModel& model, const ChainConfig& chain, const Eigen::VectorXd& x0,
                const Eigen::MatrixXd& drive, double bound) {
  const TrussSystem sys(chain);
  const int l = control_dim(chain);
  if (model.K.rows() != sys.state_dim() || model.K.cols() != l || x0.size() != sys.state_dim())
    throw Error(ErrorCode::InvalidArgument, "model does not match chain layout");
  const Eigen::Index T = drive.rows();
  Rollout out;
  out.state = Eigen::MatrixXd::Constant(T, x0.size(), std::numeric_limits<double>::quiet_NaN());
  if (T == 0) return out;
  Eigen::VectorXd x = x0, y(l);
  out.state.row(0) = x.transpose();
  try {
    for (Eigen::Index t = 0; t + 1 < T; ++t) {
      control_vector(sys, x, drive.row(t).transpose(), y);
      x.noalias() += model.K * y;
      if (!x.allFinite() || x.cwiseAbs().maxCoeff() > bound) {
        out.diverged = true;
        out.diverged_step = static_cast<int>(t + 1);
        break;
      }
      out.state.row(t + 1) = x.transpose();
    }
  } catch (const Error&) {
    out.diverged = true;
    for (Eigen::Index t = 0; t < T; ++t)
      if (std::isnan(out.state(t, 0))) {
        out.diverged_step = static_cast<int>(t);
        break;
      }
  }
  return out;
}

Rollout rollout(const DmdcModel& model, const Eigen::VectorXd& x0, const Eigen::MatrixXd& drive,
                double bound) {
  const auto rows = dmdc_state_rows(static_cast<int>(x0.size()), model.displacement_only);
  const auto drows = dmdc_drive_rows(model.displacement_only);
  if (model.A.rows() != static_cast<Eigen::Index>(rows.size()))
    throw Error(ErrorCode::InvalidArgument, "DMDc model does not match state size");
  const Eigen::Index T = drive.rows();
  Rollout out;
  out.state = Eigen::MatrixXd::Zero(T, x0.size());
  Eigen::VectorXd x(rows.size()), d(drows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) x[static_cast<Eigen::Index>(i)] = x0[rows[i]];
  auto store = [&](Eigen::Index t) {
    for (std::size_t i = 0; i < rows.size(); ++i) out.state(t, rows[i]) = x[static_cast<Eigen::Index>(i)];
  };
  if (T == 0) return out;
  store(0);
  for (Eigen::Index t = 0; t + 1 < T; ++t) {
    for (std::size_t i = 0; i < drows.size(); ++i) d[static_cast<Eigen::Index>(i)] = drive(t, drows[i]);
    x = model.A * x + model.B * d;
    if (!x.allFinite() || x.cwiseAbs().maxCoeff() > bound) {
      out.diverged = true;
      out.diverged_step = static_cast<int>(t + 1);
      out.state.bottomRows(T - t - 1).setConstant(std::numeric_limits<double>::quiet_NaN());
      break;
    }
    store(t + 1);
  }
  return out;
}

double relative_error(const Eigen::MatrixXd& truth, const Eigen::MatrixXd& pred) {
  if (truth.rows() != pred.rows() || truth.cols() != pred.cols())
    throw Error(ErrorCode::InvalidArgument, "series lengths differ");
  const double ref = truth.norm();
  if (!(ref > 0)) throw Error(ErrorCode::ZeroReference, "reference series has zero norm");
  if (!pred.allFinite()) return kInf;
  return (truth - pred).norm() / ref;
}

ChannelErrors channel_errors(const Eigen::MatrixXd& truth, const Eigen::MatrixXd& pred, int begin,
                             int end) {
  const int nf = static_cast<int>(truth.cols() / 4);
  const int len = end - begin;
  Eigen::MatrixXd tu(len, nf), pu(len, nf), tp(len, nf), pp(len, nf);
  for (int k = 0; k < nf; ++k) {
    tu.col(k) = truth.block(begin, 4 * k, len, 1);
    pu.col(k) = pred.block(begin, 4 * k, len, 1);
    tp.col(k) = truth.block(begin, 4 * k + 1, len, 1);
    pp.col(k) = pred.block(begin, 4 * k + 1, len, 1);
  }
  ChannelErrors e;
  e.u = relative_error(tu, pu);
  e.phi = tp.norm() > 0 ? relative_error(tp, pp) : (pp.allFinite() ? 0.0 : kInf);
  e.diverged = !std::isfinite(e.u) || !std::isfinite(e.phi);
  return e;
}

FitReport fit_predict(const Trajectory& traj, const ChainConfig& chain, double train_ratio,
                      const FitSettings& settings) {
  const int T = traj.samples();
  const int ntr = train_count(T, train_ratio);
  if (ntr < 10) throw Error(ErrorCode::ShortTrajectory, "fewer than 10 snapshots in window");
  const double bound = settings.bound_factor * traj.state.topRows(ntr).cwiseAbs().maxCoeff();

  FitReport rep;
  rep.n_train = ntr;
  StlsOptions chosen = settings.stls;
  if (settings.auto_select) {
    const int nv = static_cast<int>(std::lround((1.0 - settings.validation_fraction) * ntr));
    const SnapshotSet vset = assemble_window(traj, chain, 0, nv);
    const int vlen = ntr - nv + 1;
    const Eigen::MatrixXd vdrive = traj.drive.middleRows(nv - 1, vlen);
    const Eigen::MatrixXd vtruth = traj.state.middleRows(nv - 1, vlen);
    double best = kInf;
    bool found = false;
    for (double rc : settings.rcond_grid) {
      StlsOptions o = settings.stls;
      o.rcond = rc;
      o.eta = 0.0;
      GiDmdModel m = fit_stls(vset, o);
      const double kmax = m.K_fit.cwiseAbs().maxCoeff();
      std::vector<double> etas{0.0};
      for (int i = 0; i < settings.eta_points; ++i) {
        const double f = settings.eta_points > 1 ? double(i) / (settings.eta_points - 1) : 0.0;
        etas.push_back(kmax * settings.eta_low * std::pow(settings.eta_high / settings.eta_low, f));
      }
      for (double eta : etas) {
        if (eta > 0) {
          o.eta = eta;
          m = fit_stls(vset, o);
        }
        const Rollout r = rollout(m, chain, vtruth.row(0).transpose(), vdrive, bound);
        double score = kInf;
        if (!r.diverged) {
          const ChannelErrors e = channel_errors(vtruth, r.state, 1, vlen);
          score = e.u + e.phi;
        }
        rep.trials.push_back({eta, rc, score});
        if (score < best) {
          best = score;
          chosen.eta = eta;
          chosen.rcond = rc;
          found = true;
        }
      }
    }
    if (!found) {
      chosen.eta = 0.0;
      chosen.rcond = settings.rcond_grid.empty() ? settings.stls.rcond : settings.rcond_grid.front();
    }
  }
  const SnapshotSet set = assemble_window(traj, chain, 0, ntr);
  rep.model = fit_stls(set, chosen);
  rep.prediction = rollout(rep.model, chain, traj.state.row(0).transpose(), traj.drive, bound);
  const int begin = ntr < T ? ntr : 0;
  rep.held_out = channel_errors(traj.state, rep.prediction.state, begin, T);
  rep.held_out.diverged = rep.held_out.diverged || rep.prediction.diverged;
  return rep;
}

DmdcReport dmdc_predict(const Trajectory& traj, double train_ratio, const DmdcOptions& opts,
                        double bound_factor) {
  const int T = traj.samples();
  const int ntr = train_count(T, train_ratio);
  if (ntr < 10) throw Error(ErrorCode::ShortTrajectory, "fewer than 10 snapshots in window");
  SnapshotSet set;
  set.X = traj.state.topRows(ntr - 1).transpose();
  set.Xp = traj.state.middleRows(1, ntr - 1).transpose();
  set.Y = traj.drive.topRows(ntr - 1).transpose();
  DmdcReport rep;
  rep.model = fit_dmdc(set, opts);
  const double bound = bound_factor * traj.state.topRows(ntr).cwiseAbs().maxCoeff();
  rep.prediction = rollout(rep.model, traj.state.row(0).transpose(), traj.drive, bound);
  const int begin = ntr < T ? ntr : 0;
  rep.held_out = channel_errors(traj.state, rep.prediction.state, begin, T);
  rep.held_out.diverged = rep.held_out.diverged || rep.prediction.diverged;
  return rep;
}

std::vector<SweepRow> training_sweep(const Trajectory& traj, const ChainConfig& chain,
                                     const std::vector<double>& ratios,
                                     const FitSettings& settings) {
  std::vector<SweepRow> rows;
  for (double r : ratios) {
    SweepRow row;
    row.ratio = r;
    try {
      const FitReport rep = fit_predict(traj, chain, r, settings);
      row.u_error = rep.held_out.u;
      row.phi_error = rep.held_out.phi;
      row.diverged = rep.held_out.diverged;
      row.sigma = singular_spectrum(rep.model.K).sigma;
    } catch (const Error&) {
      row.u_error = row.phi_error = kInf;
      row.diverged = true;
    }
    rows.push_back(row);
  }
  return rows;
}

}  // namespace kresling
