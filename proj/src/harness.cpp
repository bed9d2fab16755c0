#include "relpose/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "relpose/parallel.hpp"

namespace relpose {

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

Pose2 rk4_unicycle(const Pose2& p, const OdometryInput& u, double dt) {
  auto f = [&](const Eigen::Vector3d& x) {
    return Eigen::Vector3d(u.v * std::cos(x(2)), u.v * std::sin(x(2)), u.w);
  };
  const Eigen::Vector3d x0 = p.vec();
  const Eigen::Vector3d k1 = f(x0);
  const Eigen::Vector3d k2 = f(x0 + 0.5 * dt * k1);
  const Eigen::Vector3d k3 = f(x0 + 0.5 * dt * k2);
  const Eigen::Vector3d k4 = f(x0 + dt * k3);
  const Eigen::Vector3d xn = x0 + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4);
  return Pose2(xn(0), xn(1), xn(2));
}

std::vector<Channel> case_channels(int case_id) {
  switch (case_id) {
    case 1: return {Channel::Range};
    case 2: return {Channel::Bearing};
    case 3: return {Channel::Range, Channel::Bearing};
    case 4: return {Channel::Range, Channel::Bearing};
  }
  throw std::invalid_argument("case_id must be 1..4");
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

void ScenarioConfig::validate() const {
  if (!(duration > 0.0) || !(dt > 0.0))
    throw std::invalid_argument("ScenarioConfig: duration and dt must be > 0");
  if (case_id < 1 || case_id > 4)
    throw std::invalid_argument("ScenarioConfig: case_id must be 1..4");
  if (!(outlier_ratio >= 0.0 && outlier_ratio <= 0.5))
    throw std::invalid_argument("ScenarioConfig: outlier_ratio in [0, 0.5]");
  noise.validate();
}

ScenarioConfig preset(const std::string& name) {
  ScenarioConfig c;
  c.name = name;
  if (name == "sim-circles") {
    // Two concentric circles, radii v/w = 2.0 m and 0.4/0.09 = 4.44 m
    // (the latter is usually quoted as "4 m"); common center (0, 2).
    c.ego_profile = InputProfile::constant(0.2, 0.1);
    c.neighbor_profile = InputProfile::constant(0.4, 0.09);
    c.ego_start = Pose2(0.0, 0.0, 0.0);
    c.neighbor_start = Pose2(0.0, 2.0 - 0.4 / 0.09, 0.0);
    c.case_id = 3;
    return c;
  }
  if (name == "hw-1" || name == "hw-2") {
    // Concentric circles, radii 1.5 m and 2.0 m, center (0, 1.5).
    c.ego_profile = InputProfile::constant(0.15, 0.1);
    c.neighbor_profile = InputProfile::constant(0.2, 0.1);
    if (name == "hw-2") {
      // Speeds vary over time; the exact schedule is a sinusoidal stand-in.
      c.neighbor_profile.v_amp = 0.1;
      c.neighbor_profile.v_freq = 0.2;
      c.ego_profile.v_amp = 0.075;
      c.ego_profile.v_freq = 0.2;
    }
    c.ego_start = Pose2(0.0, 0.0, 0.0);
    c.neighbor_start = Pose2(0.0, -0.5, 0.0);
    c.case_id = 4;
    return c;
  }
  if (name == "hw-3" || name == "hw-4") {
    // Neighbor circles with radius 0.8 m around (0, 0.8); the ego robot sits
    // outside the circle, stationary (hw-3) or rocking toward its center
    // (hw-4).
    c.neighbor_profile = InputProfile::constant(0.08, 0.1);
    c.neighbor_start = Pose2(0.0, 0.0, 0.0);
    const double heading = std::atan2(0.8 - 0.0, 0.0 - 2.5);
    c.ego_start = Pose2(2.5, 0.0, heading);
    c.ego_profile = InputProfile::constant(0.0, 0.0);
    if (name == "hw-4") {
      c.ego_profile.v_amp = 0.15;
      c.ego_profile.v_freq = 0.2;
    }
    c.case_id = 4;
    return c;
  }
  throw std::invalid_argument("unknown preset: " + name);
}

std::vector<std::string> preset_names() {
  return {"sim-circles", "hw-1", "hw-2", "hw-3", "hw-4"};
}

Scenario generate_scenario(const ScenarioConfig& cfg) {
  cfg.validate();
  const int T = cfg.ticks();
  if (T < 1) throw std::invalid_argument("generate_scenario: empty run");

  Scenario sc;
  sc.times.resize(T + 1);
  sc.ego_truth.resize(T + 1);
  sc.neighbor_truth.resize(T + 1);
  sc.rel_truth.resize(T + 1);
  sc.neighbor_vel_truth.resize(T + 1);

  sc.ego_truth[0] = cfg.ego_start;
  sc.neighbor_truth[0] = cfg.neighbor_start;
  for (int k = 0; k <= T; ++k) {
    const double t = k * cfg.dt;
    sc.times[k] = t;
    if (k > 0) {
      const double t_prev = (k - 1) * cfg.dt;
      sc.ego_truth[k] = rk4_unicycle(sc.ego_truth[k - 1],
                                     cfg.ego_profile.at(t_prev), cfg.dt);
      sc.neighbor_truth[k] = rk4_unicycle(
          sc.neighbor_truth[k - 1], cfg.neighbor_profile.at(t_prev), cfg.dt);
    }
    const Eigen::Vector3d m =
        measure_relative(sc.ego_truth[k], sc.neighbor_truth[k]);
    sc.rel_truth[k] = polar_to_cart(m);
    const OdometryInput uj = cfg.neighbor_profile.at(t);
    sc.neighbor_vel_truth[k] = Eigen::Vector2d(uj.v, uj.w);
  }

  const auto chans = case_channels(cfg.case_id);
  const bool odom_comm = cfg.case_id != 4;
  for (int k = 0; k <= T; ++k) {
    const double t = sc.times[k];
    if (odom_comm && k < T) {
      MeasurementSample s;
      s.t = t;
      s.kind = MeasKind::OdomComm;
      s.value1 = sc.neighbor_vel_truth[k](0);
      s.value2 = sc.neighbor_vel_truth[k](1);
      s.sigma = cfg.noise.sigma_v;
      sc.clean_measurements.push_back(s);
    }
    if (k == 0) continue;
    const Eigen::Vector3d m =
        measure_relative(sc.ego_truth[k], sc.neighbor_truth[k]);
    for (Channel ch : chans) {
      MeasurementSample s;
      s.t = t;
      switch (ch) {
        case Channel::Range:
          s.kind = MeasKind::Range;
          s.value1 = m(0);
          s.sigma = cfg.noise.sigma_range;
          break;
        case Channel::Bearing:
          s.kind = MeasKind::Bearing;
          s.value1 = m(1);
          s.sigma = cfg.noise.sigma_bearing;
          break;
        case Channel::Orientation:
          s.kind = MeasKind::Orientation;
          s.value1 = m(2);
          s.sigma = cfg.noise.sigma_orientation;
          break;
      }
      sc.clean_measurements.push_back(s);
    }
  }

  sc.clean_inputs.resize(T);
  for (int k = 0; k < T; ++k)
    sc.clean_inputs[k] = {sc.times[k], cfg.ego_profile.at(sc.times[k])};
  return sc;
}

Rmse rmse(const std::vector<Eigen::Vector3d>& est,
          const std::vector<Eigen::Vector3d>& truth,
          const std::vector<Eigen::Vector2d>* est_vel,
          const std::vector<Eigen::Vector2d>* truth_vel) {
  if (est.size() != truth.size() || est.empty())
    throw std::invalid_argument("rmse: trajectory length mismatch");
  double sx = 0, sy = 0, sth = 0;
  for (std::size_t k = 0; k < est.size(); ++k) {
    const double ex = est[k](0) - truth[k](0);
    const double ey = est[k](1) - truth[k](1);
    const double et = wrap_angle(est[k](2) - truth[k](2));
    sx += ex * ex;
    sy += ey * ey;
    sth += et * et;
  }
  const double n = static_cast<double>(est.size());
  Rmse r;
  r.x = std::sqrt(sx / n);
  r.y = std::sqrt(sy / n);
  r.theta = std::sqrt(sth / n);
  r.total = std::sqrt((sx + sy + sth) / n);
  if (est_vel && truth_vel) {
    if (est_vel->size() != truth_vel->size() || est_vel->empty())
      throw std::invalid_argument("rmse: velocity length mismatch");
    double sv = 0, sw = 0;
    for (std::size_t k = 0; k < est_vel->size(); ++k) {
      sv += std::pow((*est_vel)[k](0) - (*truth_vel)[k](0), 2);
      sw += std::pow((*est_vel)[k](1) - (*truth_vel)[k](1), 2);
    }
    r.v = std::sqrt(sv / static_cast<double>(est_vel->size()));
    r.w = std::sqrt(sw / static_cast<double>(est_vel->size()));
  }
  return r;
}

namespace {

struct EstimatorInit {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
  Eigen::VectorXd sigma_w;
};

// Shared initialization for EKF and PGO: ego pose known at start, relative
// block offset from truth with a matching loose covariance, neighbor
// velocities (case 4) start at zero with unit variance.
EstimatorInit default_init(const ScenarioConfig& cfg, const Scenario& sc) {
  const MotionCase mc = cfg.case_id == 4 ? MotionCase::M2 : MotionCase::M1;
  const int n = state_dim(mc);
  EstimatorInit out;
  out.mean = Eigen::VectorXd::Zero(n);
  out.mean.head<3>() = sc.ego_truth[0].vec();
  Eigen::Vector3d rel = sc.rel_truth[0] + Eigen::Vector3d(0.5, -0.5, 0.3);
  if (cfg.coord == Coord::Polar) rel = cart_to_polar(rel);
  out.mean.segment<3>(3) = rel;

  Eigen::VectorXd sd(n);
  sd.head<3>() = Eigen::Vector3d::Constant(1e-3);
  sd.segment<3>(3) = Eigen::Vector3d(1.0, 1.0, 0.5);
  if (mc == MotionCase::M2) sd.tail<2>() = Eigen::Vector2d(1.0, 1.0);
  out.cov = sd.cwiseProduct(sd).asDiagonal();

  out.sigma_w = Eigen::VectorXd::Constant(n, 1e-3);
  if (mc == MotionCase::M2) out.sigma_w.tail<2>().setConstant(2e-3);
  return out;
}

double floored(double sigma) { return std::max(sigma, 1e-4); }

std::vector<TimedInput> noisy_inputs(const Scenario& sc,
                                     const ScenarioConfig& cfg) {
  Rng rng = make_rng(cfg.seed, 0x65676fULL);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<TimedInput> out = sc.clean_inputs;
  for (auto& in : out) {
    in.ego.v += cfg.noise.sigma_v * gauss(rng);
    in.ego.w += cfg.noise.sigma_w * gauss(rng);
  }
  return out;
}

}  // namespace

RunResult run_experiment(const ScenarioConfig& cfg) {
  cfg.validate();
  const Scenario sc = generate_scenario(cfg);

  NoiseConfig noise = cfg.noise;
  noise.seed = cfg.seed;
  std::vector<MeasurementSample> meas =
      inject_noise(sc.clean_measurements, noise);
  if (cfg.outlier_ratio > 0.0)
    meas = inject_outliers(meas, cfg.outlier_ratio,
                           mix_seed(cfg.seed, 0xa11ceULL));
  const std::vector<TimedInput> inputs = noisy_inputs(sc, cfg);

  const EstimatorInit init = default_init(cfg, sc);
  const int T = cfg.ticks();

  RunResult rr;
  rr.config = cfg;
  rr.times = sc.times;
  rr.truth_rel = sc.rel_truth;
  rr.truth_vel = sc.neighbor_vel_truth;

  const auto t0 = std::chrono::steady_clock::now();
  if (cfg.estimator.kind == EstimatorSpec::Kind::EKF) {
    EkfConfig ec;
    ec.case_id = cfg.case_id;
    ec.coord = cfg.coord;
    ec.sigma_w = init.sigma_w;
    ec.sigma_v_range = floored(cfg.noise.sigma_range);
    ec.sigma_v_bearing = floored(cfg.noise.sigma_bearing);
    ec.sigma_v_orientation = floored(cfg.noise.sigma_orientation);
    ec.init_mean = init.mean;
    ec.init_cov = init.cov;
    rr.beliefs = run_filter(inputs, meas, cfg.dt, ec);
    for (const auto& b : rr.beliefs) {
      rr.est_rel.push_back(rel_cartesian(b.mean));
      rr.est_ego.push_back(b.mean.ego());
      if (cfg.case_id == 4) rr.est_vel.push_back(b.mean.vel());
    }
  } else {
    PgoConfig pc;
    pc.case_id = cfg.case_id;
    pc.coord = cfg.coord;
    pc.sigma_w = init.sigma_w;
    pc.sigma_v_range = floored(cfg.noise.sigma_range);
    pc.sigma_v_bearing = floored(cfg.noise.sigma_bearing);
    pc.sigma_v_orientation = floored(cfg.noise.sigma_orientation);
    pc.prior_mean = init.mean;
    pc.prior_cov = init.cov;

    WindowStrategy strat;
    strat.kind = cfg.estimator.strategy;
    strat.window_size = cfg.estimator.window_size;
    SolverConfig solver;
    const StreamEstimate se = estimate_stream(
        meas, inputs, cfg.dt, pc, strat, cfg.estimator.kernel, solver);
    const MotionCase mc = pc.motion_case();
    for (const auto& x : se.trajectory) {
      const AugmentedState s(mc, cfg.coord, x);
      rr.est_rel.push_back(rel_cartesian(s));
      rr.est_ego.push_back(s.ego());
      if (cfg.case_id == 4) rr.est_vel.push_back(s.vel());
    }
  }
  rr.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();

  (void)T;
  if (cfg.case_id == 4)
    rr.error = rmse(rr.est_rel, rr.truth_rel, &rr.est_vel, &rr.truth_vel);
  else
    rr.error = rmse(rr.est_rel, rr.truth_rel);
  return rr;
}

double median_total_rmse(const ScenarioConfig& cfg, int n_seeds, int threads) {
  std::vector<double> totals(n_seeds);
  parallel::for_each_index(
      static_cast<std::size_t>(n_seeds),
      [&](std::size_t i) {
        ScenarioConfig c = cfg;
        c.seed = mix_seed(cfg.seed, 0x5eedULL + i);
        totals[i] = run_experiment(c).error.total;
      },
      threads);
  return median(totals);
}

std::vector<SweepCell> sweep_outliers(const ScenarioConfig& base,
                                      const std::vector<double>& ratios,
                                      const std::vector<RobustKernel>& kernels,
                                      int n_seeds, int threads) {
  for (double r : ratios)
    if (!(r >= 0.0 && r <= 0.5))
      throw std::invalid_argument("sweep_outliers: ratios in [0, 0.5]");

  const std::size_t n_cells = ratios.size() * kernels.size();
  const std::size_t n_runs = n_cells * static_cast<std::size_t>(n_seeds);
  std::vector<Rmse> results(n_runs);

  parallel::for_each_index(
      n_runs,
      [&](std::size_t idx) {
        const std::size_t cell = idx / n_seeds;
        const std::size_t seed_idx = idx % n_seeds;
        ScenarioConfig c = base;
        c.outlier_ratio = ratios[cell / kernels.size()];
        c.estimator.kind = EstimatorSpec::Kind::PGO;
        c.estimator.kernel = kernels[cell % kernels.size()];
        c.seed = mix_seed(base.seed, 0x5eedULL + seed_idx);
        results[idx] = run_experiment(c).error;
      },
      threads);

  std::vector<SweepCell> cells;
  for (std::size_t cell = 0; cell < n_cells; ++cell) {
    SweepCell sc{ratios[cell / kernels.size()],
                 kernels[cell % kernels.size()],
                 {},
                 n_seeds};
    std::vector<double> xs, ys, ths, tot;
    for (int s = 0; s < n_seeds; ++s) {
      const Rmse& r = results[cell * n_seeds + s];
      xs.push_back(r.x);
      ys.push_back(r.y);
      ths.push_back(r.theta);
      tot.push_back(r.total);
    }
    sc.median_error.x = median(xs);
    sc.median_error.y = median(ys);
    sc.median_error.theta = median(ths);
    sc.median_error.total = median(tot);
    cells.push_back(sc);
  }
  return cells;
}

// ---- file formats ----------------------------------------------------

void write_trajectory_csv(const std::string& path,
                          const std::vector<double>& times,
                          const std::vector<Eigen::Vector3d>& ego,
                          const std::vector<Eigen::Vector3d>& rel,
                          const std::vector<Eigen::Vector2d>* vel) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open " + path);
  f << "t,x_i,y_i,th_i,x_ji,y_ji,th_ji";
  if (vel) f << ",v_j,w_j";
  f << '\n';
  for (std::size_t k = 0; k < times.size(); ++k) {
    f << fmt(times[k]);
    for (int i = 0; i < 3; ++i) f << ',' << fmt(ego[k](i));
    for (int i = 0; i < 3; ++i) f << ',' << fmt(rel[k](i));
    if (vel) for (int i = 0; i < 2; ++i) f << ',' << fmt((*vel)[k](i));
    f << '\n';
  }
}

TrajectoryCsv read_trajectory_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open " + path);
  std::string line;
  std::getline(f, line);
  const bool has_vel = line.find("v_j") != std::string::npos;
  TrajectoryCsv out;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string field;
    std::vector<double> v;
    while (std::getline(ss, field, ',')) v.push_back(std::stod(field));
    out.times.push_back(v[0]);
    out.ego.emplace_back(v[1], v[2], v[3]);
    out.rel.emplace_back(v[4], v[5], v[6]);
    if (has_vel) out.vel.emplace_back(v[7], v[8]);
  }
  return out;
}

void write_ekf_trajectory_csv(const std::string& path,
                              const std::vector<double>& times,
                              const std::vector<EkfBelief>& beliefs,
                              int case_id) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open " + path);
  const int n = beliefs.empty() ? 0 : beliefs[0].mean.dim();
  f << "t";
  for (int i = 0; i < n; ++i) f << ",mean" << i;
  for (int i = 0; i < n; ++i) f << ",cov" << i;
  f << ",case_id\n";
  for (std::size_t k = 0; k < beliefs.size(); ++k) {
    f << fmt(times[k]);
    for (int i = 0; i < n; ++i) f << ',' << fmt(beliefs[k].mean.x(i));
    for (int i = 0; i < n; ++i) f << ',' << fmt(beliefs[k].cov(i, i));
    f << ',' << case_id << '\n';
  }
}

void write_rank_table_csv(const std::string& path,
                          const std::vector<RankTableRow>& rows) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open " + path);
  f << "structure,x0,x1,x2,x3,x4,rank,min_singular_value,degenerate\n";
  for (const auto& r : rows) {
    f << structure_name(r.structure);
    for (int i = 0; i < 5; ++i)
      f << ',' << (i < r.state.size() ? fmt(r.state(i)) : "");
    f << ',' << r.rank << ',' << fmt(r.min_singular_value) << ','
      << (r.degenerate ? 1 : 0) << '\n';
  }
}

namespace {

std::string estimator_label(const EstimatorSpec& e) {
  if (e.kind == EstimatorSpec::Kind::EKF) return "ekf";
  return "pgo-" + strategy_name(e.strategy);
}

}  // namespace

void write_rmse_json(const std::string& path, const RunResult& result,
                     int seeds) {
  nlohmann::json j;
  j["scenario"] = result.config.name;
  j["case"] = result.config.case_id;
  j["estimator"] = estimator_label(result.config.estimator);
  j["kernel"] = kernel_name(result.config.estimator.kernel.kind);
  j["seeds"] = seeds;
  j["rmse"] = {{"x", result.error.x},
               {"y", result.error.y},
               {"theta", result.error.theta},
               {"total", result.error.total}};
  if (result.config.case_id == 4) {
    j["rmse"]["v"] = result.error.v;
    j["rmse"]["w"] = result.error.w;
  }
  j["wall_time_s"] = result.wall_time_s;
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open " + path);
  f << j.dump(2) << '\n';
}

void write_sweep_csv(const std::string& path,
                     const std::vector<SweepCell>& cells) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open " + path);
  f << "ratio,kernel,kernel_t,rmse_x,rmse_y,rmse_theta,rmse_total,seeds\n";
  for (const auto& c : cells)
    f << fmt(c.ratio) << ',' << kernel_name(c.kernel.kind) << ','
      << fmt(c.kernel.t) << ',' << fmt(c.median_error.x) << ','
      << fmt(c.median_error.y) << ',' << fmt(c.median_error.theta) << ','
      << fmt(c.median_error.total) << ',' << c.seeds << '\n';
}

void aggregate_reports(const std::vector<std::string>& report_paths,
                       const std::string& csv_out,
                       const std::string& json_out) {
  nlohmann::json all = nlohmann::json::array();
  for (const auto& p : report_paths) {
    std::ifstream f(p);
    if (!f) throw std::runtime_error("cannot open " + p);
    nlohmann::json j;
    f >> j;
    all.push_back(j);
  }
  std::ofstream c(csv_out);
  if (!c) throw std::runtime_error("cannot open " + csv_out);
  c << "scenario,case,estimator,kernel,seeds,rmse_x,rmse_y,rmse_theta,"
       "rmse_total,wall_time_s\n";
  for (const auto& j : all)
    c << j["scenario"].get<std::string>() << ',' << j["case"].get<int>() << ','
      << j["estimator"].get<std::string>() << ','
      << j["kernel"].get<std::string>() << ',' << j["seeds"].get<int>() << ','
      << fmt(j["rmse"]["x"].get<double>()) << ','
      << fmt(j["rmse"]["y"].get<double>()) << ','
      << fmt(j["rmse"]["theta"].get<double>()) << ','
      << fmt(j["rmse"]["total"].get<double>()) << ','
      << fmt(j["wall_time_s"].get<double>()) << '\n';
  if (!json_out.empty()) {
    std::ofstream jf(json_out);
    jf << all.dump(2) << '\n';
  }
}

namespace {

InputProfile profile_from_json(const nlohmann::json& j) {
  InputProfile p;
  p.v0 = j.value("v", 0.0);
  p.w0 = j.value("w", 0.0);
  p.v_amp = j.value("v_amp", 0.0);
  p.v_freq = j.value("v_freq", 0.0);
  p.v_phase = j.value("v_phase", 0.0);
  p.w_amp = j.value("w_amp", 0.0);
  p.w_freq = j.value("w_freq", 0.0);
  p.w_phase = j.value("w_phase", 0.0);
  return p;
}

nlohmann::json profile_to_json(const InputProfile& p) {
  return {{"v", p.v0},         {"w", p.w0},         {"v_amp", p.v_amp},
          {"v_freq", p.v_freq}, {"v_phase", p.v_phase}, {"w_amp", p.w_amp},
          {"w_freq", p.w_freq}, {"w_phase", p.w_phase}};
}

}  // namespace

ScenarioConfig load_scenario_json(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open " + path);
  nlohmann::json j;
  f >> j;

  ScenarioConfig c;
  if (j.contains("preset")) c = preset(j["preset"].get<std::string>());
  c.name = j.value("name", c.name);
  c.duration = j.value("duration", c.duration);
  c.dt = j.value("dt", c.dt);
  c.case_id = j.value("case", c.case_id);
  c.seed = j.value("seed", c.seed);
  c.outlier_ratio = j.value("outlier_ratio", c.outlier_ratio);
  if (j.contains("coord"))
    c.coord = j["coord"] == "polar" ? Coord::Polar : Coord::Cartesian;
  if (j.contains("ego")) {
    c.ego_profile = profile_from_json(j["ego"]);
    if (j["ego"].contains("start")) {
      auto s = j["ego"]["start"];
      c.ego_start = Pose2(s[0], s[1], s[2]);
    }
  }
  if (j.contains("neighbor")) {
    c.neighbor_profile = profile_from_json(j["neighbor"]);
    if (j["neighbor"].contains("start")) {
      auto s = j["neighbor"]["start"];
      c.neighbor_start = Pose2(s[0], s[1], s[2]);
    }
  }
  if (j.contains("noise")) {
    const auto& n = j["noise"];
    c.noise.sigma_range = n.value("range", c.noise.sigma_range);
    c.noise.sigma_bearing = n.value("bearing", c.noise.sigma_bearing);
    c.noise.sigma_orientation =
        n.value("orientation", c.noise.sigma_orientation);
    c.noise.sigma_v = n.value("v", c.noise.sigma_v);
    c.noise.sigma_w = n.value("w", c.noise.sigma_w);
    if (n.contains("process"))
      c.noise.sigma_process =
          Eigen::VectorXd::Constant(1, n["process"].get<double>());
  }
  if (j.contains("estimator")) {
    const auto& e = j["estimator"];
    const std::string kind = e.value("kind", "ekf");
    c.estimator.kind = kind == "pgo" ? EstimatorSpec::Kind::PGO
                                     : EstimatorSpec::Kind::EKF;
    if (e.contains("strategy"))
      c.estimator.strategy = strategy_from_name(e["strategy"]);
    c.estimator.window_size = e.value("window", c.estimator.window_size);
    if (e.contains("kernel")) {
      const KernelKind kk = kernel_from_name(e["kernel"]);
      c.estimator.kernel = e.contains("kernel_t")
                               ? RobustKernel(kk, e["kernel_t"].get<double>())
                               : RobustKernel::with_default_threshold(kk);
    }
  }
  c.validate();
  return c;
}

void write_scenario_json(const std::string& path, const ScenarioConfig& c) {
  nlohmann::json j;
  j["name"] = c.name;
  j["duration"] = c.duration;
  j["dt"] = c.dt;
  j["case"] = c.case_id;
  j["seed"] = c.seed;
  j["outlier_ratio"] = c.outlier_ratio;
  j["coord"] = c.coord == Coord::Polar ? "polar" : "cartesian";
  j["ego"] = profile_to_json(c.ego_profile);
  j["ego"]["start"] = {c.ego_start.x, c.ego_start.y, c.ego_start.theta};
  j["neighbor"] = profile_to_json(c.neighbor_profile);
  j["neighbor"]["start"] = {c.neighbor_start.x, c.neighbor_start.y,
                            c.neighbor_start.theta};
  j["noise"] = {{"range", c.noise.sigma_range},
                {"bearing", c.noise.sigma_bearing},
                {"orientation", c.noise.sigma_orientation},
                {"v", c.noise.sigma_v},
                {"w", c.noise.sigma_w}};
  j["estimator"] = {{"kind", c.estimator.kind == EstimatorSpec::Kind::PGO
                                 ? "pgo"
                                 : "ekf"},
                    {"strategy", strategy_name(c.estimator.strategy)},
                    {"window", c.estimator.window_size},
                    {"kernel", kernel_name(c.estimator.kernel.kind)},
                    {"kernel_t", c.estimator.kernel.t}};
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open " + path);
  f << j.dump(2) << '\n';
}

double yaw_from_quaternion(double qx, double qy, double qz, double qw) {
  return std::atan2(2.0 * (qy * qz + qw * qx),
                    1.0 - 2.0 * (qx * qx + qy * qy));
}

}  // namespace relpose
