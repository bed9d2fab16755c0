#pragma once

// Scenario generation, end-to-end experiment execution, RMSE reporting,
// outlier/kernel sweeps, and the file formats behind the CLI.
//
// Ground truth is integrated with RK4. Estimators consume noisy measurement
// and input streams derived deterministically from the scenario seed, so a
// RunResult is reproducible from its config alone. Seed-indexed grid sweeps
// fan out across OpenMP workers; every cell derives its own RNG stream, so
// results are identical at any thread count.

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <vector>

#include "relpose/ekf.hpp"
#include "relpose/factor_graph.hpp"
#include "relpose/kernels.hpp"
#include "relpose/models.hpp"
#include "relpose/observability.hpp"

namespace relpose {

struct InputProfile {
  double v0 = 0.0, w0 = 0.0;
  double v_amp = 0.0, v_freq = 0.0, v_phase = 0.0;
  double w_amp = 0.0, w_freq = 0.0, w_phase = 0.0;

  static InputProfile constant(double v, double w) {
    InputProfile p;
    p.v0 = v;
    p.w0 = w;
    return p;
  }
  OdometryInput at(double t) const {
    return {v0 + v_amp * std::sin(v_freq * t + v_phase),
            w0 + w_amp * std::sin(w_freq * t + w_phase)};
  }
};

struct EstimatorSpec {
  enum class Kind { EKF, PGO };
  Kind kind = Kind::EKF;
  WindowStrategy::Kind strategy = WindowStrategy::Kind::FB;
  int window_size = 10;
  RobustKernel kernel{KernelKind::L2, 1.0};
};

struct ScenarioConfig {
  std::string name = "custom";
  double duration = 60.0;
  double dt = 0.05;
  InputProfile ego_profile;
  InputProfile neighbor_profile;
  Pose2 ego_start;
  Pose2 neighbor_start;
  NoiseConfig noise;
  double outlier_ratio = 0.0;
  int case_id = 3;
  Coord coord = Coord::Cartesian;
  EstimatorSpec estimator;
  std::uint64_t seed = 0;

  int ticks() const { return static_cast<int>(std::llround(duration / dt)); }
  void validate() const;
};

// Named presets: sim-circles (concentric circles, U = [0.2, 0.1, 0.4, 0.09]),
// hw-1..hw-4 (the four hardware-style motion scenarios, reproduced in
// simulation; hw-2's speed schedule is a sinusoidal stand-in).
ScenarioConfig preset(const std::string& name);
std::vector<std::string> preset_names();

struct Scenario {
  std::vector<double> times;                       // tick times 0..T
  std::vector<Pose2> ego_truth, neighbor_truth;    // per tick
  std::vector<Eigen::Vector3d> rel_truth;          // Cartesian (x_ji,y_ji,th)
  std::vector<Eigen::Vector2d> neighbor_vel_truth; // (v_j, w_j) per tick
  std::vector<MeasurementSample> clean_measurements;
  std::vector<TimedInput> clean_inputs;            // ego odometry per tick
};

// RK4 ground truth plus clean per-case measurement and input streams.
Scenario generate_scenario(const ScenarioConfig& cfg);

struct Rmse {
  double x = 0.0, y = 0.0, theta = 0.0, total = 0.0;
  double v = 0.0, w = 0.0;  // case 4 only (otherwise 0)
};

// Per-component RMSE with wrapped angle errors; total over (x, y, theta).
Rmse rmse(const std::vector<Eigen::Vector3d>& est,
          const std::vector<Eigen::Vector3d>& truth,
          const std::vector<Eigen::Vector2d>* est_vel = nullptr,
          const std::vector<Eigen::Vector2d>* truth_vel = nullptr);

struct RunResult {
  ScenarioConfig config;
  std::vector<double> times;
  std::vector<Eigen::Vector3d> truth_rel;
  std::vector<Eigen::Vector3d> est_rel;     // Cartesian
  std::vector<Eigen::Vector3d> est_ego;
  std::vector<Eigen::Vector2d> est_vel;     // case 4 only
  std::vector<Eigen::Vector2d> truth_vel;
  std::vector<EkfBelief> beliefs;           // EKF runs only
  Rmse error;
  double wall_time_s = 0.0;
};

RunResult run_experiment(const ScenarioConfig& cfg);

// Median of per-seed total RMSE; seeds derive from cfg.seed by index.
double median_total_rmse(const ScenarioConfig& cfg, int n_seeds,
                         int threads = 0);

struct SweepCell {
  double ratio;
  RobustKernel kernel;
  Rmse median_error;
  int seeds;
};

// Cross product of outlier ratios and kernels, per-cell medians over seeds.
std::vector<SweepCell> sweep_outliers(const ScenarioConfig& base,
                                      const std::vector<double>& ratios,
                                      const std::vector<RobustKernel>& kernels,
                                      int n_seeds, int threads = 0);

// ---- file formats ----------------------------------------------------

// t,x_i,y_i,th_i,x_ji,y_ji,th_ji[,v_j,w_j]; doubles round-trip bit-exactly.
void write_trajectory_csv(const std::string& path,
                          const std::vector<double>& times,
                          const std::vector<Eigen::Vector3d>& ego,
                          const std::vector<Eigen::Vector3d>& rel,
                          const std::vector<Eigen::Vector2d>* vel = nullptr);
struct TrajectoryCsv {
  std::vector<double> times;
  std::vector<Eigen::Vector3d> ego, rel;
  std::vector<Eigen::Vector2d> vel;  // empty when absent
};
TrajectoryCsv read_trajectory_csv(const std::string& path);

// t,mean...,cov_diag...,case_id
void write_ekf_trajectory_csv(const std::string& path,
                              const std::vector<double>& times,
                              const std::vector<EkfBelief>& beliefs,
                              int case_id);

// structure,x0..x4,rank,min_singular_value,degenerate
void write_rank_table_csv(const std::string& path,
                          const std::vector<RankTableRow>& rows);

void write_rmse_json(const std::string& path, const RunResult& result,
                     int seeds = 1);

// ratio,kernel,kernel_t,rmse_x,rmse_y,rmse_theta,rmse_total,seeds
void write_sweep_csv(const std::string& path,
                     const std::vector<SweepCell>& cells);

// Aggregates rmse-report JSON files into one CSV (and optional JSON).
void aggregate_reports(const std::vector<std::string>& report_paths,
                       const std::string& csv_out,
                       const std::string& json_out = "");

// Scenario config file (JSON); CLI flags override individual fields.
ScenarioConfig load_scenario_json(const std::string& path);
void write_scenario_json(const std::string& path, const ScenarioConfig& cfg);

// Yaw extraction used when importing external trajectory dumps
// (quaternion convention of the simulation exports).
double yaw_from_quaternion(double qx, double qy, double qz, double qw);

}  // namespace relpose
