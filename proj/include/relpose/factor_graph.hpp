#pragma once

// Factor-graph assembly and robust nonlinear least-squares smoothing over the
// augmented-state chain: Levenberg-Marquardt on the IRLS-weighted quadratic,
// with the SF (sliding filtering), SB (sliding batch) and FB (full batch)
// window strategies.
//
// The graph is a chain (motion factors between consecutive ticks, unary
// measurement factors), so the normal equations are block-tridiagonal and are
// solved by a block Cholesky sweep in O(T). A dense-Cholesky reference solve
// is kept for testing and benchmarking. Robust weights are applied per factor
// on the whitened residual norm e = sqrt(r^T Lambda r).

#include <Eigen/Dense>

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "relpose/kernels.hpp"
#include "relpose/models.hpp"

namespace relpose {

enum class FactorKind { Prior, Motion, Landmark, RobotToRobot };

struct Factor {
  FactorKind kind = FactorKind::Prior;
  std::vector<int> nodes;       // 1 (unary) or 2 (motion: prev, next)
  Eigen::VectorXd observed;     // Prior: state value; Motion: input vector;
                                // Landmark: (r, phi); R2R: stacked channels
  Eigen::MatrixXd information;  // residual-space information, symmetric PSD

  std::vector<Channel> channels;          // RobotToRobot
  Eigen::Vector2d landmark{0.0, 0.0};     // Landmark position
  double sensor_offset = 0.0;             // Landmark d_i
  double dt = 0.0;                        // Motion
  Integrator integrator = Integrator::RK4;  // Motion
};

struct Graph {
  MotionCase motion_case = MotionCase::M1;
  Coord coord = Coord::Cartesian;
  int num_nodes = 0;
  std::vector<Factor> factors;
  std::vector<int> fixed_nodes;  // gauge anchors (excluded from variables)

  int node_dim() const { return state_dim(motion_case); }
  void validate() const;
};

using NodeEstimates = std::vector<Eigen::VectorXd>;

// Residual r and Jacobians w.r.t. each connected node, evaluated at est.
struct FactorEval {
  Eigen::VectorXd r;
  std::vector<Eigen::MatrixXd> J;
  double whitened_norm = 0.0;  // e = sqrt(r^T Lambda r)
};

FactorEval eval_factor(const Graph& g, const Factor& f,
                       const NodeEstimates& est, bool with_jacobians);

// Sum of kernel losses of the whitened residual norms.
double robust_cost(const Graph& g, const NodeEstimates& est,
                   const RobustKernel& kernel);
// 0.5 * sum_f w_f r_f^T Lambda_f r_f (unit weights when empty).
double weighted_quadratic_cost(const Graph& g, const NodeEstimates& est,
                               const std::vector<double>& weights = {});

struct SolverConfig {
  int max_outer_irls = 20;
  int max_inner_lm = 40;
  double lambda_init = 1e-4;
  double grad_tol = 1e-10;
  double step_tol = 1e-12;
  double cost_tol = 1e-10;
  int threads = 1;  // factor linearization; deterministic at any count
  bool use_dense_solver = false;  // serial reference path
};

struct LmStepResult {
  Eigen::VectorXd delta;  // stacked over free nodes
  double new_cost;        // weighted quadratic cost at the tentative step
};

// One damped step on the weighted quadratic: solves
// (J^T W J + lambda diag(J^T W J)) delta = -J^T W r.
LmStepResult lm_step(const Graph& g, const NodeEstimates& est, double lambda,
                     const std::vector<double>& irls_weights = {},
                     const SolverConfig& cfg = {});

struct SolveTraceEntry {
  double robust_cost;
  double lambda;
  int inner_iterations;
};

struct SolveResult {
  NodeEstimates estimates;
  double final_cost = 0.0;  // robust cost
  bool converged = false;
  bool diverged = false;  // cost increase persisted; best iterate returned
  int outer_iterations = 0;
  std::vector<SolveTraceEntry> trace;
  std::vector<double> final_weights;
};

// Outer loop recomputes IRLS weights at current residuals; inner LM minimizes
// the weighted quadratic. With the L2 kernel all weights are exactly 1 and
// this is plain Levenberg-Marquardt.
SolveResult irls_solve(const Graph& g, const RobustKernel& kernel,
                       const SolverConfig& cfg, const NodeEstimates& init);

struct PgoConfig {
  int case_id = 3;  // 1..4 (4 => M2 nodes)
  Coord coord = Coord::Cartesian;
  Eigen::VectorXd sigma_w;  // per-state motion residual std, per tick
  double sigma_v_range = 0.05;
  double sigma_v_bearing = 0.087;
  double sigma_v_orientation = 0.087;
  Eigen::VectorXd prior_mean;
  Eigen::MatrixXd prior_cov;
  Integrator integrator = Integrator::RK4;

  MotionCase motion_case() const {
    return case_id == 4 ? MotionCase::M2 : MotionCase::M1;
  }
  std::vector<Channel> channels() const;
};

// Nodes for ticks [first_tick, last_tick], one motion factor per consecutive
// pair, one RobotToRobot factor per tick with sensor channels, and a
// quadratic prior on the first node at prior_mean (its covariance
// prior_cov). OdomComm samples feed the motion-factor inputs for cases 1-3.
Graph build_graph(const std::vector<MeasurementSample>& meas,
                  const std::vector<TimedInput>& inputs, double dt,
                  const PgoConfig& cfg, int first_tick, int last_tick,
                  const Eigen::VectorXd& window_prior_mean);

struct WindowStrategy {
  enum class Kind { SF, SB, FB };
  Kind kind = Kind::FB;
  int window_size = 10;  // SF only; >= 2

  static WindowStrategy sliding_filter(int window) {
    if (window < 2)
      throw std::invalid_argument("WindowStrategy: SF window must be >= 2");
    return {Kind::SF, window};
  }
  static WindowStrategy sliding_batch() { return {Kind::SB, 0}; }
  static WindowStrategy full_batch() { return {Kind::FB, 0}; }
};

WindowStrategy::Kind strategy_from_name(const std::string& name);
std::string strategy_name(WindowStrategy::Kind k);

struct StreamEstimate {
  std::vector<Eigen::VectorXd> trajectory;  // per tick 0..T
  double final_cost = 0.0;                  // last solve's robust cost
  int solves = 0;
};

// SF: per tick, solve the trailing window and emit its last state.
// SB: per tick, solve [0, t]; the emitted trajectory is the final solve.
// FB: one solve over all ticks. Every solve warm-starts from the previous
// solution extended by dead reckoning.
StreamEstimate estimate_stream(const std::vector<MeasurementSample>& meas,
                               const std::vector<TimedInput>& inputs,
                               double dt, const PgoConfig& cfg,
                               const WindowStrategy& strategy,
                               const RobustKernel& kernel,
                               const SolverConfig& solver);

// Diagnostic JSON dump: nodes, factors, residuals and weights at est.
void dump_graph_json(const std::string& path, const Graph& g,
                     const NodeEstimates& est,
                     const std::vector<double>& weights,
                     const std::vector<SolveTraceEntry>& trace = {});

}  // namespace relpose
