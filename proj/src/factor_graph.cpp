#include "relpose/factor_graph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "relpose/parallel.hpp"

namespace relpose {

void Graph::validate() const {
  if (num_nodes < 1) throw std::invalid_argument("Graph: empty window");
  bool anchored = !fixed_nodes.empty();
  for (const auto& f : factors) {
    for (int n : f.nodes)
      if (n < 0 || n >= num_nodes)
        throw std::invalid_argument("Graph: factor index out of range");
    if (f.kind == FactorKind::Prior) anchored = true;
    if ((f.information - f.information.transpose()).cwiseAbs().maxCoeff() >
        1e-9)
      throw std::invalid_argument("Graph: information matrix not symmetric");
  }
  if (!anchored)
    throw std::invalid_argument("Graph: no prior factor or fixed node");
}

std::vector<Channel> PgoConfig::channels() const {
  switch (case_id) {
    case 1: return {Channel::Range};
    case 2: return {Channel::Bearing};
    case 3: return {Channel::Range, Channel::Bearing};
    case 4: return {Channel::Range, Channel::Bearing};
  }
  throw std::invalid_argument("PgoConfig: case_id must be 1..4");
}

namespace {

AugmentedState as_state(const Graph& g, const Eigen::VectorXd& v) {
  return AugmentedState(g.motion_case, g.coord, v);
}

void wrap_state_residual(const Graph& g, Eigen::VectorXd& r) {
  AugmentedState probe(g.motion_case, g.coord,
                       Eigen::VectorXd::Ones(g.node_dim()));
  for (int i : probe.angle_indices()) r(i) = wrap_angle(r(i));
}

}  // namespace

FactorEval eval_factor(const Graph& g, const Factor& f,
                       const NodeEstimates& est, bool with_jacobians) {
  FactorEval out;
  const int n = g.node_dim();
  switch (f.kind) {
    case FactorKind::Prior: {
      const Eigen::VectorXd& x = est[f.nodes[0]];
      out.r = x - f.observed;
      wrap_state_residual(g, out.r);
      if (with_jacobians) out.J.push_back(Eigen::MatrixXd::Identity(n, n));
      break;
    }
    case FactorKind::Motion: {
      const AugmentedState prev = as_state(g, est[f.nodes[0]]);
      const Eigen::VectorXd pred =
          step(prev, f.observed, f.dt, f.integrator).x;
      out.r = est[f.nodes[1]] - pred;
      wrap_state_residual(g, out.r);
      if (with_jacobians) {
        out.J.push_back(-step_jacobian(prev, f.observed, f.dt, f.integrator));
        out.J.push_back(Eigen::MatrixXd::Identity(n, n));
      }
      break;
    }
    case FactorKind::Landmark: {
      const Eigen::VectorXd& x = est[f.nodes[0]];
      const Pose2 pose(x(0), x(1), x(2));
      const Eigen::Vector2d h =
          measure_landmark(pose, f.landmark(0), f.landmark(1),
                           f.sensor_offset);
      out.r = h - f.observed;
      out.r(1) = wrap_angle(out.r(1));
      if (with_jacobians) {
        const double c = std::cos(x(2)), s = std::sin(x(2));
        const double px = x(0) + f.sensor_offset * c;
        const double py = x(1) + f.sensor_offset * s;
        const double u = f.landmark(0) - px, v = f.landmark(1) - py;
        const double r2 = u * u + v * v, r = std::sqrt(r2);
        Eigen::MatrixXd J = Eigen::MatrixXd::Zero(2, n);
        J(0, 0) = -u / r;
        J(0, 1) = -v / r;
        J(0, 2) = (u * f.sensor_offset * s - v * f.sensor_offset * c) / r;
        J(1, 0) = v / r2;
        J(1, 1) = -u / r2;
        J(1, 2) =
            (-u * f.sensor_offset * c - v * f.sensor_offset * s) / r2 - 1.0;
        out.J.push_back(J);
      }
      break;
    }
    case FactorKind::RobotToRobot: {
      const AugmentedState x = as_state(g, est[f.nodes[0]]);
      const int m = static_cast<int>(f.channels.size());
      out.r.resize(m);
      Eigen::MatrixXd J = Eigen::MatrixXd::Zero(m, n);
      for (int c = 0; c < m; ++c) {
        double rc = measure_on_state(x, f.channels[c]) - f.observed(c);
        if (f.channels[c] != Channel::Range) rc = wrap_angle(rc);
        out.r(c) = rc;
        if (with_jacobians) J.row(c) = measure_jacobian(x, f.channels[c]);
      }
      if (with_jacobians) out.J.push_back(J);
      break;
    }
  }
  const double q = out.r.dot(f.information * out.r);
  out.whitened_norm = std::sqrt(std::max(q, 0.0));
  return out;
}

double robust_cost(const Graph& g, const NodeEstimates& est,
                   const RobustKernel& kernel) {
  double c = 0.0;
  for (const auto& f : g.factors)
    c += loss(kernel, eval_factor(g, f, est, false).whitened_norm);
  return c;
}

double weighted_quadratic_cost(const Graph& g, const NodeEstimates& est,
                               const std::vector<double>& weights) {
  double c = 0.0;
  for (std::size_t i = 0; i < g.factors.size(); ++i) {
    const double e = eval_factor(g, g.factors[i], est, false).whitened_norm;
    const double w = weights.empty() ? 1.0 : weights[i];
    c += 0.5 * w * e * e;
  }
  return c;
}

namespace {

struct NormalEquations {
  // Block-tridiagonal normal matrix over free-node slots: diagonal blocks D,
  // super/sub-diagonal coupling B[i] between slots i-1 and i, and rhs = -g.
  std::vector<Eigen::MatrixXd> D;
  std::vector<Eigen::MatrixXd> B;  // B[0] unused
  std::vector<Eigen::VectorXd> rhs;
  std::vector<int> slot_of_node;   // -1 for fixed nodes
  std::vector<int> node_of_slot;
};

NormalEquations assemble(const Graph& g, const NodeEstimates& est,
                         const std::vector<double>& weights, int threads) {
  const int n = g.node_dim();
  NormalEquations ne;
  ne.slot_of_node.assign(g.num_nodes, -1);
  for (int i = 0; i < g.num_nodes; ++i) {
    if (std::find(g.fixed_nodes.begin(), g.fixed_nodes.end(), i) !=
        g.fixed_nodes.end())
      continue;
    ne.slot_of_node[i] = static_cast<int>(ne.node_of_slot.size());
    ne.node_of_slot.push_back(i);
  }
  const std::size_t m = ne.node_of_slot.size();
  ne.D.assign(m, Eigen::MatrixXd::Zero(n, n));
  ne.B.assign(m, Eigen::MatrixXd::Zero(n, n));
  ne.rhs.assign(m, Eigen::VectorXd::Zero(n));

  // Linearize factors in parallel, then accumulate in factor order so the
  // result does not depend on the thread count.
  std::vector<FactorEval> evals(g.factors.size());
  parallel::for_each_index(
      g.factors.size(),
      [&](std::size_t i) { evals[i] = eval_factor(g, g.factors[i], est, true); },
      threads);

  for (std::size_t i = 0; i < g.factors.size(); ++i) {
    const Factor& f = g.factors[i];
    const FactorEval& ev = evals[i];
    const double w = weights.empty() ? 1.0 : weights[i];
    if (w == 0.0) continue;
    const Eigen::MatrixXd L = w * f.information;
    for (std::size_t a = 0; a < f.nodes.size(); ++a) {
      const int sa = ne.slot_of_node[f.nodes[a]];
      if (sa < 0) continue;
      ne.D[sa] += ev.J[a].transpose() * L * ev.J[a];
      ne.rhs[sa] -= ev.J[a].transpose() * (L * ev.r);
      for (std::size_t b = a + 1; b < f.nodes.size(); ++b) {
        const int sb = ne.slot_of_node[f.nodes[b]];
        if (sb < 0) continue;
        // Chain graph: consecutive nodes, hence consecutive slots.
        const Eigen::MatrixXd C = ev.J[a].transpose() * L * ev.J[b];
        if (sb == sa + 1)
          ne.B[sb] += C;
        else if (sa == sb + 1)
          ne.B[sa] += C.transpose();
        else
          throw NumericFailure("assemble: non-adjacent coupling");
      }
    }
  }
  return ne;
}

// Block Cholesky (Thomas) sweep on the damped tridiagonal system.
std::vector<Eigen::VectorXd> solve_block_tridiagonal(const NormalEquations& ne,
                                                     double lambda) {
  const std::size_t m = ne.D.size();
  const int n = m ? static_cast<int>(ne.D[0].rows()) : 0;

  double max_diag = 0.0;
  for (const auto& D : ne.D)
    max_diag = std::max(max_diag, D.diagonal().cwiseAbs().maxCoeff());
  const double floor = 1e-9 * (max_diag + 1.0);

  std::vector<Eigen::LLT<Eigen::MatrixXd>> llt(m);
  std::vector<Eigen::MatrixXd> Binv(m);  // U[i-1]^-1 B[i]
  std::vector<Eigen::VectorXd> z(m);
  for (std::size_t i = 0; i < m; ++i) {
    Eigen::MatrixXd U = ne.D[i];
    for (int d = 0; d < n; ++d)
      U(d, d) += lambda * std::max(ne.D[i](d, d), floor);
    Eigen::VectorXd y = ne.rhs[i];
    if (i > 0) {
      U -= ne.B[i].transpose() * Binv[i];
      y -= ne.B[i].transpose() * z[i - 1];
    }
    llt[i].compute(U);
    if (llt[i].info() != Eigen::Success)
      throw NumericFailure("solve: normal matrix not positive definite");
    z[i] = llt[i].solve(y);
    if (i + 1 < m) Binv[i + 1] = llt[i].solve(ne.B[i + 1]);
  }

  std::vector<Eigen::VectorXd> delta(m);
  for (std::size_t ii = m; ii-- > 0;) {
    delta[ii] = z[ii];
    if (ii + 1 < m) delta[ii] -= llt[ii].solve(ne.B[ii + 1] * delta[ii + 1]);
  }
  return delta;
}

// Dense reference solve of the same damped system (kept for tests/bench).
std::vector<Eigen::VectorXd> solve_dense(const NormalEquations& ne,
                                         double lambda) {
  const std::size_t m = ne.D.size();
  const int n = m ? static_cast<int>(ne.D[0].rows()) : 0;
  const int N = static_cast<int>(m) * n;
  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(N, N);
  Eigen::VectorXd rhs(N);
  double max_diag = 0.0;
  for (const auto& D : ne.D)
    max_diag = std::max(max_diag, D.diagonal().cwiseAbs().maxCoeff());
  const double floor = 1e-9 * (max_diag + 1.0);
  for (std::size_t i = 0; i < m; ++i) {
    H.block(i * n, i * n, n, n) = ne.D[i];
    for (int d = 0; d < n; ++d)
      H(i * n + d, i * n + d) += lambda * std::max(ne.D[i](d, d), floor);
    if (i > 0) {
      H.block((i - 1) * n, i * n, n, n) = ne.B[i];
      H.block(i * n, (i - 1) * n, n, n) = ne.B[i].transpose();
    }
    rhs.segment(i * n, n) = ne.rhs[i];
  }
  Eigen::LDLT<Eigen::MatrixXd> ldlt(H);
  if (ldlt.info() != Eigen::Success)
    throw NumericFailure("solve_dense: factorization failed");
  const Eigen::VectorXd d = ldlt.solve(rhs);
  std::vector<Eigen::VectorXd> delta(m);
  for (std::size_t i = 0; i < m; ++i) delta[i] = d.segment(i * n, n);
  return delta;
}

NodeEstimates apply_delta(const Graph& g, const NodeEstimates& est,
                          const NormalEquations& ne,
                          const std::vector<Eigen::VectorXd>& delta) {
  NodeEstimates out = est;
  for (std::size_t s = 0; s < delta.size(); ++s) {
    Eigen::VectorXd& x = out[ne.node_of_slot[s]];
    x += delta[s];
    // Re-canonicalize (wrap angles, keep polar rho positive); throws
    // SingularityError if the step left the valid region.
    x = AugmentedState(g.motion_case, g.coord, x).x;
  }
  return out;
}

std::vector<double> irls_weights(const Graph& g, const NodeEstimates& est,
                                 const RobustKernel& kernel) {
  std::vector<double> w(g.factors.size());
  for (std::size_t i = 0; i < g.factors.size(); ++i)
    w[i] = weight(kernel, eval_factor(g, g.factors[i], est, false).whitened_norm);
  return w;
}

}  // namespace

LmStepResult lm_step(const Graph& g, const NodeEstimates& est, double lambda,
                     const std::vector<double>& irls_w,
                     const SolverConfig& cfg) {
  g.validate();
  const NormalEquations ne = assemble(g, est, irls_w, cfg.threads);
  const std::vector<Eigen::VectorXd> delta =
      cfg.use_dense_solver ? solve_dense(ne, lambda)
                           : solve_block_tridiagonal(ne, lambda);
  const NodeEstimates trial = apply_delta(g, est, ne, delta);

  LmStepResult out;
  out.new_cost = weighted_quadratic_cost(g, trial, irls_w);
  out.delta.resize(static_cast<int>(delta.size()) * g.node_dim());
  for (std::size_t s = 0; s < delta.size(); ++s)
    out.delta.segment(static_cast<int>(s) * g.node_dim(), g.node_dim()) =
        delta[s];
  return out;
}

SolveResult irls_solve(const Graph& g, const RobustKernel& kernel,
                       const SolverConfig& cfg, const NodeEstimates& init) {
  g.validate();
  if (static_cast<int>(init.size()) != g.num_nodes)
    throw std::invalid_argument("irls_solve: init size mismatch");

  SolveResult res;
  res.estimates = init;
  double best_cost = robust_cost(g, res.estimates, kernel);
  NodeEstimates best = res.estimates;

  for (int outer = 0; outer < cfg.max_outer_irls; ++outer) {
    const std::vector<double> w = irls_weights(g, res.estimates, kernel);

    // Inner Levenberg-Marquardt on the weighted quadratic.
    double lambda = cfg.lambda_init;
    double cur = weighted_quadratic_cost(g, res.estimates, w);
    int inner = 0;
    for (; inner < cfg.max_inner_lm; ++inner) {
      NormalEquations ne = assemble(g, res.estimates, w, cfg.threads);
      double gnorm = 0.0;
      for (const auto& r : ne.rhs) gnorm = std::max(gnorm, r.lpNorm<Eigen::Infinity>());
      if (gnorm <= cfg.grad_tol) break;

      bool accepted = false;
      for (int tries = 0; tries < 12 && !accepted; ++tries) {
        std::vector<Eigen::VectorXd> delta;
        NodeEstimates trial;
        double trial_cost;
        try {
          delta = cfg.use_dense_solver ? solve_dense(ne, lambda)
                                       : solve_block_tridiagonal(ne, lambda);
          trial = apply_delta(g, res.estimates, ne, delta);
          trial_cost = weighted_quadratic_cost(g, trial, w);
        } catch (const NumericFailure&) {
          lambda *= 10.0;
          if (lambda > 1e10)
            throw NumericFailure("irls_solve: singular normal equations");
          continue;
        } catch (const SingularityError&) {
          lambda *= 10.0;  // step left the valid region; damp harder
          if (lambda > 1e10) break;
          continue;
        }
        double dnorm = 0.0;
        for (const auto& d : delta) dnorm = std::max(dnorm, d.lpNorm<Eigen::Infinity>());
        if (trial_cost <= cur) {
          res.estimates = trial;
          accepted = true;
          const bool small_step = dnorm < cfg.step_tol;
          const bool small_decrease =
              cur - trial_cost < cfg.cost_tol * (1.0 + cur);
          cur = trial_cost;
          lambda = std::max(lambda / 3.0, 1e-12);
          if (small_step || small_decrease) inner = cfg.max_inner_lm;
        } else {
          lambda *= 4.0;
          if (lambda > 1e10) inner = cfg.max_inner_lm, accepted = true;
        }
      }
      if (!accepted) break;
    }

    const double rc = robust_cost(g, res.estimates, kernel);
    res.trace.push_back({rc, lambda, inner});
    res.outer_iterations = outer + 1;

    if (rc <= best_cost + 1e-15) {
      const bool small = best_cost - rc < cfg.cost_tol * (1.0 + best_cost);
      best_cost = rc;
      best = res.estimates;
      if (small) {
        res.converged = true;
        break;
      }
    } else {
      // Reweighting increased the robust cost; report and keep best iterate.
      res.diverged = true;
      break;
    }
  }

  res.estimates = best;
  res.final_cost = best_cost;
  res.final_weights = irls_weights(g, res.estimates, kernel);
  return res;
}

Graph build_graph(const std::vector<MeasurementSample>& meas,
                  const std::vector<TimedInput>& inputs, double dt,
                  const PgoConfig& cfg, int first_tick, int last_tick,
                  const Eigen::VectorXd& window_prior_mean) {
  if (last_tick < first_tick)
    throw std::invalid_argument("build_graph: empty window");
  Graph g;
  g.motion_case = cfg.motion_case();
  g.coord = cfg.coord;
  g.num_nodes = last_tick - first_tick + 1;
  const int n = g.node_dim();

  // Prior on the window's first node.
  Factor prior;
  prior.kind = FactorKind::Prior;
  prior.nodes = {0};
  prior.observed = window_prior_mean;
  Eigen::LLT<Eigen::MatrixXd> llt(cfg.prior_cov);
  if (cfg.prior_cov.rows() != n || llt.info() != Eigen::Success)
    throw std::invalid_argument("build_graph: prior covariance must be SPD");
  prior.information =
      llt.solve(Eigen::MatrixXd::Identity(n, n));
  g.factors.push_back(prior);

  // Motion factors, odometry messages folded into the inputs for cases 1-3.
  const std::vector<Eigen::VectorXd> u =
      assemble_case_inputs(g.motion_case, inputs, meas, dt);
  Eigen::MatrixXd motion_info = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    const double s =
        cfg.sigma_w.size() ? cfg.sigma_w(std::min<int>(i, cfg.sigma_w.size() - 1))
                           : 1e-3;
    motion_info(i, i) = 1.0 / (s * s);
  }
  for (int k = first_tick; k < last_tick; ++k) {
    Factor f;
    f.kind = FactorKind::Motion;
    f.nodes = {k - first_tick, k - first_tick + 1};
    f.observed = u[k];
    f.information = motion_info;
    f.dt = dt;
    f.integrator = cfg.integrator;
    g.factors.push_back(f);
  }

  // One robot-to-robot factor per tick bundling the channels present.
  const std::vector<Channel> chans = cfg.channels();
  std::vector<std::vector<std::pair<Channel, double>>> per_tick(g.num_nodes);
  for (const auto& s : meas) {
    if (s.kind == MeasKind::OdomComm) continue;
    const int k = static_cast<int>(std::llround(s.t / dt));
    if (k < first_tick || k > last_tick) continue;
    const Channel ch = s.kind == MeasKind::Range     ? Channel::Range
                       : s.kind == MeasKind::Bearing ? Channel::Bearing
                                                     : Channel::Orientation;
    if (std::find(chans.begin(), chans.end(), ch) == chans.end()) continue;
    auto& bucket = per_tick[k - first_tick];
    bool replaced = false;
    for (auto& [c, v] : bucket)
      if (c == ch) {
        v = s.value1;
        replaced = true;
      }
    if (!replaced) bucket.emplace_back(ch, s.value1);
  }
  for (int node = 0; node < g.num_nodes; ++node) {
    const auto& bucket = per_tick[node];
    if (bucket.empty()) continue;
    Factor f;
    f.kind = FactorKind::RobotToRobot;
    f.nodes = {node};
    f.observed.resize(static_cast<int>(bucket.size()));
    f.information = Eigen::MatrixXd::Zero(bucket.size(), bucket.size());
    for (std::size_t c = 0; c < bucket.size(); ++c) {
      f.channels.push_back(bucket[c].first);
      f.observed(static_cast<int>(c)) = bucket[c].second;
      double sig = 1.0;
      switch (bucket[c].first) {
        case Channel::Range: sig = cfg.sigma_v_range; break;
        case Channel::Bearing: sig = cfg.sigma_v_bearing; break;
        case Channel::Orientation: sig = cfg.sigma_v_orientation; break;
      }
      f.information(c, c) = 1.0 / (sig * sig);
    }
    g.factors.push_back(f);
  }

  g.validate();
  return g;
}

WindowStrategy::Kind strategy_from_name(const std::string& name) {
  if (name == "sf") return WindowStrategy::Kind::SF;
  if (name == "sb") return WindowStrategy::Kind::SB;
  if (name == "fb") return WindowStrategy::Kind::FB;
  throw std::invalid_argument("unknown strategy: " + name);
}

std::string strategy_name(WindowStrategy::Kind k) {
  switch (k) {
    case WindowStrategy::Kind::SF: return "sf";
    case WindowStrategy::Kind::SB: return "sb";
    case WindowStrategy::Kind::FB: return "fb";
  }
  return "?";
}

StreamEstimate estimate_stream(const std::vector<MeasurementSample>& meas,
                               const std::vector<TimedInput>& inputs,
                               double dt, const PgoConfig& cfg,
                               const WindowStrategy& strategy,
                               const RobustKernel& kernel,
                               const SolverConfig& solver) {
  const int T = static_cast<int>(inputs.size());
  const MotionCase mc = cfg.motion_case();
  const std::vector<Eigen::VectorXd> u =
      assemble_case_inputs(mc, inputs, meas, dt);

  auto dead_reckon = [&](const Eigen::VectorXd& from, int k) {
    return step(AugmentedState(mc, cfg.coord, from), u[k], dt, cfg.integrator)
        .x;
  };

  StreamEstimate out;
  std::vector<Eigen::VectorXd> est(T + 1);
  est[0] = cfg.prior_mean;

  if (strategy.kind == WindowStrategy::Kind::FB) {
    for (int k = 1; k <= T; ++k) est[k] = dead_reckon(est[k - 1], k - 1);
    const Graph g = build_graph(meas, inputs, dt, cfg, 0, T, cfg.prior_mean);
    const SolveResult r = irls_solve(g, kernel, solver, est);
    out.trajectory = r.estimates;
    out.final_cost = r.final_cost;
    out.solves = 1;
    return out;
  }

  if (strategy.kind == WindowStrategy::Kind::SB) {
    for (int t = 1; t <= T; ++t) {
      est[t] = dead_reckon(est[t - 1], t - 1);
      const Graph g = build_graph(meas, inputs, dt, cfg, 0, t, cfg.prior_mean);
      NodeEstimates init(est.begin(), est.begin() + t + 1);
      const SolveResult r = irls_solve(g, kernel, solver, init);
      for (int k = 0; k <= t; ++k) est[k] = r.estimates[k];
      out.final_cost = r.final_cost;
      ++out.solves;
    }
    out.trajectory = std::vector<Eigen::VectorXd>(est.begin(), est.end());
    return out;
  }

  // SF: solve the trailing window, emit only the last state.
  std::vector<Eigen::VectorXd> emitted(T + 1);
  emitted[0] = cfg.prior_mean;
  for (int t = 1; t <= T; ++t) {
    est[t] = dead_reckon(est[t - 1], t - 1);
    const int k0 = std::max(0, t - strategy.window_size + 1);
    const Eigen::VectorXd window_prior =
        k0 == 0 ? cfg.prior_mean : est[k0];
    const Graph g = build_graph(meas, inputs, dt, cfg, k0, t, window_prior);
    NodeEstimates init(est.begin() + k0, est.begin() + t + 1);
    const SolveResult r = irls_solve(g, kernel, solver, init);
    for (int k = k0; k <= t; ++k) est[k] = r.estimates[k - k0];
    emitted[t] = est[t];
    out.final_cost = r.final_cost;
    ++out.solves;
  }
  out.trajectory = emitted;
  return out;
}

void dump_graph_json(const std::string& path, const Graph& g,
                     const NodeEstimates& est,
                     const std::vector<double>& weights,
                     const std::vector<SolveTraceEntry>& trace) {
  nlohmann::json j;
  j["num_nodes"] = g.num_nodes;
  j["node_dim"] = g.node_dim();
  for (const auto& x : est)
    j["nodes"].push_back(std::vector<double>(x.data(), x.data() + x.size()));
  for (std::size_t i = 0; i < g.factors.size(); ++i) {
    const Factor& f = g.factors[i];
    nlohmann::json jf;
    jf["kind"] = static_cast<int>(f.kind);
    jf["nodes"] = f.nodes;
    jf["observed"] = std::vector<double>(f.observed.data(),
                                         f.observed.data() + f.observed.size());
    const FactorEval ev = eval_factor(g, f, est, false);
    jf["residual"] =
        std::vector<double>(ev.r.data(), ev.r.data() + ev.r.size());
    jf["whitened_norm"] = ev.whitened_norm;
    if (i < weights.size()) jf["weight"] = weights[i];
    j["factors"].push_back(jf);
  }
  for (const auto& t : trace)
    j["trace"].push_back({{"robust_cost", t.robust_cost},
                          {"lambda", t.lambda},
                          {"inner_iterations", t.inner_iterations}});
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open " + path);
  f << j.dump(2) << '\n';
}

}  // namespace relpose
