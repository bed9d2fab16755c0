#include "relpose/ekf.hpp"

#include <cmath>

namespace relpose {

std::vector<Channel> EkfConfig::channels() const {
  switch (case_id) {
    case 1: return {Channel::Range};
    case 2: return {Channel::Bearing};
    case 3: return {Channel::Range, Channel::Bearing};
    case 4: return {Channel::Range, Channel::Bearing};
  }
  throw std::invalid_argument("EkfConfig: case_id must be 1..4");
}

double EkfConfig::channel_sigma(Channel ch) const {
  switch (ch) {
    case Channel::Range: return sigma_v_range;
    case Channel::Bearing: return sigma_v_bearing;
    case Channel::Orientation: return sigma_v_orientation;
  }
  return 0.0;
}

void EkfConfig::validate() const {
  channels();
  if (!(sigma_v_range > 0.0) || !(sigma_v_bearing > 0.0))
    throw std::invalid_argument("EkfConfig: channel sigmas must be > 0");
}

namespace {

double process_sigma(const EkfConfig& cfg, int i) {
  if (cfg.sigma_w.size() == 0) return 1e-3;
  return cfg.sigma_w(std::min<int>(i, cfg.sigma_w.size() - 1));
}

bool is_angle_channel(Channel ch) {
  return ch == Channel::Bearing || ch == Channel::Orientation;
}

}  // namespace

Prediction predict(const EkfBelief& b, const Eigen::VectorXd& input, double dt,
                   const EkfConfig& cfg) {
  if (input.size() != input_dim(b.mean.motion_case))
    throw std::invalid_argument("predict: input arity mismatch");

  Prediction out;
  out.belief.mean = step(b.mean, input, dt, Integrator::Euler);
  const Eigen::MatrixXd F =
      step_jacobian(b.mean, input, dt, Integrator::Euler);
  const int n = b.mean.dim();
  Eigen::MatrixXd Q = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    const double s = process_sigma(cfg, i);
    Q(i, i) = s * s;
  }
  out.belief.cov = symmetrize(F * b.cov * F.transpose() + Q);

  const auto chans = cfg.channels();
  out.predicted_measurement.resize(static_cast<int>(chans.size()));
  for (std::size_t c = 0; c < chans.size(); ++c)
    out.predicted_measurement(static_cast<int>(c)) =
        measure_on_state(out.belief.mean, chans[c]);
  return out;
}

Eigen::MatrixXd gain(const Eigen::MatrixXd& P_pred, const Eigen::MatrixXd& H,
                     const Eigen::VectorXd& sigma_v) {
  const Eigen::MatrixXd PHt = P_pred * H.transpose();
  Eigen::MatrixXd S = H * PHt;
  for (int i = 0; i < sigma_v.size(); ++i) S(i, i) += sigma_v(i) * sigma_v(i);
  Eigen::LDLT<Eigen::MatrixXd> ldlt(S);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive() ||
      ldlt.vectorD().minCoeff() <= 1e-300)
    throw NumericFailure("gain: singular innovation covariance");
  return ldlt.solve(PHt.transpose()).transpose();
}

EkfBelief correct(const EkfBelief& predicted, const Eigen::VectorXd& y,
                  const EkfConfig& cfg) {
  const auto chans = cfg.channels();
  if (y.size() != static_cast<int>(chans.size()))
    throw std::invalid_argument("correct: measurement arity mismatch");

  const int n = predicted.mean.dim();
  const int m = static_cast<int>(chans.size());
  Eigen::MatrixXd H(m, n);
  Eigen::VectorXd innov(m), sig(m);
  for (int c = 0; c < m; ++c) {
    H.row(c) = measure_jacobian(predicted.mean, chans[c]);
    const double predicted_value = measure_on_state(predicted.mean, chans[c]);
    double r = y(c) - predicted_value;
    if (is_angle_channel(chans[c])) r = wrap_angle(r);
    innov(c) = r;
    sig(c) = cfg.channel_sigma(chans[c]);
  }

  const Eigen::MatrixXd K = gain(predicted.cov, H, sig);
  EkfBelief out;
  Eigen::VectorXd xv = predicted.mean.x + K * innov;
  out.mean = AugmentedState(predicted.mean.motion_case, predicted.mean.coord,
                            xv);
  out.cov = symmetrize(
      (Eigen::MatrixXd::Identity(n, n) - K * H) * predicted.cov);
  return out;
}

std::vector<EkfBelief> run_filter(const std::vector<TimedInput>& inputs,
                                  const std::vector<MeasurementSample>& meas,
                                  double dt, const EkfConfig& cfg) {
  cfg.validate();
  const MotionCase mc = cfg.motion_case();
  EkfBelief b;
  b.mean = AugmentedState(mc, cfg.coord, cfg.init_mean);
  b.cov = cfg.init_cov;

  std::vector<EkfBelief> traj;
  traj.reserve(inputs.size() + 1);
  traj.push_back(b);

  const auto chans = cfg.channels();
  const std::vector<Eigen::VectorXd> u_ticks =
      assemble_case_inputs(mc, inputs, meas, dt);
  std::vector<const MeasurementSample*> sensor;
  for (const auto& s : meas)
    if (s.kind != MeasKind::OdomComm) sensor.push_back(&s);

  std::size_t si = 0;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    const double t_next = inputs[k].t + dt;
    Prediction pred = predict(b, u_ticks[k], dt, cfg);

    // Gather this tick's sensor channels. Channels absent this tick keep the
    // predicted value, i.e. a zero innovation; with independent channel noise
    // that equals correcting with the present channels only.
    Eigen::VectorXd y = pred.predicted_measurement;
    bool any = false;
    while (si < sensor.size() && sensor[si]->t <= t_next + 0.5 * dt) {
      if (sensor[si]->t > t_next - 0.5 * dt) {
        for (std::size_t c = 0; c < chans.size(); ++c) {
          const bool match =
              (chans[c] == Channel::Range &&
               sensor[si]->kind == MeasKind::Range) ||
              (chans[c] == Channel::Bearing &&
               sensor[si]->kind == MeasKind::Bearing) ||
              (chans[c] == Channel::Orientation &&
               sensor[si]->kind == MeasKind::Orientation);
          if (match) {
            y(static_cast<int>(c)) = sensor[si]->value1;
            any = true;
          }
        }
      }
      ++si;
    }

    b = any ? correct(pred.belief, y, cfg) : pred.belief;
    traj.push_back(b);
  }
  return traj;
}

ConsensusResult consensus_update(const EkfBelief& b_i,
                                 const SharedRelativeBelief& b_j,
                                 const ConsensusConfig& cfg,
                                 ConsensusPhase phase) {
  if (b_i.mean.coord != Coord::Polar)
    throw std::invalid_argument("consensus_update: polar relative block required");
  if (!(cfg.gain_scale > 0.0 && cfg.gain_scale <= 1.0) || cfg.iterations < 1)
    throw std::invalid_argument("consensus_update: bad config");

  const int n = b_i.mean.dim();
  // Reciprocity map from my (rho_ji, beta_ji, theta_ji) to the neighbor's
  // (rho_ij, beta_ij, theta_ij): rho passes through, beta_ij = pi - psi_ji,
  // theta_ij = -theta_ji. Affine, so the iteration is linear.
  Eigen::Matrix3d M;
  // clang-format off
  M << 1, 0,  0,
       0, 1, -1,
       0, 0, -1;
  // clang-format on
  const Eigen::Vector3d shift(0.0, M_PI, 0.0);

  Eigen::MatrixXd E = Eigen::MatrixXd::Zero(n, 3);
  E.block<3, 3>(3, 0) = Eigen::Matrix3d::Identity();

  const Eigen::Matrix3d P_rel = b_i.cov.block<3, 3>(3, 3);
  const Eigen::Matrix3d S = M * P_rel * M.transpose() + b_j.cov;
  Eigen::LDLT<Eigen::Matrix3d> ldlt(S);
  if (ldlt.info() != Eigen::Success)
    throw NumericFailure("consensus_update: singular constraint covariance");
  const Eigen::Matrix3d K =
      cfg.gain_scale * (ldlt.solve(M * P_rel.transpose())).transpose();

  auto residual = [&](const Eigen::Vector3d& rel) {
    Eigen::Vector3d g = M * rel + shift - b_j.mean;
    g(1) = wrap_angle(g(1));
    g(2) = wrap_angle(g(2));
    return g;
  };

  ConsensusResult out;
  const Eigen::Matrix3d iter_map = Eigen::Matrix3d::Identity() - K * M;
  out.spectral_radius = iter_map.eigenvalues().cwiseAbs().maxCoeff();
  out.diverging = out.spectral_radius >= 1.0;

  Eigen::Vector3d rel = b_i.mean.rel();
  const int iters = phase == ConsensusPhase::Corrected ? cfg.iterations : 1;
  for (int it = 0; it < iters; ++it) rel -= K * residual(rel);

  Eigen::VectorXd xv = b_i.mean.x;
  xv.segment<3>(3) = rel;
  out.belief.mean = AugmentedState(b_i.mean.motion_case, Coord::Polar, xv);
  out.residual_norm = residual(out.belief.mean.rel()).norm();

  const Eigen::MatrixXd Kf = E * K;
  const Eigen::MatrixXd Mf = M * E.transpose();
  out.belief.cov = symmetrize(
      (Eigen::MatrixXd::Identity(n, n) - Kf * Mf) * b_i.cov);
  return out;
}

}  // namespace relpose
