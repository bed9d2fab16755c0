#pragma once

// Decentralized EKF over the augmented state for the four information cases:
//   case 1: range + communicated odometry        (M1 state, 6-dim)
//   case 2: bearing + communicated odometry      (M1 state, 6-dim)
//   case 3: range + bearing + communicated odom  (M1 state, 6-dim)
//   case 4: range + bearing, no communication    (M2 state, 8-dim)
// Communicated odometry is state-independent, so it enters the prediction as
// the (v_j, w_j) input slots rather than the correction.
//
// Also provides the two-robot consensus update enforcing the reciprocity
// constraints rho_ij = rho_ji, beta_ij = wrap(pi - psi_ji), theta_ij =
// -theta_ji on polar relative blocks, with a spectral-radius convergence
// report for the iterated (corrected-phase) variant.

#include <Eigen/Dense>

#include <vector>

#include "relpose/models.hpp"

namespace relpose {

struct EkfBelief {
  AugmentedState mean;
  Eigen::MatrixXd cov;
};

struct EkfConfig {
  int case_id = 3;  // 1..4
  Coord coord = Coord::Cartesian;
  Eigen::VectorXd sigma_w;  // per-state process noise std, per tick; empty = 1e-3
  double sigma_v_range = 0.05;
  double sigma_v_bearing = 0.087;
  double sigma_v_orientation = 0.087;
  Eigen::VectorXd init_mean;
  Eigen::MatrixXd init_cov;

  MotionCase motion_case() const {
    return case_id == 4 ? MotionCase::M2 : MotionCase::M1;
  }
  bool has_odom_comm() const { return case_id != 4; }
  std::vector<Channel> channels() const;
  double channel_sigma(Channel ch) const;
  void validate() const;
};

struct Prediction {
  EkfBelief belief;
  Eigen::VectorXd predicted_measurement;  // stacked over cfg.channels()
};

// Euler mean propagation, cov <- F P F^T + diag(sigma_w^2).
Prediction predict(const EkfBelief& b, const Eigen::VectorXd& input, double dt,
                   const EkfConfig& cfg);

// K = P H^T (H P H^T + R)^-1; throws NumericFailure if the innovation
// covariance is not invertible.
Eigen::MatrixXd gain(const Eigen::MatrixXd& P_pred, const Eigen::MatrixXd& H,
                     const Eigen::VectorXd& sigma_v);

// Correction with angle-wrapped innovations; cov = (I - K H) P, symmetrized.
EkfBelief correct(const EkfBelief& predicted, const Eigen::VectorXd& y,
                  const EkfConfig& cfg);

// One predict per tick; corrects with whichever of the case's channels are
// present at that tick. OdomComm samples in the stream supply the (v_j, w_j)
// input slots for cases 1-3 (latest value held between arrivals).
std::vector<EkfBelief> run_filter(const std::vector<TimedInput>& inputs,
                                  const std::vector<MeasurementSample>& meas,
                                  double dt, const EkfConfig& cfg);

struct ConsensusConfig {
  double gain_scale = 1.0;  // in (0, 1]
  int iterations = 1;       // >= 1; only the corrected phase iterates
};

enum class ConsensusPhase { Predicted, Corrected };

// The neighbor's estimate of its own polar relative block (rho_ij, beta_ij,
// theta_ij), passed by value over the message channel.
struct SharedRelativeBelief {
  Eigen::Vector3d mean;
  Eigen::Matrix3d cov;
};

struct ConsensusResult {
  EkfBelief belief;
  double spectral_radius = 0.0;  // of the iteration map I - K M
  bool diverging = false;        // spectral radius >= 1 (update still applied)
  double residual_norm = 0.0;    // constraint residual after the update
};

ConsensusResult consensus_update(const EkfBelief& b_i,
                                 const SharedRelativeBelief& b_j_shared,
                                 const ConsensusConfig& cfg,
                                 ConsensusPhase phase);

}  // namespace relpose
