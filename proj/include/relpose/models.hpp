#pragma once

// Continuous-time motion models for both information cases (M1: neighbor
// odometry communicated and treated as input; M2: neighbor velocities are
// Brownian states) in Cartesian and polar relative coordinates, discrete
// integration, measurement channels, noise/outlier injection, and UWB-style
// range/bearing calibration.
//
// The Cartesian relative kinematics are the ground truth; the polar fields
// are derived from them through the exact change of variables
// (rho, beta) = (hypot(x, y), atan2(y, x)), so both coordinate systems
// describe identical trajectories.

#include <Eigen/Dense>

#include <string>
#include <vector>

#include "relpose/random.hpp"
#include "relpose/se2.hpp"

namespace relpose {

enum class MotionCase { M1, M2 };
enum class Coord { Cartesian, Polar };
enum class Integrator { Euler, RK4 };

constexpr double kMinRange = 1e-6;  // polar singularity guard [m]

struct OdometryInput {
  double v = 0.0;  // m/s
  double w = 0.0;  // rad/s
};

// Estimator state. Layout:
//   [x_i, y_i, th_i, relative block (3), (v_j, w_j) iff M2]
// where the relative block is (x_ji, y_ji, th_ji) or (rho_ji, beta_ji, th_ji).
struct AugmentedState {
  MotionCase motion_case = MotionCase::M1;
  Coord coord = Coord::Cartesian;
  Eigen::VectorXd x;

  AugmentedState() : x(Eigen::VectorXd::Zero(6)) {}
  AugmentedState(MotionCase mc, Coord co, const Eigen::VectorXd& v);

  int dim() const { return static_cast<int>(x.size()); }
  Eigen::Vector3d ego() const { return x.head<3>(); }
  Eigen::Vector3d rel() const { return x.segment<3>(3); }
  Eigen::Vector2d vel() const { return x.tail<2>(); }  // M2 only

  // Wraps angle components; flips (rho, beta) to rho > 0 in polar form.
  void normalize();
  // Indices of angle-valued components (for wrapped residuals).
  std::vector<int> angle_indices() const;
};

int state_dim(MotionCase mc);
int input_dim(MotionCase mc);

// dX/dt = sum_k g_k(X) U_k for X 6-dim, U = [v_i, w_i, v_j, w_j].
Eigen::VectorXd vector_field_m1(const AugmentedState& x,
                                const Eigen::Vector4d& U);
// dX/dt = sum_k a_k(X) + sum_k b_k(X) u_k for X 8-dim, u = [v_i, w_i];
// (v_j, w_j) rows are zero (Brownian velocities, noise enters stochastically).
Eigen::VectorXd vector_field_m2(const AugmentedState& x,
                                const Eigen::Vector2d& u);

// Case-dispatching wrappers (input size 4 for M1, 2 for M2).
Eigen::VectorXd vector_field(const AugmentedState& x,
                             const Eigen::VectorXd& input);
// d(vector_field)/dX, analytic.
Eigen::MatrixXd vector_field_jacobian(const AugmentedState& x,
                                      const Eigen::VectorXd& input);
// d(vector_field)/d(input), analytic.
Eigen::MatrixXd input_jacobian(const AugmentedState& x);

AugmentedState step(const AugmentedState& x, const Eigen::VectorXd& input,
                    double dt, Integrator integrator);
// d(step)/dX, analytic (Euler: I + dt A; RK4: chain rule through the stages).
Eigen::MatrixXd step_jacobian(const AugmentedState& x,
                              const Eigen::VectorXd& input, double dt,
                              Integrator integrator);

Eigen::Vector3d cart_to_polar(const Eigen::Vector3d& rel);
Eigen::Vector3d polar_to_cart(const Eigen::Vector3d& rel);
// d(rho, beta, theta)/d(x, y, theta) at a Cartesian relative block.
Eigen::Matrix3d cart_to_polar_jacobian(const Eigen::Vector3d& rel_cart);
AugmentedState convert_coord(const AugmentedState& x, Coord target);
// Relative block in Cartesian form regardless of the state's coordinates.
Eigen::Vector3d rel_cartesian(const AugmentedState& x);

// Inter-robot measurement (rho_ji, beta_ji, th_ji) of `other` seen from `ego`.
Eigen::Vector3d measure_relative(const Pose2& ego, const Pose2& other);

// Landmark range/bearing from a sensor mounted d_i ahead of the robot center.
Eigen::Vector2d measure_landmark(const Pose2& ego, double lx, double ly,
                                 double d_i);

enum class Channel { Range, Bearing, Orientation };

double measure_on_state(const AugmentedState& x, Channel ch);
Eigen::RowVectorXd measure_jacobian(const AugmentedState& x, Channel ch);

struct NoiseConfig {
  double sigma_range = 0.05;        // m   (5 cm ranging accuracy)
  double sigma_bearing = 0.087;     // rad (5 deg angle finding)
  double sigma_orientation = 0.087; // rad
  double sigma_v = 0.01;            // m/s
  double sigma_w = 0.01;            // rad/s
  Eigen::VectorXd sigma_process;    // per-state-component; empty = 1e-3 each
  std::uint64_t seed = 0;

  void validate() const;
  double process_sigma(int component) const;
};

enum class MeasKind { Range, Bearing, Orientation, OdomComm };

struct MeasurementSample {
  double t = 0.0;
  MeasKind kind = MeasKind::Range;
  double value1 = 0.0;
  double value2 = 0.0;  // second component for OdomComm, 0 otherwise
  double sigma = 0.0;
  bool is_outlier = false;
};

// Adds i.i.d. zero-mean Gaussian noise with the per-kind sigma from cfg
// (OdomComm: sigma_v on value1, sigma_w on value2). Deterministic given seed.
std::vector<MeasurementSample> inject_noise(
    const std::vector<MeasurementSample>& clean, const NoiseConfig& cfg);

// Replaces a `ratio` fraction of the sensor samples (Range/Bearing/
// Orientation; OdomComm passes through) with draws from the Tukey-fence
// bands [Q1-3*IQR, Q1-1.5*IQR] u [Q3+1.5*IQR, Q3+3*IQR] of the clean
// per-kind empirical distribution, and flags them.
std::vector<MeasurementSample> inject_outliers(
    const std::vector<MeasurementSample>& stream, double ratio,
    std::uint64_t seed);

std::string kind_name(MeasKind k);
MeasKind kind_from_name(const std::string& name);

struct TimedInput {
  double t = 0.0;
  OdometryInput ego;  // the robot's own odometry (v_i, w_i)
};

// Per-tick input vectors for the case: M2 passes the ego pair through; M1
// appends the neighbor odometry from OdomComm samples (a message timestamped
// at or before a tick start applies from that tick on, latest value held).
std::vector<Eigen::VectorXd> assemble_case_inputs(
    MotionCase mc, const std::vector<TimedInput>& inputs,
    const std::vector<MeasurementSample>& meas, double dt);

// CSV schema: t,kind,value1,value2,sigma,is_outlier (round-trips bit-exactly).
void write_measurements_csv(const std::string& path,
                            const std::vector<MeasurementSample>& stream);
std::vector<MeasurementSample> read_measurements_csv(const std::string& path);

struct DegenerateFitError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Linear range/bearing calibration factors chi(X, Y) = c0 + c1 X + c2 Y.
struct CalibrationModel {
  double a0 = 0, a1 = 0, a2 = 0;  // range factor
  double b0 = 0, b1 = 0, b2 = 0;  // bearing factor
};

// Ordinary least squares of the (truth - raw) offsets against [1, X, Y].
// uwb and truth hold (rho, beta) pairs; positions hold (X, Y).
CalibrationModel fit_calibration(const std::vector<Eigen::Vector2d>& uwb,
                                 const std::vector<Eigen::Vector2d>& truth,
                                 const std::vector<Eigen::Vector2d>& positions);

// (rho~, beta~) = raw + chi(X, Y), bearing wrapped.
Eigen::Vector2d apply_calibration(const CalibrationModel& model,
                                  const Eigen::Vector2d& raw,
                                  const Eigen::Vector2d& position);

}  // namespace relpose
