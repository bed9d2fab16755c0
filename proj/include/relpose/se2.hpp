#pragma once

// SE(2) pose algebra: composition, inversion, their Jacobians, and
// first/second-moment uncertainty propagation for distributed data fusion.
//
// Conventions:
//   - A pose (x, y, theta) maps local coordinates p to world coordinates
//     R(theta) p + (x, y).
//   - Angles are always wrapped to (-pi, pi].
//   - compose(a, b) is the head-to-tail product a (+) b; inverse(t) is (-) t.
//   - Covariances are 3x3 over (x, y, theta), symmetrized after every
//     propagation step.

#include <Eigen/Dense>

#include <stdexcept>

namespace relpose {

struct SingularityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NumericFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Wraps a finite angle to (-pi, pi]. Throws std::invalid_argument otherwise.
double wrap_angle(double radians);

struct Angle {
  double radians = 0.0;

  Angle() = default;
  explicit Angle(double r) : radians(wrap_angle(r)) {}

  Angle operator+(Angle o) const { return Angle(radians + o.radians); }
  Angle operator-(Angle o) const { return Angle(radians - o.radians); }
};

struct Pose2 {
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;  // wrapped to (-pi, pi]

  Pose2() = default;
  Pose2(double x_, double y_, double theta_);

  static Pose2 identity() { return Pose2(); }

  Eigen::Vector3d vec() const { return {x, y, theta}; }
};

using Covariance3 = Eigen::Matrix3d;

bool is_valid_covariance(const Covariance3& c, double sym_tol = 1e-12,
                         double eig_floor = -1e-10);

struct GaussianPose {
  Pose2 mean;
  Covariance3 cov = Covariance3::Zero();
};

Pose2 compose(const Pose2& a, const Pose2& b);
Pose2 inverse(const Pose2& t);

// d(a (+) b) / d(a, b), 3x6, evaluated at (a, b).
Eigen::Matrix<double, 3, 6> jac_compose(const Pose2& a, const Pose2& b);

// d((-) t) / d t, 3x3. det = -1 for every t.
Eigen::Matrix3d jac_inverse(const Pose2& t);

// Head-to-tail compounding of independent Gaussian poses:
// mean = a.mean (+) b.mean, cov = J (+) blkdiag(a.cov, b.cov) J(+)^T.
GaussianPose propagate_compound(const GaussianPose& a, const GaussianPose& b);

// Tail-to-tail transform used in distributed data fusion: expresses a target
// estimate held in robot i's frame in robot j's frame through the inter-robot
// relative pose:  out = (-) rel (+) (ego (+) target).
// The covariance is assembled in two stages: first the compound ego (+) target,
// then the outer product with [J_inv 0; 0 I] sandwiched inside the compose
// Jacobian. Inputs are assumed independent.
GaussianPose ddf_transform(const GaussianPose& rel, const GaussianPose& ego,
                           const GaussianPose& target);

inline Covariance3 symmetrize(const Covariance3& c) {
  return 0.5 * (c + c.transpose());
}

}  // namespace relpose
