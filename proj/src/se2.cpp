#include "relpose/se2.hpp"

#include <cmath>

namespace relpose {

double wrap_angle(double radians) {
  if (!std::isfinite(radians))
    throw std::invalid_argument("wrap_angle: non-finite input");
  double w = std::fmod(radians + M_PI, 2.0 * M_PI);
  if (w <= 0.0) w += 2.0 * M_PI;
  return w - M_PI;
}

Pose2::Pose2(double x_, double y_, double theta_)
    : x(x_), y(y_), theta(wrap_angle(theta_)) {
  if (!std::isfinite(x) || !std::isfinite(y))
    throw std::invalid_argument("Pose2: non-finite translation");
}

bool is_valid_covariance(const Covariance3& c, double sym_tol,
                         double eig_floor) {
  if ((c - c.transpose()).cwiseAbs().maxCoeff() > sym_tol) return false;
  Eigen::SelfAdjointEigenSolver<Covariance3> es(c);
  return es.eigenvalues().minCoeff() >= eig_floor;
}

Pose2 compose(const Pose2& a, const Pose2& b) {
  const double c = std::cos(a.theta), s = std::sin(a.theta);
  return Pose2(a.x + c * b.x - s * b.y, a.y + s * b.x + c * b.y,
               a.theta + b.theta);
}

Pose2 inverse(const Pose2& t) {
  const double c = std::cos(t.theta), s = std::sin(t.theta);
  return Pose2(-c * t.x - s * t.y, s * t.x - c * t.y, -t.theta);
}

Eigen::Matrix<double, 3, 6> jac_compose(const Pose2& a, const Pose2& b) {
  const double c = std::cos(a.theta), s = std::sin(a.theta);
  const Pose2 ab = compose(a, b);
  Eigen::Matrix<double, 3, 6> J;
  // clang-format off
  J << 1, 0, -(ab.y - a.y),  c, -s, 0,
       0, 1,  (ab.x - a.x),  s,  c, 0,
       0, 0,  1,             0,  0, 1;
  // clang-format on
  return J;
}

Eigen::Matrix3d jac_inverse(const Pose2& t) {
  const double c = std::cos(t.theta), s = std::sin(t.theta);
  const Pose2 inv = inverse(t);
  Eigen::Matrix3d J;
  // clang-format off
  J << -c, -s,  inv.y,
        s, -c, -inv.x,
        0,  0, -1;
  // clang-format on
  return J;
}

GaussianPose propagate_compound(const GaussianPose& a, const GaussianPose& b) {
  GaussianPose out;
  out.mean = compose(a.mean, b.mean);
  const Eigen::Matrix<double, 3, 6> J = jac_compose(a.mean, b.mean);
  Eigen::Matrix<double, 6, 6> S = Eigen::Matrix<double, 6, 6>::Zero();
  S.topLeftCorner<3, 3>() = a.cov;
  S.bottomRightCorner<3, 3>() = b.cov;
  out.cov = symmetrize(J * S * J.transpose());
  return out;
}

GaussianPose ddf_transform(const GaussianPose& rel, const GaussianPose& ego,
                           const GaussianPose& target) {
  // Stage 1: compound ego (+) target.
  const GaussianPose mid = propagate_compound(ego, target);

  // Stage 2: (-) rel (+) mid, pushing rel's covariance through J_inv.
  GaussianPose out;
  const Pose2 rel_inv = inverse(rel.mean);
  out.mean = compose(rel_inv, mid.mean);

  const Eigen::Matrix<double, 3, 6> Jplus = jac_compose(rel_inv, mid.mean);
  Eigen::Matrix<double, 6, 6> Jinner = Eigen::Matrix<double, 6, 6>::Identity();
  Jinner.topLeftCorner<3, 3>() = jac_inverse(rel.mean);

  Eigen::Matrix<double, 6, 6> S = Eigen::Matrix<double, 6, 6>::Zero();
  S.topLeftCorner<3, 3>() = rel.cov;
  S.bottomRightCorner<3, 3>() = mid.cov;

  const Eigen::Matrix<double, 3, 6> J = Jplus * Jinner;
  out.cov = symmetrize(J * S * J.transpose());
  return out;
}

}  // namespace relpose
