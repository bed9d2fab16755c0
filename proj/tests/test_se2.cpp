#include <doctest.h>

#include <cmath>

#include "relpose/se2.hpp"
#include "test_support.hpp"

using namespace relpose;
using namespace relpose::testing;

TEST_CASE("wrap_angle basics") {
  CHECK(wrap_angle(0.0) == doctest::Approx(0.0));
  CHECK(wrap_angle(2.0 * M_PI) == doctest::Approx(0.0));
  CHECK(wrap_angle(1.5 * M_PI) == doctest::Approx(-0.5 * M_PI));
  CHECK(wrap_angle(M_PI) == doctest::Approx(M_PI));
  CHECK(wrap_angle(-M_PI) == doctest::Approx(M_PI));
  CHECK_THROWS_AS(wrap_angle(std::nan("")), std::invalid_argument);
  CHECK_THROWS_AS(wrap_angle(INFINITY), std::invalid_argument);

  Rng rng = make_rng(7);
  std::uniform_real_distribution<double> u(-50.0, 50.0);
  for (int i = 0; i < 1000; ++i) {
    const double a = u(rng);
    const double w = wrap_angle(a);
    CHECK(w > -M_PI);
    CHECK(w <= M_PI);
    CHECK(std::remainder(a - w, 2.0 * M_PI) == doctest::Approx(0.0));
  }
}

TEST_CASE("compose and inverse examples") {
  const Pose2 id;
  const Pose2 t(1.3, -0.4, 0.9);
  CHECK(compose(id, t).vec().isApprox(t.vec(), 1e-15));
  CHECK(compose(t, id).vec().isApprox(t.vec(), 1e-15));

  const Pose2 c = compose(Pose2(1, 0, M_PI / 2), Pose2(1, 0, 0));
  CHECK(c.x == doctest::Approx(1.0));
  CHECK(c.y == doctest::Approx(1.0));
  CHECK(c.theta == doctest::Approx(M_PI / 2));

  CHECK(inverse(id).vec().norm() == doctest::Approx(0.0));
  CHECK(inverse(Pose2(1, 0, 0)).vec().isApprox(Eigen::Vector3d(-1, 0, 0)));
  const Pose2 inv = inverse(Pose2(1, 2, M_PI / 2));
  CHECK(inv.x == doctest::Approx(-2.0));
  CHECK(inv.y == doctest::Approx(1.0));
  CHECK(inv.theta == doctest::Approx(-M_PI / 2));
}

TEST_CASE("group axioms over random poses") {
  Rng rng = make_rng(11);
  for (int i = 0; i < 1000; ++i) {
    const Pose2 a = random_pose(rng), b = random_pose(rng),
                c = random_pose(rng);
    const Pose2 ab_c = compose(compose(a, b), c);
    const Pose2 a_bc = compose(a, compose(b, c));
    CHECK((ab_c.vec().head<2>() - a_bc.vec().head<2>()).norm() < 1e-12);
    CHECK(std::abs(wrap_angle(ab_c.theta - a_bc.theta)) < 1e-12);

    const Pose2 e = compose(a, inverse(a));
    CHECK(e.vec().head<2>().norm() < 1e-12);
    CHECK(std::abs(e.theta) < 1e-12);
  }
}

TEST_CASE("jac_compose matches finite differences") {
  const Eigen::Matrix<double, 3, 6> J0 = jac_compose(Pose2(), Pose2());
  CHECK(J0.leftCols<3>().isApprox(Eigen::Matrix3d::Identity()));
  CHECK(J0.rightCols<3>().isApprox(Eigen::Matrix3d::Identity()));

  Rng rng = make_rng(13);
  for (int i = 0; i < 100; ++i) {
    const Pose2 a = random_pose(rng), b = random_pose(rng);
    auto f = [&](const Eigen::VectorXd& v) -> Eigen::VectorXd {
      const Pose2 pa(v(0), v(1), v(2)), pb(v(3), v(4), v(5));
      return compose(pa, pb).vec();
    };
    Eigen::VectorXd x(6);
    x << a.vec(), b.vec();
    // Stay away from the +-pi seam where the wrapped output jumps.
    if (std::abs(std::abs(wrap_angle(a.theta + b.theta)) - M_PI) < 1e-3)
      continue;
    const Eigen::MatrixXd J = jac_compose(a, b);
    CHECK(rel_error(J, fd_jacobian(f, x)) < 1e-6);

    const Pose2 ab = compose(a, b);
    CHECK(J(0, 2) == doctest::Approx(-(ab.y - a.y)).epsilon(1e-12));
  }
}

TEST_CASE("jac_inverse matches finite differences, det = -1") {
  const Eigen::Matrix3d J0 = jac_inverse(Pose2());
  CHECK(J0.isApprox(-Eigen::Matrix3d::Identity()));
  CHECK(J0(0, 2) == doctest::Approx(0.0));
  CHECK(J0(1, 2) == doctest::Approx(0.0));

  Rng rng = make_rng(17);
  for (int i = 0; i < 100; ++i) {
    const Pose2 t = random_pose(rng);
    if (std::abs(std::abs(t.theta) - M_PI) < 1e-3) continue;
    auto f = [&](const Eigen::VectorXd& v) -> Eigen::VectorXd {
      return inverse(Pose2(v(0), v(1), v(2))).vec();
    };
    const Eigen::Matrix3d J = jac_inverse(t);
    CHECK(rel_error(J, fd_jacobian(f, t.vec())) < 1e-6);
    CHECK(J.determinant() == doctest::Approx(-1.0).epsilon(1e-12));
  }
}

TEST_CASE("propagate_compound closed cases") {
  GaussianPose a, b;
  a.mean = Pose2(0.7, -0.3, 0.4);
  b.mean = Pose2(-1.1, 0.2, -0.8);
  const GaussianPose out = propagate_compound(a, b);
  CHECK(out.cov.norm() == doctest::Approx(0.0));
  CHECK(out.mean.vec().isApprox(compose(a.mean, b.mean).vec(), 1e-15));

  GaussianPose ai;
  ai.cov = Covariance3::Identity();
  GaussianPose bi;  // deterministic at identity
  const GaussianPose oi = propagate_compound(ai, bi);
  CHECK(oi.cov.isApprox(Covariance3::Identity(), 1e-12));
}

TEST_CASE("compound covariance matches Monte-Carlo") {
  Rng rng = make_rng(23);
  for (int rep = 0; rep < 3; ++rep) {
    const GaussianPose a = random_gaussian_pose(rng, 0.01);
    const GaussianPose b = random_gaussian_pose(rng, 0.01);
    const GaussianPose lin = propagate_compound(a, b);
    const Covariance3 mc = monte_carlo_cov(
        rng, {a, b},
        [](const std::vector<Pose2>& p) { return compose(p[0], p[1]); },
        100000);
    CHECK((mc - lin.cov).norm() / lin.cov.norm() < 0.05);
  }
}

TEST_CASE("ddf_transform identity and Monte-Carlo") {
  GaussianPose rel, ego, target;
  target.mean = Pose2(0.3, 1.2, -0.7);
  target.cov = 0.01 * Covariance3::Identity();
  const GaussianPose out = ddf_transform(rel, ego, target);
  CHECK(out.mean.vec().isApprox(target.mean.vec(), 1e-14));
  CHECK(out.cov.isApprox(target.cov, 1e-12));

  GaussianPose r2, e2, t2;
  r2.mean = Pose2(1.0, -0.5, 0.6);
  e2.mean = Pose2(0.4, 0.2, -0.3);
  t2.mean = Pose2(2.0, 1.0, 0.1);
  const GaussianPose det = ddf_transform(r2, e2, t2);
  CHECK(det.cov.norm() == doctest::Approx(0.0));
  const Pose2 expect =
      compose(inverse(r2.mean), compose(e2.mean, t2.mean));
  CHECK(det.mean.vec().isApprox(expect.vec(), 1e-14));

  Rng rng = make_rng(29);
  for (int rep = 0; rep < 3; ++rep) {
    const GaussianPose rel_g = random_gaussian_pose(rng, 0.01);
    const GaussianPose ego_g = random_gaussian_pose(rng, 0.01);
    const GaussianPose tgt_g = random_gaussian_pose(rng, 0.01);
    const GaussianPose lin = ddf_transform(rel_g, ego_g, tgt_g);
    const Covariance3 mc = monte_carlo_cov(
        rng, {rel_g, ego_g, tgt_g},
        [](const std::vector<Pose2>& p) {
          return compose(inverse(p[0]), compose(p[1], p[2]));
        },
        100000);
    CHECK((mc - lin.cov).norm() / lin.cov.norm() < 0.05);
  }
}

TEST_CASE("propagated covariances stay symmetric PSD") {
  Rng rng = make_rng(31);
  for (int i = 0; i < 50; ++i) {
    const GaussianPose a = random_gaussian_pose(rng, 0.1);
    const GaussianPose b = random_gaussian_pose(rng, 0.1);
    const GaussianPose c = random_gaussian_pose(rng, 0.1);
    const GaussianPose comp = propagate_compound(a, b);
    const GaussianPose ddf = ddf_transform(a, b, c);
    CHECK(is_valid_covariance(comp.cov, 1e-12, -1e-10));
    CHECK(is_valid_covariance(ddf.cov, 1e-12, -1e-10));
  }
}

TEST_CASE("linearization error shrinks with noise scale") {
  // Same seeds at sigma = 0.1 and sigma = 0.001: the relative Monte-Carlo
  // mismatch must shrink as the input noise goes to zero. The small-sigma
  // run gets 10x the draws so its sampling floor sits below the
  // linearization error of the large-sigma run.
  for (std::uint64_t seed : {41ULL, 43ULL}) {
    double err_small = 0.0, err_large = 0.0;
    for (double sigma : {0.1, 0.001}) {
      Rng rng = make_rng(seed);
      const GaussianPose a = random_gaussian_pose(rng, sigma);
      const GaussianPose b = random_gaussian_pose(rng, sigma);
      const GaussianPose lin = propagate_compound(a, b);
      Rng mc_rng = make_rng(seed, 99);
      const Covariance3 mc = monte_carlo_cov(
          mc_rng, {a, b},
          [](const std::vector<Pose2>& p) { return compose(p[0], p[1]); },
          sigma == 0.1 ? 200000 : 2000000);
      const double err = (mc - lin.cov).norm() / lin.cov.norm();
      (sigma == 0.1 ? err_large : err_small) = err;
    }
    CHECK(err_small < err_large);
  }
}
