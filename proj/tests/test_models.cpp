#include <doctest.h>

#include <cmath>
#include <cstdio>

#include "relpose/models.hpp"
#include "test_support.hpp"

using namespace relpose;
using namespace relpose::testing;

namespace {

AugmentedState random_state(Rng& rng, MotionCase mc, Coord co) {
  std::uniform_real_distribution<double> upos(-3.0, 3.0);
  std::uniform_real_distribution<double> uang(-M_PI, M_PI);
  std::uniform_real_distribution<double> urho(0.5, 5.0);
  std::uniform_real_distribution<double> uvel(-1.0, 1.0);
  Eigen::VectorXd x(state_dim(mc));
  x(0) = upos(rng);
  x(1) = upos(rng);
  x(2) = uang(rng);
  if (co == Coord::Polar) {
    x(3) = urho(rng);
    x(4) = uang(rng);
  } else {
    const double r = urho(rng), b = uang(rng);
    x(3) = r * std::cos(b);
    x(4) = r * std::sin(b);
  }
  x(5) = uang(rng);
  if (mc == MotionCase::M2) {
    x(6) = uvel(rng);
    x(7) = uvel(rng);
  }
  return AugmentedState(mc, co, x);
}

// Test-local RK4 unicycle, independent of models::step.
Eigen::Vector3d unicycle_rk4(const Eigen::Vector3d& p, double v, double w,
                             double dt) {
  auto f = [&](const Eigen::Vector3d& x) {
    return Eigen::Vector3d(v * std::cos(x(2)), v * std::sin(x(2)), w);
  };
  const Eigen::Vector3d k1 = f(p);
  const Eigen::Vector3d k2 = f(p + 0.5 * dt * k1);
  const Eigen::Vector3d k3 = f(p + 0.5 * dt * k2);
  const Eigen::Vector3d k4 = f(p + dt * k3);
  return p + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
}

}  // namespace

TEST_CASE("vector_field_m1 examples") {
  Eigen::VectorXd x(6);
  x << 0, 0, 0, 1, 0, 0;
  const AugmentedState s(MotionCase::M1, Coord::Cartesian, x);

  CHECK(vector_field_m1(s, Eigen::Vector4d::Zero()).norm() ==
        doctest::Approx(0.0));

  const Eigen::VectorXd f = vector_field_m1(s, Eigen::Vector4d(0, 1, 0, 0));
  CHECK(f.head<3>().isApprox(Eigen::Vector3d(0, 0, 1)));
  CHECK(f.segment<3>(3).isApprox(Eigen::Vector3d(0, -1, -1)));
}

TEST_CASE("vector_field_m2 examples") {
  Eigen::VectorXd x(8);
  x << 0, 0, 0, 2, 1, 0, 0, 0;
  const AugmentedState rest(MotionCase::M2, Coord::Cartesian, x);
  CHECK(vector_field_m2(rest, Eigen::Vector2d::Zero()).norm() ==
        doctest::Approx(0.0));

  x << 0, 0, 0, 2, 1, 0, 0.4, 0.25;
  const AugmentedState s(MotionCase::M2, Coord::Cartesian, x);
  const Eigen::VectorXd f = vector_field_m2(s, Eigen::Vector2d::Zero());
  CHECK(f.segment<3>(3).isApprox(Eigen::Vector3d(0.4, 0.0, 0.25)));
  CHECK(f.tail<2>().norm() == doctest::Approx(0.0));
}

TEST_CASE("M2 field equals M1 field with velocities read from state") {
  Rng rng = make_rng(3);
  for (Coord co : {Coord::Cartesian, Coord::Polar}) {
    for (int i = 0; i < 100; ++i) {
      const AugmentedState s2 = random_state(rng, MotionCase::M2, co);
      const AugmentedState s1(MotionCase::M1, co, s2.x.head<6>());
      std::uniform_real_distribution<double> u(-1.0, 1.0);
      const double vi = u(rng), wi = u(rng);
      const Eigen::VectorXd f2 =
          vector_field_m2(s2, Eigen::Vector2d(vi, wi));
      const Eigen::VectorXd f1 = vector_field_m1(
          s1, Eigen::Vector4d(vi, wi, s2.x(6), s2.x(7)));
      CHECK((f2.head<6>() - f1).norm() < 1e-12);
    }
  }
}

TEST_CASE("polar field equals Cartesian field through the change of variables") {
  Rng rng = make_rng(5);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int i = 0; i < 1000; ++i) {
    const AugmentedState xc =
        random_state(rng, MotionCase::M1, Coord::Cartesian);
    const AugmentedState xp = convert_coord(xc, Coord::Polar);
    const Eigen::Vector4d U(u(rng), u(rng), u(rng), u(rng));
    const Eigen::VectorXd fc = vector_field_m1(xc, U);
    const Eigen::VectorXd fp = vector_field_m1(xp, U);
    const Eigen::Matrix3d J = cart_to_polar_jacobian(xc.rel());
    CHECK((fp.segment<3>(3) - J * fc.segment<3>(3)).norm() < 1e-9);
    CHECK((fp.head<3>() - fc.head<3>()).norm() < 1e-12);
  }
}

TEST_CASE("vector field singularity at rho ~ 0") {
  Eigen::VectorXd x(6);
  x << 0, 0, 0, 1e-9, 0, 0;
  CHECK_THROWS_AS(AugmentedState(MotionCase::M1, Coord::Polar, x),
                  SingularityError);
}

TEST_CASE("analytic field Jacobians match finite differences") {
  Rng rng = make_rng(7);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (MotionCase mc : {MotionCase::M1, MotionCase::M2}) {
    for (Coord co : {Coord::Cartesian, Coord::Polar}) {
      for (int i = 0; i < 25; ++i) {
        const AugmentedState s = random_state(rng, mc, co);
        Eigen::VectorXd input(input_dim(mc));
        for (int k = 0; k < input.size(); ++k) input(k) = u(rng);
        auto f = [&](const Eigen::VectorXd& v) {
          return vector_field(AugmentedState(mc, co, v), input);
        };
        const Eigen::MatrixXd J = vector_field_jacobian(s, input);
        CHECK(rel_error(J, fd_jacobian(f, s.x)) < 1e-6);
      }
    }
  }
}

TEST_CASE("step: identity, circle closure, Euler vs RK4 order") {
  Eigen::VectorXd x(8);
  x << 0.3, -0.2, 0.4, 2, 1, 0.2, 0, 0;
  const AugmentedState rest(MotionCase::M2, Coord::Cartesian, x);
  const AugmentedState stepped =
      step(rest, Eigen::Vector2d::Zero(), 0.1, Integrator::RK4);
  CHECK((stepped.x - rest.x).norm() == doctest::Approx(0.0));

  // Ego circle of radius v/w = 2 m closes after exactly 2*pi/w seconds
  // (integrate the fractional remainder of the period as a partial step).
  Eigen::VectorXd x0(6);
  x0 << 0, 0, 0, 5, 0, 0;
  AugmentedState s(MotionCase::M1, Coord::Cartesian, x0);
  const double dt = 0.01;
  const double period = 2.0 * M_PI / 0.1;
  const int n = static_cast<int>(period / dt);
  const Eigen::Vector4d U(0.2, 0.1, 0.0, 0.0);
  for (int k = 0; k < n; ++k) s = step(s, U, dt, Integrator::RK4);
  s = step(s, U, period - n * dt, Integrator::RK4);
  CHECK(s.x.head<2>().norm() < 1e-6);
  CHECK(std::abs(s.x(2)) < 1e-6);

  // One Euler step differs from RK4 by O(dt^2).
  Rng rng = make_rng(9);
  const AugmentedState r = random_state(rng, MotionCase::M1, Coord::Cartesian);
  const Eigen::Vector4d Ur(0.5, 0.3, -0.4, 0.2);
  for (double h : {0.01, 0.005}) {
    const Eigen::VectorXd de =
        step(r, Ur, h, Integrator::Euler).x - step(r, Ur, h, Integrator::RK4).x;
    CHECK(de.norm() < 10.0 * h * h);
    CHECK(de.norm() > 1e-3 * h * h);  // genuinely second order, not zero
  }
}

TEST_CASE("step Jacobians match finite differences") {
  Rng rng = make_rng(11);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (MotionCase mc : {MotionCase::M1, MotionCase::M2}) {
    for (Coord co : {Coord::Cartesian, Coord::Polar}) {
      for (Integrator in : {Integrator::Euler, Integrator::RK4}) {
        for (int i = 0; i < 10; ++i) {
          const AugmentedState s = random_state(rng, mc, co);
          Eigen::VectorXd input(input_dim(mc));
          for (int k = 0; k < input.size(); ++k) input(k) = u(rng);
          auto f = [&](const Eigen::VectorXd& v) {
            return step(AugmentedState(mc, co, v), input, 0.05, in).x;
          };
          // The stepped angles wrap; stay away from the seam.
          const Eigen::VectorXd sx = step(s, input, 0.05, in).x;
          bool near_seam = false;
          for (int a : s.angle_indices())
            if (std::abs(std::abs(sx(a)) - M_PI) < 1e-3) near_seam = true;
          if (near_seam) continue;
          const Eigen::MatrixXd J = step_jacobian(s, input, 0.05, in);
          CHECK(rel_error(J, fd_jacobian(f, s.x)) < 1e-6);
        }
      }
    }
  }
}

TEST_CASE("cart/polar conversions") {
  CHECK(cart_to_polar(Eigen::Vector3d(1, 0, 0.3))
            .isApprox(Eigen::Vector3d(1, 0, 0.3)));
  CHECK(cart_to_polar(Eigen::Vector3d(0, 2, 0))
            .isApprox(Eigen::Vector3d(2, M_PI / 2, 0)));
  CHECK_THROWS_AS(cart_to_polar(Eigen::Vector3d(0, 0, 0.1)), SingularityError);
  CHECK_THROWS_AS(polar_to_cart(Eigen::Vector3d(0, 0.5, 0.1)),
                  SingularityError);

  Rng rng = make_rng(13);
  std::uniform_real_distribution<double> urho(1e-3, 10.0);
  std::uniform_real_distribution<double> uang(-M_PI, M_PI);
  for (int i = 0; i < 1000; ++i) {
    const Eigen::Vector3d p(urho(rng), uang(rng), uang(rng));
    const Eigen::Vector3d back = cart_to_polar(polar_to_cart(p));
    CHECK(std::abs(back(0) - p(0)) < 1e-12);
    CHECK(std::abs(wrap_angle(back(1) - p(1))) < 1e-12);
    CHECK(std::abs(wrap_angle(back(2) - p(2))) < 1e-12);
  }
}

TEST_CASE("measure_relative geometry and reciprocity") {
  const Eigen::Vector3d m =
      measure_relative(Pose2(0, 0, 0), Pose2(1, 1, M_PI / 2));
  CHECK(m(0) == doctest::Approx(std::sqrt(2.0)));
  CHECK(m(1) == doctest::Approx(M_PI / 4));
  CHECK(m(2) == doctest::Approx(M_PI / 2));

  const Pose2 ego(0.4, -0.7, 0.6);
  const Pose2 ahead = compose(ego, Pose2(2.5, 0, 0));
  const Eigen::Vector3d ma = measure_relative(ego, ahead);
  CHECK(ma(0) == doctest::Approx(2.5));
  CHECK(ma(1) == doctest::Approx(0.0));
  CHECK(ma(2) == doctest::Approx(0.0));

  CHECK_THROWS_AS(measure_relative(ego, ego), SingularityError);

  // Reciprocity: rho_ij = rho_ji, theta_ij = -theta_ji, and the bearing seen
  // from the other robot is wrap(pi - psi_ji) with psi = theta - beta.
  Rng rng = make_rng(17);
  for (int i = 0; i < 200; ++i) {
    const Pose2 a = random_pose(rng), b = random_pose(rng);
    if ((a.vec().head<2>() - b.vec().head<2>()).norm() < 0.1) continue;
    const Eigen::Vector3d mij = measure_relative(a, b);
    const Eigen::Vector3d mji = measure_relative(b, a);
    CHECK(mij(0) == doctest::Approx(mji(0)).epsilon(1e-12));
    CHECK(std::abs(wrap_angle(mij(2) + mji(2))) < 1e-12);
    const double psi = mij(2) - mij(1);
    CHECK(std::abs(wrap_angle(M_PI - psi - mji(1))) < 1e-12);
  }
}

TEST_CASE("measure_landmark") {
  CHECK(measure_landmark(Pose2(0, 0, 0), 3, 0, 0.0)
            .isApprox(Eigen::Vector2d(3, 0)));
  CHECK(measure_landmark(Pose2(0, 0, 0), 1.1, 0, 0.1)
            .isApprox(Eigen::Vector2d(1.0, 0)));
  CHECK_THROWS_AS(measure_landmark(Pose2(0, 0, 0), 0.1, 0, 0.1),
                  SingularityError);

  // Rotating the ego by delta decreases the bearing by delta.
  const double delta = 0.2;
  const Eigen::Vector2d m0 = measure_landmark(Pose2(0.3, 0.1, 0.5), 4, 2, 0.0);
  const Eigen::Vector2d m1 =
      measure_landmark(Pose2(0.3, 0.1, 0.5 + delta), 4, 2, 0.0);
  CHECK(wrap_angle(m1(1) - m0(1)) == doctest::Approx(-delta));
}

TEST_CASE("relative-state integration consistent with absolute kinematics") {
  const double dt = 0.001, vi = 0.2, wi = 0.1, vj = 0.4, wj = 0.09;
  Eigen::Vector3d ego(0, 0, 0), nb(0, -2.5, 0);

  Eigen::VectorXd x0(6);
  x0.head<3>() = ego;
  x0.segment<3>(3) = polar_to_cart(measure_relative(
      Pose2(ego(0), ego(1), ego(2)), Pose2(nb(0), nb(1), nb(2))));
  AugmentedState s(MotionCase::M1, Coord::Cartesian, x0);
  const Eigen::Vector4d U(vi, wi, vj, wj);

  double max_err = 0.0;
  for (int k = 0; k < 10000; ++k) {
    s = step(s, U, dt, Integrator::RK4);
    ego = unicycle_rk4(ego, vi, wi, dt);
    nb = unicycle_rk4(nb, vj, wj, dt);
    const Eigen::Vector3d expect = polar_to_cart(measure_relative(
        Pose2(ego(0), ego(1), ego(2)), Pose2(nb(0), nb(1), nb(2))));
    Eigen::Vector3d err = s.rel() - expect;
    err(2) = wrap_angle(err(2));
    max_err = std::max(max_err, err.norm());
  }
  CHECK(max_err < 1e-4);
}

TEST_CASE("inject_noise") {
  std::vector<MeasurementSample> clean;
  for (int k = 0; k < 100000; ++k) {
    MeasurementSample s;
    s.t = k * 0.05;
    s.kind = k % 2 ? MeasKind::Range : MeasKind::Bearing;
    s.value1 = 2.0;
    s.sigma = k % 2 ? 0.05 : 0.087;
    clean.push_back(s);
  }

  NoiseConfig zero;
  zero.sigma_range = zero.sigma_bearing = zero.sigma_orientation = 0.0;
  zero.sigma_v = zero.sigma_w = 0.0;
  const auto same = inject_noise(clean, zero);
  for (std::size_t i = 0; i < clean.size(); ++i)
    CHECK(same[i].value1 == clean[i].value1);

  NoiseConfig cfg;
  cfg.seed = 77;
  const auto noisy = inject_noise(clean, cfg);
  CHECK(noisy.size() == clean.size());
  double mean_r = 0.0;
  int n_r = 0;
  for (std::size_t i = 0; i < noisy.size(); ++i)
    if (noisy[i].kind == MeasKind::Range) {
      mean_r += noisy[i].value1 - clean[i].value1;
      ++n_r;
    }
  mean_r /= n_r;
  CHECK(std::abs(mean_r) <
        3.0 * cfg.sigma_range / std::sqrt(static_cast<double>(n_r)));

  const auto again = inject_noise(clean, cfg);
  for (std::size_t i = 0; i < noisy.size(); ++i)
    CHECK(again[i].value1 == noisy[i].value1);
}

TEST_CASE("inject_outliers") {
  Rng rng = make_rng(21);
  std::normal_distribution<double> gauss(5.0, 0.3);
  std::vector<MeasurementSample> stream;
  for (int k = 0; k < 1000; ++k) {
    MeasurementSample s;
    s.t = k * 0.05;
    s.kind = MeasKind::Range;
    s.value1 = gauss(rng);
    s.sigma = 0.3;
    stream.push_back(s);
  }

  CHECK_THROWS_AS(inject_outliers(stream, 0.6, 1), std::invalid_argument);
  CHECK_THROWS_AS(inject_outliers(stream, -0.1, 1), std::invalid_argument);

  const auto same = inject_outliers(stream, 0.0, 1);
  for (std::size_t i = 0; i < stream.size(); ++i)
    CHECK(same[i].value1 == stream[i].value1);

  const auto dirty = inject_outliers(stream, 0.3, 99);
  CHECK(dirty.size() == stream.size());
  int flagged = 0;
  std::vector<double> clean_vals;
  for (const auto& s : stream) clean_vals.push_back(s.value1);
  std::sort(clean_vals.begin(), clean_vals.end());
  auto q = [&](double p) {
    const double h = static_cast<double>(clean_vals.size() - 1) * p;
    const std::size_t lo = static_cast<std::size_t>(h);
    return clean_vals[lo] +
           (h - static_cast<double>(lo)) * (clean_vals[lo + 1] - clean_vals[lo]);
  };
  const double q1 = q(0.25), q3 = q(0.75), iqr = q3 - q1;
  for (std::size_t i = 0; i < dirty.size(); ++i) {
    if (!dirty[i].is_outlier) {
      CHECK(dirty[i].value1 == stream[i].value1);
      continue;
    }
    ++flagged;
    const bool outside = dirty[i].value1 < q1 - 1.5 * iqr ||
                         dirty[i].value1 > q3 + 1.5 * iqr;
    CHECK(outside);
    CHECK(dirty[i].value1 >= q1 - 3.0 * iqr);
    CHECK(dirty[i].value1 <= q3 + 3.0 * iqr);
  }
  CHECK(flagged == 300);
}

TEST_CASE("calibration fit and apply") {
  Rng rng = make_rng(23);
  std::uniform_real_distribution<double> upos(-3.0, 3.0);

  std::vector<Eigen::Vector2d> uwb, truth, pos;
  for (int i = 0; i < 200; ++i) {
    const double X = upos(rng), Y = upos(rng);
    const double rho = 4.0 + 0.1 * upos(rng);
    const double beta = 0.1 * upos(rng);
    uwb.push_back({rho, beta});
    truth.push_back({rho, beta});
    pos.push_back({X, Y});
  }
  const CalibrationModel zero = fit_calibration(uwb, truth, pos);
  for (double c : {zero.a0, zero.a1, zero.a2, zero.b0, zero.b1, zero.b2})
    CHECK(std::abs(c) < 1e-10);

  // Planted linear offsets recovered exactly from noiseless data.
  std::vector<Eigen::Vector2d> truth2 = truth;
  for (std::size_t i = 0; i < truth2.size(); ++i) {
    truth2[i](0) += 0.05 + 0.01 * pos[i](0) - 0.02 * pos[i](1);
    truth2[i](1) += -0.03 + 0.004 * pos[i](0) + 0.006 * pos[i](1);
  }
  const CalibrationModel m = fit_calibration(uwb, truth2, pos);
  CHECK(std::abs(m.a0 - 0.05) < 1e-10);
  CHECK(std::abs(m.a1 - 0.01) < 1e-10);
  CHECK(std::abs(m.a2 + 0.02) < 1e-10);
  CHECK(std::abs(m.b0 + 0.03) < 1e-10);

  // Fit-then-apply reduces the RMS residual against the calibrated truth.
  double rms_raw = 0, rms_cal = 0;
  for (std::size_t i = 0; i < uwb.size(); ++i) {
    const Eigen::Vector2d cal = apply_calibration(m, uwb[i], pos[i]);
    rms_raw += std::pow(truth2[i](0) - uwb[i](0), 2);
    rms_cal += std::pow(truth2[i](0) - cal(0), 2);
  }
  CHECK(rms_cal < rms_raw);

  // Degenerate regressors (all samples at one position).
  std::vector<Eigen::Vector2d> pos_flat(uwb.size(), Eigen::Vector2d(1.0, 2.0));
  CHECK_THROWS_AS(fit_calibration(uwb, truth2, pos_flat), DegenerateFitError);

  // Identity model and constant shift.
  const Eigen::Vector2d raw(3.0, 0.2);
  CHECK(apply_calibration(CalibrationModel{}, raw, {1, 1}).isApprox(raw));
  CalibrationModel shift;
  shift.a0 = 0.25;
  CHECK(apply_calibration(shift, raw, {9, -9})(0) == doctest::Approx(3.25));
}

TEST_CASE("noisy calibration within 3 standard errors") {
  Rng rng = make_rng(29);
  std::uniform_real_distribution<double> upos(-3.0, 3.0);
  std::normal_distribution<double> gauss(0.0, 0.01);
  const int N = 1000;
  Eigen::MatrixXd A(N, 3);
  std::vector<Eigen::Vector2d> uwb, truth, pos;
  for (int i = 0; i < N; ++i) {
    const double X = upos(rng), Y = upos(rng);
    A.row(i) << 1.0, X, Y;
    const double rho = 4.0;
    uwb.push_back({rho, 0.0});
    truth.push_back(
        {rho + 0.05 + 0.01 * X - 0.02 * Y + gauss(rng), gauss(rng)});
    pos.push_back({X, Y});
  }
  const CalibrationModel m = fit_calibration(uwb, truth, pos);
  const Eigen::Matrix3d AtA_inv = (A.transpose() * A).inverse();
  const double truth_coefs[3] = {0.05, 0.01, -0.02};
  const double est_coefs[3] = {m.a0, m.a1, m.a2};
  for (int j = 0; j < 3; ++j) {
    const double se = 0.01 * std::sqrt(AtA_inv(j, j));
    CHECK(std::abs(est_coefs[j] - truth_coefs[j]) < 3.0 * se);
  }
}

TEST_CASE("measurement CSV round-trips bit-exactly") {
  Rng rng = make_rng(31);
  std::uniform_real_distribution<double> u(-10.0, 10.0);
  std::vector<MeasurementSample> stream;
  for (int i = 0; i < 200; ++i) {
    MeasurementSample s;
    s.t = u(rng);
    s.kind = static_cast<MeasKind>(i % 4);
    s.value1 = u(rng) * std::pow(10.0, i % 7 - 3);
    s.value2 = s.kind == MeasKind::OdomComm ? u(rng) : 0.0;
    s.sigma = std::abs(u(rng));
    s.is_outlier = i % 5 == 0;
    stream.push_back(s);
  }
  const std::string path = "/tmp/relpose_meas_test.csv";
  write_measurements_csv(path, stream);
  const auto back = read_measurements_csv(path);
  REQUIRE(back.size() == stream.size());
  for (std::size_t i = 0; i < stream.size(); ++i) {
    CHECK(back[i].t == stream[i].t);
    CHECK(back[i].kind == stream[i].kind);
    CHECK(back[i].value1 == stream[i].value1);
    CHECK(back[i].value2 == stream[i].value2);
    CHECK(back[i].sigma == stream[i].sigma);
    CHECK(back[i].is_outlier == stream[i].is_outlier);
  }
  std::remove(path.c_str());
}

TEST_CASE("AugmentedState invariants") {
  Eigen::VectorXd bad(5);
  bad.setZero();
  CHECK_THROWS_AS(AugmentedState(MotionCase::M1, Coord::Cartesian, bad),
                  std::invalid_argument);

  Eigen::VectorXd x(6);
  x << 0, 0, 7.0, -2.0, 0.5, 0;  // negative rho flips, angles wrap
  const AugmentedState s(MotionCase::M1, Coord::Polar, x);
  CHECK(s.x(3) == doctest::Approx(2.0));
  CHECK(s.x(4) == doctest::Approx(wrap_angle(0.5 + M_PI)));
  CHECK(s.x(2) == doctest::Approx(wrap_angle(7.0)));
}
