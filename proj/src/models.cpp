#include "relpose/models.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace relpose {

namespace {

void check_polar_range(double rho) {
  if (!(rho > kMinRange))
    throw SingularityError("polar relative pose: rho <= " +
                           std::to_string(kMinRange));
}

double quantile(std::vector<double> v, double p) {
  std::sort(v.begin(), v.end());
  const double h = (static_cast<double>(v.size()) - 1.0) * p;
  const std::size_t lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

}  // namespace

int state_dim(MotionCase mc) { return mc == MotionCase::M1 ? 6 : 8; }
int input_dim(MotionCase mc) { return mc == MotionCase::M1 ? 4 : 2; }

AugmentedState::AugmentedState(MotionCase mc, Coord co,
                               const Eigen::VectorXd& v)
    : motion_case(mc), coord(co), x(v) {
  if (x.size() != state_dim(mc))
    throw std::invalid_argument("AugmentedState: dimension mismatch");
  if (!x.allFinite())
    throw std::invalid_argument("AugmentedState: non-finite components");
  normalize();
  if (coord == Coord::Polar) check_polar_range(x(3));
}

void AugmentedState::normalize() {
  if (coord == Coord::Polar && x(3) < 0.0) {
    x(3) = -x(3);
    x(4) += M_PI;
  }
  for (int i : angle_indices()) x(i) = wrap_angle(x(i));
}

std::vector<int> AugmentedState::angle_indices() const {
  if (coord == Coord::Polar) return {2, 4, 5};
  return {2, 5};
}

Eigen::VectorXd vector_field_m1(const AugmentedState& x,
                                const Eigen::Vector4d& U) {
  if (x.motion_case != MotionCase::M1)
    throw std::invalid_argument("vector_field_m1: state is not M1");
  const double vi = U(0), wi = U(1), vj = U(2), wj = U(3);
  const double thi = x.x(2);
  Eigen::VectorXd f(6);
  f(0) = vi * std::cos(thi);
  f(1) = vi * std::sin(thi);
  f(2) = wi;
  if (x.coord == Coord::Cartesian) {
    const double xj = x.x(3), yj = x.x(4), th = x.x(5);
    f(3) = vj * std::cos(th) + yj * wi - vi;
    f(4) = vj * std::sin(th) - xj * wi;
    f(5) = wj - wi;
  } else {
    const double rho = x.x(3), beta = x.x(4), th = x.x(5);
    check_polar_range(rho);
    const double psi = th - beta;
    f(3) = vj * std::cos(psi) - vi * std::cos(beta);
    f(4) = (vj * std::sin(psi) + vi * std::sin(beta)) / rho - wi;
    f(5) = wj - wi;
  }
  return f;
}

Eigen::VectorXd vector_field_m2(const AugmentedState& x,
                                const Eigen::Vector2d& u) {
  if (x.motion_case != MotionCase::M2)
    throw std::invalid_argument("vector_field_m2: state is not M2");
  // First six rows coincide with the M1 field with (v_j, w_j) read from the
  // state; the velocity rows are zero.
  AugmentedState x6(MotionCase::M1, x.coord, x.x.head<6>());
  const Eigen::Vector4d U(u(0), u(1), x.x(6), x.x(7));
  Eigen::VectorXd f = Eigen::VectorXd::Zero(8);
  f.head<6>() = vector_field_m1(x6, U);
  return f;
}

Eigen::VectorXd vector_field(const AugmentedState& x,
                             const Eigen::VectorXd& input) {
  if (input.size() != input_dim(x.motion_case))
    throw std::invalid_argument("vector_field: input arity mismatch");
  if (x.motion_case == MotionCase::M1)
    return vector_field_m1(x, Eigen::Vector4d(input));
  return vector_field_m2(x, Eigen::Vector2d(input));
}

Eigen::MatrixXd vector_field_jacobian(const AugmentedState& x,
                                      const Eigen::VectorXd& input) {
  const int n = x.dim();
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
  double vi, wi, vj;
  if (x.motion_case == MotionCase::M1) {
    vi = input(0);
    wi = input(1);
    vj = input(2);
  } else {
    vi = input(0);
    wi = input(1);
    vj = x.x(6);
  }
  const double thi = x.x(2);
  A(0, 2) = -vi * std::sin(thi);
  A(1, 2) = vi * std::cos(thi);
  if (x.coord == Coord::Cartesian) {
    const double th = x.x(5);
    A(3, 4) = wi;
    A(3, 5) = -vj * std::sin(th);
    A(4, 3) = -wi;
    A(4, 5) = vj * std::cos(th);
    if (x.motion_case == MotionCase::M2) {
      A(3, 6) = std::cos(th);
      A(4, 6) = std::sin(th);
      A(5, 7) = 1.0;
    }
  } else {
    const double rho = x.x(3), beta = x.x(4), th = x.x(5);
    check_polar_range(rho);
    const double psi = th - beta;
    const double cpsi = std::cos(psi), spsi = std::sin(psi);
    const double cb = std::cos(beta), sb = std::sin(beta);
    A(3, 4) = vj * spsi + vi * sb;
    A(3, 5) = -vj * spsi;
    A(4, 3) = -(vj * spsi + vi * sb) / (rho * rho);
    A(4, 4) = (-vj * cpsi + vi * cb) / rho;
    A(4, 5) = vj * cpsi / rho;
    if (x.motion_case == MotionCase::M2) {
      A(3, 6) = cpsi;
      A(4, 6) = spsi / rho;
      A(5, 7) = 1.0;
    }
  }
  return A;
}

Eigen::MatrixXd input_jacobian(const AugmentedState& x) {
  const int n = x.dim();
  const int m = input_dim(x.motion_case);
  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(n, m);
  const double thi = x.x(2);
  B(0, 0) = std::cos(thi);
  B(1, 0) = std::sin(thi);
  B(2, 1) = 1.0;
  if (x.coord == Coord::Cartesian) {
    const double xj = x.x(3), yj = x.x(4), th = x.x(5);
    B(3, 0) = -1.0;
    B(3, 1) = yj;
    B(4, 1) = -xj;
    B(5, 1) = -1.0;
    if (x.motion_case == MotionCase::M1) {
      B(3, 2) = std::cos(th);
      B(4, 2) = std::sin(th);
      B(5, 3) = 1.0;
    }
  } else {
    const double rho = x.x(3), beta = x.x(4), th = x.x(5);
    check_polar_range(rho);
    const double psi = th - beta;
    B(3, 0) = -std::cos(beta);
    B(4, 0) = std::sin(beta) / rho;
    B(4, 1) = -1.0;
    B(5, 1) = -1.0;
    if (x.motion_case == MotionCase::M1) {
      B(3, 2) = std::cos(psi);
      B(4, 2) = std::sin(psi) / rho;
      B(5, 3) = 1.0;
    }
  }
  return B;
}

AugmentedState step(const AugmentedState& x, const Eigen::VectorXd& input,
                    double dt, Integrator integrator) {
  if (!(dt > 0.0)) throw std::invalid_argument("step: dt must be positive");
  Eigen::VectorXd xn;
  if (integrator == Integrator::Euler) {
    xn = x.x + dt * vector_field(x, input);
  } else {
    auto eval = [&](const Eigen::VectorXd& v) {
      return vector_field(AugmentedState(x.motion_case, x.coord, v), input);
    };
    const Eigen::VectorXd k1 = vector_field(x, input);
    const Eigen::VectorXd k2 = eval(x.x + 0.5 * dt * k1);
    const Eigen::VectorXd k3 = eval(x.x + 0.5 * dt * k2);
    const Eigen::VectorXd k4 = eval(x.x + dt * k3);
    xn = x.x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return AugmentedState(x.motion_case, x.coord, xn);
}

Eigen::MatrixXd step_jacobian(const AugmentedState& x,
                              const Eigen::VectorXd& input, double dt,
                              Integrator integrator) {
  const int n = x.dim();
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
  if (integrator == Integrator::Euler)
    return I + dt * vector_field_jacobian(x, input);

  auto field = [&](const Eigen::VectorXd& v) {
    return vector_field(AugmentedState(x.motion_case, x.coord, v), input);
  };
  auto jac = [&](const Eigen::VectorXd& v) {
    return vector_field_jacobian(AugmentedState(x.motion_case, x.coord, v),
                                 input);
  };
  const Eigen::VectorXd k1 = field(x.x);
  const Eigen::VectorXd x2 = x.x + 0.5 * dt * k1;
  const Eigen::VectorXd k2 = field(x2);
  const Eigen::VectorXd x3 = x.x + 0.5 * dt * k2;
  const Eigen::VectorXd k3 = field(x3);
  const Eigen::VectorXd x4 = x.x + dt * k3;

  const Eigen::MatrixXd J1 = jac(x.x);
  const Eigen::MatrixXd J2 = jac(x2) * (I + 0.5 * dt * J1);
  const Eigen::MatrixXd J3 = jac(x3) * (I + 0.5 * dt * J2);
  const Eigen::MatrixXd J4 = jac(x4) * (I + dt * J3);
  return I + (dt / 6.0) * (J1 + 2.0 * J2 + 2.0 * J3 + J4);
}

Eigen::Vector3d cart_to_polar(const Eigen::Vector3d& rel) {
  const double rho = std::hypot(rel(0), rel(1));
  check_polar_range(rho);
  return {rho, wrap_angle(std::atan2(rel(1), rel(0))), wrap_angle(rel(2))};
}

Eigen::Vector3d polar_to_cart(const Eigen::Vector3d& rel) {
  check_polar_range(rel(0));
  return {rel(0) * std::cos(rel(1)), rel(0) * std::sin(rel(1)),
          wrap_angle(rel(2))};
}

Eigen::Matrix3d cart_to_polar_jacobian(const Eigen::Vector3d& rel_cart) {
  const double x = rel_cart(0), y = rel_cart(1);
  const double r2 = x * x + y * y;
  const double r = std::sqrt(r2);
  check_polar_range(r);
  Eigen::Matrix3d J;
  // clang-format off
  J << x / r,    y / r,    0,
       -y / r2,  x / r2,   0,
       0,        0,        1;
  // clang-format on
  return J;
}

AugmentedState convert_coord(const AugmentedState& x, Coord target) {
  if (x.coord == target) return x;
  Eigen::VectorXd v = x.x;
  v.segment<3>(3) = target == Coord::Polar ? cart_to_polar(x.rel())
                                           : polar_to_cart(x.rel());
  return AugmentedState(x.motion_case, target, v);
}

Eigen::Vector3d rel_cartesian(const AugmentedState& x) {
  return x.coord == Coord::Cartesian ? Eigen::Vector3d(x.rel())
                                     : polar_to_cart(x.rel());
}

Eigen::Vector3d measure_relative(const Pose2& ego, const Pose2& other) {
  const double dx = other.x - ego.x, dy = other.y - ego.y;
  const double rho = std::hypot(dx, dy);
  if (!(rho > kMinRange))
    throw SingularityError("measure_relative: coincident robots");
  return {rho, wrap_angle(std::atan2(dy, dx) - ego.theta),
          wrap_angle(other.theta - ego.theta)};
}

Eigen::Vector2d measure_landmark(const Pose2& ego, double lx, double ly,
                                 double d_i) {
  const double px = ego.x + d_i * std::cos(ego.theta);
  const double py = ego.y + d_i * std::sin(ego.theta);
  const double dx = lx - px, dy = ly - py;
  const double r = std::hypot(dx, dy);
  if (!(r > kMinRange))
    throw SingularityError("measure_landmark: landmark at sensor point");
  return {r, wrap_angle(std::atan2(dy, dx) - ego.theta)};
}

double measure_on_state(const AugmentedState& x, Channel ch) {
  const Eigen::Vector3d rel = x.rel();
  switch (ch) {
    case Channel::Range:
      if (x.coord == Coord::Polar) return rel(0);
      {
        const double rho = std::hypot(rel(0), rel(1));
        check_polar_range(rho);
        return rho;
      }
    case Channel::Bearing:
      if (x.coord == Coord::Polar) return rel(1);
      check_polar_range(std::hypot(rel(0), rel(1)));
      return std::atan2(rel(1), rel(0));
    case Channel::Orientation:
      return rel(2);
  }
  throw std::invalid_argument("measure_on_state: bad channel");
}

Eigen::RowVectorXd measure_jacobian(const AugmentedState& x, Channel ch) {
  Eigen::RowVectorXd H = Eigen::RowVectorXd::Zero(x.dim());
  if (x.coord == Coord::Polar) {
    switch (ch) {
      case Channel::Range: H(3) = 1.0; break;
      case Channel::Bearing: H(4) = 1.0; break;
      case Channel::Orientation: H(5) = 1.0; break;
    }
    return H;
  }
  const double xr = x.x(3), yr = x.x(4);
  const double r2 = xr * xr + yr * yr;
  const double r = std::sqrt(r2);
  switch (ch) {
    case Channel::Range:
      check_polar_range(r);
      H(3) = xr / r;
      H(4) = yr / r;
      break;
    case Channel::Bearing:
      check_polar_range(r);
      H(3) = -yr / r2;
      H(4) = xr / r2;
      break;
    case Channel::Orientation:
      H(5) = 1.0;
      break;
  }
  return H;
}

void NoiseConfig::validate() const {
  const double sigmas[] = {sigma_range, sigma_bearing, sigma_orientation,
                           sigma_v, sigma_w};
  for (double s : sigmas)
    if (!(s >= 0.0)) throw std::invalid_argument("NoiseConfig: sigma < 0");
  for (int i = 0; i < sigma_process.size(); ++i)
    if (!(sigma_process(i) >= 0.0))
      throw std::invalid_argument("NoiseConfig: process sigma < 0");
}

double NoiseConfig::process_sigma(int component) const {
  if (sigma_process.size() == 0) return 1e-3;
  return sigma_process(std::min<int>(component, sigma_process.size() - 1));
}

std::vector<MeasurementSample> inject_noise(
    const std::vector<MeasurementSample>& clean, const NoiseConfig& cfg) {
  cfg.validate();
  Rng rng = make_rng(cfg.seed, 0x6e6f697365ULL);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<MeasurementSample> out = clean;
  for (auto& s : out) {
    switch (s.kind) {
      case MeasKind::Range:
        s.value1 += cfg.sigma_range * gauss(rng);
        break;
      case MeasKind::Bearing:
        s.value1 += cfg.sigma_bearing * gauss(rng);
        break;
      case MeasKind::Orientation:
        s.value1 += cfg.sigma_orientation * gauss(rng);
        break;
      case MeasKind::OdomComm:
        s.value1 += cfg.sigma_v * gauss(rng);
        s.value2 += cfg.sigma_w * gauss(rng);
        break;
    }
  }
  return out;
}

std::vector<MeasurementSample> inject_outliers(
    const std::vector<MeasurementSample>& stream, double ratio,
    std::uint64_t seed) {
  if (!(ratio >= 0.0 && ratio <= 0.5))
    throw std::invalid_argument("inject_outliers: ratio must be in [0, 0.5]");
  std::vector<MeasurementSample> out = stream;
  if (ratio == 0.0) return out;

  // Outliers target the sensor channels; communicated odometry is left alone.
  std::vector<std::size_t> eligible;
  for (std::size_t i = 0; i < out.size(); ++i)
    if (out[i].kind != MeasKind::OdomComm) eligible.push_back(i);
  const std::size_t n_out = static_cast<std::size_t>(
      std::llround(ratio * static_cast<double>(eligible.size())));
  if (n_out == 0) return out;

  // Per-kind Tukey fences from the clean empirical distribution.
  struct Band {
    double lo1, lo2, hi1, hi2;
    bool valid = false;
  };
  Band bands[3];
  for (int k = 0; k < 3; ++k) {
    std::vector<double> vals;
    for (std::size_t i : eligible)
      if (static_cast<int>(out[i].kind) == k) vals.push_back(out[i].value1);
    if (vals.empty()) continue;
    const double q1 = quantile(vals, 0.25);
    const double q3 = quantile(vals, 0.75);
    double iqr = q3 - q1;
    if (iqr <= 0.0) iqr = std::max(1e-6, 1e-3 * (std::abs(q1) + 1.0));
    bands[k] = {q1 - 3.0 * iqr, q1 - 1.5 * iqr, q3 + 1.5 * iqr, q3 + 3.0 * iqr,
                true};
  }

  Rng rng = make_rng(seed, 0x6f75746cULL);
  std::vector<std::size_t> chosen;
  std::sample(eligible.begin(), eligible.end(), std::back_inserter(chosen),
              n_out, rng);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (std::size_t i : chosen) {
    const Band& b = bands[static_cast<int>(out[i].kind)];
    const bool low_side = unit(rng) < 0.5;
    const double u = unit(rng);
    out[i].value1 = low_side ? b.lo1 + u * (b.lo2 - b.lo1)
                             : b.hi1 + u * (b.hi2 - b.hi1);
    out[i].is_outlier = true;
  }
  return out;
}

std::vector<Eigen::VectorXd> assemble_case_inputs(
    MotionCase mc, const std::vector<TimedInput>& inputs,
    const std::vector<MeasurementSample>& meas, double dt) {
  std::vector<Eigen::VectorXd> out;
  out.reserve(inputs.size());
  std::size_t oi = 0;
  Eigen::Vector2d odom_j(0.0, 0.0);
  for (const auto& in : inputs) {
    while (oi < meas.size() && meas[oi].t <= in.t + 0.5 * dt) {
      if (meas[oi].kind == MeasKind::OdomComm)
        odom_j = Eigen::Vector2d(meas[oi].value1, meas[oi].value2);
      ++oi;
    }
    Eigen::VectorXd u(input_dim(mc));
    if (mc == MotionCase::M1)
      u << in.ego.v, in.ego.w, odom_j(0), odom_j(1);
    else
      u << in.ego.v, in.ego.w;
    out.push_back(u);
  }
  return out;
}

std::string kind_name(MeasKind k) {
  switch (k) {
    case MeasKind::Range: return "range";
    case MeasKind::Bearing: return "bearing";
    case MeasKind::Orientation: return "orientation";
    case MeasKind::OdomComm: return "odom_comm";
  }
  return "?";
}

MeasKind kind_from_name(const std::string& name) {
  if (name == "range") return MeasKind::Range;
  if (name == "bearing") return MeasKind::Bearing;
  if (name == "orientation") return MeasKind::Orientation;
  if (name == "odom_comm") return MeasKind::OdomComm;
  throw std::invalid_argument("unknown measurement kind: " + name);
}

void write_measurements_csv(const std::string& path,
                            const std::vector<MeasurementSample>& stream) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open " + path);
  f << "t,kind,value1,value2,sigma,is_outlier\n";
  f.precision(17);
  for (const auto& s : stream)
    f << s.t << ',' << kind_name(s.kind) << ',' << s.value1 << ',' << s.value2
      << ',' << s.sigma << ',' << (s.is_outlier ? 1 : 0) << '\n';
}

std::vector<MeasurementSample> read_measurements_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open " + path);
  std::string line;
  std::getline(f, line);  // header
  std::vector<MeasurementSample> out;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string field;
    MeasurementSample s;
    std::getline(ss, field, ',');
    s.t = std::stod(field);
    std::getline(ss, field, ',');
    s.kind = kind_from_name(field);
    std::getline(ss, field, ',');
    s.value1 = std::stod(field);
    std::getline(ss, field, ',');
    s.value2 = std::stod(field);
    std::getline(ss, field, ',');
    s.sigma = std::stod(field);
    std::getline(ss, field, ',');
    s.is_outlier = field == "1";
    out.push_back(s);
  }
  return out;
}

CalibrationModel fit_calibration(
    const std::vector<Eigen::Vector2d>& uwb,
    const std::vector<Eigen::Vector2d>& truth,
    const std::vector<Eigen::Vector2d>& positions) {
  const std::size_t n = uwb.size();
  if (truth.size() != n || positions.size() != n)
    throw std::invalid_argument("fit_calibration: length mismatch");
  if (n < 3) throw DegenerateFitError("fit_calibration: need >= 3 samples");

  Eigen::MatrixXd A(n, 3);
  Eigen::VectorXd yr(n), yb(n);
  for (std::size_t i = 0; i < n; ++i) {
    A(i, 0) = 1.0;
    A(i, 1) = positions[i](0);
    A(i, 2) = positions[i](1);
    yr(i) = truth[i](0) - uwb[i](0);
    yb(i) = wrap_angle(truth[i](1) - uwb[i](1));
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A);
  qr.setThreshold(1e-10);
  if (qr.rank() < 3)
    throw DegenerateFitError("fit_calibration: rank-deficient regressor");
  const Eigen::Vector3d ca = qr.solve(yr);
  const Eigen::Vector3d cb = qr.solve(yb);
  return {ca(0), ca(1), ca(2), cb(0), cb(1), cb(2)};
}

Eigen::Vector2d apply_calibration(const CalibrationModel& m,
                                  const Eigen::Vector2d& raw,
                                  const Eigen::Vector2d& position) {
  const double X = position(0), Y = position(1);
  return {raw(0) + m.a0 + m.a1 * X + m.a2 * Y,
          wrap_angle(raw(1) + m.b0 + m.b1 * X + m.b2 * Y)};
}

}  // namespace relpose
