#include "relpose/observability.hpp"

#include <cmath>

#include "relpose/models.hpp"
#include "relpose/parallel.hpp"
#include "relpose/se2.hpp"

namespace relpose {

namespace {

constexpr double kLocusTol = 1e-9;

bool is_polar(InfoStructure s) {
  return s == InfoStructure::RangeOnlyPolar ||
         s == InfoStructure::BearingOnlyPolar ||
         s == InfoStructure::RangeBearingNoComm;
}

void check_state(InfoStructure s, const Eigen::VectorXd& x) {
  if (x.size() != structure_state_dim(s))
    throw std::invalid_argument("observability: state dimension mismatch");
  if (is_polar(s) && !(x(0) > kMinRange))
    throw SingularityError("observability: rho <= 0");
}

// Distance of a to the nearest multiple of period.
double grid_dist(double a, double period) {
  const double k = std::round(a / period);
  return std::abs(a - k * period);
}

}  // namespace

std::string structure_name(InfoStructure s) {
  switch (s) {
    case InfoStructure::RangeOnlyPolar: return "range-only-polar";
    case InfoStructure::RangeOnlyCartesian: return "range-only-cartesian";
    case InfoStructure::BearingOnlyPolar: return "bearing-only-polar";
    case InfoStructure::BearingOnlyCartesian: return "bearing-only-cartesian";
    case InfoStructure::OrientationOnly: return "orientation-only";
    case InfoStructure::RangeBearingNoComm: return "range-bearing-nocomm";
  }
  return "?";
}

InfoStructure structure_from_name(const std::string& name) {
  for (InfoStructure s : kAllStructures)
    if (structure_name(s) == name) return s;
  throw std::invalid_argument("unknown structure: " + name);
}

int structure_state_dim(InfoStructure s) {
  return s == InfoStructure::RangeBearingNoComm ? 5 : 3;
}

int structure_full_rank(InfoStructure s) { return structure_state_dim(s); }

Codistribution codistribution_closed_form(InfoStructure s,
                                          const Eigen::VectorXd& x) {
  check_state(s, x);
  Codistribution c;
  c.state = x;
  auto add = [&](const std::string& label, const Eigen::VectorXd& row) {
    c.labels.push_back(label);
    c.rows.push_back(row);
  };

  switch (s) {
    case InfoStructure::RangeOnlyPolar: {
      // h = rho; state (rho, beta, theta).
      const double s2 = std::sin(x(1));
      const double s32 = std::sin(x(2) - x(1));
      add("dL0 h1", Eigen::Vector3d(1, 0, 0));
      add("dL1 g1 h1", Eigen::Vector3d(0, s2, 0));
      add("dL1 g3 h1", Eigen::Vector3d(0, s32, -s32));
      break;
    }
    case InfoStructure::RangeOnlyCartesian: {
      // h = (x^2 + y^2)/2; state (x, y, theta).
      const double c3 = std::cos(x(2)), s3 = std::sin(x(2));
      add("dL0 h1", Eigen::Vector3d(x(0), x(1), 0));
      add("dL1 g1 h1", Eigen::Vector3d(-1, 0, 0));
      add("dL1 g3 h1",
          Eigen::Vector3d(c3, s3, x(1) * c3 - x(0) * s3));
      break;
    }
    case InfoStructure::BearingOnlyPolar: {
      // h = beta; state (rho, beta, theta).
      const double r = x(0), r2 = r * r;
      const double s2 = std::sin(x(1)), c2 = std::cos(x(1));
      const double s32 = std::sin(x(2) - x(1)), c32 = std::cos(x(2) - x(1));
      add("dL0 h1", Eigen::Vector3d(0, 1, 0));
      add("dL1 g1 h1", Eigen::Vector3d(-s2 / r2, c2 / r, 0));
      add("dL1 g3 h1", Eigen::Vector3d(-s32 / r2, -c32 / r, c32 / r));
      break;
    }
    case InfoStructure::BearingOnlyCartesian: {
      // h = atan2(y, x); state (x, y, theta).
      const double x1 = x(0), x2 = x(1);
      const double c3 = std::cos(x(2)), s3 = std::sin(x(2));
      const double d2 = x1 * x1 + x2 * x2, d4 = d2 * d2;
      if (!(std::sqrt(d2) > kMinRange))
        throw SingularityError("observability: zero displacement");
      add("dL0 h1", Eigen::Vector3d(-x2 / d2, x1 / d2, 0));
      add("dL1 g1 h1",
          Eigen::Vector3d(-2 * x1 * x2 / d4, (x1 * x1 - x2 * x2) / d4, 0));
      add("dL1 g3 h1",
          Eigen::Vector3d(
              (s3 * (x2 * x2 - x1 * x1) + 2 * x1 * x2 * c3) / d4,
              (c3 * (x2 * x2 - x1 * x1) - 2 * x1 * x2 * s3) / d4,
              (x1 * c3 + x2 * s3) / d2));
      break;
    }
    case InfoStructure::OrientationOnly: {
      add("dL0 h1", Eigen::Vector3d(0, 0, 1));
      break;
    }
    case InfoStructure::RangeBearingNoComm: {
      // State (rho, beta, theta, v_j, w_j); h1 = rho, h2 = beta.
      const double r = x(0), r2 = r * r;
      const double s2 = std::sin(x(1)), c2 = std::cos(x(1));
      const double s32 = std::sin(x(2) - x(1)), c32 = std::cos(x(2) - x(1));
      const double v = x(3), w = x(4);
      Eigen::VectorXd row(5);
      row << 1, 0, 0, 0, 0;
      add("dL0 h1", row);
      row << 0, 1, 0, 0, 0;
      add("dL0 h2", row);
      row << 0, v * s32, -v * s32, c32, 0;
      add("dL1 g0 h1", row);
      row << -v * s32 / r2, -v * c32 / r, v * c32 / r, s32 / r, 0;
      add("dL1 g0 h2", row);
      row << 0, s2, 0, 0, 0;
      add("dL1 g1 h1", row);
      row << -s2 / r2, c2 / r, 0, 0, 0;
      add("dL1 g1 h2", row);
      // Second-order term grad(L_{g0} L_{g0} h1); its v/w columns supply the
      // velocity observability, so the rank collapses at v_j = 0.
      row << -v * v * s32 * s32 / r2,
          -2 * v * v * s32 * c32 / r + v * w * c32,
          2 * v * v * s32 * c32 / r - v * w * c32,
          2 * v * s32 * s32 / r - w * s32,
          -v * s32;
      add("dL2 g0 g0 h1", row);
      break;
    }
  }
  return c;
}

void structure_system(InfoStructure s, std::vector<FieldMap>& fields,
                      std::vector<ScalarMap>& h_list,
                      std::vector<std::string>& field_names) {
  fields.clear();
  h_list.clear();
  field_names.clear();

  if (s == InfoStructure::RangeBearingNoComm) {
    // Control-affine system with drift g0 (Brownian neighbor velocities).
    fields.push_back([](const Eigen::VectorXd& x) {
      Eigen::VectorXd f = Eigen::VectorXd::Zero(5);
      const double psi = x(2) - x(1);
      f(0) = x(3) * std::cos(psi);
      f(1) = x(3) * std::sin(psi) / x(0);
      f(2) = x(4);
      return f;
    });
    fields.push_back([](const Eigen::VectorXd& x) {
      Eigen::VectorXd f = Eigen::VectorXd::Zero(5);
      f(0) = -std::cos(x(1));
      f(1) = std::sin(x(1)) / x(0);
      return f;
    });
    fields.push_back([](const Eigen::VectorXd& x) {
      Eigen::VectorXd f = Eigen::VectorXd::Zero(5);
      f(1) = -1.0;
      f(2) = -1.0;
      return f;
    });
    field_names = {"g0", "g1", "g2"};
    h_list.push_back([](const Eigen::VectorXd& x) { return x(0); });
    h_list.push_back([](const Eigen::VectorXd& x) { return x(1); });
    return;
  }

  const bool polar = is_polar(s);
  if (polar) {
    fields.push_back([](const Eigen::VectorXd& x) {
      return Eigen::Vector3d(-std::cos(x(1)), std::sin(x(1)) / x(0), 0);
    });
    fields.push_back([](const Eigen::VectorXd&) {
      return Eigen::Vector3d(0, -1, -1);
    });
    fields.push_back([](const Eigen::VectorXd& x) {
      const double psi = x(2) - x(1);
      return Eigen::Vector3d(std::cos(psi), std::sin(psi) / x(0), 0);
    });
  } else {
    fields.push_back(
        [](const Eigen::VectorXd&) { return Eigen::Vector3d(-1, 0, 0); });
    fields.push_back([](const Eigen::VectorXd& x) {
      return Eigen::Vector3d(x(1), -x(0), -1);
    });
    fields.push_back([](const Eigen::VectorXd& x) {
      return Eigen::Vector3d(std::cos(x(2)), std::sin(x(2)), 0);
    });
  }
  fields.push_back(
      [polar](const Eigen::VectorXd&) { return Eigen::Vector3d(0, 0, 1); });
  field_names = {"g1", "g2", "g3", "g4"};

  switch (s) {
    case InfoStructure::RangeOnlyPolar:
      h_list.push_back([](const Eigen::VectorXd& x) { return x(0); });
      break;
    case InfoStructure::RangeOnlyCartesian:
      h_list.push_back([](const Eigen::VectorXd& x) {
        return 0.5 * (x(0) * x(0) + x(1) * x(1));
      });
      break;
    case InfoStructure::BearingOnlyPolar:
      h_list.push_back([](const Eigen::VectorXd& x) { return x(1); });
      break;
    case InfoStructure::BearingOnlyCartesian:
      h_list.push_back(
          [](const Eigen::VectorXd& x) { return std::atan2(x(1), x(0)); });
      break;
    case InfoStructure::OrientationOnly:
      h_list.push_back([](const Eigen::VectorXd& x) { return x(2); });
      break;
    default:
      break;
  }
}

Codistribution codistribution_numeric(
    const std::vector<FieldMap>& fields, const std::vector<ScalarMap>& h_list,
    const Eigen::VectorXd& x, int max_order,
    const std::vector<std::string>& field_names, double outer_step,
    double inner_step) {
  if (max_order < 0 || max_order > 2)
    throw std::invalid_argument("codistribution_numeric: max_order <= 2");

  auto name_of = [&](std::size_t k) {
    if (k < field_names.size()) return field_names[k];
    return "g" + std::to_string(k + 1);
  };

  // Directional derivative of F along field g, frozen at the evaluation point.
  auto lie = [&](const ScalarMap& F, const FieldMap& g) {
    return [&, F, g](const Eigen::VectorXd& y) {
      const Eigen::VectorXd dir = g(y);
      const double d = inner_step;
      return (F(y + d * dir) - F(y - d * dir)) / (2.0 * d);
    };
  };

  auto grad = [&](const ScalarMap& F) {
    Eigen::VectorXd gvec(x.size());
    for (int i = 0; i < x.size(); ++i) {
      Eigen::VectorXd xp = x, xm = x;
      xp(i) += outer_step;
      xm(i) -= outer_step;
      const double fp = F(xp), fm = F(xm);
      if (!std::isfinite(fp) || !std::isfinite(fm))
        throw NumericFailure("codistribution_numeric: non-finite evaluation");
      gvec(i) = (fp - fm) / (2.0 * outer_step);
    }
    return gvec;
  };

  Codistribution c;
  c.state = x;
  for (std::size_t i = 0; i < h_list.size(); ++i) {
    const std::string hname = " h" + std::to_string(i + 1);
    c.rows.push_back(grad(h_list[i]));
    c.labels.push_back("dL0" + hname);
    if (max_order < 1) continue;
    for (std::size_t a = 0; a < fields.size(); ++a) {
      ScalarMap la = lie(h_list[i], fields[a]);
      c.rows.push_back(grad(la));
      c.labels.push_back("dL1 " + name_of(a) + hname);
      if (max_order < 2) continue;
      for (std::size_t b = 0; b < fields.size(); ++b) {
        ScalarMap lab = lie(la, fields[b]);
        c.rows.push_back(grad(lab));
        c.labels.push_back("dL2 " + name_of(a) + " " + name_of(b) + hname);
      }
    }
  }
  return c;
}

RankReport rank_of(const Codistribution& c, double tol) {
  if (c.rows.empty())
    throw std::invalid_argument("rank_of: empty codistribution");
  const int n = static_cast<int>(c.rows[0].size());
  Eigen::MatrixXd M(static_cast<int>(c.rows.size()), n);
  for (std::size_t i = 0; i < c.rows.size(); ++i)
    M.row(static_cast<int>(i)) = c.rows[i].transpose();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(M);
  const Eigen::VectorXd sv = svd.singularValues();

  RankReport r;
  r.tol = tol;
  for (int i = 0; i < sv.size(); ++i) {
    r.singular_values.push_back(sv(i));
    if (sv(i) > tol * sv(0)) ++r.rank;
  }
  r.degenerate = r.rank < n;
  return r;
}

RankReport degeneracy_probe(InfoStructure s, const Eigen::VectorXd& x) {
  RankReport r = rank_of(codistribution_closed_form(s, x));
  std::string on;
  switch (s) {
    case InfoStructure::RangeOnlyPolar:
      if (grid_dist(x(1), M_PI) < kLocusTol) on = "x2 = n*pi";
      else if (grid_dist(x(1) - x(2), M_PI) < kLocusTol) on = "x2 - x3 = n*pi";
      break;
    case InfoStructure::RangeOnlyCartesian:
      if (std::abs(x(1)) < kLocusTol) on = "x2 = 0";
      else if (grid_dist(std::atan2(x(1), x(0)) - x(2), M_PI) < kLocusTol)
        on = "atan(x2/x1) - x3 = n*pi";
      break;
    case InfoStructure::BearingOnlyPolar:
      if (grid_dist(x(1), M_PI) < kLocusTol) on = "x2 = n*pi";
      else if (grid_dist(x(2) - x(1) - M_PI / 2, M_PI) < kLocusTol)
        on = "cos(x3 - x2) = 0";
      break;
    case InfoStructure::BearingOnlyCartesian:
      // The published secondary condition x3 = n*pi does not zero the span;
      // the re-derived locus is cos(theta - bearing) = 0, stated here in
      // Cartesian form.
      if (std::abs(x(1)) < kLocusTol) on = "x2 = 0";
      else if (std::abs(x(0) * std::cos(x(2)) + x(1) * std::sin(x(2))) <
               kLocusTol)
        on = "x1*cos(x3) + x2*sin(x3) = 0";
      break;
    case InfoStructure::OrientationOnly:
      on = "entire state space (rank 1 < 3)";
      break;
    case InfoStructure::RangeBearingNoComm:
      if (std::abs(x(3)) < kLocusTol) on = "v_j = 0";
      else if (grid_dist(x(2) - x(1), M_PI) < kLocusTol)
        on = "x3 - x2 = n*pi";
      break;
  }
  r.locus_description = on.empty() ? "off-locus" : "on locus: " + on;
  return r;
}

Eigen::VectorXd random_nondegenerate_state(InfoStructure s, Rng& rng) {
  std::uniform_real_distribution<double> urho(0.5, 5.0);
  std::uniform_real_distribution<double> uang(-M_PI, M_PI);
  std::uniform_real_distribution<double> uvel(-1.0, 1.0);
  const double margin = 0.15;
  for (int attempt = 0; attempt < 1000; ++attempt) {
    Eigen::VectorXd x(structure_state_dim(s));
    x(0) = urho(rng);
    x(1) = uang(rng);
    x(2) = uang(rng);
    if (s == InfoStructure::RangeBearingNoComm) {
      x(3) = uvel(rng);
      x(4) = uvel(rng);
    }
    if (s == InfoStructure::RangeOnlyCartesian ||
        s == InfoStructure::BearingOnlyCartesian ||
        s == InfoStructure::OrientationOnly) {
      // Interpret as polar then convert, so the displacement margin carries.
      const double rho = x(0), beta = x(1);
      const Eigen::Vector3d cart(rho * std::cos(beta), rho * std::sin(beta),
                                 x(2));
      x.head<3>() = cart;
      if (std::abs(cart(1)) < margin) continue;
      if (s == InfoStructure::RangeOnlyCartesian &&
          grid_dist(std::atan2(cart(1), cart(0)) - cart(2), M_PI) < margin)
        continue;
      if (s == InfoStructure::BearingOnlyCartesian &&
          grid_dist(std::atan2(cart(1), cart(0)) - cart(2) + M_PI / 2, M_PI) <
              margin)
        continue;
      return x;
    }
    if (grid_dist(x(1), M_PI) < margin) continue;
    if (s == InfoStructure::RangeOnlyPolar &&
        grid_dist(x(1) - x(2), M_PI) < margin)
      continue;
    if (s == InfoStructure::BearingOnlyPolar &&
        grid_dist(x(2) - x(1) - M_PI / 2, M_PI) < margin)
      continue;
    if (s == InfoStructure::RangeBearingNoComm) {
      if (std::abs(x(3)) < margin) continue;
      if (grid_dist(x(2) - x(1), M_PI) < margin) continue;
    }
    return x;
  }
  throw NumericFailure("random_nondegenerate_state: rejection sampling stuck");
}

Eigen::VectorXd random_on_locus_state(InfoStructure s, Rng& rng) {
  std::uniform_real_distribution<double> urho(0.5, 5.0);
  std::uniform_real_distribution<double> uang(-M_PI, M_PI);
  std::uniform_real_distribution<double> uvel(-1.0, 1.0);
  std::uniform_int_distribution<int> coin(0, 1);

  Eigen::VectorXd x(structure_state_dim(s));
  const double rho = urho(rng);
  const double a = uang(rng);
  switch (s) {
    case InfoStructure::RangeOnlyPolar:
      x << rho, 0.0, a;                       // x2 = 0
      if (coin(rng)) x << rho, a, a;          // x2 - x3 = 0
      break;
    case InfoStructure::RangeOnlyCartesian:
      if (coin(rng)) {
        x << rho, 0.0, a;                     // y = 0
      } else {
        const double b = uang(rng);
        x << rho * std::cos(b), rho * std::sin(b), b;  // atan(y/x) = theta
      }
      break;
    case InfoStructure::BearingOnlyPolar:
      if (coin(rng)) x << rho, 0.0, a;                  // x2 = 0
      else x << rho, a, wrap_angle(a + M_PI / 2);       // cos(x3 - x2) = 0
      break;
    case InfoStructure::BearingOnlyCartesian:
      if (coin(rng)) {
        x << rho, 0.0, a;                               // y = 0
      } else {
        const double b = uang(rng);
        x << rho * std::cos(b), rho * std::sin(b),
            wrap_angle(b + M_PI / 2);                   // cos(theta-beta) = 0
      }
      break;
    case InfoStructure::OrientationOnly:
      x << rho * std::cos(a), rho * std::sin(a), uang(rng);
      break;
    case InfoStructure::RangeBearingNoComm:
      if (coin(rng)) {
        x << rho, a, uang(rng), 0.0, uvel(rng);         // v_j = 0
      } else {
        x << rho, a, a, 0.5 + urho(rng) * 0.1, uvel(rng);  // psi = 0
      }
      break;
  }
  return x;
}

std::vector<RankTableRow> observability_table(
    const std::vector<InfoStructure>& structures, int n_states,
    std::uint64_t seed, int threads) {
  std::vector<RankTableRow> rows(structures.size() *
                                 static_cast<std::size_t>(n_states));
  parallel::for_each_index(
      rows.size(),
      [&](std::size_t idx) {
        const InfoStructure s = structures[idx / n_states];
        Rng rng = make_rng(seed, idx);
        const Eigen::VectorXd x = random_nondegenerate_state(s, rng);
        const RankReport r = rank_of(codistribution_closed_form(s, x));
        rows[idx] = {s, x, r.rank,
                     r.singular_values.empty() ? 0.0
                                               : r.singular_values.back(),
                     r.degenerate};
      },
      threads);
  return rows;
}

}  // namespace relpose
