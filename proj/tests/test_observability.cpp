#include <doctest.h>

#include <cmath>

#include "relpose/observability.hpp"
#include "relpose/se2.hpp"

using namespace relpose;

namespace {

// Rank of the label-prefix subset (dL0 / dL0+dL1 / all).
int rank_up_to_order(const Codistribution& c, int order) {
  Codistribution sub;
  sub.state = c.state;
  for (std::size_t i = 0; i < c.rows.size(); ++i) {
    const int row_order = c.labels[i][2] - '0';  // "dLk ..."
    if (row_order <= order) {
      sub.rows.push_back(c.rows[i]);
      sub.labels.push_back(c.labels[i]);
    }
  }
  return rank_of(sub).rank;
}

}  // namespace

TEST_CASE("closed-form spans at pinned states") {
  const Codistribution ori = codistribution_closed_form(
      InfoStructure::OrientationOnly, Eigen::Vector3d(2.0, -1.0, 0.7));
  REQUIRE(ori.rows.size() == 1);
  CHECK(ori.rows[0].isApprox(Eigen::Vector3d(0, 0, 1)));

  const Codistribution rp = codistribution_closed_form(
      InfoStructure::RangeOnlyPolar, Eigen::Vector3d(1.0, M_PI / 4, M_PI / 2));
  REQUIRE(rp.rows.size() == 3);
  CHECK(rp.rows[0].isApprox(Eigen::Vector3d(1, 0, 0)));
  CHECK(rp.rows[1].isApprox(Eigen::Vector3d(0, std::sin(M_PI / 4), 0)));
  CHECK(rp.rows[2].isApprox(
      Eigen::Vector3d(0, std::sin(M_PI / 4), -std::sin(M_PI / 4))));

  Eigen::VectorXd bad(3);
  bad << 0.0, 0.1, 0.2;
  CHECK_THROWS_AS(
      codistribution_closed_form(InfoStructure::RangeOnlyPolar, bad),
      SingularityError);
}

TEST_CASE("numeric engine recovers the linear observability matrix") {
  Eigen::Matrix3d A;
  A << 0.2, 1.0, -0.5, 0.0, -0.3, 0.8, 0.4, 0.0, 0.1;
  const Eigen::Vector3d c(1.0, -2.0, 0.5);
  std::vector<FieldMap> fields = {
      [A](const Eigen::VectorXd& x) -> Eigen::VectorXd { return A * x; }};
  std::vector<ScalarMap> hs = {
      [c](const Eigen::VectorXd& x) { return c.dot(x); }};
  const Eigen::Vector3d x0(0.3, -0.7, 1.1);
  const Codistribution num = codistribution_numeric(fields, hs, x0, 1, {"g0"});
  REQUIRE(num.rows.size() == 2);
  CHECK((num.rows[0] - c).norm() < 1e-7);
  CHECK((num.rows[1] - (A.transpose() * c)).norm() < 1e-7);

  const Codistribution order0 =
      codistribution_numeric(fields, hs, x0, 0, {"g0"});
  REQUIRE(order0.rows.size() == 1);
  CHECK(order0.labels[0] == "dL0 h1");
}

TEST_CASE("closed form matches the numeric engine at random states") {
  for (InfoStructure s : kAllStructures) {
    std::vector<FieldMap> fields;
    std::vector<ScalarMap> hs;
    std::vector<std::string> names;
    structure_system(s, fields, hs, names);
    const int max_order = s == InfoStructure::RangeBearingNoComm ? 2 : 1;

    Rng rng = make_rng(101 + static_cast<int>(s));
    for (int i = 0; i < 20; ++i) {
      const Eigen::VectorXd x = random_nondegenerate_state(s, rng);
      const Codistribution cf = codistribution_closed_form(s, x);
      const Codistribution num =
          codistribution_numeric(fields, hs, x, max_order, names);
      for (std::size_t r = 0; r < cf.rows.size(); ++r) {
        bool found = false;
        for (std::size_t q = 0; q < num.rows.size(); ++q) {
          if (num.labels[q] != cf.labels[r]) continue;
          found = true;
          CHECK((num.rows[q] - cf.rows[r]).cwiseAbs().maxCoeff() < 1e-5);
        }
        CHECK(found);
      }
    }
  }
}

TEST_CASE("ranks of Table II reproduce at generic states") {
  const RankReport r1 = rank_of(codistribution_closed_form(
      InfoStructure::RangeOnlyPolar, Eigen::Vector3d(1.0, 0.7, 1.3)));
  CHECK(r1.rank == 3);
  CHECK_FALSE(r1.degenerate);

  const RankReport r2 = rank_of(codistribution_closed_form(
      InfoStructure::OrientationOnly, Eigen::Vector3d(1.0, 0.7, 1.3)));
  CHECK(r2.rank == 1);
  CHECK(r2.degenerate);

  Eigen::VectorXd x5(5);
  x5 << 1.2, 0.7, 2.1, 0.5, -0.3;
  const RankReport r5 = rank_of(
      codistribution_closed_form(InfoStructure::RangeBearingNoComm, x5));
  CHECK(r5.rank == 5);

  Rng rng = make_rng(7);
  for (InfoStructure s : kAllStructures) {
    const int expected = s == InfoStructure::OrientationOnly      ? 1
                         : s == InfoStructure::RangeBearingNoComm ? 5
                                                                  : 3;
    for (int i = 0; i < 100; ++i) {
      const Eigen::VectorXd x = random_nondegenerate_state(s, rng);
      CHECK(rank_of(codistribution_closed_form(s, x)).rank == expected);
    }
  }
}

TEST_CASE("degeneracy probe flags the published loci") {
  const RankReport on1 = degeneracy_probe(InfoStructure::RangeOnlyPolar,
                                          Eigen::Vector3d(1.0, 0.0, 0.5));
  CHECK(on1.rank < 3);
  CHECK(on1.degenerate);
  CHECK(on1.locus_description.find("x2 = n*pi") != std::string::npos);

  const RankReport on2 = degeneracy_probe(InfoStructure::RangeOnlyPolar,
                                          Eigen::Vector3d(1.0, 0.7, 0.7));
  CHECK(on2.rank < 3);
  CHECK(on2.locus_description.find("x2 - x3") != std::string::npos);

  const RankReport off = degeneracy_probe(InfoStructure::RangeOnlyPolar,
                                          Eigen::Vector3d(1.0, 0.7, 1.3));
  CHECK(off.rank == 3);
  CHECK_FALSE(off.degenerate);
  CHECK(off.locus_description == "off-locus");

  Rng rng = make_rng(23);
  for (InfoStructure s : kAllStructures) {
    const int full = structure_full_rank(s);
    for (int i = 0; i < 20; ++i) {
      const Eigen::VectorXd x = random_on_locus_state(s, rng);
      const RankReport r = degeneracy_probe(s, x);
      CHECK(r.rank < full);
      CHECK(r.degenerate);
    }
  }
}

TEST_CASE("no-communication structure needs nonzero neighbor velocity") {
  Rng rng = make_rng(31);
  std::uniform_real_distribution<double> uang(-M_PI, M_PI);
  for (int i = 0; i < 50; ++i) {
    Eigen::VectorXd x(5);
    x << 1.0 + i * 0.05, uang(rng), uang(rng), 0.0, 0.4;  // v_j = 0
    const Codistribution cf =
        codistribution_closed_form(InfoStructure::RangeBearingNoComm, x);

    // Without the second-order row the first-order span loses rank at
    // v_j = 0, and the w_j column vanishes entirely.
    Codistribution first_order;
    first_order.state = x;
    for (std::size_t r = 0; r < cf.rows.size(); ++r)
      if (cf.labels[r].rfind("dL2", 0) != 0) {
        first_order.rows.push_back(cf.rows[r]);
        first_order.labels.push_back(cf.labels[r]);
        CHECK(cf.rows[r](4) == doctest::Approx(0.0));
      }
    CHECK(rank_of(first_order).rank < 5);
  }
}

TEST_CASE("rank monotonicity in the derivative order") {
  Rng rng = make_rng(37);
  for (InfoStructure s : kAllStructures) {
    for (int i = 0; i < 50; ++i) {
      const Eigen::VectorXd x = random_nondegenerate_state(s, rng);
      const Codistribution cf = codistribution_closed_form(s, x);
      const int r0 = rank_up_to_order(cf, 0);
      const int r1 = rank_up_to_order(cf, 1);
      const int r2 = rank_up_to_order(cf, 2);
      CHECK(r0 <= r1);
      CHECK(r1 <= r2);
    }
  }
}

TEST_CASE("observability_table is deterministic across thread counts") {
  const std::vector<InfoStructure> all(std::begin(kAllStructures),
                                       std::end(kAllStructures));
  const auto serial = observability_table(all, 25, 99, 1);
  const auto parallel = observability_table(all, 25, 99, 0);
  REQUIRE(serial.size() == parallel.size());
  for (std::size_t i = 0; i < serial.size(); ++i) {
    CHECK(serial[i].rank == parallel[i].rank);
    CHECK(serial[i].state == parallel[i].state);
  }
}
