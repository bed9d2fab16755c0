#pragma once

// Nonlinear observability analysis for the inter-robot relative pose system:
// closed-form Lie-derivative codistributions per information structure,
// a generic finite-difference Lie-derivative engine for cross-checking them,
// SVD-based numerical rank, and degenerate-locus probing.
//
// With communicated odometry the analysis state is the 3-dim relative block
// ((rho, beta, theta) or (x, y, theta)); without communication it is the
// 5-dim augmented state (rho, beta, theta, v_j, w_j).
//
// The closed forms are recomputed symbolically from the canonical vector
// fields in models.hpp; published spanning vectors with inconsistent entries
// were re-derived, and the numeric engine arbitrates. Expected generic ranks:
// range-only 3, bearing-only 3, orientation-only 1, range+bearing without
// communication 5 (requires v_j != 0).

#include <Eigen/Dense>

#include <functional>
#include <string>
#include <vector>

#include "relpose/random.hpp"

namespace relpose {

enum class InfoStructure {
  RangeOnlyPolar,
  RangeOnlyCartesian,
  BearingOnlyPolar,
  BearingOnlyCartesian,
  OrientationOnly,
  RangeBearingNoComm,
};

constexpr InfoStructure kAllStructures[] = {
    InfoStructure::RangeOnlyPolar,     InfoStructure::RangeOnlyCartesian,
    InfoStructure::BearingOnlyPolar,   InfoStructure::BearingOnlyCartesian,
    InfoStructure::OrientationOnly,    InfoStructure::RangeBearingNoComm,
};

std::string structure_name(InfoStructure s);
InfoStructure structure_from_name(const std::string& name);
int structure_state_dim(InfoStructure s);
int structure_full_rank(InfoStructure s);

struct Codistribution {
  std::vector<Eigen::VectorXd> rows;
  std::vector<std::string> labels;  // e.g. "dL1 g1 h1", "dL2 g0 g0 h1"
  Eigen::VectorXd state;
};

struct RankReport {
  int rank = 0;
  std::vector<double> singular_values;
  double tol = 1e-8;
  bool degenerate = false;
  std::string locus_description;
};

// Rows populated per the (re-derived) spans; throws SingularityError at
// rho <= 0 for polar-coordinate structures.
Codistribution codistribution_closed_form(InfoStructure s,
                                          const Eigen::VectorXd& x);

using ScalarMap = std::function<double(const Eigen::VectorXd&)>;
using FieldMap = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

// Nested central finite differences: gradients of Lie derivatives
// grad(L_{g_a} ... h) up to max_order (<= 2). Labels follow the closed-form
// scheme so rows can be matched between the two constructions.
Codistribution codistribution_numeric(const std::vector<FieldMap>& fields,
                                      const std::vector<ScalarMap>& h_list,
                                      const Eigen::VectorXd& x, int max_order,
                                      const std::vector<std::string>& field_names = {},
                                      double outer_step = 1e-5,
                                      double inner_step = 1e-5);

// The canonical fields/measurements of a structure, for the numeric engine.
void structure_system(InfoStructure s, std::vector<FieldMap>& fields,
                      std::vector<ScalarMap>& h_list,
                      std::vector<std::string>& field_names);

// SVD rank with relative tolerance; degenerate when rank < state dimension.
RankReport rank_of(const Codistribution& c, double tol = 1e-8);

// Rank at x plus whether x lies on a known degenerate locus (angle
// tolerance 1e-9) and which one.
RankReport degeneracy_probe(InfoStructure s, const Eigen::VectorXd& x);

// Random states for rank tables: off-locus with a safety margin, or exactly
// on a (uniformly chosen) degenerate locus. OrientationOnly has no full-rank
// locus; its on-locus generator returns a generic state.
Eigen::VectorXd random_nondegenerate_state(InfoStructure s, Rng& rng);
Eigen::VectorXd random_on_locus_state(InfoStructure s, Rng& rng);

struct RankTableRow {
  InfoStructure structure;
  Eigen::VectorXd state;
  int rank;
  double min_singular_value;
  bool degenerate;
};

// Closed-form ranks at n random non-degenerate states per structure.
// Deterministic given seed regardless of thread count.
std::vector<RankTableRow> observability_table(
    const std::vector<InfoStructure>& structures, int n_states,
    std::uint64_t seed, int threads = 0);

}  // namespace relpose
