#pragma once

// Independent reference implementations and seeded generators used by the
// unit and acceptance tests. Nothing here calls into the library code it is
// meant to check.

#include "htgnn/common.hpp"
#include "htgnn/hetero_gcn.hpp"
#include "htgnn/tda_persistence.hpp"

#include <cstdint>
#include <random>
#include <string>
#include <tuple>
#include <vector>

namespace testsupport {

using htgnn::Matrix;

// Pairwise distances 0.2 (0-1), 0.4 (0-2), 0.6 (1-2).
htgnn::DistanceMatrix three_point_fixture();
// Square 0-1-2-3 with sides 0.3 and diagonals 0.5.
htgnn::DistanceMatrix four_cycle_fixture();

std::string read_golden(const std::string& name);

// Random symmetric distance matrix with entries in (0, 1).
htgnn::DistanceMatrix random_distances(int n, std::uint64_t seed);

// Points in the plane with Euclidean distances rescaled into [0, 1]; gives
// filtrations with real loops.
htgnn::DistanceMatrix planar_distances(int n, std::uint64_t seed);

struct Bar {
    int dim;
    double birth;
    double death;  // +inf when essential
    bool operator<(const Bar& o) const { return std::tie(dim, birth, death) < std::tie(o.dim, o.birth, o.death); }
    bool operator==(const Bar& o) const { return dim == o.dim && birth == o.birth && death == o.death; }
};

// Brute-force Rips persistence: subsets enumerated by bitmask, dense Z/2
// boundary matrix, textbook reduction with a linear pivot search. Bars of
// dimension < max_simplex_dim, zero-length bars dropped, sorted.
std::vector<Bar> naive_diagram(const htgnn::DistanceMatrix& d, double r_max, int max_simplex_dim);

std::vector<Bar> bars_of(const std::vector<htgnn::PersistencePair>& pairs);

// Checks sum_m (-1)^m beta_m(r) == sum_m (-1)^m #m-simplices <= r at every
// distinct filtration value r, given bars of every dimension including the
// top one. Returns the number of values checked, or -1 on the first failure.
long euler_poincare_check(const htgnn::Filtration& f, const std::vector<htgnn::PersistencePair>& pairs);

// Prim's algorithm on the dense matrix; sorted edge weights of a minimum
// spanning forest restricted to weights <= r_max.
std::vector<double> prim_weights(const htgnn::DistanceMatrix& d, double r_max);

// Connected components of the graph {d <= r_max} by depth-first search.
int threshold_components(const htgnn::DistanceMatrix& d, double r_max);

// Plain dense GCN on one relation written with explicit loops.
std::vector<std::vector<double>> reference_gcn_logits(const std::vector<Matrix>& weights, const Matrix& classifier,
                                                      const htgnn::EdgeSet& edges, const Matrix& features);

// Loss of the two-relation model evaluated through the library forward pass
// (used by the finite-difference checks).
double model_loss(const htgnn::GcnModel& model, const htgnn::HeteroGraph& graph, const std::vector<int>& labels,
                  const htgnn::DropoutMasks& masks, double weight_decay);

// Random graph with both relations populated.
htgnn::HeteroGraph random_graph(int n, int d, double edge_prob, std::uint64_t seed);

htgnn::GcnModel random_model(std::vector<int> dims, double alpha_q, double alpha_p, std::uint64_t seed);

// Max relative error between analytic and central-difference gradients over
// every weight entry: |g - fd| / max(|g|, |fd|, 1e-8).
double gradient_check(const htgnn::GcnModel& model, const htgnn::HeteroGraph& graph, const std::vector<int>& labels,
                      const htgnn::DropoutMasks& masks, double weight_decay, double step);

// Interbank totals with liabilities rescaled to the asset total; some banks
// have zero on either side.
std::pair<htgnn::Vector, htgnn::Vector> draw_totals(int n, std::mt19937_64& rng, double zero_prob);
// A zero-diagonal matrix exists iff no bank holds more than the rest of the market.
bool self_loop_free_exists(const htgnn::Vector& assets, const htgnn::Vector& liabilities);
// Redraws until the instance admits a zero-diagonal solution.
std::pair<htgnn::Vector, htgnn::Vector> balanced_totals(int n, std::uint64_t seed, double zero_prob = 0.3);

std::string temp_dir(const std::string& name);

}  // namespace testsupport
