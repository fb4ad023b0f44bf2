#pragma once

// Vietoris-Rips persistent homology over Z/2 on cosine distances between
// bank feature vectors, and the persistence edge set derived from it.

#include "htgnn/common.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

namespace htgnn {

// Symmetric, zero diagonal, entries finite and in [0, 2].
struct DistanceMatrix {
    Matrix values;

    Eigen::Index size() const { return values.rows(); }
    double operator()(Eigen::Index i, Eigen::Index j) const { return values(i, j); }

    // Throws ValidationError when the invariants above fail.
    void validate() const;
};

struct PhConfig {
    double r0 = 0.0;
    double r_max = 0.7;
    double tau = 0.05;
    int max_homology_dim = 2;

    int max_simplex_dim() const { return max_homology_dim + 1; }
    void validate() const;
};

struct Simplex {
    std::array<std::int32_t, 4> vertices{};  // sorted, first dim+1 used
    std::int32_t dim = 0;
    double value = 0.0;

    std::int32_t vertex_count() const { return dim + 1; }
};

// Ordered by (value, dim, lexicographic vertices); faces precede cofaces.
struct Filtration {
    std::vector<Simplex> simplices;
    double r_max = 0.0;
    int max_simplex_dim = 1;

    std::size_t size() const { return simplices.size(); }
};

struct PersistencePair {
    int dim = 0;
    double birth = 0.0;
    double death = 0.0;  // +inf for essential classes
    EdgeSet representative;
    std::size_t birth_index = 0;
    std::optional<std::size_t> death_index;

    bool infinite() const { return !death_index.has_value(); }
};

struct ReductionOptions {
    // Also report classes in the top simplex dimension. These are not
    // reliable homology (no cofaces were built) and carry no representative;
    // needed only for Euler-characteristic bookkeeping.
    bool include_top_dimension = false;
    // Skip basis-change tracking when only the diagram is wanted.
    bool representatives = true;
};

// 1 - cos(x_i, x_j), clamped to [0, 2], exact zero diagonal. Throws
// ValidationError naming the first zero-norm row.
DistanceMatrix cosine_distance_matrix(const Matrix& x);

// Operational limit on filtration size; larger complexes throw
// std::runtime_error instead of exhausting memory.
inline constexpr std::size_t kMaxFiltrationSize = 30'000'000;

// Every clique of the r_max-threshold graph with at most
// max_homology_dim + 2 vertices, valued by its largest pairwise distance
// (raised to r0 when smaller).
Filtration build_rips_filtration(const DistanceMatrix& d, const PhConfig& config);

// Left-to-right column reduction of the boundary matrix with a pivot lookup
// table. Zero-length bars are dropped. Representatives of dim >= 1 come from
// the basis-change column of the birth simplex.
std::vector<PersistencePair> reduce_boundary_matrix(const Filtration& filtration,
                                                    const ReductionOptions& options = {});

// Lifespan death - birth, or r_max - birth for essential classes; keeps
// pairs with lifespan > tau and dim <= max_homology_dim.
std::vector<PersistencePair> filter_persistent(const std::vector<PersistencePair>& pairs,
                                               const PhConfig& config);

// Kruskal on the complete graph; ties by (weight, smaller, larger endpoint).
EdgeSet mst_edges(const DistanceMatrix& d);

// Union of the H0 merge edges (MST edges whose bar outlives tau inside the
// r_max window) and the representative edges of every persistent H1/H2
// class. Edge weight is the distance between endpoints.
EdgeSet extract_edges(const std::vector<PersistencePair>& persistent, const DistanceMatrix& d,
                      const PhConfig& config);

// Whole chain: distances -> filtration -> reduction -> filter -> edges.
struct PersistenceGraph {
    std::vector<PersistencePair> diagram;
    std::vector<PersistencePair> persistent;
    EdgeSet edges;
    std::size_t n_simplices = 0;
};

PersistenceGraph build_persistence_graph(const DistanceMatrix& d, const PhConfig& config);

}  // namespace htgnn
