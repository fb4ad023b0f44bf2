#include "htgnn/tda_persistence.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <unordered_map>

namespace htgnn {

void DistanceMatrix::validate() const {
    const auto n = values.rows();
    if (values.cols() != n) throw ValidationError("distance matrix is not square");
    for (Eigen::Index i = 0; i < n; ++i) {
        if (values(i, i) != 0.0) throw ValidationError("distance matrix diagonal must be zero");
        for (Eigen::Index j = i + 1; j < n; ++j) {
            const double v = values(i, j);
            if (!std::isfinite(v) || v < 0.0 || v > 2.0) {
                throw ValidationError("distance (" + std::to_string(i) + "," + std::to_string(j) +
                                      ") outside [0, 2]");
            }
            if (values(j, i) != v) throw ValidationError("distance matrix is not symmetric");
        }
    }
}

void PhConfig::validate() const {
    if (!(r0 >= 0.0 && r0 < r_max)) throw ValidationError("require 0 <= r0 < r_max");
    if (!(tau >= 0.0)) throw ValidationError("tau must be non-negative");
    if (max_homology_dim < 0 || max_homology_dim > 2) {
        throw ValidationError("max_homology_dim must be 0, 1 or 2");
    }
}

DistanceMatrix cosine_distance_matrix(const Matrix& x) {
    const auto n = x.rows();
    Vector norms(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        norms[i] = x.row(i).norm();
        if (!(norms[i] > 0.0) || !std::isfinite(norms[i])) {
            throw ValidationError("bank index " + std::to_string(i) +
                                  " has a zero-norm or non-finite feature vector");
        }
    }
    const Matrix gram = x * x.transpose();
    DistanceMatrix d{Matrix::Zero(n, n)};
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = i + 1; j < n; ++j) {
            const double v = std::clamp(1.0 - gram(i, j) / (norms[i] * norms[j]), 0.0, 2.0);
            d.values(i, j) = v;
            d.values(j, i) = v;
        }
    }
    return d;
}

namespace {

void expand_cliques(const DistanceMatrix& d, const std::vector<std::vector<std::int32_t>>& upper,
                    Simplex& current, double diameter, const std::vector<std::int32_t>& candidates,
                    int max_dim, double r0, std::vector<Simplex>& out) {
    for (std::size_t c = 0; c < candidates.size(); ++c) {
        const std::int32_t v = candidates[c];
        double diam = diameter;
        for (std::int32_t k = 0; k <= current.dim; ++k) {
            diam = std::max(diam, d(current.vertices[static_cast<std::size_t>(k)], v));
        }
        Simplex next = current;
        next.dim = current.dim + 1;
        next.vertices[static_cast<std::size_t>(next.dim)] = v;
        next.value = std::max(diam, r0);
        if (out.size() >= kMaxFiltrationSize) {
            throw std::runtime_error("filtration exceeds " + std::to_string(kMaxFiltrationSize) +
                                     " simplices; lower max_homology_dim or r_max");
        }
        out.push_back(next);
        if (next.dim == max_dim) continue;
        // Candidates after v that are also neighbours of v.
        std::vector<std::int32_t> narrowed;
        const auto& nv = upper[static_cast<std::size_t>(v)];
        std::set_intersection(candidates.begin() + static_cast<std::ptrdiff_t>(c) + 1, candidates.end(),
                              nv.begin(), nv.end(), std::back_inserter(narrowed));
        if (!narrowed.empty()) expand_cliques(d, upper, next, diam, narrowed, max_dim, r0, out);
    }
}

bool simplex_less(const Simplex& a, const Simplex& b) {
    if (a.value != b.value) return a.value < b.value;
    if (a.dim != b.dim) return a.dim < b.dim;
    return std::lexicographical_compare(a.vertices.begin(), a.vertices.begin() + a.vertex_count(),
                                        b.vertices.begin(), b.vertices.begin() + b.vertex_count());
}

}  // namespace

Filtration build_rips_filtration(const DistanceMatrix& d, const PhConfig& config) {
    config.validate();
    const auto n = static_cast<std::int32_t>(d.size());
    Filtration f;
    f.r_max = config.r_max;
    f.max_simplex_dim = config.max_simplex_dim();

    std::vector<std::vector<std::int32_t>> upper(static_cast<std::size_t>(n));
    for (std::int32_t i = 0; i < n; ++i) {
        for (std::int32_t j = i + 1; j < n; ++j) {
            if (d(i, j) <= config.r_max) upper[static_cast<std::size_t>(i)].push_back(j);
        }
    }
    for (std::int32_t i = 0; i < n; ++i) {
        Simplex vertex;
        vertex.vertices[0] = i;
        vertex.dim = 0;
        vertex.value = std::max(0.0, config.r0);
        f.simplices.push_back(vertex);
        expand_cliques(d, upper, vertex, 0.0, upper[static_cast<std::size_t>(i)], f.max_simplex_dim,
                       config.r0, f.simplices);
    }
    std::sort(f.simplices.begin(), f.simplices.end(), simplex_less);
    return f;
}

namespace {

using Column = std::vector<std::uint32_t>;

std::uint64_t simplex_key(const std::int32_t* v, std::int32_t count) {
    std::uint64_t key = 0;
    for (std::int32_t k = 0; k < count; ++k) {
        key = (key << 16) | static_cast<std::uint64_t>(v[k] + 1);
    }
    return key;
}

// Z/2 column addition: target ^= source, both sorted.
void add_column(Column& target, const Column& source, Column& scratch) {
    scratch.clear();
    std::set_symmetric_difference(target.begin(), target.end(), source.begin(), source.end(),
                                  std::back_inserter(scratch));
    target.swap(scratch);
}

}  // namespace

std::vector<PersistencePair> reduce_boundary_matrix(const Filtration& filtration,
                                                    const ReductionOptions& options) {
    const auto& simplices = filtration.simplices;
    const std::size_t n = simplices.size();
    if (n >= std::numeric_limits<std::uint32_t>::max()) {
        throw std::runtime_error("filtration too large");
    }
    for (const auto& s : simplices) {
        for (std::int32_t k = 0; k < s.vertex_count(); ++k) {
            if (s.vertices[static_cast<std::size_t>(k)] >= 0xFFFF) {
                throw std::runtime_error("filtration has too many vertices");
            }
        }
    }

    std::unordered_map<std::uint64_t, std::uint32_t> index;
    index.reserve(n);
    for (std::size_t j = 0; j < n; ++j) {
        index.emplace(simplex_key(simplices[j].vertices.data(), simplices[j].vertex_count()),
                      static_cast<std::uint32_t>(j));
    }

    const int top_dim = filtration.max_simplex_dim;
    auto track_cycles = [&](std::int32_t dim) {
        return options.representatives && dim >= 1 && dim < top_dim;
    };

    constexpr std::uint32_t kNone = std::numeric_limits<std::uint32_t>::max();
    std::vector<std::uint32_t> pivot_owner(n, kNone);  // row -> column with that pivot
    std::vector<Column> reduced(n);
    std::vector<Column> basis(n);
    std::vector<bool> positive(n, false);
    std::array<std::set<std::uint32_t>, 4> unpaired;  // positive simplices not yet paired, by dim
    auto oldest_unpaired = [&](std::int32_t dim) {
        const auto& u = unpaired[static_cast<std::size_t>(dim)];
        return u.empty() ? kNone : *u.begin();
    };
    Column col;
    Column cyc;
    Column scratch;

    for (std::size_t j = 0; j < n; ++j) {
        const Simplex& s = simplices[j];
        col.clear();
        if (s.dim > 0) {
            std::array<std::int32_t, 3> face{};
            for (std::int32_t drop = 0; drop <= s.dim; ++drop) {
                std::int32_t w = 0;
                for (std::int32_t k = 0; k <= s.dim; ++k) {
                    if (k != drop) face[static_cast<std::size_t>(w++)] = s.vertices[static_cast<std::size_t>(k)];
                }
                auto it = index.find(simplex_key(face.data(), s.dim));
                if (it == index.end()) throw std::runtime_error("filtration is missing a face");
                if (it->second >= j) throw std::runtime_error("face does not precede its coface");
                col.push_back(it->second);
            }
            std::sort(col.begin(), col.end());
        }
        const bool track = track_cycles(s.dim);
        cyc.assign(1, static_cast<std::uint32_t>(j));
        while (!col.empty() && pivot_owner[col.back()] != kNone) {
            // A surviving pivot is always an unpaired positive face. Once the
            // pivot drops below the oldest of those the column reduces to
            // zero; finish early unless the basis change is needed.
            if (!track && col.back() < oldest_unpaired(s.dim - 1)) {
                col.clear();
                break;
            }
            const std::uint32_t k = pivot_owner[col.back()];
            add_column(col, reduced[k], scratch);
            if (track) add_column(cyc, basis[k], scratch);
        }
        if (!col.empty()) {
            pivot_owner[col.back()] = static_cast<std::uint32_t>(j);
            unpaired[static_cast<std::size_t>(s.dim - 1)].erase(col.back());
            reduced[j] = col;
        } else {
            positive[j] = true;
            unpaired[static_cast<std::size_t>(s.dim)].insert(static_cast<std::uint32_t>(j));
        }
        if (track) basis[j] = cyc;
    }

    auto edge_of = [&](std::int32_t u, std::int32_t v) {
        const std::array<std::int32_t, 2> e{u, v};
        const auto idx = index.at(simplex_key(e.data(), 2));
        return Edge{u, v, simplices[idx].value};
    };
    auto representative = [&](std::size_t birth) {
        const std::int32_t dim = simplices[birth].dim;
        std::vector<Edge> edges;
        if (!track_cycles(dim)) return EdgeSet{};
        for (auto c : basis[birth]) {
            const auto& v = simplices[c].vertices;
            if (dim == 1) {
                edges.push_back(edge_of(v[0], v[1]));
            } else {
                edges.push_back(edge_of(v[0], v[1]));
                edges.push_back(edge_of(v[0], v[2]));
                edges.push_back(edge_of(v[1], v[2]));
            }
        }
        return make_edge_set(std::move(edges));
    };

    const int max_reported = options.include_top_dimension ? top_dim : top_dim - 1;
    std::vector<PersistencePair> pairs;
    for (std::size_t j = 0; j < n; ++j) {
        if (reduced[j].empty()) continue;
        const std::size_t i = reduced[j].back();
        const Simplex& born = simplices[i];
        if (born.dim > max_reported) continue;
        if (born.value == simplices[j].value) continue;
        PersistencePair p;
        p.dim = born.dim;
        p.birth = born.value;
        p.death = simplices[j].value;
        p.birth_index = i;
        p.death_index = j;
        p.representative = representative(i);
        pairs.push_back(std::move(p));
    }
    for (std::size_t j = 0; j < n; ++j) {
        if (!positive[j] || pivot_owner[j] != kNone) continue;
        if (simplices[j].dim > max_reported) continue;
        PersistencePair p;
        p.dim = simplices[j].dim;
        p.birth = simplices[j].value;
        p.death = std::numeric_limits<double>::infinity();
        p.birth_index = j;
        p.representative = representative(j);
        pairs.push_back(std::move(p));
    }
    std::sort(pairs.begin(), pairs.end(), [](const PersistencePair& a, const PersistencePair& b) {
        if (a.dim != b.dim) return a.dim < b.dim;
        if (a.birth != b.birth) return a.birth < b.birth;
        if (a.death != b.death) return a.death < b.death;
        return a.birth_index < b.birth_index;
    });
    return pairs;
}

std::vector<PersistencePair> filter_persistent(const std::vector<PersistencePair>& pairs,
                                               const PhConfig& config) {
    std::vector<PersistencePair> kept;
    for (const auto& p : pairs) {
        if (p.dim > config.max_homology_dim) continue;
        const double lifespan = p.infinite() ? config.r_max - p.birth : p.death - p.birth;
        if (lifespan > config.tau) kept.push_back(p);
    }
    return kept;
}

EdgeSet mst_edges(const DistanceMatrix& d) {
    const auto n = static_cast<int>(d.size());
    std::vector<Edge> all;
    all.reserve(static_cast<std::size_t>(n) * static_cast<std::size_t>(std::max(n - 1, 0)) / 2);
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) all.push_back({i, j, d(i, j)});
    }
    std::sort(all.begin(), all.end(), [](const Edge& a, const Edge& b) {
        if (a.weight != b.weight) return a.weight < b.weight;
        if (a.src != b.src) return a.src < b.src;
        return a.dst < b.dst;
    });
    std::vector<int> parent(static_cast<std::size_t>(n));
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](int x) {
        while (parent[static_cast<std::size_t>(x)] != x) {
            parent[static_cast<std::size_t>(x)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(x)])];
            x = parent[static_cast<std::size_t>(x)];
        }
        return x;
    };
    EdgeSet tree;
    for (const auto& e : all) {
        if (static_cast<int>(tree.size()) == n - 1) break;
        const int a = find(e.src);
        const int b = find(e.dst);
        if (a == b) continue;
        parent[static_cast<std::size_t>(std::max(a, b))] = std::min(a, b);
        tree.push_back(e);
    }
    return tree;
}

EdgeSet extract_edges(const std::vector<PersistencePair>& persistent, const DistanceMatrix& d,
                      const PhConfig& config) {
    std::vector<Edge> edges;
    for (const auto& e : mst_edges(d)) {
        const double lifespan = e.weight - std::max(0.0, config.r0);
        if (lifespan > config.tau && e.weight <= config.r_max) edges.push_back(e);
    }
    for (const auto& p : persistent) {
        if (p.dim < 1 || p.dim > config.max_homology_dim) continue;
        for (const auto& e : p.representative) edges.push_back({e.src, e.dst, d(e.src, e.dst)});
    }
    return make_edge_set(std::move(edges));
}

PersistenceGraph build_persistence_graph(const DistanceMatrix& d, const PhConfig& config) {
    PersistenceGraph g;
    const Filtration f = build_rips_filtration(d, config);
    g.n_simplices = f.size();
    g.diagram = reduce_boundary_matrix(f);
    g.persistent = filter_persistent(g.diagram, config);
    g.edges = extract_edges(g.persistent, d, config);
    return g;
}

}  // namespace htgnn
