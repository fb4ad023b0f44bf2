#include "htgnn/mdm_network.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <queue>
#include <sstream>

namespace htgnn {

void MdmConfig::validate() const {
    if (!(fixed_cost_c > 0.0) || !(balance_tolerance > 0.0) || !(residual_epsilon > 0.0)) {
        throw ValidationError("MDM parameters must be positive");
    }
}

std::size_t LoanQuotaMatrix::support_size() const {
    return static_cast<std::size_t>((amounts.array() > 0.0).count());
}

bool LoanQuotaMatrix::satisfies_constraints(const Vector& assets, const Vector& liabilities,
                                            double rel_tol) const {
    const auto n = amounts.rows();
    if (amounts.cols() != n || assets.size() != n || liabilities.size() != n) return false;
    if (!amounts.allFinite() || (amounts.array() < 0.0).any()) return false;
    for (Eigen::Index i = 0; i < n; ++i) {
        if (amounts(i, i) != 0.0) return false;
        if (std::abs(amounts.row(i).sum() - assets[i]) > rel_tol * std::max(1.0, assets[i])) return false;
        if (std::abs(amounts.col(i).sum() - liabilities[i]) > rel_tol * std::max(1.0, liabilities[i])) {
            return false;
        }
    }
    return true;
}

namespace {

void check_inputs(const Vector& assets, const Vector& liabilities) {
    if (assets.size() != liabilities.size()) {
        throw ValidationError("assets and liabilities differ in length");
    }
    for (Eigen::Index i = 0; i < assets.size(); ++i) {
        if (!(assets[i] >= 0.0) || !(liabilities[i] >= 0.0) || !std::isfinite(assets[i]) ||
            !std::isfinite(liabilities[i])) {
            throw ValidationError("interbank totals must be finite and non-negative (bank " +
                                  std::to_string(i) + ")");
        }
    }
}

}  // namespace

Vector check_balance(const Vector& assets, const Vector& liabilities, double tol) {
    check_inputs(assets, liabilities);
    const double ta = assets.sum();
    const double tl = liabilities.sum();
    if (ta == 0.0 && tl == 0.0) return liabilities;
    const double gap = std::abs(ta - tl) / std::max({ta, tl, 1.0});
    if (gap > tol) {
        std::ostringstream os;
        os.precision(17);
        os << "interbank totals do not balance: sum(assets) = " << ta
           << ", sum(liabilities) = " << tl;
        throw ValidationError(os.str());
    }
    if (tl == 0.0) return liabilities;
    Vector out = liabilities * (ta / tl);
    return out;
}

namespace {

struct TopTwo {
    double first = 0.0;
    Eigen::Index first_idx = -1;
    double second = 0.0;
};

TopTwo top_two(const Vector& v) {
    TopTwo t;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (t.first_idx < 0 || v[i] > t.first) {
            t.second = t.first_idx < 0 ? 0.0 : t.first;
            t.first = v[i];
            t.first_idx = i;
        } else if (v[i] > t.second) {
            t.second = v[i];
        }
    }
    return t;
}

// Moves `delta` of lending through bank i without a self-loop by splitting
// existing relationships k -> j into k -> i -> j.
void reroute_self_loop(Matrix& z, Eigen::Index i, double delta, double eps) {
    const auto n = z.rows();
    while (delta > eps) {
        Eigen::Index best_k = -1;
        Eigen::Index best_j = -1;
        int best_new = 3;
        double best_amount = 0.0;
        for (Eigen::Index k = 0; k < n; ++k) {
            if (k == i) continue;
            for (Eigen::Index j = 0; j < n; ++j) {
                if (j == i || j == k || z(k, j) <= 0.0) continue;
                const int fresh = (z(k, i) > 0.0 ? 0 : 1) + (z(i, j) > 0.0 ? 0 : 1);
                if (fresh < best_new || (fresh == best_new && z(k, j) > best_amount)) {
                    best_new = fresh;
                    best_amount = z(k, j);
                    best_k = k;
                    best_j = j;
                }
            }
        }
        if (best_k < 0) {
            throw ValidationError("no self-loop-free lending matrix exists: bank " + std::to_string(i) +
                                  " would have to lend to itself");
        }
        const double t = std::min(best_amount, delta);
        z(best_k, best_j) = t == best_amount ? 0.0 : z(best_k, best_j) - t;
        z(best_k, i) += t;
        z(i, best_j) += t;
        delta -= t;
    }
}

}  // namespace

LoanQuotaMatrix infer_loan_matrix(const Vector& assets, const Vector& liabilities,
                                  const MdmConfig& config) {
    config.validate();
    Vector l = check_balance(assets, liabilities, config.balance_tolerance);
    Vector a = assets;
    const auto n = a.size();
    LoanQuotaMatrix result{Matrix::Zero(n, n)};
    if (n == 0) return result;
    const double total = a.sum();
    const double eps = config.residual_epsilon * std::max(1.0, total);
    if (n == 1) {
        if (total > eps) {
            throw ValidationError("a single bank with positive interbank totals can only lend to itself");
        }
        return result;
    }

    Matrix& z = result.amounts;
    auto clean = [eps](Vector& v) {
        for (Eigen::Index i = 0; i < v.size(); ++i) {
            if (v[i] <= eps) v[i] = 0.0;
        }
    };
    clean(a);
    clean(l);

    std::vector<Eigen::Index> ge_v;
    std::vector<Eigen::Index> eq_v;
    while (true) {
        const TopTwo ta = top_two(a);
        const TopTwo tl = top_two(l);
        double v = 0.0;
        Eigen::Index ia = ta.first_idx;
        if (ia != tl.first_idx) {
            v = std::min(ta.first, tl.first);
        } else {
            v = std::max(std::min(ta.first, tl.second), std::min(ta.second, tl.first));
        }
        if (v <= 0.0) break;

        // Lexicographically smallest (i, j), i != j, with min(a_i, l_j) == v.
        ge_v.clear();
        eq_v.clear();
        for (Eigen::Index j = 0; j < n && (ge_v.size() < 2 || eq_v.size() < 2); ++j) {
            if (l[j] >= v && ge_v.size() < 2) ge_v.push_back(j);
            if (l[j] == v && eq_v.size() < 2) eq_v.push_back(j);
        }
        Eigen::Index bi = -1;
        Eigen::Index bj = -1;
        for (Eigen::Index i = 0; i < n && bi < 0; ++i) {
            if (a[i] < v) continue;
            const auto& pool = (a[i] == v) ? ge_v : eq_v;
            for (auto j : pool) {
                if (j != i) {
                    bi = i;
                    bj = j;
                    break;
                }
            }
        }
        z(bi, bj) += v;
        a[bi] = (a[bi] == v) ? 0.0 : a[bi] - v;
        l[bj] = (l[bj] == v) ? 0.0 : l[bj] - v;
        if (a[bi] <= eps) a[bi] = 0.0;
        if (l[bj] <= eps) l[bj] = 0.0;
    }

    // Only a bank holding both residuals can be left over.
    for (Eigen::Index i = 0; i < n; ++i) {
        if (a[i] > 0.0 && l[i] > 0.0) {
            reroute_self_loop(z, i, std::min(a[i], l[i]), eps);
            a[i] = 0.0;
            l[i] = 0.0;
        }
    }
    return result;
}

namespace {

// Supply-demand feasibility: every set of lenders must reach enough
// liabilities through allowed relationships.
bool pattern_feasible(const std::vector<std::uint32_t>& out_mask, const Vector& a, const Vector& l,
                      double tol) {
    const auto n = static_cast<std::uint32_t>(a.size());
    for (std::uint32_t s = 1; s < (1u << n); ++s) {
        double supply = 0.0;
        std::uint32_t reach = 0;
        for (std::uint32_t i = 0; i < n; ++i) {
            if (s & (1u << i)) {
                supply += a[i];
                reach |= out_mask[i];
            }
        }
        double demand = 0.0;
        for (std::uint32_t j = 0; j < n; ++j) {
            if (reach & (1u << j)) demand += l[j];
        }
        if (supply > demand + tol) return false;
    }
    return true;
}

// Edmonds-Karp on source -> lenders -> borrowers -> sink.
Matrix max_flow_witness(const std::vector<std::uint32_t>& out_mask, const Vector& a, const Vector& l) {
    const auto n = static_cast<int>(a.size());
    const int source = 2 * n;
    const int sink = 2 * n + 1;
    const int nodes = 2 * n + 2;
    const double inf = std::numeric_limits<double>::infinity();
    Matrix cap = Matrix::Zero(nodes, nodes);
    for (int i = 0; i < n; ++i) {
        cap(source, i) = a[i];
        cap(n + i, sink) = l[i];
        for (int j = 0; j < n; ++j) {
            if (out_mask[static_cast<std::size_t>(i)] & (1u << j)) cap(i, n + j) = inf;
        }
    }
    Matrix flow = Matrix::Zero(nodes, nodes);
    while (true) {
        std::vector<int> parent(static_cast<std::size_t>(nodes), -1);
        parent[static_cast<std::size_t>(source)] = source;
        std::queue<int> q;
        q.push(source);
        while (!q.empty() && parent[static_cast<std::size_t>(sink)] < 0) {
            const int u = q.front();
            q.pop();
            for (int v = 0; v < nodes; ++v) {
                if (parent[static_cast<std::size_t>(v)] < 0 && cap(u, v) - flow(u, v) > 1e-15) {
                    parent[static_cast<std::size_t>(v)] = u;
                    q.push(v);
                }
            }
        }
        if (parent[static_cast<std::size_t>(sink)] < 0) break;
        double push = inf;
        for (int v = sink; v != source; v = parent[static_cast<std::size_t>(v)]) {
            const int u = parent[static_cast<std::size_t>(v)];
            push = std::min(push, cap(u, v) - flow(u, v));
        }
        for (int v = sink; v != source; v = parent[static_cast<std::size_t>(v)]) {
            const int u = parent[static_cast<std::size_t>(v)];
            flow(u, v) += push;
            flow(v, u) -= push;
        }
    }
    Matrix z = Matrix::Zero(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) z(i, j) = std::max(0.0, flow(i, n + j));
    }
    return z;
}

}  // namespace

MinSupportResult brute_force_min_support(const Vector& assets, const Vector& liabilities, int max_n) {
    if (max_n > 5) throw ValidationError("brute-force support search is limited to N <= 5");
    const auto n = static_cast<int>(assets.size());
    if (n > max_n) {
        throw ValidationError("brute-force support search: N = " + std::to_string(n) +
                              " exceeds max_n = " + std::to_string(max_n));
    }
    const Vector l = check_balance(assets, liabilities, 1e-9);
    const double tol = 1e-9 * std::max(1.0, assets.sum());

    std::vector<std::pair<int, int>> slots;
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            if (i != j) slots.emplace_back(i, j);
        }
    }
    const auto m = static_cast<int>(slots.size());
    std::vector<std::uint32_t> out_mask(static_cast<std::size_t>(n));
    auto decode = [&](std::uint64_t pattern) {
        std::fill(out_mask.begin(), out_mask.end(), 0u);
        for (int s = 0; s < m; ++s) {
            if (pattern & (std::uint64_t{1} << s)) {
                out_mask[static_cast<std::size_t>(slots[static_cast<std::size_t>(s)].first)] |=
                    1u << slots[static_cast<std::size_t>(s)].second;
            }
        }
    };

    for (int k = 0; k <= m; ++k) {
        // Gosper's hack over all m-bit patterns with k bits set.
        std::uint64_t pattern = (k == 0) ? 0 : (std::uint64_t{1} << k) - 1;
        const std::uint64_t limit = std::uint64_t{1} << m;
        while (pattern < limit) {
            decode(pattern);
            if (pattern_feasible(out_mask, assets, l, tol)) {
                MinSupportResult r;
                r.witness.amounts = max_flow_witness(out_mask, assets, l);
                r.support = r.witness.support_size();
                return r;
            }
            if (k == 0) break;
            const std::uint64_t c = pattern & (~pattern + 1);
            const std::uint64_t next = pattern + c;
            pattern = (((next ^ pattern) >> 2) / c) | next;
        }
    }
    throw ValidationError("no self-loop-free lending matrix exists for these totals");
}

EdgeSet loan_matrix_to_edges(const LoanQuotaMatrix& z) {
    EdgeSet edges;
    const auto n = z.size();
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = i + 1; j < n; ++j) {
            const double w = z.amounts(i, j) + z.amounts(j, i);
            if (z.amounts(i, j) > 0.0 || z.amounts(j, i) > 0.0) {
                edges.push_back({static_cast<int>(i), static_cast<int>(j), w});
            }
        }
    }
    return edges;
}

}  // namespace htgnn
