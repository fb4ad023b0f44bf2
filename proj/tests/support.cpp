#include "support.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <limits>

namespace testsupport {

htgnn::DistanceMatrix three_point_fixture() {
    htgnn::DistanceMatrix d{Matrix::Zero(3, 3)};
    d.values(0, 1) = d.values(1, 0) = 0.2;
    d.values(0, 2) = d.values(2, 0) = 0.4;
    d.values(1, 2) = d.values(2, 1) = 0.6;
    return d;
}

htgnn::DistanceMatrix four_cycle_fixture() {
    htgnn::DistanceMatrix d{Matrix::Zero(4, 4)};
    for (int i = 0; i < 4; ++i) {
        const int j = (i + 1) % 4;
        d.values(i, j) = d.values(j, i) = 0.3;
    }
    d.values(0, 2) = d.values(2, 0) = 0.5;
    d.values(1, 3) = d.values(3, 1) = 0.5;
    return d;
}

std::string read_golden(const std::string& name) {
    std::ifstream in(std::string(HTGNN_GOLDEN_DIR) + "/" + name, std::ios::binary);
    if (!in) throw std::runtime_error("missing golden " + name);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

htgnn::DistanceMatrix random_distances(int n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.01, 1.0);
    htgnn::DistanceMatrix d{Matrix::Zero(n, n)};
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            d.values(i, j) = d.values(j, i) = u(rng);
        }
    }
    return d;
}

htgnn::DistanceMatrix planar_distances(int n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<std::pair<double, double>> pts(static_cast<std::size_t>(n));
    for (auto& p : pts) p = {u(rng), u(rng)};
    htgnn::DistanceMatrix d{Matrix::Zero(n, n)};
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            const double dx = pts[i].first - pts[j].first;
            const double dy = pts[i].second - pts[j].second;
            d.values(i, j) = d.values(j, i) = std::sqrt(dx * dx + dy * dy) / std::sqrt(2.0);
        }
    }
    return d;
}

std::vector<Bar> naive_diagram(const htgnn::DistanceMatrix& d, double r_max, int max_simplex_dim) {
    const int n = static_cast<int>(d.size());
    struct S {
        unsigned mask;
        int dim;
        double value;
        std::vector<int> verts;
    };
    std::vector<S> all;
    for (unsigned mask = 1; mask < (1u << n); ++mask) {
        std::vector<int> v;
        for (int i = 0; i < n; ++i) {
            if (mask & (1u << i)) v.push_back(i);
        }
        const int dim = static_cast<int>(v.size()) - 1;
        if (dim > max_simplex_dim) continue;
        double value = 0.0;
        for (std::size_t a = 0; a < v.size(); ++a) {
            for (std::size_t b = a + 1; b < v.size(); ++b) value = std::max(value, d(v[a], v[b]));
        }
        if (value > r_max) continue;
        all.push_back({mask, dim, value, v});
    }
    std::sort(all.begin(), all.end(), [](const S& a, const S& b) {
        if (a.value != b.value) return a.value < b.value;
        if (a.dim != b.dim) return a.dim < b.dim;
        return a.verts < b.verts;
    });
    const std::size_t m = all.size();
    std::vector<std::vector<char>> col(m, std::vector<char>(m, 0));
    for (std::size_t j = 0; j < m; ++j) {
        if (all[j].dim == 0) continue;
        for (std::size_t i = 0; i < m; ++i) {
            // Faces: one vertex fewer and contained in the coface.
            if (all[i].dim == all[j].dim - 1 && (all[i].mask & all[j].mask) == all[i].mask) col[j][i] = 1;
        }
    }
    auto low = [&](std::size_t j) -> long {
        for (std::size_t i = m; i-- > 0;) {
            if (col[j][i]) return static_cast<long>(i);
        }
        return -1;
    };
    for (std::size_t j = 0; j < m; ++j) {
        bool changed = true;
        while (changed) {
            changed = false;
            const long lj = low(j);
            if (lj < 0) break;
            for (std::size_t k = 0; k < j; ++k) {
                if (low(k) == lj) {
                    for (std::size_t i = 0; i < m; ++i) col[j][i] ^= col[k][i];
                    changed = true;
                    break;
                }
            }
        }
    }
    std::vector<Bar> bars;
    std::vector<char> paired(m, 0);
    for (std::size_t j = 0; j < m; ++j) {
        const long i = low(j);
        if (i < 0) continue;
        paired[static_cast<std::size_t>(i)] = 1;
        paired[j] = 1;
        const auto& b = all[static_cast<std::size_t>(i)];
        if (b.dim >= max_simplex_dim) continue;
        if (b.value == all[j].value) continue;
        bars.push_back({b.dim, b.value, all[j].value});
    }
    for (std::size_t j = 0; j < m; ++j) {
        if (paired[j] || all[j].dim >= max_simplex_dim) continue;
        bars.push_back({all[j].dim, all[j].value, std::numeric_limits<double>::infinity()});
    }
    std::sort(bars.begin(), bars.end());
    return bars;
}

std::vector<Bar> bars_of(const std::vector<htgnn::PersistencePair>& pairs) {
    std::vector<Bar> out;
    for (const auto& p : pairs) out.push_back({p.dim, p.birth, p.death});
    std::sort(out.begin(), out.end());
    return out;
}

long euler_poincare_check(const htgnn::Filtration& f, const std::vector<htgnn::PersistencePair>& pairs) {
    long checked = 0;
    long chi_simplices = 0;
    std::size_t j = 0;
    while (j < f.size()) {
        const double r = f.simplices[j].value;
        while (j < f.size() && f.simplices[j].value == r) {
            chi_simplices += f.simplices[j].dim % 2 == 0 ? 1 : -1;
            ++j;
        }
        long chi_bars = 0;
        for (const auto& p : pairs) {
            if (p.birth <= r && r < p.death) chi_bars += p.dim % 2 == 0 ? 1 : -1;
        }
        if (chi_bars != chi_simplices) return -1;
        ++checked;
    }
    return checked;
}

std::vector<double> prim_weights(const htgnn::DistanceMatrix& d, double r_max) {
    const int n = static_cast<int>(d.size());
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<char> in_tree(static_cast<std::size_t>(n), 0);
    std::vector<double> best(static_cast<std::size_t>(n), inf);
    std::vector<double> weights;
    for (int start = 0; start < n; ++start) {
        if (in_tree[start]) continue;
        best[start] = 0.0;
        while (true) {
            int pick = -1;
            for (int v = 0; v < n; ++v) {
                if (!in_tree[v] && best[v] < inf && (pick < 0 || best[v] < best[pick])) pick = v;
            }
            if (pick < 0) break;
            in_tree[pick] = 1;
            if (pick != start) weights.push_back(best[pick]);
            for (int v = 0; v < n; ++v) {
                if (!in_tree[v] && d(pick, v) <= r_max) best[v] = std::min(best[v], d(pick, v));
            }
        }
    }
    std::sort(weights.begin(), weights.end());
    return weights;
}

int threshold_components(const htgnn::DistanceMatrix& d, double r_max) {
    const int n = static_cast<int>(d.size());
    std::vector<char> seen(static_cast<std::size_t>(n), 0);
    int count = 0;
    for (int s = 0; s < n; ++s) {
        if (seen[s]) continue;
        ++count;
        std::vector<int> stack{s};
        seen[s] = 1;
        while (!stack.empty()) {
            const int v = stack.back();
            stack.pop_back();
            for (int w = 0; w < n; ++w) {
                if (!seen[w] && w != v && d(v, w) <= r_max) {
                    seen[w] = 1;
                    stack.push_back(w);
                }
            }
        }
    }
    return count;
}

std::vector<std::vector<double>> reference_gcn_logits(const std::vector<Matrix>& weights, const Matrix& classifier,
                                                      const htgnn::EdgeSet& edges, const Matrix& features) {
    using Dense = std::vector<std::vector<double>>;
    const auto n = static_cast<std::size_t>(features.rows());
    Dense a(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) a[i][i] = 1.0;
    for (const auto& e : edges) {
        a[static_cast<std::size_t>(e.src)][static_cast<std::size_t>(e.dst)] = 1.0;
        a[static_cast<std::size_t>(e.dst)][static_cast<std::size_t>(e.src)] = 1.0;
    }
    std::vector<double> deg(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) deg[i] += a[i][j];
    }
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) a[i][j] /= std::sqrt(deg[i]) * std::sqrt(deg[j]);
    }
    auto matmul = [](const Dense& x, const Dense& y) {
        Dense out(x.size(), std::vector<double>(y.empty() ? 0 : y[0].size(), 0.0));
        for (std::size_t i = 0; i < x.size(); ++i) {
            for (std::size_t k = 0; k < y.size(); ++k) {
                for (std::size_t j = 0; j < out[i].size(); ++j) out[i][j] += x[i][k] * y[k][j];
            }
        }
        return out;
    };
    auto to_dense = [](const Matrix& m) {
        Dense out(static_cast<std::size_t>(m.rows()), std::vector<double>(static_cast<std::size_t>(m.cols())));
        for (Eigen::Index i = 0; i < m.rows(); ++i) {
            for (Eigen::Index j = 0; j < m.cols(); ++j) out[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = m(i, j);
        }
        return out;
    };
    Dense h = to_dense(features);
    for (const auto& w : weights) {
        h = matmul(matmul(a, h), to_dense(w));
        for (auto& row : h) {
            for (auto& v : row) v = v > 0.0 ? v : 0.0;
        }
    }
    return matmul(h, to_dense(classifier));
}

double model_loss(const htgnn::GcnModel& model, const htgnn::HeteroGraph& graph, const std::vector<int>& labels,
                  const htgnn::DropoutMasks& masks, double weight_decay) {
    const auto r = htgnn::forward(model, graph, masks);
    return htgnn::cross_entropy_loss(r.probs, labels, model, weight_decay);
}

htgnn::HeteroGraph random_graph(int n, int d, double edge_prob, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 1.0);
    std::bernoulli_distribution coin(edge_prob);
    std::uniform_int_distribution<int> label(1, 4);
    Matrix x(n, d);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = g(rng);
    std::vector<htgnn::Edge> eq;
    std::vector<htgnn::Edge> ep;
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            if (coin(rng)) eq.push_back({i, j, 1.0});
            if (coin(rng)) ep.push_back({i, j, 1.0});
        }
    }
    std::vector<int> y(static_cast<std::size_t>(n));
    for (auto& v : y) v = label(rng);
    return htgnn::build_hetero_graph(x, htgnn::make_edge_set(eq), htgnn::make_edge_set(ep), y);
}

htgnn::GcnModel random_model(std::vector<int> dims, double alpha_q, double alpha_p, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 0.7);
    auto m = htgnn::GcnModel::zeros(std::move(dims), alpha_q, alpha_p);
    auto fill = [&](Matrix& w) {
        for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = g(rng);
    };
    for (auto& w : m.weights_q) fill(w);
    for (auto& w : m.weights_p) fill(w);
    fill(m.classifier);
    return m;
}

double gradient_check(const htgnn::GcnModel& model, const htgnn::HeteroGraph& graph, const std::vector<int>& labels,
                      const htgnn::DropoutMasks& masks, double weight_decay, double step) {
    const auto grads = htgnn::backward(model, graph, labels, masks, weight_decay);
    double worst = 0.0;
    auto probe = [&](auto select, const Matrix& analytic) {
        for (Eigen::Index k = 0; k < analytic.size(); ++k) {
            htgnn::GcnModel plus = model;
            htgnn::GcnModel minus = model;
            select(plus).data()[k] += step;
            select(minus).data()[k] -= step;
            const double fd = (model_loss(plus, graph, labels, masks, weight_decay) -
                               model_loss(minus, graph, labels, masks, weight_decay)) /
                              (2.0 * step);
            const double g = analytic.data()[k];
            worst = std::max(worst, std::abs(g - fd) / std::max({1e-8, std::abs(g), std::abs(fd)}));
        }
    };
    for (std::size_t l = 0; l < model.weights_q.size(); ++l) {
        probe([l](htgnn::GcnModel& m) -> Matrix& { return m.weights_q[l]; }, grads.weights_q[l]);
        probe([l](htgnn::GcnModel& m) -> Matrix& { return m.weights_p[l]; }, grads.weights_p[l]);
    }
    probe([](htgnn::GcnModel& m) -> Matrix& { return m.classifier; }, grads.classifier);
    return worst;
}

std::pair<htgnn::Vector, htgnn::Vector> draw_totals(int n, std::mt19937_64& rng, double zero_prob) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::lognormal_distribution<double> amount(2.0, 1.5);
    htgnn::Vector a = htgnn::Vector::Zero(n);
    htgnn::Vector l = htgnn::Vector::Zero(n);
    for (int i = 0; i < n; ++i) {
        if (u(rng) > zero_prob) a[i] = amount(rng);
        if (u(rng) > zero_prob) l[i] = amount(rng);
    }
    if (a.sum() == 0.0) a[0] = 1.0;
    if (l.sum() == 0.0) l[n - 1] = 1.0;
    l *= a.sum() / l.sum();
    return {a, l};
}

bool self_loop_free_exists(const htgnn::Vector& assets, const htgnn::Vector& liabilities) {
    const double total = assets.sum();
    for (Eigen::Index i = 0; i < assets.size(); ++i) {
        if (assets[i] + liabilities[i] > total * (1.0 + 1e-12)) return false;
    }
    return true;
}

std::pair<htgnn::Vector, htgnn::Vector> balanced_totals(int n, std::uint64_t seed, double zero_prob) {
    std::mt19937_64 rng(seed);
    for (;;) {
        auto totals = draw_totals(n, rng, zero_prob);
        if (self_loop_free_exists(totals.first, totals.second)) return totals;
    }
}

std::string temp_dir(const std::string& name) {
    auto p = std::filesystem::temp_directory_path() / ("htgnn_test_" + name);
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p.string();
}

}  // namespace testsupport
