#include "htgnn/hetero_gcn.hpp"

#include "htgnn/data_model.hpp"

#include <cmath>
#include <random>

namespace htgnn {

void HeteroGraph::validate() const {
    const auto n = n_nodes();
    auto check = [n](const EdgeSet& edges, const char* name) {
        for (const auto& e : edges) {
            if (e.src < 0 || e.dst < 0 || e.src >= n || e.dst >= n) {
                throw ValidationError(std::string(name) + " edge (" + std::to_string(e.src) + "," +
                                      std::to_string(e.dst) + ") has an endpoint outside [0, " +
                                      std::to_string(n) + ")");
            }
            if (e.src == e.dst) {
                throw ValidationError(std::string(name) + " contains a self-loop on node " +
                                      std::to_string(e.src));
            }
        }
    };
    check(edges_q, "lending");
    check(edges_p, "persistence");
    if (!features.allFinite()) throw ValidationError("graph features must be finite");
    if (labels) {
        if (static_cast<Eigen::Index>(labels->size()) != n) {
            throw ValidationError("label vector length differs from node count");
        }
        for (int y : *labels) {
            if (y < 1 || y > kNumRatingClasses) throw ValidationError("label outside 1..4");
        }
    }
}

HeteroGraph build_hetero_graph(Matrix features, EdgeSet edges_q, EdgeSet edges_p,
                               std::optional<std::vector<int>> labels) {
    HeteroGraph g;
    g.features = std::move(features);
    g.edges_q = std::move(edges_q);
    g.edges_p = std::move(edges_p);
    g.labels = std::move(labels);
    g.validate();
    g.edges_q = make_edge_set(std::move(g.edges_q));
    g.edges_p = make_edge_set(std::move(g.edges_p));
    return g;
}

SparseMatrix normalize_adjacency(const EdgeSet& edges, Eigen::Index n) {
    Vector degree = Vector::Ones(n);
    for (const auto& e : edges) {
        if (e.src < 0 || e.dst < 0 || e.src >= n || e.dst >= n || e.src == e.dst) {
            throw ValidationError("invalid edge in adjacency normalization");
        }
        degree[e.src] += 1.0;
        degree[e.dst] += 1.0;
    }
    const Vector inv_sqrt = degree.cwiseSqrt().cwiseInverse();
    std::vector<Eigen::Triplet<double>> triplets;
    triplets.reserve(static_cast<std::size_t>(n) + 2 * edges.size());
    for (Eigen::Index i = 0; i < n; ++i) triplets.emplace_back(i, i, 1.0 / degree[i]);
    for (const auto& e : edges) {
        const double w = inv_sqrt[e.src] * inv_sqrt[e.dst];
        triplets.emplace_back(e.src, e.dst, w);
        triplets.emplace_back(e.dst, e.src, w);
    }
    SparseMatrix adj(n, n);
    // Duplicate pairs collapse to one binary entry.
    adj.setFromTriplets(triplets.begin(), triplets.end(), [](double a, double) { return a; });
    return adj;
}

void GcnModel::validate() const {
    const auto layers = static_cast<std::size_t>(n_layers());
    if (layer_dims.size() != layers + 1 || weights_p.size() != layers) {
        throw ValidationError("model layer count mismatch");
    }
    for (std::size_t l = 0; l < layers; ++l) {
        for (const auto* w : {&weights_q[l], &weights_p[l]}) {
            if (w->rows() != layer_dims[l] || w->cols() != layer_dims[l + 1]) {
                throw ValidationError("weight shape mismatch at layer " + std::to_string(l));
            }
            if (!w->allFinite()) throw ValidationError("non-finite weight at layer " + std::to_string(l));
        }
    }
    if (classifier.rows() != layer_dims.back() || classifier.cols() != kNumRatingClasses) {
        throw ValidationError("classifier shape mismatch");
    }
    if (!classifier.allFinite()) throw ValidationError("non-finite classifier weight");
    if (!(alpha_q >= 0.0) || !(alpha_p >= 0.0) || std::abs(alpha_q + alpha_p - 1.0) > 1e-12) {
        throw ValidationError("alpha_q and alpha_p must be non-negative and sum to 1");
    }
}

GcnModel GcnModel::zeros(std::vector<int> layer_dims, double alpha_q, double alpha_p) {
    GcnModel m;
    m.layer_dims = std::move(layer_dims);
    for (std::size_t l = 0; l + 1 < m.layer_dims.size(); ++l) {
        m.weights_q.push_back(Matrix::Zero(m.layer_dims[l], m.layer_dims[l + 1]));
        m.weights_p.push_back(Matrix::Zero(m.layer_dims[l], m.layer_dims[l + 1]));
    }
    m.classifier = Matrix::Zero(m.layer_dims.back(), kNumRatingClasses);
    m.alpha_q = alpha_q;
    m.alpha_p = alpha_p;
    return m;
}

void TrainConfig::validate() const {
    if (!(learning_rate > 0.0)) throw ValidationError("learning_rate must be positive");
    if (epochs < 1) throw ValidationError("epochs must be at least 1");
    if (!(weight_decay >= 0.0)) throw ValidationError("weight_decay must be non-negative");
    if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) throw ValidationError("dropout_rate must lie in [0, 1)");
    if (hidden_dim < 1) throw ValidationError("hidden_dim must be positive");
    if (n_layers < 1) throw ValidationError("n_layers must be at least 1");
    if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0) || !(adam_beta2 >= 0.0 && adam_beta2 < 1.0) ||
        !(adam_eps > 0.0)) {
        throw ValidationError("invalid Adam parameters");
    }
}

GraphOperators GraphOperators::from(const HeteroGraph& graph) {
    return {normalize_adjacency(graph.edges_q, graph.n_nodes()),
            normalize_adjacency(graph.edges_p, graph.n_nodes())};
}

Matrix softmax_rows(const Matrix& logits) {
    Matrix p(logits.rows(), logits.cols());
    for (Eigen::Index i = 0; i < logits.rows(); ++i) {
        const double m = logits.row(i).maxCoeff();
        p.row(i) = (logits.row(i).array() - m).exp().matrix();
        p.row(i) /= p.row(i).sum();
    }
    return p;
}

namespace {

void check_dims(const GcnModel& model, Eigen::Index n, const Matrix& features, const DropoutMasks& masks) {
    model.validate();
    if (features.cols() != model.layer_dims.front()) {
        throw ValidationError("feature width " + std::to_string(features.cols()) +
                              " does not match model input width " +
                              std::to_string(model.layer_dims.front()));
    }
    if (features.rows() != n) throw ValidationError("feature rows differ from adjacency size");
    if (!masks.empty()) {
        if (static_cast<int>(masks.size()) != model.n_layers()) {
            throw ValidationError("one dropout mask per layer is required");
        }
        for (std::size_t l = 0; l < masks.size(); ++l) {
            if (masks[l].rows() != n || masks[l].cols() != model.layer_dims[l]) {
                throw ValidationError("dropout mask shape mismatch at layer " + std::to_string(l));
            }
        }
    }
}

}  // namespace

ForwardResult forward(const GcnModel& model, const GraphOperators& ops, const Matrix& features,
                      const DropoutMasks& masks) {
    const auto n = ops.adj_q.rows();
    check_dims(model, n, features, masks);
    ForwardResult r;
    Matrix h = features;
    for (int l = 0; l < model.n_layers(); ++l) {
        const auto li = static_cast<std::size_t>(l);
        if (!masks.empty()) h = h.cwiseProduct(masks[li]);
        r.layer_inputs.push_back(h);
        Matrix out = Matrix::Zero(n, model.layer_dims[li + 1]);
        if (model.alpha_q != 0.0) {
            Matrix propagated = ops.adj_q * h;
            Matrix pre = propagated * model.weights_q[li];
            out = model.alpha_q * pre.cwiseMax(0.0);
            r.propagated_q.push_back(std::move(propagated));
            r.pre_q.push_back(std::move(pre));
        } else {
            r.propagated_q.emplace_back();
            r.pre_q.emplace_back();
        }
        if (model.alpha_p != 0.0) {
            Matrix propagated = ops.adj_p * h;
            Matrix pre = propagated * model.weights_p[li];
            out += model.alpha_p * pre.cwiseMax(0.0);
            r.propagated_p.push_back(std::move(propagated));
            r.pre_p.push_back(std::move(pre));
        } else {
            r.propagated_p.emplace_back();
            r.pre_p.emplace_back();
        }
        h = std::move(out);
    }
    r.embeddings = std::move(h);
    r.logits = r.embeddings * model.classifier;
    r.probs = softmax_rows(r.logits);
    return r;
}

ForwardResult forward(const GcnModel& model, const HeteroGraph& graph, const DropoutMasks& masks) {
    return forward(model, GraphOperators::from(graph), graph.features, masks);
}

Matrix single_relation_logits(const std::vector<Matrix>& weights, const Matrix& classifier,
                              const SparseMatrix& adjacency, const Matrix& features) {
    Matrix h = features;
    for (const auto& w : weights) {
        Matrix propagated = adjacency * h;
        Matrix pre = propagated * w;
        h = pre.cwiseMax(0.0);
    }
    return h * classifier;
}

double cross_entropy_loss(const Matrix& probs, const std::vector<int>& labels, const GcnModel& model,
                          double weight_decay) {
    if (static_cast<Eigen::Index>(labels.size()) != probs.rows()) {
        throw ValidationError("label count differs from probability rows");
    }
    double nll = 0.0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const double p = probs(static_cast<Eigen::Index>(i), labels[i] - 1);
        nll -= std::log(std::max(p, 1e-12));
    }
    nll /= static_cast<double>(std::max<std::size_t>(labels.size(), 1));
    double sq = model.classifier.squaredNorm();
    for (std::size_t l = 0; l < model.weights_q.size(); ++l) {
        sq += model.weights_q[l].squaredNorm() + model.weights_p[l].squaredNorm();
    }
    return nll + 0.5 * weight_decay * sq;
}

GcnGradients backward(const GcnModel& model, const GraphOperators& ops, const Matrix& features,
                      const std::vector<int>& labels, const DropoutMasks& masks, double weight_decay) {
    const ForwardResult fw = forward(model, ops, features, masks);
    const auto n = fw.probs.rows();
    if (static_cast<Eigen::Index>(labels.size()) != n) {
        throw ValidationError("label count differs from node count");
    }
    GcnGradients g;
    g.loss = cross_entropy_loss(fw.probs, labels, model, weight_decay);

    Matrix dlogits = fw.probs;
    for (Eigen::Index i = 0; i < n; ++i) dlogits(i, labels[static_cast<std::size_t>(i)] - 1) -= 1.0;
    dlogits /= static_cast<double>(n);

    g.classifier = fw.embeddings.transpose() * dlogits + weight_decay * model.classifier;
    Matrix dh = dlogits * model.classifier.transpose();

    const auto layers = static_cast<std::size_t>(model.n_layers());
    g.weights_q.resize(layers);
    g.weights_p.resize(layers);
    for (std::size_t li = layers; li-- > 0;) {
        Matrix dinput = Matrix::Zero(n, model.layer_dims[li]);
        auto branch = [&](double alpha, const SparseMatrix& adj, const Matrix& propagated, const Matrix& pre,
                          const Matrix& w, Matrix& grad) {
            grad = weight_decay * w;
            if (alpha == 0.0) return;
            const Matrix dpre = alpha * dh.cwiseProduct((pre.array() > 0.0).cast<double>().matrix());
            grad += propagated.transpose() * dpre;
            if (li > 0) dinput += adj.transpose() * (dpre * w.transpose());
        };
        branch(model.alpha_q, ops.adj_q, fw.propagated_q[li], fw.pre_q[li], model.weights_q[li],
               g.weights_q[li]);
        branch(model.alpha_p, ops.adj_p, fw.propagated_p[li], fw.pre_p[li], model.weights_p[li],
               g.weights_p[li]);
        if (li > 0) dh = masks.empty() ? dinput : dinput.cwiseProduct(masks[li]);
    }
    return g;
}

GcnGradients backward(const GcnModel& model, const HeteroGraph& graph, const std::vector<int>& labels,
                      const DropoutMasks& masks, double weight_decay) {
    return backward(model, GraphOperators::from(graph), graph.features, labels, masks, weight_decay);
}

namespace {

Matrix glorot(int fan_in, int fan_out, std::mt19937_64& rng) {
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::uniform_real_distribution<double> dist(-bound, bound);
    Matrix w(fan_in, fan_out);
    for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = dist(rng);
    return w;
}

struct AdamState {
    Matrix m;
    Matrix v;
};

void adam_step(Matrix& w, const Matrix& grad, AdamState& s, const TrainConfig& cfg, int step) {
    if (s.m.size() == 0) {
        s.m = Matrix::Zero(w.rows(), w.cols());
        s.v = Matrix::Zero(w.rows(), w.cols());
    }
    s.m = cfg.adam_beta1 * s.m + (1.0 - cfg.adam_beta1) * grad;
    s.v = cfg.adam_beta2 * s.v + (1.0 - cfg.adam_beta2) * grad.cwiseProduct(grad);
    const double c1 = 1.0 - std::pow(cfg.adam_beta1, step);
    const double c2 = 1.0 - std::pow(cfg.adam_beta2, step);
    w.array() -= cfg.learning_rate * (s.m.array() / c1) / ((s.v.array() / c2).sqrt() + cfg.adam_eps);
}

}  // namespace

GcnModel init_model(int n_features, const TrainConfig& config, double alpha_q, double alpha_p) {
    config.validate();
    std::vector<int> dims{n_features};
    for (int l = 0; l < config.n_layers; ++l) dims.push_back(config.hidden_dim);
    GcnModel m = GcnModel::zeros(dims, alpha_q, alpha_p);
    std::mt19937_64 rng(config.seed);
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
        m.weights_q[l] = glorot(dims[l], dims[l + 1], rng);
        m.weights_p[l] = glorot(dims[l], dims[l + 1], rng);
    }
    m.classifier = glorot(dims.back(), kNumRatingClasses, rng);
    m.validate();
    return m;
}

GcnModel train(const HeteroGraph& graph, const TrainConfig& config, double alpha_q, double alpha_p) {
    graph.validate();
    if (!graph.labels) throw ValidationError("training graph has no labels");
    GcnModel model = init_model(static_cast<int>(graph.features.cols()), config, alpha_q, alpha_p);
    const GraphOperators ops = GraphOperators::from(graph);
    const auto n = graph.n_nodes();

    // Dropout stream is separate from initialization so that changing the
    // epoch count never perturbs the initial weights.
    std::mt19937_64 rng(config.seed ^ 0x9E3779B97F4A7C15ULL);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double keep = 1.0 - config.dropout_rate;
    const auto layers = static_cast<std::size_t>(model.n_layers());

    std::vector<AdamState> state_q(layers);
    std::vector<AdamState> state_p(layers);
    AdamState state_c;
    DropoutMasks masks;
    for (int epoch = 1; epoch <= config.epochs; ++epoch) {
        masks.clear();
        if (config.dropout_rate > 0.0) {
            for (std::size_t l = 0; l < layers; ++l) {
                Matrix mask(n, model.layer_dims[l]);
                for (Eigen::Index k = 0; k < mask.size(); ++k) {
                    mask.data()[k] = unit(rng) < keep ? 1.0 / keep : 0.0;
                }
                masks.push_back(std::move(mask));
            }
        }
        const GcnGradients g = backward(model, ops, graph.features, *graph.labels, masks, config.weight_decay);
        for (std::size_t l = 0; l < layers; ++l) {
            adam_step(model.weights_q[l], g.weights_q[l], state_q[l], config, epoch);
            adam_step(model.weights_p[l], g.weights_p[l], state_p[l], config, epoch);
        }
        adam_step(model.classifier, g.classifier, state_c, config, epoch);
    }
    return model;
}

int argmax_rating(const Eigen::Ref<const Eigen::RowVectorXd>& row) {
    Eigen::Index best = 0;
    for (Eigen::Index k = 1; k < row.size(); ++k) {
        if (row[k] > row[best]) best = k;
    }
    return static_cast<int>(best) + 1;
}

Prediction predict(const GcnModel& model, const HeteroGraph& graph) {
    graph.validate();
    const ForwardResult fw = forward(model, graph);
    Prediction p;
    p.probs = fw.probs;
    for (Eigen::Index i = 0; i < fw.probs.rows(); ++i) p.ratings.push_back(argmax_rating(fw.probs.row(i)));
    return p;
}

}  // namespace htgnn
