#pragma once

// Two-relation graph convolutional network: one propagation branch over the
// lending edges (q) and one over the persistence edges (p), mixed by
// alpha_q / alpha_p, followed by a linear 4-class softmax classifier.

#include "htgnn/common.hpp"

#include <Eigen/SparseCore>

#include <cstdint>
#include <optional>
#include <vector>

namespace htgnn {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

enum class Relation { lending, persistence };

struct HeteroGraph {
    Matrix features;  // H^(0)
    EdgeSet edges_q;
    EdgeSet edges_p;
    std::optional<std::vector<int>> labels;  // 1..4

    Eigen::Index n_nodes() const { return features.rows(); }
    void validate() const;
};

// Throws ValidationError on out-of-range endpoints, self-loops or labels
// outside 1..4. Edge sets are canonicalized.
HeteroGraph build_hetero_graph(Matrix features, EdgeSet edges_q, EdgeSet edges_p,
                               std::optional<std::vector<int>> labels = std::nullopt);

// D^-1/2 (A + I) D^-1/2 with binary A.
SparseMatrix normalize_adjacency(const EdgeSet& edges, Eigen::Index n);

struct GcnModel {
    std::vector<int> layer_dims;  // d_in, h_1, ..., h_L
    std::vector<Matrix> weights_q;
    std::vector<Matrix> weights_p;
    Matrix classifier;  // h_L x 4
    double alpha_q = 0.1;
    double alpha_p = 0.9;

    int n_layers() const { return static_cast<int>(weights_q.size()); }
    void validate() const;

    // All-zero weights of the right shapes.
    static GcnModel zeros(std::vector<int> layer_dims, double alpha_q, double alpha_p);
};

struct TrainConfig {
    double learning_rate = 0.01;
    int epochs = 1000;
    double weight_decay = 5e-4;
    double dropout_rate = 0.5;
    int hidden_dim = 64;
    int n_layers = 2;
    std::uint64_t seed = 0;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;

    void validate() const;
};

// Pre-normalized adjacencies for one graph.
struct GraphOperators {
    SparseMatrix adj_q;
    SparseMatrix adj_p;

    static GraphOperators from(const HeteroGraph& graph);
};

// Inverted-dropout masks, one per layer input H^(l), already scaled by
// 1/(1-rate). Empty means no dropout.
using DropoutMasks = std::vector<Matrix>;

struct ForwardResult {
    std::vector<Matrix> layer_inputs;  // H^(l) after dropout, l = 0..L-1
    std::vector<Matrix> propagated_q;  // A_q H^(l)
    std::vector<Matrix> propagated_p;
    std::vector<Matrix> pre_q;         // A_q H^(l) W_q^(l)
    std::vector<Matrix> pre_p;
    Matrix embeddings;                 // H^(L)
    Matrix logits;                     // N x 4
    Matrix probs;                      // row-wise softmax
};

ForwardResult forward(const GcnModel& model, const HeteroGraph& graph, const DropoutMasks& masks = {});
ForwardResult forward(const GcnModel& model, const GraphOperators& ops, const Matrix& features,
                      const DropoutMasks& masks = {});

// Plain Kipf-Welling GCN on one relation: H <- ReLU(A H W) per layer, then
// the classifier. Returns logits.
Matrix single_relation_logits(const std::vector<Matrix>& weights, const Matrix& classifier,
                              const SparseMatrix& adjacency, const Matrix& features);

// Row-wise softmax after subtracting the row maximum.
Matrix softmax_rows(const Matrix& logits);

// Mean negative log-likelihood (probabilities clamped at 1e-12) plus
// weight_decay / 2 times the squared Frobenius norm of every weight.
double cross_entropy_loss(const Matrix& probs, const std::vector<int>& labels, const GcnModel& model,
                          double weight_decay);

struct GcnGradients {
    std::vector<Matrix> weights_q;
    std::vector<Matrix> weights_p;
    Matrix classifier;
    double loss = 0.0;
};

GcnGradients backward(const GcnModel& model, const HeteroGraph& graph, const std::vector<int>& labels,
                      const DropoutMasks& masks, double weight_decay);
GcnGradients backward(const GcnModel& model, const GraphOperators& ops, const Matrix& features,
                      const std::vector<int>& labels, const DropoutMasks& masks, double weight_decay);

// Glorot-uniform initialization of every weight from `seed`.
GcnModel init_model(int n_features, const TrainConfig& config, double alpha_q, double alpha_p);

// Full-batch Adam on the labelled graph. Deterministic in config.seed.
GcnModel train(const HeteroGraph& graph, const TrainConfig& config, double alpha_q, double alpha_p);

struct Prediction {
    std::vector<int> ratings;  // 1..4
    Matrix probs;
};

// Argmax of the softmax rows, ties toward the better (smaller) rating.
Prediction predict(const GcnModel& model, const HeteroGraph& graph);
int argmax_rating(const Eigen::Ref<const Eigen::RowVectorXd>& row);

}  // namespace htgnn
