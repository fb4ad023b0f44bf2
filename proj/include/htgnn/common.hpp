#pragma once

// Shared vocabulary types: dense matrices, undirected edge sets, error
// classes and round-trip float formatting.

#include <Eigen/Dense>

#include <charconv>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace htgnn {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

// Malformed input or violated precondition. The CLI maps it to exit code 1.
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Undirected edge between node indices, stored with src < dst.
struct Edge {
    int src = 0;
    int dst = 0;
    double weight = 0.0;

    friend bool operator==(const Edge& a, const Edge& b) {
        return a.src == b.src && a.dst == b.dst;
    }
};

// Sorted by (src, dst), no duplicates, no self-loops.
using EdgeSet = std::vector<Edge>;

// Canonicalizes endpoints, sorts and merges duplicates. Weights of duplicates
// are summed when `sum_duplicates` is set, otherwise the first one is kept.
// Throws ValidationError on self-loops or negative endpoints.
EdgeSet make_edge_set(std::vector<Edge> edges, bool sum_duplicates = false);

// Shortest decimal string that parses back to exactly `value`.
std::string format_double(double value);

// Strict parse of a full token; throws ValidationError on trailing junk.
double parse_double(std::string_view token);
long long parse_int(std::string_view token);

std::vector<std::string_view> split(std::string_view line, char sep);

}  // namespace htgnn
