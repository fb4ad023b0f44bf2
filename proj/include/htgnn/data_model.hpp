#pragma once

// Quarter snapshots: one quarter of bank features, interbank totals and
// bucketed ratings. Includes CSV ingestion and a seeded synthetic generator.

#include "htgnn/common.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace htgnn {

inline constexpr int kNumRatingClasses = 4;

struct QuarterSnapshot {
    std::string quarter_id;
    std::vector<std::string> bank_ids;
    Matrix features;                 // N x d
    Vector interbank_assets;         // A, currency units
    Vector interbank_liabilities;    // L, currency units
    std::vector<int> ratings;        // 1 (best) .. 4 (worst)

    std::size_t size() const { return bank_ids.size(); }
    Eigen::Index n_features() const { return features.cols(); }

    // Throws ValidationError if any shape, range or finiteness invariant fails.
    void validate() const;

    // Rows selected by `indices`, in that order.
    QuarterSnapshot subset(const std::vector<std::size_t>& indices) const;
};

// Header: bank_id,f1,...,fd,interbank_assets,interbank_liabilities,rating.
// Row order defines node order. The quarter id defaults to the file stem.
QuarterSnapshot load_quarter_csv(const std::filesystem::path& path);
QuarterSnapshot parse_quarter_csv(const std::string& text, std::string quarter_id);

std::string quarter_to_csv(const QuarterSnapshot& snapshot);
void write_quarter_csv(const QuarterSnapshot& snapshot, const std::filesystem::path& path);

// Four groups of agency rating strings ordered best to worst.
using RatingMapping = std::vector<std::vector<std::string>>;

// One group per line, comma separated. Blank lines and '#' comments ignored.
RatingMapping load_rating_mapping(const std::filesystem::path& path);

std::vector<int> bucket_ratings(const std::vector<std::string>& raw, const RatingMapping& mapping);

enum class FeatureScaling { none, min_max };

FeatureScaling parse_feature_scaling(std::string_view name);
std::string_view to_string(FeatureScaling scaling);

// min_max maps each column onto [0, 1]; constant columns map to 0.
Matrix scale_features(const Matrix& x, FeatureScaling mode);

struct SyntheticConfig {
    int n_banks = 200;
    int n_features = 70;
    int n_clusters = 4;
    double cluster_spread = 0.35;
    double label_noise = 0.15;
    double lending_density = 0.6;
    std::uint64_t seed = 0;

    void validate() const;
};

// Snapshot pair (t, t+1) drawn from a fixed cluster assignment. Ratings are
// cluster labels with uniform flips to another class; lending totals are
// independent of the clusters.
std::pair<QuarterSnapshot, QuarterSnapshot> gen_synthetic(const SyntheticConfig& config);

// Cluster index of each bank as used by gen_synthetic (test hook).
std::vector<int> synthetic_cluster_labels(const SyntheticConfig& config);

}  // namespace htgnn
