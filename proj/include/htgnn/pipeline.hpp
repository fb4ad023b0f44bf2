#pragma once

// Experiment orchestration: builds the lending and persistence graphs for a
// quarter pair, trains each model variant on quarter t, predicts quarter t+1
// and aggregates repeats with paired t-tests.

#include "htgnn/data_model.hpp"
#include "htgnn/hetero_gcn.hpp"
#include "htgnn/mdm_network.hpp"
#include "htgnn/metrics_stats.hpp"
#include "htgnn/tda_persistence.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace htgnn {

enum class ModelVariant { lqm, ph, htgnn };

ModelVariant parse_model_variant(std::string_view name);
std::string_view to_string(ModelVariant variant);
inline constexpr ModelVariant kAllVariants[] = {ModelVariant::lqm, ModelVariant::ph, ModelVariant::htgnn};

// Above this many banks the persistence step caps homology at H1.
inline constexpr std::size_t kMaxBanksForH2 = 300;

struct ExperimentConfig {
    PhConfig ph;
    MdmConfig mdm;
    TrainConfig train;
    double alpha_q = 0.1;
    double alpha_p = 0.9;
    ModelVariant model_variant = ModelVariant::htgnn;
    int n_repeats = 10;
    std::optional<int> sample_size;
    FeatureScaling feature_scaling = FeatureScaling::min_max;

    // Data source: consecutive CSV quarters (pairs t -> t+1), or synthetic
    // data regenerated per repeat with seed + k.
    std::vector<std::filesystem::path> quarters;
    std::optional<SyntheticConfig> synthetic;

    std::filesystem::path output_dir;
    bool write_artifacts = true;
    bool verbose = false;

    std::uint64_t seed() const { return train.seed; }
    void validate() const;

    // Strict: only the documented keys are accepted; missing keys keep
    // their defaults.
    static ExperimentConfig from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;
};

// Graphs derived from one (possibly subsampled) quarter.
struct QuarterGraphs {
    QuarterSnapshot snapshot;
    Matrix features;  // after scaling
    DistanceMatrix distances;
    PhConfig ph_used;
    PersistenceGraph persistence;
    LoanQuotaMatrix loans;
    EdgeSet edges_q;
};

// Applies the H1 cap for large N (with a warning on stderr).
PhConfig effective_ph_config(const PhConfig& config, std::size_t n_banks);

QuarterGraphs build_quarter_graphs(const QuarterSnapshot& snapshot, const ExperimentConfig& config);

// Which relations a variant uses and with what mixing weights: lqm is
// lending only (1, 0), ph is persistence only (0, 1), htgnn uses both with
// the configured alphas.
struct VariantSetup {
    bool use_q = true;
    bool use_p = true;
    double alpha_q = 0.0;
    double alpha_p = 0.0;
};

VariantSetup variant_setup(ModelVariant variant, const ExperimentConfig& config);

struct VariantOutcome {
    ModelVariant variant = ModelVariant::htgnn;
    std::uint64_t seed = 0;
    ClassificationMetrics metrics;
    std::optional<double> homophily_q;  // on quarter t+1 with its labels
    std::optional<double> homophily_p;
    GcnModel model;
    Prediction prediction;
};

VariantOutcome evaluate_variant(const QuarterGraphs& current, const QuarterGraphs& next, ModelVariant variant,
                                const ExperimentConfig& config, std::uint64_t seed);

// Quarter pairs used by repeat with `seed` (synthetic data or CSV files,
// subsampled when sample_size is set).
std::vector<std::pair<QuarterSnapshot, QuarterSnapshot>> load_quarter_pairs(const ExperimentConfig& config,
                                                                           std::uint64_t seed);

// One repeat of one variant; metrics averaged over quarter pairs.
VariantOutcome run_variant(const ExperimentConfig& config, ModelVariant variant, std::uint64_t seed);

struct ExperimentReport {
    nlohmann::json json;  // timings live under "timings"
};

// All three variants x n_repeats; writes report.json and per-repeat
// artifacts to output_dir when write_artifacts is set. Files written by a
// failed run are removed.
ExperimentReport run_experiment(const ExperimentConfig& config);

// Metric block in percent: accuracy, f1, precision, recall.
nlohmann::json metrics_to_json(const ClassificationMetrics& m);

}  // namespace htgnn
