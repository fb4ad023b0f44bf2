#include "htgnn/pipeline.hpp"

#include "htgnn/io.hpp"

#include <algorithm>
#include <chrono>
#include <iostream>
#include <numeric>
#include <random>
#include <unordered_map>

namespace htgnn {

using nlohmann::json;

ModelVariant parse_model_variant(std::string_view name) {
    if (name == "lqm") return ModelVariant::lqm;
    if (name == "ph") return ModelVariant::ph;
    if (name == "htgnn") return ModelVariant::htgnn;
    throw ValidationError("model_variant must be lqm, ph or htgnn, got '" + std::string(name) + "'");
}

std::string_view to_string(ModelVariant variant) {
    switch (variant) {
        case ModelVariant::lqm: return "lqm";
        case ModelVariant::ph: return "ph";
        case ModelVariant::htgnn: return "htgnn";
    }
    return "?";
}

void ExperimentConfig::validate() const {
    ph.validate();
    mdm.validate();
    train.validate();
    if (!(alpha_q >= 0.0) || !(alpha_p >= 0.0) || std::abs(alpha_q + alpha_p - 1.0) > 1e-12) {
        throw ValidationError("alpha_q and alpha_p must be non-negative and sum to 1");
    }
    if (n_repeats < 1) throw ValidationError("n_repeats must be at least 1");
    if (sample_size && *sample_size < 2) throw ValidationError("sample_size must be at least 2");
    if (synthetic) {
        synthetic->validate();
    } else if (quarters.size() < 2) {
        throw ValidationError("need synthetic data or at least two quarter CSV files");
    }
}

namespace {

const std::vector<std::string>& config_keys() {
    static const std::vector<std::string> keys{
        "r0",           "r_max",        "tau",     "alpha_q",          "alpha_p",         "learning_rate",
        "epochs",       "weight_decay", "dropout_rate", "hidden_dim",  "n_layers",        "seed",
        "n_repeats",    "max_homology_dim", "feature_scaling", "model_variant", "sample_size"};
    return keys;
}

template <typename T>
void read_key(const json& j, const char* key, T& target) {
    if (!j.contains(key)) return;
    try {
        target = j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ValidationError(std::string("config key '") + key + "': " + e.what());
    }
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json(const json& j) {
    if (!j.is_object()) throw ValidationError("config must be a JSON object");
    const auto& keys = config_keys();
    for (const auto& [key, value] : j.items()) {
        if (std::find(keys.begin(), keys.end(), key) == keys.end()) {
            throw ValidationError("unknown config key '" + key + "'");
        }
    }
    ExperimentConfig c;
    read_key(j, "r0", c.ph.r0);
    read_key(j, "r_max", c.ph.r_max);
    read_key(j, "tau", c.ph.tau);
    read_key(j, "max_homology_dim", c.ph.max_homology_dim);
    read_key(j, "alpha_q", c.alpha_q);
    read_key(j, "alpha_p", c.alpha_p);
    read_key(j, "learning_rate", c.train.learning_rate);
    read_key(j, "epochs", c.train.epochs);
    read_key(j, "weight_decay", c.train.weight_decay);
    read_key(j, "dropout_rate", c.train.dropout_rate);
    read_key(j, "hidden_dim", c.train.hidden_dim);
    read_key(j, "n_layers", c.train.n_layers);
    read_key(j, "seed", c.train.seed);
    read_key(j, "n_repeats", c.n_repeats);
    if (j.contains("feature_scaling")) {
        std::string s;
        read_key(j, "feature_scaling", s);
        c.feature_scaling = parse_feature_scaling(s);
    }
    if (j.contains("model_variant")) {
        std::string s;
        read_key(j, "model_variant", s);
        c.model_variant = parse_model_variant(s);
    }
    if (j.contains("sample_size") && !j.at("sample_size").is_null()) {
        int s = 0;
        read_key(j, "sample_size", s);
        c.sample_size = s;
    }
    c.ph.validate();
    c.train.validate();
    return c;
}

json ExperimentConfig::to_json() const {
    json j;
    j["r0"] = ph.r0;
    j["r_max"] = ph.r_max;
    j["tau"] = ph.tau;
    j["alpha_q"] = alpha_q;
    j["alpha_p"] = alpha_p;
    j["learning_rate"] = train.learning_rate;
    j["epochs"] = train.epochs;
    j["weight_decay"] = train.weight_decay;
    j["dropout_rate"] = train.dropout_rate;
    j["hidden_dim"] = train.hidden_dim;
    j["n_layers"] = train.n_layers;
    j["seed"] = train.seed;
    j["n_repeats"] = n_repeats;
    j["max_homology_dim"] = ph.max_homology_dim;
    j["feature_scaling"] = std::string(to_string(feature_scaling));
    j["model_variant"] = std::string(to_string(model_variant));
    j["sample_size"] = sample_size ? json(*sample_size) : json(nullptr);
    return j;
}

PhConfig effective_ph_config(const PhConfig& config, std::size_t n_banks) {
    PhConfig out = config;
    if (n_banks > kMaxBanksForH2 && out.max_homology_dim > 1) {
        std::cerr << "WARNING: " << n_banks << " banks exceeds " << kMaxBanksForH2
                  << "; persistent homology capped at H1 (max_homology_dim 2 -> 1)\n";
        out.max_homology_dim = 1;
    }
    return out;
}

QuarterGraphs build_quarter_graphs(const QuarterSnapshot& snapshot, const ExperimentConfig& config) {
    snapshot.validate();
    QuarterGraphs g;
    g.snapshot = snapshot;
    g.features = scale_features(snapshot.features, config.feature_scaling);
    g.distances = cosine_distance_matrix(g.features);
    g.ph_used = effective_ph_config(config.ph, snapshot.size());
    g.persistence = build_persistence_graph(g.distances, g.ph_used);
    g.loans = infer_loan_matrix(snapshot.interbank_assets, snapshot.interbank_liabilities, config.mdm);
    g.edges_q = loan_matrix_to_edges(g.loans);
    return g;
}

VariantSetup variant_setup(ModelVariant v, const ExperimentConfig& c) {
    switch (v) {
        case ModelVariant::lqm: return {true, false, 1.0, 0.0};
        case ModelVariant::ph: return {false, true, 0.0, 1.0};
        case ModelVariant::htgnn: return {true, true, c.alpha_q, c.alpha_p};
    }
    throw ValidationError("unknown variant");
}

namespace {

HeteroGraph graph_for(const QuarterGraphs& q, const VariantSetup& s) {
    return build_hetero_graph(q.features, s.use_q ? q.edges_q : EdgeSet{},
                              s.use_p ? q.persistence.edges : EdgeSet{}, q.snapshot.ratings);
}

std::optional<double> maybe_homophily(const EdgeSet& edges, const std::vector<int>& labels) {
    if (edges.empty()) return std::nullopt;
    return homophily_ratio(edges, labels);
}

}  // namespace

VariantOutcome evaluate_variant(const QuarterGraphs& current, const QuarterGraphs& next, ModelVariant variant,
                                const ExperimentConfig& config, std::uint64_t seed) {
    const auto setup = variant_setup(variant, config);
    TrainConfig tc = config.train;
    tc.seed = seed;
    VariantOutcome out;
    out.variant = variant;
    out.seed = seed;
    out.model = train(graph_for(current, setup), tc, setup.alpha_q, setup.alpha_p);
    const HeteroGraph eval_graph = graph_for(next, setup);
    out.prediction = predict(out.model, eval_graph);
    out.metrics = classification_metrics(next.snapshot.ratings, out.prediction.ratings);
    out.homophily_q = maybe_homophily(next.edges_q, next.snapshot.ratings);
    out.homophily_p = maybe_homophily(next.persistence.edges, next.snapshot.ratings);
    return out;
}

std::vector<std::pair<QuarterSnapshot, QuarterSnapshot>> load_quarter_pairs(const ExperimentConfig& config,
                                                                           std::uint64_t seed) {
    std::vector<std::pair<QuarterSnapshot, QuarterSnapshot>> pairs;
    if (config.synthetic) {
        SyntheticConfig sc = *config.synthetic;
        sc.seed = seed;
        pairs.push_back(gen_synthetic(sc));
    } else {
        std::vector<QuarterSnapshot> qs;
        for (const auto& p : config.quarters) qs.push_back(load_quarter_csv(p));
        for (std::size_t k = 0; k + 1 < qs.size(); ++k) pairs.emplace_back(qs[k], qs[k + 1]);
    }
    if (!config.sample_size) return pairs;

    // One uniform subsample per pair, drawn from quarter t and applied to
    // the banks of t+1 by identifier.
    std::mt19937_64 rng(seed);
    for (auto& [cur, nxt] : pairs) {
        std::vector<std::size_t> idx(cur.size());
        std::iota(idx.begin(), idx.end(), std::size_t{0});
        std::shuffle(idx.begin(), idx.end(), rng);
        idx.resize(std::min(idx.size(), static_cast<std::size_t>(*config.sample_size)));
        std::sort(idx.begin(), idx.end());
        std::unordered_map<std::string, std::size_t> where;
        for (std::size_t i = 0; i < nxt.size(); ++i) where.emplace(nxt.bank_ids[i], i);
        std::vector<std::size_t> next_idx;
        for (auto i : idx) {
            if (auto it = where.find(cur.bank_ids[i]); it != where.end()) next_idx.push_back(it->second);
        }
        cur = cur.subset(idx);
        nxt = nxt.subset(next_idx);
    }
    return pairs;
}

namespace {

ClassificationMetrics mean_metrics(const std::vector<ClassificationMetrics>& ms) {
    ClassificationMetrics m;
    for (const auto& x : ms) {
        m.accuracy += x.accuracy;
        m.macro_precision += x.macro_precision;
        m.macro_recall += x.macro_recall;
        m.macro_f1 += x.macro_f1;
    }
    const double n = static_cast<double>(ms.size());
    m.accuracy /= n;
    m.macro_precision /= n;
    m.macro_recall /= n;
    m.macro_f1 /= n;
    return m;
}

std::optional<double> mean_optional(const std::vector<std::optional<double>>& xs) {
    double s = 0.0;
    std::size_t k = 0;
    for (const auto& x : xs) {
        if (x) {
            s += *x;
            ++k;
        }
    }
    if (k == 0) return std::nullopt;
    return s / static_cast<double>(k);
}

json optional_json(const std::optional<double>& x) { return x ? json(*x) : json(nullptr); }

}  // namespace

VariantOutcome run_variant(const ExperimentConfig& config, ModelVariant variant, std::uint64_t seed) {
    config.validate();
    const auto pairs = load_quarter_pairs(config, seed);
    std::vector<ClassificationMetrics> ms;
    std::vector<std::optional<double>> hq;
    std::vector<std::optional<double>> hp;
    VariantOutcome last;
    for (const auto& [cur, nxt] : pairs) {
        const auto gc = build_quarter_graphs(cur, config);
        const auto gn = build_quarter_graphs(nxt, config);
        last = evaluate_variant(gc, gn, variant, config, seed);
        ms.push_back(last.metrics);
        hq.push_back(last.homophily_q);
        hp.push_back(last.homophily_p);
    }
    last.metrics = mean_metrics(ms);
    last.homophily_q = mean_optional(hq);
    last.homophily_p = mean_optional(hp);
    return last;
}

json metrics_to_json(const ClassificationMetrics& m) {
    return json{{"accuracy", 100.0 * m.accuracy},
                {"f1", 100.0 * m.macro_f1},
                {"precision", 100.0 * m.macro_precision},
                {"recall", 100.0 * m.macro_recall}};
}

namespace {

// Tracks files written by this run so a failure can remove them.
class ArtifactWriter {
public:
    explicit ArtifactWriter(std::filesystem::path root, bool enabled) : root_(std::move(root)), enabled_(enabled) {}

    void write(const std::filesystem::path& relative, const std::string& content) {
        if (!enabled_) return;
        const auto path = root_ / relative;
        write_file_atomic(path, content);
        written_.push_back(path);
    }

    void rollback() noexcept {
        std::error_code ec;
        for (const auto& p : written_) std::filesystem::remove(p, ec);
        written_.clear();
    }

private:
    std::filesystem::path root_;
    bool enabled_;
    std::vector<std::filesystem::path> written_;
};

void write_quarter_artifacts(ArtifactWriter& w, const std::filesystem::path& dir, const std::string& tag,
                             const QuarterGraphs& g) {
    w.write(dir / (tag + "_distances.csv"), matrix_to_csv(g.distances.values));
    w.write(dir / (tag + "_diagram.csv"), diagram_to_csv(g.persistence.diagram));
    w.write(dir / (tag + "_edges_p.csv"), edges_to_csv(g.persistence.edges, Relation::persistence));
    w.write(dir / (tag + "_loan_matrix.csv"), matrix_to_csv(g.loans.amounts));
    w.write(dir / (tag + "_edges_q.csv"), edges_to_csv(g.edges_q, Relation::lending));
}

std::string significance_stars(double p) {
    if (p < 0.01) return "**";
    if (p < 0.05) return "*";
    return "";
}

std::string pad3(int k) {
    std::string s = std::to_string(k);
    return std::string(s.size() < 3 ? 3 - s.size() : 0, '0') + s;
}

}  // namespace

ExperimentReport run_experiment(const ExperimentConfig& config) {
    config.validate();
    using clock = std::chrono::steady_clock;
    const auto start = clock::now();
    ArtifactWriter writer(config.output_dir, config.write_artifacts && !config.output_dir.empty());

    json timings = json::object();
    json variants = json::object();
    std::unordered_map<std::string, std::vector<double>> accuracy;
    json pairs_doc = json::array();

    try {
        json repeat_times = json::array();
        for (int k = 0; k < config.n_repeats; ++k) {
            const auto t0 = clock::now();
            const std::uint64_t seed = config.seed() + static_cast<std::uint64_t>(k);
            const auto pairs = load_quarter_pairs(config, seed);
            const auto dir = std::filesystem::path("repeat_" + pad3(k));

            std::unordered_map<std::string, std::vector<ClassificationMetrics>> ms;
            std::unordered_map<std::string, std::vector<std::optional<double>>> hq;
            std::unordered_map<std::string, std::vector<std::optional<double>>> hp;
            for (std::size_t pi = 0; pi < pairs.size(); ++pi) {
                const auto& [cur, nxt] = pairs[pi];
                if (k == 0) {
                    pairs_doc.push_back(json{{"train_quarter", cur.quarter_id},
                                             {"eval_quarter", nxt.quarter_id},
                                             {"n_train", cur.size()},
                                             {"n_eval", nxt.size()}});
                }
                const auto gc = build_quarter_graphs(cur, config);
                const auto gn = build_quarter_graphs(nxt, config);
                const std::string ptag = pairs.size() > 1 ? "pair" + std::to_string(pi) + "_" : "";
                write_quarter_artifacts(writer, dir, ptag + "t", gc);
                write_quarter_artifacts(writer, dir, ptag + "t1", gn);
                for (auto v : kAllVariants) {
                    const std::string name(to_string(v));
                    const auto out = evaluate_variant(gc, gn, v, config, seed);
                    if (config.verbose) {
                        std::cerr << "repeat " << k << " " << name << " accuracy " << out.metrics.accuracy << "\n";
                    }
                    writer.write(dir / (ptag + "checkpoint_" + name + ".txt"), checkpoint_to_string(out.model));
                    writer.write(dir / (ptag + "predictions_" + name + ".csv"),
                                 predictions_to_csv(nxt.bank_ids, out.prediction));
                    ms[name].push_back(out.metrics);
                    hq[name].push_back(out.homophily_q);
                    hp[name].push_back(out.homophily_p);
                }
            }
            for (auto v : kAllVariants) {
                const std::string name(to_string(v));
                const auto m = mean_metrics(ms[name]);
                json entry = metrics_to_json(m);
                entry["repeat"] = k;
                entry["seed"] = seed;
                entry["homophily_q"] = optional_json(mean_optional(hq[name]));
                entry["homophily_p"] = optional_json(mean_optional(hp[name]));
                variants[name]["repeats"].push_back(entry);
                accuracy[name].push_back(100.0 * m.accuracy);
            }
            repeat_times.push_back(std::chrono::duration<double>(clock::now() - t0).count());
        }
        timings["repeat_seconds"] = repeat_times;

        for (auto v : kAllVariants) {
            const std::string name(to_string(v));
            auto& block = variants[name];
            json mean = json::object();
            for (const char* key : {"accuracy", "f1", "precision", "recall"}) {
                double s = 0.0;
                for (const auto& r : block["repeats"]) s += r[key].get<double>();
                mean[key] = s / static_cast<double>(block["repeats"].size());
            }
            for (const char* key : {"homophily_q", "homophily_p"}) {
                std::vector<std::optional<double>> xs;
                for (const auto& r : block["repeats"]) {
                    xs.push_back(r[key].is_null() ? std::nullopt : std::optional<double>(r[key].get<double>()));
                }
                mean[key] = optional_json(mean_optional(xs));
            }
            block["mean"] = mean;
        }

        json ttests = json::array();
        const std::pair<ModelVariant, ModelVariant> comparisons[] = {{ModelVariant::lqm, ModelVariant::ph},
                                                                     {ModelVariant::lqm, ModelVariant::htgnn},
                                                                     {ModelVariant::ph, ModelVariant::htgnn}};
        for (const auto& [a, b] : comparisons) {
            const std::string na(to_string(a));
            const std::string nb(to_string(b));
            json t{{"comparison", na + " vs " + nb}, {"metric", "accuracy"}, {"n", config.n_repeats}};
            if (config.n_repeats < 2) {
                t["omitted"] = "n < 2 repeats: paired t-test needs at least two pairs";
            } else {
                try {
                    const auto r = paired_t_test(accuracy[na], accuracy[nb]);
                    t["t_statistic"] = r.t_statistic;
                    t["p_value"] = r.p_value;
                    t["dof"] = r.dof;
                    t["significance"] = significance_stars(r.p_value);
                } catch (const ValidationError& e) {
                    t["omitted"] = e.what();
                }
            }
            ttests.push_back(t);
        }

        json report;
        report["config"] = config.to_json();
        json data;
        if (config.synthetic) {
            const auto& s = *config.synthetic;
            data["source"] = "synthetic";
            data["synthetic"] = json{{"n_banks", s.n_banks},
                                     {"n_features", s.n_features},
                                     {"n_clusters", s.n_clusters},
                                     {"cluster_spread", s.cluster_spread},
                                     {"label_noise", s.label_noise},
                                     {"lending_density", s.lending_density}};
        } else {
            data["source"] = "csv";
            json files = json::array();
            for (const auto& q : config.quarters) files.push_back(q.filename().string());
            data["quarters"] = files;
        }
        data["quarter_pairs"] = pairs_doc;
        data["protocol"] =
            "repeat k uses seed + k for data generation/subsampling, initialization and dropout; each model "
            "is trained on quarter t and predicts quarter t+1 with frozen weights; per-repeat metrics are "
            "averaged over quarter pairs; t-tests pair the per-repeat accuracies of two variants";
        report["data"] = data;
        report["variants"] = variants;
        report["ttests"] = ttests;
        timings["total_seconds"] = std::chrono::duration<double>(clock::now() - start).count();
        report["timings"] = timings;

        writer.write("report.json", report.dump(2) + "\n");
        return {report};
    } catch (...) {
        writer.rollback();
        throw;
    }
}

}  // namespace htgnn
