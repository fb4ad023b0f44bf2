#include "htgnn/io.hpp"
#include "htgnn/pipeline.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace htgnn;

namespace {

struct Globals {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string output_dir = ".";
    bool verbose = false;
};

ExperimentConfig load_config(const Globals& g) {
    ExperimentConfig c;
    if (!g.config_path.empty()) {
        json j;
        try {
            j = json::parse(read_file(g.config_path));
        } catch (const json::parse_error& e) {
            throw ValidationError("config " + g.config_path + ": " + e.what());
        }
        c = ExperimentConfig::from_json(j);
    }
    if (g.seed) c.train.seed = *g.seed;
    c.output_dir = g.output_dir;
    c.verbose = g.verbose;
    return c;
}

void emit(const Globals& g, const std::string& name, const std::string& content) {
    const auto path = fs::path(g.output_dir) / name;
    write_file_atomic(path, content);
    std::cout << path.string() << "\n";
}

void log(const Globals& g, const std::string& msg) {
    if (g.verbose) std::cerr << msg << "\n";
}

Matrix scaled_features(const QuarterSnapshot& q, const ExperimentConfig& c) {
    return scale_features(q.features, c.feature_scaling);
}

DistanceMatrix distances_for(const std::string& distances_path, const std::string& quarter_path,
                             const ExperimentConfig& c) {
    if (!distances_path.empty()) {
        DistanceMatrix d{matrix_from_csv(read_file(distances_path))};
        d.validate();
        return d;
    }
    if (quarter_path.empty()) throw ValidationError("need --distances or --quarter");
    return cosine_distance_matrix(scaled_features(load_quarter_csv(quarter_path), c));
}

// Graph for one variant. Relations not supplied as edge files are rebuilt
// from the quarter itself.
HeteroGraph variant_graph(const QuarterSnapshot& q, const ExperimentConfig& c, ModelVariant variant,
                          const std::string& edges_q_path, const std::string& edges_p_path) {
    const auto setup = variant_setup(variant, c);
    Matrix x = scaled_features(q, c);
    EdgeSet eq;
    EdgeSet ep;
    if (setup.use_q) {
        eq = edges_q_path.empty()
                 ? loan_matrix_to_edges(infer_loan_matrix(q.interbank_assets, q.interbank_liabilities, c.mdm))
                 : edges_from_csv(read_file(edges_q_path));
    }
    if (setup.use_p) {
        if (edges_p_path.empty()) {
            const auto ph = effective_ph_config(c.ph, q.size());
            ep = build_persistence_graph(cosine_distance_matrix(x), ph).edges;
        } else {
            ep = edges_from_csv(read_file(edges_p_path));
        }
    }
    return build_hetero_graph(std::move(x), std::move(eq), std::move(ep), q.ratings);
}

std::vector<double> parse_sample(const std::string& arg) {
    std::string text = arg;
    if (!arg.empty() && arg.front() == '@') text = read_file(arg.substr(1));
    std::vector<double> out;
    std::string token;
    for (char ch : text + ",") {
        if (ch == ',' || ch == '\n' || ch == ' ' || ch == '\r') {
            if (!token.empty()) out.push_back(parse_double(token));
            token.clear();
        } else {
            token += ch;
        }
    }
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"htgnn: bank rating classification on lending and persistence graphs"};
    app.require_subcommand(1);
    Globals g;
    app.add_option("--config", g.config_path, "experiment config JSON")->check(CLI::ExistingFile);
    app.add_option("--seed", g.seed, "base seed (overrides config)");
    app.add_option("--output-dir", g.output_dir, "directory for outputs");
    app.add_flag("--verbose", g.verbose, "progress on stderr");
    app.fallthrough();

    // synth
    SyntheticConfig sc;
    auto* synth = app.add_subcommand("synth", "write a synthetic quarter pair (t, t+1) as CSV");
    synth->add_option("--banks", sc.n_banks);
    synth->add_option("--features", sc.n_features);
    synth->add_option("--clusters", sc.n_clusters);
    synth->add_option("--spread", sc.cluster_spread);
    synth->add_option("--label-noise", sc.label_noise);
    synth->add_option("--lending-density", sc.lending_density);

    std::string quarter_path;
    std::string distances_path;
    std::string edges_q_path;
    std::string edges_p_path;
    std::string checkpoint_path;
    std::string predictions_path;
    std::string variant_name;

    auto* distances = app.add_subcommand("distances", "cosine distance matrix of a quarter");
    distances->add_option("--quarter", quarter_path)->required()->check(CLI::ExistingFile);

    auto* persistence = app.add_subcommand("persistence", "persistence diagram of a distance matrix");
    auto* ph_graph = app.add_subcommand("ph-graph", "persistence edge set (and diagram)");
    for (auto* sub : {persistence, ph_graph}) {
        sub->add_option("--distances", distances_path)->check(CLI::ExistingFile);
        sub->add_option("--quarter", quarter_path)->check(CLI::ExistingFile);
    }

    auto* mdm = app.add_subcommand("mdm", "minimum-density loan matrix and lending edge set");
    mdm->add_option("--quarter", quarter_path)->required()->check(CLI::ExistingFile);

    auto* train_cmd = app.add_subcommand("train", "train a model on a labelled quarter");
    auto* predict_cmd = app.add_subcommand("predict", "predict ratings with a checkpoint");
    for (auto* sub : {train_cmd, predict_cmd}) {
        sub->add_option("--quarter", quarter_path)->required()->check(CLI::ExistingFile);
        sub->add_option("--edges-q", edges_q_path, "lending edges CSV (default: rebuilt)")->check(CLI::ExistingFile);
        sub->add_option("--edges-p", edges_p_path, "persistence edges CSV (default: rebuilt)")
            ->check(CLI::ExistingFile);
        sub->add_option("--variant", variant_name, "lqm, ph or htgnn (default: config)");
    }
    predict_cmd->add_option("--checkpoint", checkpoint_path)->required()->check(CLI::ExistingFile);

    auto* evaluate = app.add_subcommand("evaluate", "metrics of a predictions file against a quarter");
    evaluate->add_option("--quarter", quarter_path)->required()->check(CLI::ExistingFile);
    evaluate->add_option("--predictions", predictions_path)->required()->check(CLI::ExistingFile);
    evaluate->add_option("--edges-q", edges_q_path)->check(CLI::ExistingFile);
    evaluate->add_option("--edges-p", edges_p_path)->check(CLI::ExistingFile);

    std::string edges_path;
    auto* homophily = app.add_subcommand("homophily", "fraction of same-rating edges");
    homophily->add_option("--edges", edges_path)->required()->check(CLI::ExistingFile);
    homophily->add_option("--quarter", quarter_path)->required()->check(CLI::ExistingFile);

    std::string sample_a;
    std::string sample_b;
    auto* ttest = app.add_subcommand("ttest", "paired t-test; samples as comma lists or @file");
    ttest->add_option("--a", sample_a)->required();
    ttest->add_option("--b", sample_b)->required();

    std::vector<std::string> quarters;
    std::optional<SyntheticConfig> pipeline_synth;
    auto* pipeline = app.add_subcommand("pipeline", "all variants x repeats with report and artifacts");
    pipeline->add_option("--quarters", quarters, "quarter CSVs in time order (default: synthetic)")
        ->check(CLI::ExistingFile);
    pipeline->add_option("--banks", sc.n_banks);
    pipeline->add_option("--features", sc.n_features);
    pipeline->add_option("--clusters", sc.n_clusters);
    pipeline->add_option("--spread", sc.cluster_spread);
    pipeline->add_option("--label-noise", sc.label_noise);
    pipeline->add_option("--lending-density", sc.lending_density);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        ExperimentConfig config = load_config(g);
        auto variant = [&] {
            return variant_name.empty() ? config.model_variant : parse_model_variant(variant_name);
        };

        if (*synth) {
            sc.seed = config.seed();
            const auto [t, t1] = gen_synthetic(sc);
            emit(g, t.quarter_id + ".csv", quarter_to_csv(t));
            emit(g, t1.quarter_id + ".csv", quarter_to_csv(t1));
        } else if (*distances) {
            const auto q = load_quarter_csv(quarter_path);
            emit(g, "distances.csv", matrix_to_csv(cosine_distance_matrix(scaled_features(q, config)).values));
        } else if (*persistence || *ph_graph) {
            const auto d = distances_for(distances_path, quarter_path, config);
            const auto ph = effective_ph_config(config.ph, static_cast<std::size_t>(d.size()));
            const auto pg = build_persistence_graph(d, ph);
            log(g, std::to_string(pg.n_simplices) + " simplices, " + std::to_string(pg.diagram.size()) +
                       " bars, " + std::to_string(pg.persistent.size()) + " persistent");
            emit(g, "diagram.csv", diagram_to_csv(pg.diagram));
            if (*ph_graph) emit(g, "edges_p.csv", edges_to_csv(pg.edges, Relation::persistence));
        } else if (*mdm) {
            const auto q = load_quarter_csv(quarter_path);
            const auto z = infer_loan_matrix(q.interbank_assets, q.interbank_liabilities, config.mdm);
            log(g, "support " + std::to_string(z.support_size()));
            emit(g, "loan_matrix.csv", matrix_to_csv(z.amounts));
            emit(g, "edges_q.csv", edges_to_csv(loan_matrix_to_edges(z), Relation::lending));
        } else if (*train_cmd) {
            const auto q = load_quarter_csv(quarter_path);
            const auto v = variant();
            const auto setup = variant_setup(v, config);
            const auto graph = variant_graph(q, config, v, edges_q_path, edges_p_path);
            const auto model = train(graph, config.train, setup.alpha_q, setup.alpha_p);
            emit(g, "checkpoint_" + std::string(to_string(v)) + ".txt", checkpoint_to_string(model));
        } else if (*predict_cmd) {
            const auto q = load_quarter_csv(quarter_path);
            const auto model = checkpoint_from_string(read_file(checkpoint_path));
            const auto graph = variant_graph(q, config, variant(), edges_q_path, edges_p_path);
            emit(g, "predictions.csv", predictions_to_csv(q.bank_ids, predict(model, graph)));
        } else if (*evaluate) {
            const auto q = load_quarter_csv(quarter_path);
            const auto rows = predictions_from_csv(read_file(predictions_path));
            if (rows.bank_ids != q.bank_ids) throw ValidationError("prediction bank ids differ from the quarter");
            json report = metrics_to_json(classification_metrics(q.ratings, rows.prediction.ratings));
            for (const auto& [key, path] : {std::pair{"homophily_q", edges_q_path}, {"homophily_p", edges_p_path}}) {
                report[key] = path.empty() ? json(nullptr)
                                           : json(homophily_ratio(edges_from_csv(read_file(path)), q.ratings));
            }
            emit(g, "metrics.json", report.dump(2) + "\n");
        } else if (*homophily) {
            const auto q = load_quarter_csv(quarter_path);
            const auto edges = edges_from_csv(read_file(edges_path));
            std::cout << json{{"homophily", homophily_ratio(edges, q.ratings)}, {"edges", edges.size()}}.dump()
                      << "\n";
        } else if (*ttest) {
            const auto r = paired_t_test(parse_sample(sample_a), parse_sample(sample_b));
            std::cout << json{{"t_statistic", r.t_statistic}, {"p_value", r.p_value}, {"dof", r.dof}}.dump(2)
                      << "\n";
        } else if (*pipeline) {
            if (quarters.empty()) {
                config.synthetic = sc;
            } else {
                for (const auto& p : quarters) config.quarters.emplace_back(p);
            }
            const auto report = run_experiment(config);
            std::cout << (fs::path(g.output_dir) / "report.json").string() << "\n";
            if (g.verbose) {
                for (auto v : kAllVariants) {
                    const std::string name(to_string(v));
                    std::cerr << name << " accuracy "
                              << report.json["variants"][name]["mean"]["accuracy"].get<double>() << "%\n";
                }
            }
        }
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "runtime error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
