#include "htgnn/data_model.hpp"
#include "htgnn/mdm_network.hpp"
#include "htgnn/metrics_stats.hpp"
#include "htgnn/pipeline.hpp"
#include "htgnn/tda_persistence.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <tuple>

namespace py = pybind11;
using namespace htgnn;

namespace {

using EdgeTuple = std::tuple<int, int, double>;

EdgeSet to_edges(const std::vector<EdgeTuple>& in) {
    std::vector<Edge> out;
    out.reserve(in.size());
    for (const auto& [s, d, w] : in) out.push_back({s, d, w});
    return make_edge_set(std::move(out));
}

std::vector<EdgeTuple> from_edges(const EdgeSet& in) {
    std::vector<EdgeTuple> out;
    out.reserve(in.size());
    for (const auto& e : in) out.emplace_back(e.src, e.dst, e.weight);
    return out;
}

PhConfig ph_config(double r0, double r_max, double tau, int max_homology_dim) {
    PhConfig c;
    c.r0 = r0;
    c.r_max = r_max;
    c.tau = tau;
    c.max_homology_dim = max_homology_dim;
    c.validate();
    return c;
}

py::dict quarter_dict(const QuarterSnapshot& q) {
    py::dict d;
    d["quarter_id"] = q.quarter_id;
    d["bank_ids"] = q.bank_ids;
    d["features"] = q.features;
    d["interbank_assets"] = q.interbank_assets;
    d["interbank_liabilities"] = q.interbank_liabilities;
    d["ratings"] = q.ratings;
    return d;
}

py::object json_to_py(const nlohmann::json& j) {
    return py::module_::import("json").attr("loads")(j.dump());
}

}  // namespace

PYBIND11_MODULE(_htgnn, m) {
    m.doc() = "Bank rating prediction with persistence and lending graphs";

    static py::exception<ValidationError> validation_error(m, "ValidationError", PyExc_ValueError);
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const ValidationError& e) {
            py::set_error(validation_error, e.what());
        }
    });

    m.def("cosine_distance_matrix", [](const Matrix& x) { return cosine_distance_matrix(x).values; },
          py::arg("features"));

    m.def(
        "persistence_diagram",
        [](const Matrix& distances, double r0, double r_max, int max_homology_dim) {
            const DistanceMatrix d{distances};
            d.validate();
            const auto config = ph_config(r0, r_max, 0.0, max_homology_dim);
            std::vector<std::tuple<int, double, double>> out;
            for (const auto& p : reduce_boundary_matrix(build_rips_filtration(d, config), {.representatives = false})) {
                out.emplace_back(p.dim, p.birth, p.death);
            }
            return out;
        },
        py::arg("distances"), py::arg("r0") = 0.0, py::arg("r_max") = 0.7, py::arg("max_homology_dim") = 2);

    m.def(
        "persistence_edges",
        [](const Matrix& distances, double r0, double r_max, double tau, int max_homology_dim) {
            const DistanceMatrix d{distances};
            d.validate();
            return from_edges(build_persistence_graph(d, ph_config(r0, r_max, tau, max_homology_dim)).edges);
        },
        py::arg("distances"), py::arg("r0") = 0.0, py::arg("r_max") = 0.7, py::arg("tau") = 0.05,
        py::arg("max_homology_dim") = 2);

    m.def(
        "infer_loan_matrix",
        [](const Vector& assets, const Vector& liabilities) { return infer_loan_matrix(assets, liabilities).amounts; },
        py::arg("assets"), py::arg("liabilities"));

    m.def(
        "min_support",
        [](const Vector& assets, const Vector& liabilities) {
            return brute_force_min_support(assets, liabilities).support;
        },
        py::arg("assets"), py::arg("liabilities"));

    m.def(
        "homophily_ratio",
        [](const std::vector<EdgeTuple>& edges, const std::vector<int>& labels) {
            return homophily_ratio(to_edges(edges), labels);
        },
        py::arg("edges"), py::arg("labels"));

    m.def(
        "classification_metrics",
        [](const std::vector<int>& truth, const std::vector<int>& predicted) {
            const auto r = classification_metrics(truth, predicted);
            py::dict d;
            d["accuracy"] = r.accuracy;
            d["macro_precision"] = r.macro_precision;
            d["macro_recall"] = r.macro_recall;
            d["macro_f1"] = r.macro_f1;
            return d;
        },
        py::arg("truth"), py::arg("predicted"));

    m.def(
        "paired_t_test",
        [](const std::vector<double>& a, const std::vector<double>& b) {
            const auto r = paired_t_test(a, b);
            py::dict d;
            d["t"] = r.t_statistic;
            d["p"] = r.p_value;
            d["dof"] = r.dof;
            return d;
        },
        py::arg("a"), py::arg("b"));

    m.def(
        "generate_synthetic",
        [](int n_banks, int n_features, int n_clusters, double cluster_spread, double label_noise,
           double lending_density, std::uint64_t seed) {
            SyntheticConfig c;
            c.n_banks = n_banks;
            c.n_features = n_features;
            c.n_clusters = n_clusters;
            c.cluster_spread = cluster_spread;
            c.label_noise = label_noise;
            c.lending_density = lending_density;
            c.seed = seed;
            const auto [t, t1] = gen_synthetic(c);
            return py::make_tuple(quarter_dict(t), quarter_dict(t1));
        },
        py::arg("n_banks") = 200, py::arg("n_features") = 70, py::arg("n_clusters") = 4,
        py::arg("cluster_spread") = 0.35, py::arg("label_noise") = 0.15, py::arg("lending_density") = 0.6,
        py::arg("seed") = 0);

    m.def("bucket_ratings", &bucket_ratings, py::arg("raw"), py::arg("mapping"));
    m.def("load_rating_mapping", &load_rating_mapping, py::arg("path"));

    m.def("load_quarter", [](const std::filesystem::path& path) { return quarter_dict(load_quarter_csv(path)); },
          py::arg("path"));

    m.def(
        "run_experiment",
        [](const std::string& config_json, const std::vector<std::filesystem::path>& quarters,
           const std::optional<int> synthetic_banks, const std::filesystem::path& output_dir) {
            nlohmann::json j;
            try {
                j = nlohmann::json::parse(config_json);
            } catch (const nlohmann::json::exception& e) {
                throw ValidationError(std::string("config is not valid JSON: ") + e.what());
            }
            auto config = ExperimentConfig::from_json(j);
            config.quarters = quarters;
            if (quarters.empty()) {
                SyntheticConfig s;
                if (synthetic_banks) s.n_banks = *synthetic_banks;
                config.synthetic = s;
            }
            config.output_dir = output_dir;
            config.write_artifacts = !output_dir.empty();
            nlohmann::json report;
            {
                py::gil_scoped_release release;
                report = run_experiment(config).json;
            }
            return json_to_py(report);
        },
        py::arg("config_json") = "{}", py::arg("quarters") = std::vector<std::filesystem::path>{},
        py::arg("synthetic_banks") = py::none(), py::arg("output_dir") = std::filesystem::path{});
}
