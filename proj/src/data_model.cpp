#include "htgnn/data_model.hpp"

#include "htgnn/io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

namespace htgnn {

void QuarterSnapshot::validate() const {
    const auto n = static_cast<Eigen::Index>(bank_ids.size());
    if (features.rows() != n || interbank_assets.size() != n ||
        interbank_liabilities.size() != n || static_cast<Eigen::Index>(ratings.size()) != n) {
        throw ValidationError("snapshot '" + quarter_id + "': inconsistent row counts");
    }
    std::unordered_set<std::string> seen;
    for (const auto& id : bank_ids) {
        if (!seen.insert(id).second) {
            throw ValidationError("snapshot '" + quarter_id + "': duplicate bank_id '" + id + "'");
        }
    }
    if (!features.allFinite()) {
        throw ValidationError("snapshot '" + quarter_id + "': non-finite feature value");
    }
    for (Eigen::Index i = 0; i < n; ++i) {
        const double a = interbank_assets[i];
        const double l = interbank_liabilities[i];
        if (!std::isfinite(a) || !std::isfinite(l) || a < 0.0 || l < 0.0) {
            throw ValidationError("snapshot '" + quarter_id + "': bank '" + bank_ids[i] +
                                  "' has negative or non-finite interbank totals");
        }
        const int y = ratings[static_cast<std::size_t>(i)];
        if (y < 1 || y > kNumRatingClasses) {
            throw ValidationError("snapshot '" + quarter_id + "': bank '" + bank_ids[i] +
                                  "' has rating outside 1..4");
        }
    }
}

QuarterSnapshot QuarterSnapshot::subset(const std::vector<std::size_t>& indices) const {
    QuarterSnapshot out;
    out.quarter_id = quarter_id;
    const auto m = static_cast<Eigen::Index>(indices.size());
    out.features.resize(m, features.cols());
    out.interbank_assets.resize(m);
    out.interbank_liabilities.resize(m);
    for (Eigen::Index k = 0; k < m; ++k) {
        const auto i = indices[static_cast<std::size_t>(k)];
        out.bank_ids.push_back(bank_ids.at(i));
        out.features.row(k) = features.row(static_cast<Eigen::Index>(i));
        out.interbank_assets[k] = interbank_assets[static_cast<Eigen::Index>(i)];
        out.interbank_liabilities[k] = interbank_liabilities[static_cast<Eigen::Index>(i)];
        out.ratings.push_back(ratings.at(i));
    }
    return out;
}

namespace {

std::string cell_error(std::size_t row, std::string_view column, const std::string& what) {
    std::ostringstream os;
    os << "row " << row << ", column \"" << column << "\": " << what;
    return os.str();
}

std::vector<std::string> expected_header(Eigen::Index d) {
    std::vector<std::string> h{"bank_id"};
    for (Eigen::Index f = 1; f <= d; ++f) h.push_back("f" + std::to_string(f));
    h.insert(h.end(), {"interbank_assets", "interbank_liabilities", "rating"});
    return h;
}

}  // namespace

QuarterSnapshot parse_quarter_csv(const std::string& text, std::string quarter_id) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw ValidationError("empty quarter CSV");
    if (!line.empty() && line.back() == '\r') line.pop_back();

    const auto header = split(line, ',');
    if (header.size() < 5) {
        throw ValidationError("header must contain bank_id, at least one feature, "
                              "interbank_assets, interbank_liabilities, rating");
    }
    const auto d = static_cast<Eigen::Index>(header.size() - 4);
    const auto expected = expected_header(d);
    for (std::size_t c = 0; c < header.size(); ++c) {
        if (header[c] != expected[c]) {
            throw ValidationError("header column " + std::to_string(c + 1) + ": expected \"" +
                                  expected[c] + "\", found \"" + std::string(header[c]) + "\"");
        }
    }

    QuarterSnapshot snap;
    snap.quarter_id = std::move(quarter_id);
    std::vector<double> feats;
    std::vector<double> assets;
    std::vector<double> liabs;
    std::unordered_map<std::string, std::size_t> first_row;

    std::size_t row = 0;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        ++row;
        const auto cells = split(line, ',');
        if (cells.size() != header.size()) {
            throw ValidationError("row " + std::to_string(row) + ": expected " +
                                  std::to_string(header.size()) + " columns, found " +
                                  std::to_string(cells.size()));
        }
        std::string id(cells[0]);
        if (id.empty()) throw ValidationError(cell_error(row, "bank_id", "empty identifier"));
        if (auto [it, fresh] = first_row.emplace(id, row); !fresh) {
            throw ValidationError(cell_error(row, "bank_id", "duplicate bank_id '" + id +
                                                                 "' (first seen on row " +
                                                                 std::to_string(it->second) + ")"));
        }
        auto number = [&](std::size_t c) {
            double v = 0.0;
            try {
                v = parse_double(cells[c]);
            } catch (const ValidationError& e) {
                throw ValidationError(cell_error(row, expected[c], e.what()));
            }
            if (!std::isfinite(v)) throw ValidationError(cell_error(row, expected[c], "non-finite value"));
            return v;
        };
        for (Eigen::Index f = 0; f < d; ++f) feats.push_back(number(static_cast<std::size_t>(f) + 1));
        const double a = number(header.size() - 3);
        const double l = number(header.size() - 2);
        if (a < 0.0) throw ValidationError(cell_error(row, "interbank_assets", "negative value"));
        if (l < 0.0) throw ValidationError(cell_error(row, "interbank_liabilities", "negative value"));
        long long rating = 0;
        try {
            rating = parse_int(cells.back());
        } catch (const ValidationError& e) {
            throw ValidationError(cell_error(row, "rating", e.what()));
        }
        if (rating < 1 || rating > kNumRatingClasses) {
            throw ValidationError(cell_error(row, "rating", "rating " + std::to_string(rating) +
                                                                " outside {1,2,3,4}"));
        }
        snap.bank_ids.push_back(std::move(id));
        assets.push_back(a);
        liabs.push_back(l);
        snap.ratings.push_back(static_cast<int>(rating));
    }

    const auto n = static_cast<Eigen::Index>(snap.bank_ids.size());
    snap.features = Eigen::Map<const Matrix>(feats.data(), n, d);
    snap.interbank_assets = Eigen::Map<const Vector>(assets.data(), n);
    snap.interbank_liabilities = Eigen::Map<const Vector>(liabs.data(), n);
    snap.validate();
    return snap;
}

QuarterSnapshot load_quarter_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open quarter CSV: " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    try {
        return parse_quarter_csv(buf.str(), path.stem().string());
    } catch (const ValidationError& e) {
        throw ValidationError(path.string() + ": " + e.what());
    }
}

std::string quarter_to_csv(const QuarterSnapshot& snapshot) {
    snapshot.validate();
    std::string out;
    const auto header = expected_header(snapshot.n_features());
    for (std::size_t c = 0; c < header.size(); ++c) {
        if (c) out += ',';
        out += header[c];
    }
    out += '\n';
    for (std::size_t i = 0; i < snapshot.size(); ++i) {
        const auto r = static_cast<Eigen::Index>(i);
        out += snapshot.bank_ids[i];
        for (Eigen::Index f = 0; f < snapshot.n_features(); ++f) {
            out += ',';
            out += format_double(snapshot.features(r, f));
        }
        out += ',';
        out += format_double(snapshot.interbank_assets[r]);
        out += ',';
        out += format_double(snapshot.interbank_liabilities[r]);
        out += ',';
        out += std::to_string(snapshot.ratings[i]);
        out += '\n';
    }
    return out;
}

void write_quarter_csv(const QuarterSnapshot& snapshot, const std::filesystem::path& path) {
    write_file_atomic(path, quarter_to_csv(snapshot));
}

RatingMapping load_rating_mapping(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open rating mapping: " + path.string());
    RatingMapping mapping;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line.front() == '#') continue;
        std::vector<std::string> group;
        for (auto tok : split(line, ',')) {
            while (!tok.empty() && tok.front() == ' ') tok.remove_prefix(1);
            while (!tok.empty() && tok.back() == ' ') tok.remove_suffix(1);
            if (!tok.empty()) group.emplace_back(tok);
        }
        mapping.push_back(std::move(group));
    }
    return mapping;
}

std::vector<int> bucket_ratings(const std::vector<std::string>& raw, const RatingMapping& mapping) {
    if (mapping.size() != static_cast<std::size_t>(kNumRatingClasses)) {
        throw ValidationError("rating mapping must have exactly 4 groups, found " +
                              std::to_string(mapping.size()));
    }
    std::unordered_map<std::string, int> bucket;
    for (std::size_t g = 0; g < mapping.size(); ++g) {
        for (const auto& r : mapping[g]) {
            if (!bucket.emplace(r, static_cast<int>(g) + 1).second) {
                throw ValidationError("rating '" + r + "' appears in more than one group");
            }
        }
    }
    std::vector<int> out;
    out.reserve(raw.size());
    std::vector<std::string> unknown;
    for (const auto& r : raw) {
        auto it = bucket.find(r);
        if (it == bucket.end()) {
            if (std::find(unknown.begin(), unknown.end(), r) == unknown.end()) unknown.push_back(r);
            continue;
        }
        out.push_back(it->second);
    }
    if (!unknown.empty()) {
        std::string msg = "unknown rating string(s):";
        for (const auto& u : unknown) msg += " '" + u + "'";
        throw ValidationError(msg);
    }
    return out;
}

FeatureScaling parse_feature_scaling(std::string_view name) {
    if (name == "none") return FeatureScaling::none;
    if (name == "min_max") return FeatureScaling::min_max;
    throw ValidationError("feature_scaling must be 'none' or 'min_max', got '" + std::string(name) + "'");
}

std::string_view to_string(FeatureScaling scaling) {
    return scaling == FeatureScaling::none ? "none" : "min_max";
}

Matrix scale_features(const Matrix& x, FeatureScaling mode) {
    if (mode == FeatureScaling::none) return x;
    Matrix out(x.rows(), x.cols());
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
        const double lo = x.col(c).minCoeff();
        const double hi = x.col(c).maxCoeff();
        const double span = hi - lo;
        for (Eigen::Index r = 0; r < x.rows(); ++r) {
            out(r, c) = span > 0.0 ? std::clamp((x(r, c) - lo) / span, 0.0, 1.0) : 0.0;
        }
    }
    return out;
}

void SyntheticConfig::validate() const {
    if (n_banks < 1) throw ValidationError("n_banks must be positive");
    if (n_features < 1) throw ValidationError("n_features must be positive");
    if (n_clusters < 1 || n_clusters > n_banks) {
        throw ValidationError("n_clusters must lie in [1, n_banks]");
    }
    if (!(cluster_spread > 0.0)) throw ValidationError("cluster_spread must be positive");
    if (!(label_noise >= 0.0 && label_noise <= 1.0)) throw ValidationError("label_noise must lie in [0, 1]");
    if (!(lending_density > 0.0 && lending_density <= 1.0)) {
        throw ValidationError("lending_density must lie in (0, 1]");
    }
}

namespace {

// Balanced cluster assignment, shuffled.
std::vector<int> assign_clusters(const SyntheticConfig& cfg, std::mt19937_64& rng) {
    std::vector<int> cluster(static_cast<std::size_t>(cfg.n_banks));
    for (int i = 0; i < cfg.n_banks; ++i) cluster[static_cast<std::size_t>(i)] = i % cfg.n_clusters;
    std::shuffle(cluster.begin(), cluster.end(), rng);
    return cluster;
}

std::vector<int> noisy_ratings(const std::vector<int>& cluster, double noise, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_int_distribution<int> other(1, kNumRatingClasses - 1);
    std::vector<int> y;
    y.reserve(cluster.size());
    for (int c : cluster) {
        const int clean = c % kNumRatingClasses + 1;
        const bool flip = unit(rng) < noise;
        // Shift by 1..3 classes: uniform over the other three ratings.
        const int shift = other(rng);
        y.push_back(flip ? (clean - 1 + shift) % kNumRatingClasses + 1 : clean);
    }
    return y;
}

void rebalance(Vector& assets, Vector& liabs) {
    const double ta = assets.sum();
    const double tl = liabs.sum();
    if (ta > 0.0 && tl > 0.0) liabs *= ta / tl;
}

}  // namespace

std::vector<int> synthetic_cluster_labels(const SyntheticConfig& config) {
    config.validate();
    std::mt19937_64 rng(config.seed);
    return assign_clusters(config, rng);
}

std::pair<QuarterSnapshot, QuarterSnapshot> gen_synthetic(const SyntheticConfig& config) {
    config.validate();
    std::mt19937_64 rng(config.seed);
    const auto n = static_cast<Eigen::Index>(config.n_banks);
    const auto d = static_cast<Eigen::Index>(config.n_features);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    const auto cluster = assign_clusters(config, rng);

    // Each cluster lifts its own block of features; a per-column currency
    // scale makes raw magnitudes heterogeneous across columns.
    Vector column_scale(d);
    for (Eigen::Index f = 0; f < d; ++f) column_scale[f] = std::exp(gauss(rng));

    QuarterSnapshot t0;
    t0.quarter_id = "2019Q1";
    t0.features.resize(n, d);
    for (Eigen::Index i = 0; i < n; ++i) {
        const int k = cluster[static_cast<std::size_t>(i)];
        for (Eigen::Index f = 0; f < d; ++f) {
            const double center = (f % config.n_clusters == k) ? 1.0 : 0.0;
            t0.features(i, f) = column_scale[f] * (0.5 + center + config.cluster_spread * gauss(rng));
        }
    }
    for (Eigen::Index i = 0; i < n; ++i) t0.bank_ids.push_back("B" + std::to_string(i + 1));

    // Lending totals: each participating bank is a net lender or a net borrower.
    t0.interbank_assets = Vector::Zero(n);
    t0.interbank_liabilities = Vector::Zero(n);
    std::lognormal_distribution<double> size_dist(4.0, 1.0);
    for (Eigen::Index i = 0; i < n; ++i) {
        const bool participates = unit(rng) < config.lending_density;
        const bool lender = unit(rng) < 0.5;
        const double amount = size_dist(rng);
        if (!participates) continue;
        (lender ? t0.interbank_assets : t0.interbank_liabilities)[i] = amount;
    }
    if (n >= 2) {
        if (t0.interbank_assets.sum() == 0.0) {
            const auto i = static_cast<Eigen::Index>(rng() % static_cast<std::uint64_t>(n));
            t0.interbank_liabilities[i] = 0.0;
            t0.interbank_assets[i] = size_dist(rng);
        }
        if (t0.interbank_liabilities.sum() == 0.0) {
            auto i = static_cast<Eigen::Index>(rng() % static_cast<std::uint64_t>(n));
            if (t0.interbank_assets[i] > 0.0) i = (i + 1) % n;
            t0.interbank_assets[i] = 0.0;
            t0.interbank_liabilities[i] = size_dist(rng);
        }
        rebalance(t0.interbank_assets, t0.interbank_liabilities);
    } else {
        t0.interbank_assets.setZero();
        t0.interbank_liabilities.setZero();
    }
    t0.ratings = noisy_ratings(cluster, config.label_noise, rng);

    QuarterSnapshot t1 = t0;
    t1.quarter_id = "2019Q2";
    const double drift = config.cluster_spread / 10.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index f = 0; f < d; ++f) t1.features(i, f) += column_scale[f] * drift * gauss(rng);
    }
    std::lognormal_distribution<double> jitter(0.0, 0.1);
    for (Eigen::Index i = 0; i < n; ++i) {
        t1.interbank_assets[i] *= jitter(rng);
        t1.interbank_liabilities[i] *= jitter(rng);
    }
    rebalance(t1.interbank_assets, t1.interbank_liabilities);
    t1.ratings = noisy_ratings(cluster, config.label_noise, rng);

    t0.validate();
    t1.validate();
    return {std::move(t0), std::move(t1)};
}

}  // namespace htgnn
