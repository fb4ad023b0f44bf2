#include "htgnn/data_model.hpp"
#include "support.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>

using namespace htgnn;

namespace {

std::string error_of(const std::string& csv) {
    try {
        parse_quarter_csv(csv, "q");
    } catch (const ValidationError& e) {
        return e.what();
    }
    return "";
}

QuarterSnapshot random_snapshot(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> size(1, 12);
    std::uniform_int_distribution<int> dims(1, 6);
    std::uniform_int_distribution<int> rating(1, 4);
    std::normal_distribution<double> g(0.0, 1e3);
    std::exponential_distribution<double> amount(0.01);
    QuarterSnapshot s;
    s.quarter_id = "2020Q" + std::to_string(seed % 4 + 1);
    const int n = size(rng);
    const int d = dims(rng);
    s.features.resize(n, d);
    s.interbank_assets.resize(n);
    s.interbank_liabilities.resize(n);
    for (int i = 0; i < n; ++i) {
        s.bank_ids.push_back("B" + std::to_string(seed) + "_" + std::to_string(i));
        for (int f = 0; f < d; ++f) s.features(i, f) = g(rng) * std::pow(10.0, (i + f) % 7 - 3);
        s.interbank_assets[i] = amount(rng);
        s.interbank_liabilities[i] = amount(rng);
        s.ratings.push_back(rating(rng));
    }
    return s;
}

}  // namespace

TEST_SUITE("data_model") {

TEST_CASE("minimal quarter CSV") {
    const auto q = parse_quarter_csv(
        "bank_id,f1,f2,interbank_assets,interbank_liabilities,rating\n"
        "a,1.5,2,10,0,1\n"
        "b,0,-3e2,0,10,4\n",
        "2019Q1");
    CHECK(q.size() == 2);
    CHECK(q.n_features() == 2);
    CHECK(q.features(1, 1) == -300.0);
    CHECK(q.ratings == std::vector<int>{1, 4});
    CHECK(q.quarter_id == "2019Q1");
}

TEST_CASE("errors name row and column") {
    const std::string header = "bank_id,f1,interbank_assets,interbank_liabilities,rating\n";
    const auto bad_rating = error_of(header + "a,1,1,1,1\nb,1,1,1,2\nc,1,1,1,5\n");
    CHECK(bad_rating.find("row 3") != std::string::npos);
    CHECK(bad_rating.find("\"rating\"") != std::string::npos);

    const auto bad_cell = error_of(header + "a,x,1,1,1\n");
    CHECK(bad_cell.find("row 1") != std::string::npos);
    CHECK(bad_cell.find("\"f1\"") != std::string::npos);

    const auto dup = error_of(header + "a,1,1,1,1\na,1,1,1,1\n");
    CHECK(dup.find("row 2") != std::string::npos);
    CHECK(dup.find("bank_id") != std::string::npos);

    CHECK(error_of(header + "a,1,1,1\n").find("row 1") != std::string::npos);
    CHECK(error_of(header + "a,1,1,1,1,9\n").find("row 1") != std::string::npos);
    CHECK(error_of(header + "a,1,-1,1,1\n").find("interbank_assets") != std::string::npos);
    CHECK(error_of(header + "a,nan,1,1,1\n").find("f1") != std::string::npos);
    CHECK(error_of("bank_id,f1,interbank_assets,rating\n") != "");
    CHECK(error_of("bank,f1,interbank_assets,interbank_liabilities,rating\n") != "");
    CHECK(error_of("") != "");
}

TEST_CASE("load uses the file stem and reports the path") {
    const auto dir = std::filesystem::path(testsupport::temp_dir("data_model"));
    {
        std::ofstream out(dir / "2021Q3.csv");
        out << "bank_id,f1,interbank_assets,interbank_liabilities,rating\nx,1,2,2,3\n";
    }
    const auto q = load_quarter_csv(dir / "2021Q3.csv");
    CHECK(q.quarter_id == "2021Q3");
    CHECK_THROWS_AS(load_quarter_csv(dir / "missing.csv"), ValidationError);
}

TEST_CASE("quarter CSV round trip") {
    const auto dir = std::filesystem::path(testsupport::temp_dir("round_trip"));
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const auto s = random_snapshot(seed);
        const auto path = dir / (s.quarter_id + ".csv");
        write_quarter_csv(s, path);
        const auto back = load_quarter_csv(path);
        CHECK(back.bank_ids == s.bank_ids);
        CHECK(back.ratings == s.ratings);
        CHECK(back.features == s.features);
        CHECK(back.interbank_assets == s.interbank_assets);
        CHECK(back.interbank_liabilities == s.interbank_liabilities);
        CHECK(quarter_to_csv(back) == quarter_to_csv(s));
    }
}

TEST_CASE("snapshot validation") {
    auto s = random_snapshot(1);
    CHECK_NOTHROW(s.validate());
    auto t = s;
    t.ratings[0] = 0;
    CHECK_THROWS_AS(t.validate(), ValidationError);
    t = s;
    t.interbank_liabilities[0] = -1;
    CHECK_THROWS_AS(t.validate(), ValidationError);
    t = s;
    t.features(0, 0) = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(t.validate(), ValidationError);
    t = s;
    t.ratings.push_back(1);
    CHECK_THROWS_AS(t.validate(), ValidationError);
    if (s.size() > 1) {
        t = s;
        t.bank_ids[1] = t.bank_ids[0];
        CHECK_THROWS_AS(t.validate(), ValidationError);
    }
}

TEST_CASE("subset keeps the requested order") {
    const auto s = random_snapshot(7);
    REQUIRE(s.size() >= 2);
    const auto sub = s.subset({1, 0});
    CHECK(sub.bank_ids == std::vector<std::string>{s.bank_ids[1], s.bank_ids[0]});
    CHECK(sub.features.row(0) == s.features.row(1));
    CHECK(sub.ratings[1] == s.ratings[0]);
}

TEST_CASE("bucket_ratings") {
    const RatingMapping m{{"AAA", "AA+", "AA", "AA-"},
                          {"A+", "A", "A-", "BBB+", "BBB", "BBB-"},
                          {"BB+", "BB", "BB-", "B+", "B", "B-"},
                          {"CCC+", "CCC", "CCC-", "CC", "C", "D"}};
    CHECK(bucket_ratings({"AAA", "CCC"}, m) == std::vector<int>{1, 4});
    CHECK(bucket_ratings({"AAA", "AAA"}, m) == std::vector<int>{1, 1});
    try {
        bucket_ratings({"AAA", "ZZZ"}, m);
        FAIL("expected an error");
    } catch (const ValidationError& e) {
        CHECK(std::string(e.what()).find("ZZZ") != std::string::npos);
    }
    CHECK_THROWS_AS(bucket_ratings({"AAA"}, RatingMapping{{"AAA"}, {"B"}, {"C"}}), ValidationError);
    CHECK_THROWS_AS(bucket_ratings({"AAA"}, RatingMapping{{"AAA"}, {"AAA"}, {"C"}, {"D"}}), ValidationError);

    // Order within a group never matters; group order is preserved.
    std::vector<std::string> all;
    for (const auto& g : m) all.insert(all.end(), g.begin(), g.end());
    const auto base = bucket_ratings(all, m);
    for (std::size_t k = 1; k < base.size(); ++k) CHECK(base[k - 1] <= base[k]);
    std::mt19937_64 rng(9);
    for (int trial = 0; trial < 20; ++trial) {
        auto shuffled = m;
        for (auto& g : shuffled) std::shuffle(g.begin(), g.end(), rng);
        CHECK(bucket_ratings(all, shuffled) == base);
    }
}

TEST_CASE("rating mapping file") {
    const auto dir = std::filesystem::path(testsupport::temp_dir("mapping"));
    {
        std::ofstream out(dir / "map.txt");
        out << "# best to worst\nAAA,AA\n\nA, BBB\nBB,B\nCCC,D\n";
    }
    const auto m = load_rating_mapping(dir / "map.txt");
    REQUIRE(m.size() == 4);
    CHECK(bucket_ratings({"BBB", "D", "AA"}, m) == std::vector<int>{2, 4, 1});
}

TEST_CASE("scale_features") {
    Matrix x(2, 1);
    x << 0, 10;
    CHECK(scale_features(x, FeatureScaling::min_max) == (Matrix(2, 1) << 0, 1).finished());
    x << 3, 3;
    CHECK(scale_features(x, FeatureScaling::min_max) == Matrix::Zero(2, 1));
    std::mt19937_64 rng(2);
    std::normal_distribution<double> g(0, 50);
    Matrix r(30, 5);
    for (Eigen::Index i = 0; i < r.size(); ++i) r.data()[i] = g(rng);
    CHECK(scale_features(r, FeatureScaling::none) == r);
    const auto s = scale_features(r, FeatureScaling::min_max);
    CHECK(s.minCoeff() >= 0.0);
    CHECK(s.maxCoeff() <= 1.0);
    CHECK(parse_feature_scaling("none") == FeatureScaling::none);
    CHECK(to_string(FeatureScaling::min_max) == "min_max");
    CHECK_THROWS_AS(parse_feature_scaling("zscore"), ValidationError);
}

TEST_CASE("synthetic data is deterministic and balanced") {
    SyntheticConfig c;
    c.n_banks = 60;
    c.n_features = 8;
    c.seed = 42;
    const auto [a1, b1] = gen_synthetic(c);
    const auto [a2, b2] = gen_synthetic(c);
    CHECK(quarter_to_csv(a1) == quarter_to_csv(a2));
    CHECK(quarter_to_csv(b1) == quarter_to_csv(b2));
    for (const auto* q : {&a1, &b1}) {
        const double sa = q->interbank_assets.sum();
        const double sl = q->interbank_liabilities.sum();
        CHECK(std::abs(sa - sl) <= 1e-9 * sa);
        CHECK(q->size() == 60);
        CHECK(q->n_features() == 8);
    }
    CHECK(a1.bank_ids == b1.bank_ids);
    CHECK(a1.quarter_id != b1.quarter_id);
    c.seed = 43;
    CHECK(quarter_to_csv(gen_synthetic(c).first) != quarter_to_csv(a1));
}

TEST_CASE("noise-free ratings equal cluster indices") {
    SyntheticConfig c;
    c.n_banks = 80;
    c.n_features = 10;
    c.label_noise = 0.0;
    c.seed = 5;
    const auto labels = synthetic_cluster_labels(c);
    const auto [t, t1] = gen_synthetic(c);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        CHECK(t.ratings[i] == labels[i] % 4 + 1);
        CHECK(t1.ratings[i] == t.ratings[i]);
    }
}

TEST_CASE("label noise rate concentrates") {
    SyntheticConfig c;
    c.n_banks = 1000;
    c.n_features = 4;
    c.label_noise = 0.5;
    c.seed = 8;
    const auto labels = synthetic_cluster_labels(c);
    const auto [t, t1] = gen_synthetic(c);
    for (const auto* q : {&t, &t1}) {
        int flipped = 0;
        for (std::size_t i = 0; i < labels.size(); ++i) flipped += q->ratings[i] != labels[i] % 4 + 1;
        CHECK(flipped >= 450);
        CHECK(flipped <= 550);
    }
}

TEST_CASE("more clusters than classes wrap around") {
    SyntheticConfig c;
    c.n_banks = 50;
    c.n_features = 6;
    c.n_clusters = 6;
    c.label_noise = 0.0;
    const auto labels = synthetic_cluster_labels(c);
    const auto t = gen_synthetic(c).first;
    for (std::size_t i = 0; i < labels.size(); ++i) CHECK(t.ratings[i] == labels[i] % 4 + 1);
}

TEST_CASE("synthetic config validation") {
    SyntheticConfig c;
    c.n_clusters = 0;
    CHECK_THROWS_AS(gen_synthetic(c), ValidationError);
    c = SyntheticConfig{};
    c.label_noise = 1.5;
    CHECK_THROWS_AS(gen_synthetic(c), ValidationError);
    c = SyntheticConfig{};
    c.n_banks = 3;
    c.n_clusters = 4;
    CHECK_THROWS_AS(gen_synthetic(c), ValidationError);
    c = SyntheticConfig{};
    c.lending_density = 0.0;
    CHECK_THROWS_AS(gen_synthetic(c), ValidationError);
}

}  // TEST_SUITE
