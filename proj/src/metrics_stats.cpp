#include "htgnn/metrics_stats.hpp"

#include <cmath>
#include <limits>
#include <numeric>

namespace htgnn {

double homophily_ratio(const EdgeSet& edges, const std::vector<int>& labels) {
    if (edges.empty()) throw ValidationError("homophily ratio is undefined for an empty edge set");
    std::size_t same = 0;
    for (const auto& e : edges) {
        if (e.src < 0 || e.dst < 0 || static_cast<std::size_t>(e.src) >= labels.size() ||
            static_cast<std::size_t>(e.dst) >= labels.size()) {
            throw ValidationError("edge endpoint without a label");
        }
        if (labels[static_cast<std::size_t>(e.src)] == labels[static_cast<std::size_t>(e.dst)]) ++same;
    }
    return static_cast<double>(same) / static_cast<double>(edges.size());
}

long long ConfusionMatrix::total() const {
    long long s = 0;
    for (const auto& row : counts) s += std::accumulate(row.begin(), row.end(), 0LL);
    return s;
}

long long ConfusionMatrix::row_sum(int a) const {
    const auto& row = counts[static_cast<std::size_t>(a)];
    return std::accumulate(row.begin(), row.end(), 0LL);
}

long long ConfusionMatrix::col_sum(int b) const {
    long long s = 0;
    for (const auto& row : counts) s += row[static_cast<std::size_t>(b)];
    return s;
}

ConfusionMatrix confusion_matrix(const std::vector<int>& truth, const std::vector<int>& predicted) {
    if (truth.size() != predicted.size()) {
        throw ValidationError("label vectors differ in length (" + std::to_string(truth.size()) + " vs " +
                              std::to_string(predicted.size()) + ")");
    }
    if (truth.empty()) throw ValidationError("cannot evaluate an empty label vector");
    ConfusionMatrix c;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const int a = truth[i];
        const int b = predicted[i];
        if (a < 1 || a > 4 || b < 1 || b > 4) throw ValidationError("label outside 1..4");
        ++c.counts[static_cast<std::size_t>(a - 1)][static_cast<std::size_t>(b - 1)];
    }
    return c;
}

ClassificationMetrics classification_metrics(const std::vector<int>& truth, const std::vector<int>& predicted) {
    const ConfusionMatrix c = confusion_matrix(truth, predicted);
    ClassificationMetrics m;
    long long diag = 0;
    int included = 0;
    for (int k = 0; k < 4; ++k) {
        const long long tp = c.counts[static_cast<std::size_t>(k)][static_cast<std::size_t>(k)];
        diag += tp;
        const long long actual = c.row_sum(k);
        const long long claimed = c.col_sum(k);
        if (actual == 0 && claimed == 0) continue;
        ++included;
        const double precision = claimed > 0 ? static_cast<double>(tp) / static_cast<double>(claimed) : 0.0;
        const double recall = actual > 0 ? static_cast<double>(tp) / static_cast<double>(actual) : 0.0;
        const double f1 = (precision + recall) > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
        m.macro_precision += precision;
        m.macro_recall += recall;
        m.macro_f1 += f1;
    }
    m.accuracy = static_cast<double>(diag) / static_cast<double>(c.total());
    m.macro_precision /= included;
    m.macro_recall /= included;
    m.macro_f1 /= included;
    return m;
}

TTestResult paired_t_test(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) throw ValidationError("paired samples differ in length");
    const std::size_t n = a.size();
    if (n < 2) throw ValidationError("paired t-test needs at least two pairs");
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += a[i] - b[i];
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = (a[i] - b[i]) - mean;
        ss += r * r;
    }
    const double sd = std::sqrt(ss / static_cast<double>(n - 1));
    if (!(sd > 0.0)) throw ValidationError("paired differences have zero variance; t is undefined");
    TTestResult r;
    r.dof = static_cast<int>(n - 1);
    r.t_statistic = mean / (sd / std::sqrt(static_cast<double>(n)));
    r.p_value = std::min(1.0, 2.0 * student_t_sf(std::abs(r.t_statistic), r.dof));
    return r;
}

namespace {

// Continued fraction for I_x(a, b), valid for x < (a + 1) / (a + b + 2).
double beta_continued_fraction(double a, double b, double x) {
    constexpr int kMaxIter = 10000;
    constexpr double kEps = 1e-16;
    constexpr double kTiny = 1e-300;
    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::abs(d) < kTiny) d = kTiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxIter; ++m) {
        const int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < kEps) return h;
    }
    throw std::runtime_error("incomplete beta continued fraction did not converge");
}

}  // namespace

double regularized_incomplete_beta(double a, double b, double x) {
    if (!(a > 0.0) || !(b > 0.0)) throw ValidationError("incomplete beta needs a, b > 0");
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const double log_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) +
                             b * std::log1p(-x);
    const double front = std::exp(log_front);
    if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_continued_fraction(a, b, x) / a;
    return 1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b;
}

double student_t_sf(double t, int dof) {
    if (dof < 1) throw ValidationError("degrees of freedom must be at least 1");
    if (std::isnan(t)) return std::numeric_limits<double>::quiet_NaN();
    if (t == 0.0) return 0.5;
    const double v = static_cast<double>(dof);
    // P(|T| > |t|) = I_{v/(v+t^2)}(v/2, 1/2)
    const double x = v / (v + t * t);
    const double two_tail = regularized_incomplete_beta(0.5 * v, 0.5, x);
    return t > 0.0 ? 0.5 * two_tail : 1.0 - 0.5 * two_tail;
}

}  // namespace htgnn
