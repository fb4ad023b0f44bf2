#pragma once

#include "htgnn/common.hpp"

#include <array>
#include <vector>

namespace htgnn {

// Fraction of edges whose endpoints share a label. Throws ValidationError
// for an empty edge set.
double homophily_ratio(const EdgeSet& edges, const std::vector<int>& labels);

// counts[a][b]: true class a+1 predicted as b+1.
struct ConfusionMatrix {
    std::array<std::array<long long, 4>, 4> counts{};

    long long total() const;
    long long row_sum(int a) const;
    long long col_sum(int b) const;
};

ConfusionMatrix confusion_matrix(const std::vector<int>& truth, const std::vector<int>& predicted);

// Fractions in [0, 1]. Macro averages run over classes present in either
// vector; a present class with a zero denominator contributes 0.
struct ClassificationMetrics {
    double accuracy = 0.0;
    double macro_precision = 0.0;
    double macro_recall = 0.0;
    double macro_f1 = 0.0;
};

ClassificationMetrics classification_metrics(const std::vector<int>& truth, const std::vector<int>& predicted);

struct TTestResult {
    double t_statistic = 0.0;
    double p_value = 1.0;
    int dof = 0;
};

// Two-sided paired t-test on a - b. Throws ValidationError for n < 2 or
// zero-variance differences.
TTestResult paired_t_test(const std::vector<double>& a, const std::vector<double>& b);

// Regularized incomplete beta I_x(a, b), continued fraction (modified Lentz).
double regularized_incomplete_beta(double a, double b, double x);

// P(T > t) for Student's t with `dof` degrees of freedom.
double student_t_sf(double t, int dof);

}  // namespace htgnn
