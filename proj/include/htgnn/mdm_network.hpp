#pragma once

// Interbank network reconstruction: a sparse loan quota matrix whose row sums
// match interbank assets and whose column sums match interbank liabilities,
// found by greedy pairing of the largest residuals.

#include "htgnn/common.hpp"

#include <cstddef>

namespace htgnn {

struct MdmConfig {
    // Per-relationship cost. A uniform scale on the objective, so it never
    // changes the minimizer; kept for reporting only.
    double fixed_cost_c = 1.0;
    double balance_tolerance = 1e-6;
    double residual_epsilon = 1e-12;

    void validate() const;
};

// amounts(i, j) is the loan from bank i to bank j.
struct LoanQuotaMatrix {
    Matrix amounts;

    Eigen::Index size() const { return amounts.rows(); }
    std::size_t support_size() const;

    // Zero diagonal, non-negative entries, row sums = assets and column
    // sums = liabilities within 1e-9 * max(1, target).
    bool satisfies_constraints(const Vector& assets, const Vector& liabilities,
                               double rel_tol = 1e-9) const;
};

// Rescales liabilities so both totals agree. Throws ValidationError when
// the relative imbalance exceeds `tol`.
Vector check_balance(const Vector& assets, const Vector& liabilities, double tol);

// Greedy: repeatedly books min(a_i, l_j) on the off-diagonal pair with the
// largest such value (ties to the lexicographically smallest pair) until all
// residuals vanish. Throws ValidationError for unbalanced totals or when no
// self-loop-free matrix exists.
LoanQuotaMatrix infer_loan_matrix(const Vector& assets, const Vector& liabilities,
                                  const MdmConfig& config = {});

struct MinSupportResult {
    std::size_t support = 0;
    LoanQuotaMatrix witness;
};

// Exhaustive search over off-diagonal support patterns; exact but only for
// tiny markets (N <= max_n <= 5).
MinSupportResult brute_force_min_support(const Vector& assets, const Vector& liabilities,
                                         int max_n = 5);

// Undirected lending relation; weight = Z(i,j) + Z(j,i).
EdgeSet loan_matrix_to_edges(const LoanQuotaMatrix& z);

}  // namespace htgnn
