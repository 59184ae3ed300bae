// SPDX-License-Identifier: MIT
#pragma once

#include "kronfm/estimation.hpp"

#include <vector>

namespace kronfm {

/// Per-(column, time) aggregated squared residuals of the two competing
/// fits, unfolded along the shortest mode k*. Row j of `x` holds the
/// merged-model statistic x_{j,t}; `y[m]` the full-model statistic of
/// divisor combo m.
struct AggStats {
    int k_star = 0;  // 0-based mode of the original tensor
    MatrixXd x;      // n x T with n = d / d_{k*}
    std::vector<MatrixXd> y;
    std::vector<DivisorCombo> combos;
};

/// Outcome of the structure test at one nominal level.
struct TestReport {
    double alpha = 0.0;
    bool reject = false;
    int p_hat = 1;  // 1 - reject
    double alpha_hat = 0.0;
    double q_alpha_hat = 0.0;
    int k_star = 0;  // 0-based
    std::vector<DivisorCombo> combos;
    MatrixXd exceed;  // |combos| x n per-column exceedance rates
};

/// Mode-scan outcome: per-mode test reports and the set of rejected
/// modes (0-based).
struct ScanReport {
    std::vector<int> a_star;
    std::vector<TestReport> per_mode;
};

/// Row j, column t: mean over i of the squared (i, j) entries of the
/// mode-k* unfolding of the residual at time t.
MatrixXd aggregate(const TensorSeries& residuals, int k_star);

/// Lower empirical quantile: the smallest sample value c whose ECDF
/// reaches q, i.e. #{values <= c} / n >= q.
double ecdf_lower_quantile(std::vector<double> sample, double q);

/// Upper-tail quantile inf{c : F(c) >= 1 - alpha}; the ceil((1-alpha)n)-th
/// order statistic. When n * alpha < 1 this is the sample maximum.
double ecdf_quantile(std::vector<double> sample, double alpha);

/// Fraction of entries >= threshold (boundary values count).
double exceedance(const std::vector<double>& values, double threshold);

/// The quantile decision rule: per column j take the upper alpha
/// quantile of x_{j,.}; per combo m and column j the exceedance rate of
/// y_{m,j,.} against it; q_alpha is the minimum over m of the 5% lower
/// quantile of those rates over j, and the null is rejected when
/// q_alpha exceeds alpha. alpha_hat is the minimum over m of the rate
/// at the first column.
TestReport decide(const AggStats& stats, double alpha);

/// Residual aggregation shared by all levels: merged-model fit, full
/// fits over every divisor combo, both aggregated along k* (the
/// shortest original mode, ties to the lowest index). Non-suffix mode
/// sets are permuted to a suffix internally and residuals mapped back,
/// so reports are stated in the input's own mode labels.
AggStats compute_agg_stats(const TensorSeries& y, const RankSpec& spec);

TestReport run_kron_test(const TensorSeries& y, const RankSpec& spec,
                         double alpha);

/// Scan every mode k: reshape the series along all other modes into an
/// order-2 series (d_k x d_{-k}) and test it with merged rank r_vec; a
/// rejection puts k into the returned set.
ScanReport scan_modes(const TensorSeries& y, int r_vec, double alpha);

/// Eigenvalue-ratio rank guess: argmax over 1..max_r of
/// values[i] / values[i+1] (1-based), ties to the smallest index.
int eigenvalue_ratio_rank(const VectorXd& values, int max_r);

}  // namespace kronfm
