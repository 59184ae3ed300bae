// SPDX-License-Identifier: MIT
#include "kronfm/testing.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <random>

namespace kronfm {
namespace {

MatrixXd random_matrix(Index rows, Index cols, std::mt19937_64& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    MatrixXd m(rows, cols);
    for (Index j = 0; j < cols; ++j)
        for (Index i = 0; i < rows; ++i) m(i, j) = normal(rng);
    return m;
}

TensorSeries noisy_low_rank(const std::vector<Index>& dims,
                            const std::vector<Index>& ranks, Index t_len,
                            double noise_sd, std::mt19937_64& rng) {
    std::vector<MatrixXd> loadings;
    for (size_t k = 0; k < dims.size(); ++k)
        loadings.push_back(random_matrix(dims[k], ranks[k], rng));
    std::normal_distribution<double> normal(0.0, 1.0);
    TensorSeries y = TensorSeries::zeros(dims, t_len);
    Index core_size = 1;
    for (Index r : ranks) core_size *= r;
    for (Index t = 0; t < t_len; ++t) {
        VectorXd core(core_size);
        for (Index i = 0; i < core_size; ++i) core[i] = normal(rng);
        Tensor f(ranks, core);
        for (size_t k = 0; k < dims.size(); ++k)
            f = mode_product(f, loadings[k], static_cast<int>(k));
        y.data.col(t) = f.data();
        for (Index i = 0; i < y.tensor_size(); ++i)
            y.data(i, t) += noise_sd * normal(rng);
    }
    return y;
}

TEST(Aggregate, ZeroOnesAndHandSum) {
    TensorSeries zeros = TensorSeries::zeros({2, 3}, 4);
    EXPECT_EQ(aggregate(zeros, 0).norm(), 0.0);

    TensorSeries ones = TensorSeries::zeros({2, 3}, 4);
    ones.data.setOnes();
    MatrixXd agg = aggregate(ones, 1);
    EXPECT_EQ(agg.rows(), 2);
    EXPECT_TRUE(agg.isApproxToConstant(1.0));

    // Matrix [[1,2],[3,4]] unfolded along mode 0: column means of
    // squares are (1+9)/2 and (4+16)/2.
    TensorSeries m = TensorSeries::zeros({2, 2}, 1);
    m.data.col(0) << 1, 3, 2, 4;
    MatrixXd x = aggregate(m, 0);
    EXPECT_DOUBLE_EQ(x(0, 0), 5.0);
    EXPECT_DOUBLE_EQ(x(1, 0), 10.0);
}

TEST(EcdfQuantile, InfConventionAndSortOracle) {
    EXPECT_DOUBLE_EQ(ecdf_quantile({1, 2, 3, 4, 5}, 0.05), 5.0);
    EXPECT_DOUBLE_EQ(ecdf_quantile({1, 2, 3, 4, 5}, 0.4), 3.0);
    EXPECT_DOUBLE_EQ(ecdf_quantile({2, 1}, 0.9), 1.0);

    std::mt19937_64 rng(41);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> sample(100);
    for (double& v : sample) v = u(rng);
    std::vector<double> sorted = sample;
    std::sort(sorted.begin(), sorted.end());
    EXPECT_DOUBLE_EQ(ecdf_quantile(sample, 0.05), sorted[94]);  // 95th stat

    EXPECT_THROW(ecdf_quantile({}, 0.05), std::invalid_argument);
    EXPECT_THROW(ecdf_quantile({1.0}, 0.0), std::invalid_argument);
    // T * alpha < 1 degenerates to the maximum.
    EXPECT_DOUBLE_EQ(ecdf_quantile({1, 2, 3}, 0.05), 3.0);
}

TEST(Exceedance, BoundarySemantics) {
    EXPECT_DOUBLE_EQ(exceedance({1, 2}, 5.0), 0.0);
    EXPECT_DOUBLE_EQ(exceedance({3}, 3.0), 1.0);  // equality counts
    EXPECT_DOUBLE_EQ(exceedance({1, 2, 3, 4}, 2.5), 0.5);
}

TEST(Decide, HandWorkedTable) {
    AggStats stats;
    stats.k_star = 0;
    stats.combos = {DivisorCombo{{1, 2}}, DivisorCombo{{2, 1}}};
    stats.x.resize(3, 4);
    stats.x << 1, 2, 3, 4,  //
        10, 20, 30, 40,     //
        0.1, 0.2, 0.3, 0.4;
    MatrixXd y1(3, 4), y2(3, 4);
    y1 << 3, 3, 0, 0,  //
        0, 0, 0, 0,    //
        0.4, 0.4, 0.4, 0.4;
    y2 << 5, 5, 5, 5,  //
        29, 31, 35, 10,  //
        0, 0.3, 0, 0;
    stats.y = {y1, y2};

    // Upper quantiles at alpha=0.25 (3rd order statistic): 3, 30, 0.3.
    TestReport rep = decide(stats, 0.25);
    EXPECT_DOUBLE_EQ(rep.exceed(0, 0), 0.5);
    EXPECT_DOUBLE_EQ(rep.exceed(0, 1), 0.0);
    EXPECT_DOUBLE_EQ(rep.exceed(0, 2), 1.0);
    EXPECT_DOUBLE_EQ(rep.exceed(1, 0), 1.0);
    EXPECT_DOUBLE_EQ(rep.exceed(1, 1), 0.5);
    EXPECT_DOUBLE_EQ(rep.exceed(1, 2), 0.25);
    // 5% lower quantile over three columns is the minimum per combo.
    EXPECT_DOUBLE_EQ(rep.q_alpha_hat, 0.0);
    EXPECT_DOUBLE_EQ(rep.alpha_hat, 0.5);
    EXPECT_FALSE(rep.reject);
    EXPECT_EQ(rep.p_hat, 1);
}

TEST(Decide, SelfComparisonStaysWithinSelfNullBound) {
    std::mt19937_64 rng(43);
    std::normal_distribution<double> normal(0.0, 1.0);
    const Index n = 5, t_len = 20;
    MatrixXd x(n, t_len);
    for (Index j = 0; j < n; ++j)
        for (Index t = 0; t < t_len; ++t) x(j, t) = std::abs(normal(rng));

    AggStats stats;
    stats.k_star = 0;
    stats.combos = {DivisorCombo{{1}}, DivisorCombo{{2}}};
    stats.x = x;
    stats.y = {x, x};
    const double alpha = 0.05;
    TestReport rep = decide(stats, alpha);
    for (Index m = 0; m < 2; ++m)
        for (Index j = 0; j < n; ++j) {
            EXPECT_GT(rep.exceed(m, j), 0.0);
            EXPECT_LE(rep.exceed(m, j),
                      alpha + 1.0 / static_cast<double>(t_len) + 1e-12);
        }
}

TEST(Decide, AllZeroComboWinsTheMinimum) {
    std::mt19937_64 rng(47);
    std::normal_distribution<double> normal(0.0, 1.0);
    const Index n = 4, t_len = 12;
    MatrixXd x(n, t_len);
    for (Index i = 0; i < x.size(); ++i) x.data()[i] = 1.0 + std::abs(normal(rng));

    AggStats stats;
    stats.k_star = 0;
    stats.combos = {DivisorCombo{{1}}, DivisorCombo{{2}}};
    stats.y = {MatrixXd::Zero(n, t_len), (10.0 * x).eval()};
    stats.x = x;
    TestReport rep = decide(stats, 0.05);
    EXPECT_DOUBLE_EQ(rep.q_alpha_hat, 0.0);
    EXPECT_FALSE(rep.reject);
    EXPECT_DOUBLE_EQ(rep.alpha_hat, 0.0);
}

TEST(Decide, RejectFlagMatchesComparisonAcrossLevels) {
    std::mt19937_64 rng(53);
    TensorSeries y = noisy_low_rank({4, 4, 3}, {2, 2, 2}, 40, 0.5, rng);
    RankSpec spec{ModeSet({1, 2}, 3), {2}, 4};
    AggStats stats = compute_agg_stats(y, spec);
    for (double alpha : {0.01, 0.05, 0.1, 0.25, 0.5}) {
        TestReport rep = decide(stats, alpha);
        EXPECT_EQ(rep.reject, rep.q_alpha_hat > alpha);
        EXPECT_EQ(rep.p_hat, rep.reject ? 0 : 1);
        EXPECT_GE(rep.alpha_hat, 0.0);
        EXPECT_LE(rep.alpha_hat, 1.0);
        EXPECT_GE(rep.q_alpha_hat, 0.0);
        EXPECT_LE(rep.q_alpha_hat, 1.0);
    }
}

TEST(RunKronTest, NoiselessStructuredDataRetainsTheNull) {
    std::mt19937_64 rng(59);
    TensorSeries y = noisy_low_rank({4, 4, 3}, {2, 2, 2}, 50, 0.0, rng);
    RankSpec spec{ModeSet({1, 2}, 3), {2}, 4};
    for (double alpha : {0.01, 0.05}) {
        TestReport rep = run_kron_test(y, spec, alpha);
        EXPECT_FALSE(rep.reject) << "alpha=" << alpha;
    }
}

TEST(RunKronTest, ReportShapesAndComboProducts) {
    std::mt19937_64 rng(61);
    TensorSeries y = noisy_low_rank({4, 3, 3}, {2, 2, 2}, 30, 0.5, rng);
    RankSpec spec{ModeSet({1, 2}, 3), {2}, 4};
    TestReport rep = run_kron_test(y, spec, 0.05);
    EXPECT_EQ(rep.k_star, 1);  // ties between the two extent-3 modes
    EXPECT_EQ(rep.exceed.rows(), static_cast<Index>(rep.combos.size()));
    EXPECT_EQ(rep.exceed.cols(), 36 / 3);
    for (const DivisorCombo& combo : rep.combos) {
        int prod = 1;
        for (int pi : combo.pis) prod *= pi;
        EXPECT_EQ(prod, 4);
    }
}

TEST(RunKronTest, ExactDecisionInvarianceUnderPowerOfTwoScaling) {
    std::mt19937_64 rng(67);
    TensorSeries y = noisy_low_rank({4, 4, 3}, {2, 2, 2}, 40, 0.8, rng);
    TensorSeries scaled = y;
    scaled.data *= 4.0;
    RankSpec spec{ModeSet({1, 2}, 3), {2}, 4};
    TestReport a = run_kron_test(y, spec, 0.05);
    TestReport b = run_kron_test(scaled, spec, 0.05);
    EXPECT_EQ(a.reject, b.reject);
    EXPECT_EQ(a.exceed, b.exceed);
    EXPECT_EQ(a.alpha_hat, b.alpha_hat);
    EXPECT_EQ(a.q_alpha_hat, b.q_alpha_hat);
}

TEST(ComputeAggStats, NonSuffixModeSetMatchesManualPermutation) {
    std::mt19937_64 rng(71);
    TensorSeries y = noisy_low_rank({3, 5, 4}, {2, 2, 2}, 40, 0.5, rng);
    RankSpec spec{ModeSet({0, 2}, 3), {2}, 4};
    TestReport direct = run_kron_test(y, spec, 0.05);

    TensorSeries moved = permute_modes(y, {1, 0, 2});
    RankSpec suffix_spec{ModeSet({1, 2}, 3), {2}, 4};
    TestReport via = run_kron_test(moved, suffix_spec, 0.05);

    EXPECT_EQ(direct.alpha_hat, via.alpha_hat);
    EXPECT_EQ(direct.q_alpha_hat, via.q_alpha_hat);
    EXPECT_EQ(direct.reject, via.reject);
    // k* is the extent-3 mode: original label 0, permuted label 1.
    EXPECT_EQ(direct.k_star, 0);
    EXPECT_EQ(via.k_star, 1);
}

TEST(ScanModes, OrderTwoRunsBothDirections) {
    std::mt19937_64 rng(73);
    TensorSeries y = noisy_low_rank({5, 4}, {2, 2}, 60, 0.3, rng);
    ScanReport scan = scan_modes(y, 4, 0.05);
    ASSERT_EQ(scan.per_mode.size(), 2u);
    // Mode 0 test works on the series itself, mode 1 on its transpose;
    // both see the same vectorized data.
    EXPECT_EQ(scan.per_mode[0].exceed.rows(), scan.per_mode[1].exceed.rows());
    std::vector<int> rejected;
    for (int k = 0; k < 2; ++k)
        if (scan.per_mode[static_cast<size_t>(k)].reject) rejected.push_back(k);
    EXPECT_EQ(scan.a_star, rejected);

    EXPECT_THROW(scan_modes(y, 0, 0.05), std::invalid_argument);
    TensorSeries flat = TensorSeries::zeros({5}, 10);
    EXPECT_THROW(scan_modes(flat, 2, 0.05), std::invalid_argument);
}

TEST(EigenvalueRatioRank, ExamplesAndExhaustiveScan) {
    VectorXd v1(4);
    v1 << 10, 9, 1, 0.9;
    EXPECT_EQ(eigenvalue_ratio_rank(v1, 3), 2);

    VectorXd v2(3);
    v2 << 5, 0.01, 0.009;
    EXPECT_EQ(eigenvalue_ratio_rank(v2, 2), 1);

    std::mt19937_64 rng(79);
    std::uniform_real_distribution<double> u(0.1, 1.0);
    VectorXd spiked(12);
    for (int i = 0; i < 5; ++i) spiked[i] = 50.0 * u(rng) + 10.0;
    for (int i = 5; i < 12; ++i) spiked[i] = u(rng);
    std::sort(spiked.data(), spiked.data() + 12,
              [](double a, double b) { return a > b; });
    int best = 1;
    double best_ratio = -1.0;
    for (int i = 1; i <= 8; ++i) {
        double ratio = spiked[i - 1] / spiked[i];
        if (ratio > best_ratio) {
            best_ratio = ratio;
            best = i;
        }
    }
    EXPECT_EQ(eigenvalue_ratio_rank(spiked, 8), best);

    EXPECT_THROW(eigenvalue_ratio_rank(VectorXd::Zero(3), 2),
                 std::invalid_argument);
    VectorXd single(1);
    single << 1.0;
    EXPECT_THROW(eigenvalue_ratio_rank(single, 1), std::invalid_argument);
}

TEST(SelfNull, RandomResidualSets) {
    std::mt19937_64 rng(83);
    std::normal_distribution<double> normal(0.0, 1.0);
    const double alpha = 0.05;
    for (int trial = 0; trial < 20; ++trial) {
        TensorSeries resid = TensorSeries::zeros({4, 6}, 25);
        for (Index t = 0; t < 25; ++t)
            for (Index i = 0; i < 24; ++i) resid.data(i, t) = normal(rng);
        MatrixXd x = aggregate(resid, 0);
        for (Index j = 0; j < x.rows(); ++j) {
            std::vector<double> row(static_cast<size_t>(x.cols()));
            for (Index t = 0; t < x.cols(); ++t)
                row[static_cast<size_t>(t)] = x(j, t);
            double q = ecdf_quantile(row, alpha);
            EXPECT_LE(exceedance(row, q), alpha + 1.0 / 25.0 + 1e-12);
        }
    }
}

}  // namespace
}  // namespace kronfm
