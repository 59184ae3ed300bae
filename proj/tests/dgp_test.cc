// SPDX-License-Identifier: MIT
#include "kronfm/dgp.hpp"

#include <gtest/gtest.h>

#include <numeric>

namespace kronfm {
namespace {

double sample_mean(const std::vector<double>& v) {
    return std::accumulate(v.begin(), v.end(), 0.0) /
           static_cast<double>(v.size());
}

double sample_var(const std::vector<double>& v) {
    double mu = sample_mean(v);
    double acc = 0.0;
    for (double x : v) acc += (x - mu) * (x - mu);
    return acc / static_cast<double>(v.size());
}

double lag1_autocorr(const std::vector<double>& v) {
    double mu = sample_mean(v);
    double num = 0.0, den = 0.0;
    for (size_t t = 1; t < v.size(); ++t)
        num += (v[t] - mu) * (v[t - 1] - mu);
    for (double x : v) den += (x - mu) * (x - mu);
    return num / den;
}

DgpConfig base_config() {
    DgpConfig cfg;
    cfg.dims = {6, 5, 4};
    cfg.t_len = 40;
    cfg.ranks = {2, 2, 2};
    cfg.mode_set = {1, 2};
    cfg.seed = 12345;
    return cfg;
}

TEST(SimulateAr2, WhiteNoiseHasUnitVariance) {
    std::mt19937_64 rng(1);
    std::vector<double> path =
        simulate_ar2(10000, {0.0, 0.0}, Innovation::Gaussian, rng);
    EXPECT_NEAR(sample_var(path), 1.0, 0.1);
}

TEST(SimulateAr2, YuleWalkerLagOneAutocorrelation) {
    std::mt19937_64 rng(2);
    std::vector<double> path =
        simulate_ar2(10000, {0.7, -0.3}, Innovation::Gaussian, rng);
    // rho_1 = phi_1 / (1 - phi_2)
    EXPECT_NEAR(lag1_autocorr(path), 0.7 / 1.3, 0.05);
    EXPECT_NEAR(sample_var(path), 1.0, 0.1);
}

TEST(SimulateAr2, RejectsNonStationaryCoefficients) {
    std::mt19937_64 rng(3);
    EXPECT_THROW(simulate_ar2(10, {0.9, 0.2}, Innovation::Gaussian, rng),
                 std::invalid_argument);
    // Unit root at the stationarity boundary.
    EXPECT_THROW(simulate_ar2(10, {-0.5, 0.5}, Innovation::Gaussian, rng),
                 std::invalid_argument);
}

TEST(SimulateAr2, StudentTInnovationsAreUnitVariance) {
    std::mt19937_64 rng(4);
    std::vector<double> path =
        simulate_ar2(20000, {0.4, 0.4}, Innovation::StudentT3, rng);
    EXPECT_NEAR(sample_var(path), 1.0, 0.15);
}

TEST(Ar2StationaryVariance, ClosedFormMatchesSimulation) {
    ArCoeffs c{0.5, -0.5};
    EXPECT_NEAR(ar2_stationary_variance(c), 1.5 / (0.5 * 2.0), 1e-12);
    std::mt19937_64 rng(5);
    std::vector<double> path = simulate_ar2(30000, c, Innovation::Gaussian, rng);
    EXPECT_NEAR(sample_var(path), 1.0, 0.05);
}

TEST(RandomLoading, PervasiveColumnNormConcentration) {
    std::mt19937_64 rng(6);
    MatrixXd a = random_loading(100, 2, {}, rng);
    for (int h = 0; h < 2; ++h)
        EXPECT_NEAR(a.col(h).norm(), 10.0, 3.0 * std::sqrt(2.0));
}

TEST(RandomLoading, WeakFactorScaling) {
    std::mt19937_64 rng(7);
    const Index d = 50;
    double acc = 0.0;
    const int reps = 200;
    for (int i = 0; i < reps; ++i) {
        MatrixXd a = random_loading(d, 1, {0.5}, rng);
        acc += a.col(0).squaredNorm();
    }
    EXPECT_NEAR(acc / reps, 1.0, 0.1);  // E||col||^2 = d * d^{-1}

    MatrixXd scalar = random_loading(1, 1, {}, rng);
    EXPECT_EQ(scalar.rows(), 1);
    EXPECT_EQ(scalar.cols(), 1);
}

TEST(RandomSparseLoading, ZeroProbabilityExtremes) {
    std::mt19937_64 rng(8);
    EXPECT_EQ(random_sparse_loading(50, 2, 1.0, rng).norm(), 0.0);
    MatrixXd dense = random_sparse_loading(50, 2, 0.0, rng);
    EXPECT_EQ((dense.array() == 0.0).count(), 0);

    MatrixXd sparse = random_sparse_loading(1000, 2, 0.95, rng);
    double nonzero =
        static_cast<double>((sparse.array() != 0.0).count()) / 2000.0;
    EXPECT_NEAR(nonzero, 0.05, 0.02);
}

TEST(Simulate, DeterministicUnderSeed) {
    DgpConfig cfg = base_config();
    TensorSeries a = simulate(cfg);
    TensorSeries b = simulate(cfg);
    EXPECT_EQ(a.data, b.data);
    cfg.seed += 1;
    TensorSeries c = simulate(cfg);
    EXPECT_NE(a.data, c.data);
}

TEST(Simulate, NoiselessHookRetainsNull) {
    DgpConfig cfg = base_config();
    cfg.noise_scale = 0.0;
    SimulationDraw draw = simulate_draw(cfg);
    EXPECT_EQ(draw.series.data, draw.common.data);

    RankSpec spec{ModeSet({1, 2}, 3), {2}, 4};
    ReshapedFit fit = fit_reshaped(draw.series, spec);
    EXPECT_LE(fit.residual.data.norm(), 1e-8 * draw.series.data.norm());
    TestReport rep = run_kron_test(draw.series, spec, 0.05);
    EXPECT_FALSE(rep.reject);
}

// The common component of an H0 draw factorizes through reshape: its
// reshaped unfolding along the merged mode equals the descending
// Kronecker product of the merged loadings applied to the reshaped core.
TEST(Simulate, CommonComponentFactorizesThroughReshape) {
    DgpConfig cfg = base_config();
    SimulationDraw draw = simulate_draw(cfg);
    ModeSet a = cfg.merge_set();

    TensorSeries reshaped_common = reshape(draw.common, a);
    MatrixXd merged_loading =
        kron(draw.loadings[2], draw.loadings[1]);  // descending over {1,2}
    for (Index t = 0; t < cfg.t_len; ++t) {
        Tensor f(draw.factors.dims, draw.factors.data.col(t));
        Tensor fr = reshape(f, a);
        Tensor want = mode_product(fr, draw.loadings[0], 0);
        want = mode_product(want, merged_loading, 1);
        EXPECT_LE((reshaped_common.data.col(t) - want.data()).norm(),
                  1e-10 * (1.0 + want.data().norm()));
    }
}

TEST(Simulate, AlternativeDrawAssemblesReshapedModel) {
    DgpConfig cfg = base_config();
    cfg.hypothesis = Hypothesis::H1;
    SimulationDraw draw = simulate_draw(cfg);
    ASSERT_EQ(draw.loadings.size(), 2u);
    EXPECT_EQ(draw.loadings[1].rows(), 20);  // merged extent 5*4
    EXPECT_EQ(draw.loadings[1].cols(), 4);   // merged rank 2*2

    ModeSet a = cfg.merge_set();
    TensorSeries reshaped_common = reshape(draw.common, a);
    for (Index t = 0; t < cfg.t_len; ++t) {
        Tensor f(draw.factors.dims, draw.factors.data.col(t));
        Tensor want = mode_product(f, draw.loadings[0], 0);
        want = mode_product(want, draw.loadings[1], 1);
        EXPECT_LE((reshaped_common.data.col(t) - want.data()).norm(),
                  1e-12 * (1.0 + want.data().norm()));
    }
}

TEST(Simulate, FactorSecondMomentsApproachIdentityScale) {
    DgpConfig cfg;
    cfg.dims = {8, 8};
    cfg.t_len = 10000;
    cfg.ranks = {2, 2};
    cfg.mode_set = {0, 1};
    cfg.seed = 99;
    SimulationDraw draw = simulate_draw(cfg);
    // (1/T) sum mat_k(F) mat_k(F)' -> r_{-k} I entrywise within 10%.
    for (int k = 0; k < 2; ++k) {
        MatrixXd acc = MatrixXd::Zero(2, 2);
        for (Index t = 0; t < cfg.t_len; ++t) {
            Tensor f(draw.factors.dims, draw.factors.data.col(t));
            MatrixXd m = unfold(f, k);
            acc += m * m.transpose();
        }
        acc /= static_cast<double>(cfg.t_len);
        double target = 2.0;  // r / r_k
        EXPECT_NEAR(acc(0, 0), target, 0.1 * target);
        EXPECT_NEAR(acc(1, 1), target, 0.1 * target);
        EXPECT_NEAR(acc(0, 1), 0.0, 0.1 * target);
    }
}

TEST(Simulate, ValidationErrors) {
    DgpConfig cfg = base_config();
    cfg.ranks = {7, 2, 2};
    EXPECT_THROW(simulate(cfg), std::invalid_argument);
    cfg = base_config();
    cfg.zeta = {{0.1, 0.1}};
    EXPECT_THROW(simulate(cfg), std::invalid_argument);
    cfg = base_config();
    cfg.zeta = {{0.9, 0.0}, {0.0, 0.0}, {0.0, 0.0}};
    EXPECT_THROW(simulate(cfg), std::invalid_argument);
}

TEST(MonteCarlo, SingleRepSummaryEqualsReport) {
    DgpConfig cfg = base_config();
    SimResult result = monte_carlo(cfg, 1, {0.05}, 1);
    ASSERT_EQ(result.reports.size(), 1u);
    EXPECT_DOUBLE_EQ(result.mean_alpha_hat[0], result.reports[0][0].alpha_hat);
    EXPECT_DOUBLE_EQ(result.mean_p_hat[0],
                     static_cast<double>(result.reports[0][0].p_hat));
}

TEST(MonteCarlo, DeterministicAcrossRunsAndThreadCounts) {
    DgpConfig cfg = base_config();
    cfg.t_len = 30;
    SimResult a = monte_carlo(cfg, 6, {0.01, 0.05}, 1);
    SimResult b = monte_carlo(cfg, 6, {0.01, 0.05}, 2);
    for (size_t lvl = 0; lvl < 2; ++lvl) {
        EXPECT_EQ(a.mean_alpha_hat[lvl], b.mean_alpha_hat[lvl]);
        EXPECT_EQ(a.mean_p_hat[lvl], b.mean_p_hat[lvl]);
    }
    for (int rep = 0; rep < 6; ++rep)
        EXPECT_EQ(a.reports[static_cast<size_t>(rep)][0].alpha_hat,
                  b.reports[static_cast<size_t>(rep)][0].alpha_hat);
    // Distinct replications use distinct streams.
    EXPECT_NE(a.reports[0][0].exceed, a.reports[1][0].exceed);
}

TEST(MonteCarlo, MisspecifiedMergedRankDraw) {
    DgpConfig cfg = base_config();
    cfg.t_len = 30;
    cfg.misspecify_r_v = true;
    SimResult result = monte_carlo(cfg, 5, {0.05}, 2);
    // Merged ranks land in {2..6}; combo products expose the draw.
    for (const auto& rep : result.reports) {
        int prod = 1;
        for (int pi : rep[0].combos.front().pis) prod *= pi;
        EXPECT_GE(prod, 2);
        EXPECT_LE(prod, 6);
    }
}

TEST(ScanMonteCarlo, FractionsAreRepAverages) {
    DgpConfig cfg;
    cfg.dims = {4, 4, 4};
    cfg.t_len = 30;
    cfg.ranks = {1, 1, 1};
    cfg.mode_set = {1, 2};
    cfg.seed = 7;
    ScanSimResult result = scan_monte_carlo(cfg, 4, {0.05}, 1, 2);
    ASSERT_EQ(result.fraction.rows(), 3);
    for (Index k = 0; k < 3; ++k) {
        double count = 0.0;
        for (const auto& rep : result.reports)
            for (int mode : rep[0].a_star)
                if (mode == k) count += 1.0;
        EXPECT_DOUBLE_EQ(result.fraction(k, 0), count / 4.0);
    }
}

}  // namespace
}  // namespace kronfm
