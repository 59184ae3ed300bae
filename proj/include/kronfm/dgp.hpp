// SPDX-License-Identifier: MIT
#pragma once

#include "kronfm/testing.hpp"

#include <cstdint>
#include <random>
#include <vector>

namespace kronfm {

enum class Hypothesis { H0, H1 };
enum class Innovation { Gaussian, StudentT3 };

struct ArCoeffs {
    double phi1 = 0.0;
    double phi2 = 0.0;
};

/// Configuration of the synthetic data-generating process.
///
/// Under H0 the series is built from a full multilinear factor model
/// Y_t = F_t x_1 A_1 ... x_K A_K + E_t, so the merged-mode loading is a
/// Kronecker product by construction. Under H1 the merged-mode loading
/// is drawn directly as a dense d_V x r_V matrix (no product
/// structure), the model is assembled in reshaped form and mapped back.
///
/// The noise is E_t = Fe_t x_1 Ae_1 ... x_K Ae_K + Sigma o eps_t with
/// sparse noise loadings, an elementwise standard-deviation field of
/// |N(0,1)| draws, and elementwise AR(2) series throughout.
struct DgpConfig {
    std::vector<Index> dims;
    Index t_len = 0;
    std::vector<int> ranks;      // factor count per mode
    std::vector<int> mode_set;   // 0-based ascending merge/test set
    Hypothesis hypothesis = Hypothesis::H0;
    Innovation innovation = Innovation::Gaussian;
    std::vector<std::vector<double>> zeta;  // per mode per factor; empty = 0
    std::vector<double> zeta_merged;        // H1 merged loading; empty = 0
    std::vector<int> noise_ranks;           // empty = 2 per mode
    double sparsity = 0.95;
    double noise_scale = 1.0;
    std::uint64_t seed = 0;

    ArCoeffs ar_factor{0.7, -0.3};
    ArCoeffs ar_noise_factor{0.5, -0.5};
    ArCoeffs ar_idio{0.4, 0.4};

    // Rank handed to the test harness: 0 means the product of the
    // per-mode ranks over mode_set; misspecify_r_v draws it uniformly
    // from {2,...,6} per replication instead.
    int r_v_override = 0;
    bool misspecify_r_v = false;

    int order() const { return static_cast<int>(dims.size()); }
    int merged_rank_true() const;
    ModeSet merge_set() const;
    void validate() const;
};

/// Deterministic per-stream seed derivation (splitmix64 finalizer over
/// base + stream index). Replication r of a run with base seed s uses
/// derive_seed(s, r). Draws are reproducible for a fixed standard
/// library implementation.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

/// Stationary variance of x_t = phi1 x_{t-1} + phi2 x_{t-2} + e_t with
/// unit-variance innovations.
double ar2_stationary_variance(const ArCoeffs& c);

/// Standardised AR(2) path: zero-initialized recursion with `burn_in`
/// discarded steps, unit-variance innovations (t3 draws are scaled by
/// 1/sqrt(3)), divided by the theoretical stationary standard deviation
/// so the output has unit variance. Throws on non-stationary
/// coefficients (phi2 outside (-1, 1-|phi1|)).
std::vector<double> simulate_ar2(Index t_len, const ArCoeffs& c,
                                 Innovation innovation, std::mt19937_64& rng,
                                 int burn_in = 200);

/// Loading matrix U * diag(d^{-zeta_h}) with U iid N(0,1), drawn column
/// by column. Empty zeta means all exponents zero (pervasive factors).
MatrixXd random_loading(Index d, int r, const std::vector<double>& zeta,
                        std::mt19937_64& rng);

/// iid N(0,1) entries independently zeroed with probability zero_prob.
MatrixXd random_sparse_loading(Index d, int r, double zero_prob,
                               std::mt19937_64& rng);

/// One simulated draw with its building blocks kept for inspection.
/// Under H0 `factors` holds the full core series and `loadings` the
/// per-mode loadings A_1..A_K; under H1 `factors` holds the reshaped
/// core and `loadings` the surviving-mode loadings followed by the
/// merged-mode loading.
struct SimulationDraw {
    TensorSeries series;
    TensorSeries common;
    TensorSeries factors;
    std::vector<MatrixXd> loadings;
};

SimulationDraw simulate_draw(const DgpConfig& config);
TensorSeries simulate(const DgpConfig& config);

/// Monte Carlo summary over replications of the structure test.
struct SimResult {
    std::vector<double> alphas;
    std::vector<std::vector<TestReport>> reports;  // [rep][alpha index]
    std::vector<double> mean_alpha_hat;            // per alpha
    std::vector<double> mean_p_hat;                // per alpha
};

/// Run `reps` independent replications (derived seed per rep), testing
/// each draw at every level in `alphas`. Replications execute on
/// `threads` workers (0 = hardware concurrency); results are
/// aggregated in replication order, so the outcome does not depend on
/// the thread count.
SimResult monte_carlo(const DgpConfig& config, int reps,
                      const std::vector<double>& alphas, int threads = 0);

/// Monte Carlo over the mode scan: fraction(k, a) is the share of
/// replications in which mode k was flagged at level alphas[a].
struct ScanSimResult {
    std::vector<double> alphas;
    std::vector<std::vector<ScanReport>> reports;  // [rep][alpha index]
    MatrixXd fraction;                             // K x |alphas|
};

ScanSimResult scan_monte_carlo(const DgpConfig& config, int reps,
                               const std::vector<double>& alphas, int r_vec,
                               int threads = 0);

}  // namespace kronfm
