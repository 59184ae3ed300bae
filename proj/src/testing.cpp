// SPDX-License-Identifier: MIT
#include "kronfm/testing.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace kronfm {

MatrixXd aggregate(const TensorSeries& residuals, int k_star) {
    if (k_star < 0 || k_star >= static_cast<int>(residuals.dims.size()))
        throw std::invalid_argument("aggregate: mode index out of range");
    const Index dk = residuals.dims[static_cast<size_t>(k_star)];
    const Index n = residuals.tensor_size() / dk;
    MatrixXd x(n, residuals.length());
    for (Index t = 0; t < residuals.length(); ++t) {
        MatrixXd m =
            detail::unfold_buffer(residuals.dims, residuals.data.col(t), k_star);
        x.col(t) = m.colwise().squaredNorm().transpose() /
                   static_cast<double>(dk);
    }
    return x;
}

double ecdf_lower_quantile(std::vector<double> sample, double q) {
    if (sample.empty())
        throw std::invalid_argument("ecdf quantile of an empty sample");
    std::sort(sample.begin(), sample.end());
    const auto n = static_cast<double>(sample.size());
    for (size_t i = 1; i <= sample.size(); ++i)
        if (static_cast<double>(i) / n >= q) return sample[i - 1];
    return sample.back();
}

double ecdf_quantile(std::vector<double> sample, double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0))
        throw std::invalid_argument("ecdf_quantile: alpha must be in (0,1)");
    return ecdf_lower_quantile(std::move(sample), 1.0 - alpha);
}

double exceedance(const std::vector<double>& values, double threshold) {
    if (values.empty()) return 0.0;
    size_t count = 0;
    for (double v : values)
        if (v >= threshold) ++count;
    return static_cast<double>(count) / static_cast<double>(values.size());
}

namespace {

std::vector<double> row_of(const MatrixXd& m, Index r) {
    std::vector<double> out(static_cast<size_t>(m.cols()));
    for (Index c = 0; c < m.cols(); ++c) out[static_cast<size_t>(c)] = m(r, c);
    return out;
}

int argmin_mode(const std::vector<Index>& dims) {
    int best = 0;
    for (int k = 1; k < static_cast<int>(dims.size()); ++k)
        if (dims[static_cast<size_t>(k)] < dims[static_cast<size_t>(best)])
            best = k;
    return best;
}

}  // namespace

TestReport decide(const AggStats& stats, double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0))
        throw std::invalid_argument("decide: alpha must be in (0,1)");
    const Index n = stats.x.rows();
    const auto n_combos = static_cast<Index>(stats.y.size());
    if (n_combos == 0) throw std::invalid_argument("decide: no combos");

    std::vector<double> thresholds(static_cast<size_t>(n));
    for (Index j = 0; j < n; ++j)
        thresholds[static_cast<size_t>(j)] =
            ecdf_quantile(row_of(stats.x, j), alpha);

    TestReport rep;
    rep.alpha = alpha;
    rep.k_star = stats.k_star;
    rep.combos = stats.combos;
    rep.exceed.resize(n_combos, n);

    double q_alpha = std::numeric_limits<double>::infinity();
    double alpha_hat = std::numeric_limits<double>::infinity();
    for (Index m = 0; m < n_combos; ++m) {
        std::vector<double> rates(static_cast<size_t>(n));
        for (Index j = 0; j < n; ++j) {
            double r = exceedance(row_of(stats.y[static_cast<size_t>(m)], j),
                                  thresholds[static_cast<size_t>(j)]);
            rep.exceed(m, j) = r;
            rates[static_cast<size_t>(j)] = r;
        }
        q_alpha = std::min(q_alpha, ecdf_lower_quantile(rates, 0.05));
        alpha_hat = std::min(alpha_hat, rep.exceed(m, 0));
    }
    rep.q_alpha_hat = q_alpha;
    rep.alpha_hat = alpha_hat;
    rep.reject = q_alpha > alpha;
    rep.p_hat = rep.reject ? 0 : 1;
    return rep;
}

AggStats compute_agg_stats(const TensorSeries& y, const RankSpec& spec) {
    const int order = static_cast<int>(y.dims.size());
    if (spec.mode_set.order() != order)
        throw std::invalid_argument("compute_agg_stats: mode set order mismatch");

    // Reduce to a suffix mode set by mode permutation; all residual
    // series are mapped back to the original mode order before
    // aggregation so labels stay in the caller's frame.
    const bool permuted = !spec.mode_set.is_suffix();
    std::vector<int> perm, inverse;
    TensorSeries work;
    const TensorSeries* series = &y;
    if (permuted) {
        perm = suffix_permutation(spec.mode_set);
        inverse.resize(perm.size());
        for (size_t p = 0; p < perm.size(); ++p)
            inverse[static_cast<size_t>(perm[p])] = static_cast<int>(p);
        work = permute_modes(y, perm);
        series = &work;
    }
    RankSpec suffix_spec{ModeSet::suffix(spec.split(), order), spec.pre_ranks,
                         spec.r_merged};
    suffix_spec.validate(series->dims);

    AggStats stats;
    stats.k_star = argmin_mode(y.dims);

    ReshapedFit rf = fit_reshaped(*series, suffix_spec);
    TensorSeries resid = permuted
                             ? permute_modes(rf.residual_orig, inverse)
                             : std::move(rf.residual_orig);
    stats.x = aggregate(resid, stats.k_star);

    std::vector<Index> post_dims;
    for (int m = spec.split(); m < order; ++m)
        post_dims.push_back(series->dims[static_cast<size_t>(m)]);
    stats.combos = divisor_combinations(spec.r_merged, post_dims);

    ModeEigs eigs = compute_mode_eigs(*series);
    for (const DivisorCombo& combo : stats.combos) {
        FullFit ff = fit_full(*series, suffix_spec, combo, eigs);
        TensorSeries r = permuted ? permute_modes(ff.residual, inverse)
                                  : std::move(ff.residual);
        stats.y.push_back(aggregate(r, stats.k_star));
    }
    return stats;
}

TestReport run_kron_test(const TensorSeries& y, const RankSpec& spec,
                         double alpha) {
    return decide(compute_agg_stats(y, spec), alpha);
}

ScanReport scan_modes(const TensorSeries& y, int r_vec, double alpha) {
    const int order = static_cast<int>(y.dims.size());
    if (order < 2)
        throw std::invalid_argument("scan_modes: need an order >= 2 series");
    if (r_vec < 1) throw std::invalid_argument("scan_modes: r_vec must be >= 1");

    ScanReport scan;
    for (int k = 0; k < order; ++k) {
        std::vector<int> rest;
        for (int m = 0; m < order; ++m)
            if (m != k) rest.push_back(m);
        TensorSeries w = reshape(y, ModeSet(rest, order));
        RankSpec spec{ModeSet::suffix(0, 2), {}, r_vec};
        TestReport rep = run_kron_test(w, spec, alpha);
        if (rep.reject) scan.a_star.push_back(k);
        scan.per_mode.push_back(std::move(rep));
    }
    return scan;
}

int eigenvalue_ratio_rank(const VectorXd& values, int max_r) {
    if (values.size() < 2)
        throw std::invalid_argument("eigenvalue_ratio_rank: need >= 2 values");
    if (values.maxCoeff() <= 0.0)
        throw std::invalid_argument("eigenvalue_ratio_rank: degenerate spectrum");
    const int cap = std::min<int>(max_r, static_cast<int>(values.size()) - 1);
    int best = 1;
    double best_ratio = -1.0;
    for (int i = 1; i <= cap; ++i) {
        double hi = std::max(values[i - 1], 0.0);
        double lo = std::max(values[i], 0.0);
        double ratio;
        if (lo > 0.0)
            ratio = hi / lo;
        else
            ratio = hi > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
        if (ratio > best_ratio) {
            best_ratio = ratio;
            best = i;
        }
    }
    return best;
}

}  // namespace kronfm
