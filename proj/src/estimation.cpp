// SPDX-License-Identifier: MIT
#include "kronfm/estimation.hpp"

#include <stdexcept>
#include <string>

namespace kronfm {

namespace {

std::vector<MatrixXd> mode_unfoldings(const TensorSeries& s, int mode) {
    std::vector<MatrixXd> out;
    out.reserve(static_cast<size_t>(s.length()));
    for (Index t = 0; t < s.length(); ++t)
        out.push_back(detail::unfold_buffer(s.dims, s.data.col(t), mode));
    return out;
}

/// Loading basis of the mode scatter, routed through the Gram matrix
/// when the mode extent exceeds the total number of unfolding columns.
EigBasis mode_basis(const TensorSeries& s, int mode, int rank) {
    const Index n = s.dims[static_cast<size_t>(mode)];
    const Index p = s.tensor_size() / n;
    const Index t_len = s.length();
    if (n > p * t_len) {
        if (p == 1) return top_eigvecs_gram(s.data, rank, t_len);
        MatrixXd z(n, p * t_len);
        for (Index t = 0; t < t_len; ++t)
            z.middleCols(t * p, p) =
                detail::unfold_buffer(s.dims, s.data.col(t), mode);
        return top_eigvecs_gram(z, rank, t_len);
    }
    return top_eigvecs(scatter(mode_unfoldings(s, mode)), rank);
}

}  // namespace

void RankSpec::validate(const std::vector<Index>& dims) const {
    if (mode_set.order() != static_cast<int>(dims.size()))
        throw std::invalid_argument("rank spec: mode set order mismatch");
    if (static_cast<int>(pre_ranks.size()) != split())
        throw std::invalid_argument(
            "rank spec: need one pre rank per surviving mode");
    if (!mode_set.is_suffix())
        throw std::invalid_argument(
            "rank spec: mode set must be a suffix here; permute modes first");
    for (int j = 0; j < split(); ++j) {
        if (pre_ranks[static_cast<size_t>(j)] < 1 ||
            pre_ranks[static_cast<size_t>(j)] > dims[static_cast<size_t>(j)])
            throw std::invalid_argument("rank spec: pre rank " +
                                        std::to_string(j + 1) +
                                        " exceeds the mode extent");
    }
    Index merged = 1;
    for (int m : mode_set.modes()) merged *= dims[static_cast<size_t>(m)];
    if (r_merged < 1 || r_merged > merged)
        throw std::invalid_argument("rank spec: merged rank exceeds extent");
}

std::vector<int> suffix_permutation(const ModeSet& a) {
    std::vector<int> perm;
    for (int k = 0; k < a.order(); ++k)
        if (!a.contains(k)) perm.push_back(k);
    for (int m : a.modes()) perm.push_back(m);
    return perm;
}

TensorSeries project_series(
    const TensorSeries& s, const std::vector<const EigBasis*>& basis_per_mode) {
    if (basis_per_mode.size() != s.dims.size())
        throw std::invalid_argument("project_series: one basis slot per mode");
    TensorSeries out;
    out.dims = s.dims;
    out.data.resize(s.tensor_size(), s.length());
    for (Index t = 0; t < s.length(); ++t) {
        Tensor x = s.at(t);
        for (size_t m = 0; m < basis_per_mode.size(); ++m) {
            const EigBasis* q = basis_per_mode[m];
            if (q == nullptr) continue;
            int mode = static_cast<int>(m);
            x = mode_product(mode_product(x, q->vectors.transpose(), mode),
                             q->vectors, mode);
        }
        out.data.col(t) = x.data();
    }
    return out;
}

ReshapedFit fit_reshaped(const TensorSeries& y, const RankSpec& spec) {
    spec.validate(y.dims);
    if (y.length() < 2)
        throw std::invalid_argument("fit_reshaped: series length must be >= 2");

    ReshapedFit fit{spec.mode_set, {}, {}, {}, {}, {}};
    TensorSeries r = reshape(y, spec.mode_set);
    const int v = static_cast<int>(r.dims.size());  // surviving modes + merged

    for (int j = 0; j + 1 < v; ++j)
        fit.q_pre.push_back(
            mode_basis(r, j, spec.pre_ranks[static_cast<size_t>(j)]));
    fit.q_merged = mode_basis(r, v - 1, spec.r_merged);

    std::vector<const EigBasis*> slots(static_cast<size_t>(v), nullptr);
    for (int j = 0; j + 1 < v; ++j)
        slots[static_cast<size_t>(j)] = &fit.q_pre[static_cast<size_t>(j)];
    slots[static_cast<size_t>(v - 1)] = &fit.q_merged;

    fit.common = project_series(r, slots);
    fit.residual = r;
    fit.residual.data -= fit.common.data;
    fit.residual_orig = unreshape(fit.residual, y.dims, spec.mode_set);
    return fit;
}

std::vector<DivisorCombo> divisor_combinations(
    int r_merged, const std::vector<Index>& post_dims) {
    if (r_merged < 1)
        throw std::invalid_argument("divisor_combinations: rank must be >= 1");
    if (post_dims.empty())
        throw std::invalid_argument("divisor_combinations: no modes given");
    std::vector<DivisorCombo> out;
    std::vector<int> current;
    // Depth-first with ascending factors at each slot: lexicographic.
    auto rec = [&](auto&& self, int remaining, size_t pos) -> void {
        if (pos + 1 == post_dims.size()) {
            if (remaining <= post_dims[pos]) {
                current.push_back(remaining);
                out.push_back(DivisorCombo{current});
                current.pop_back();
            }
            return;
        }
        int cap = static_cast<int>(std::min<Index>(remaining, post_dims[pos]));
        for (int pi = 1; pi <= cap; ++pi) {
            if (remaining % pi != 0) continue;
            current.push_back(pi);
            self(self, remaining / pi, pos + 1);
            current.pop_back();
        }
    };
    rec(rec, r_merged, 0);
    if (out.empty())
        throw std::runtime_error(
            "divisor_combinations: no combination of rank " +
            std::to_string(r_merged) + " fits the mode extents");
    return out;
}

ModeEigs compute_mode_eigs(const TensorSeries& y) {
    ModeEigs eigs;
    for (int k = 0; k < static_cast<int>(y.dims.size()); ++k)
        eigs.per_mode.push_back(full_eig(scatter(mode_unfoldings(y, k))));
    return eigs;
}

FullFit fit_full(const TensorSeries& y, const RankSpec& spec,
                 const DivisorCombo& combo, const ModeEigs& eigs) {
    spec.validate(y.dims);
    const int split = spec.split();
    const int n_post = spec.mode_set.count();
    if (static_cast<int>(combo.pis.size()) != n_post)
        throw std::invalid_argument("fit_full: combo length mismatch");

    FullFit fit{combo, {}, {}, {}, {}};
    for (int j = 0; j < split; ++j)
        fit.q_pre.push_back(take_top(eigs.per_mode[static_cast<size_t>(j)],
                                     spec.pre_ranks[static_cast<size_t>(j)]));
    for (int i = 0; i < n_post; ++i) {
        int mode = split + i;
        int pi = combo.pis[static_cast<size_t>(i)];
        if (pi < 1 || pi > y.dims[static_cast<size_t>(mode)])
            throw std::invalid_argument("fit_full: combo rank exceeds extent");
        fit.q_post.push_back(
            take_top(eigs.per_mode[static_cast<size_t>(mode)], pi));
    }

    std::vector<const EigBasis*> slots(y.dims.size(), nullptr);
    for (int j = 0; j < split; ++j)
        slots[static_cast<size_t>(j)] = &fit.q_pre[static_cast<size_t>(j)];
    for (int i = 0; i < n_post; ++i)
        slots[static_cast<size_t>(split + i)] =
            &fit.q_post[static_cast<size_t>(i)];

    fit.common = project_series(y, slots);
    fit.residual = y;
    fit.residual.data -= fit.common.data;
    return fit;
}

FullFit fit_full(const TensorSeries& y, const RankSpec& spec,
                 const DivisorCombo& combo) {
    return fit_full(y, spec, combo, compute_mode_eigs(y));
}

}  // namespace kronfm
