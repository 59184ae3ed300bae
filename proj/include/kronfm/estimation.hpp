// SPDX-License-Identifier: MIT
#pragma once

#include "kronfm/spectral.hpp"
#include "kronfm/tensor.hpp"

#include <vector>

namespace kronfm {

/// Rank specification for the two competing fits: `mode_set` selects
/// the modes merged into a single trailing mode, `pre_ranks` gives the
/// factor counts of the surviving modes (ascending mode order) and
/// `r_merged` the factor count of the merged mode.
struct RankSpec {
    ModeSet mode_set;
    std::vector<int> pre_ranks;
    int r_merged = 1;

    /// Number of surviving modes (the split index).
    int split() const { return mode_set.order() - mode_set.count(); }
    void validate(const std::vector<Index>& dims) const;
};

/// Factor fit of the merged (reshaped) series: per-mode loading bases,
/// the common component C with C + E == reshape(Y) exactly, and the
/// residual both in reshaped and in original shape.
struct ReshapedFit {
    ModeSet mode_set;
    std::vector<EigBasis> q_pre;
    EigBasis q_merged;
    TensorSeries common;         // reshaped shape
    TensorSeries residual;       // reshaped shape
    TensorSeries residual_orig;  // original shape
};

/// One candidate split (pi_1, ..., pi_m) of the merged rank across the
/// merged modes: prod pi_j == r_merged, pi_j <= extent of the mode.
struct DivisorCombo {
    std::vector<int> pis;
};

/// Full multilinear fit of the original series under one divisor combo.
struct FullFit {
    DivisorCombo combo;
    std::vector<EigBasis> q_pre;
    std::vector<EigBasis> q_post;
    TensorSeries common;    // original shape
    TensorSeries residual;  // original shape
};

/// Full eigendecompositions of every mode scatter of the original
/// series; shared across all divisor combos (only the retained rank
/// differs per combo).
struct ModeEigs {
    std::vector<FullEig> per_mode;
};

/// Requires a suffix mode set; non-suffix sets are handled upstream by
/// permuting modes first (see testing.hpp).
ReshapedFit fit_reshaped(const TensorSeries& y, const RankSpec& spec);

/// All divisor combos of r_merged over the given extents, enumerated in
/// lexicographic order. Throws when no combo satisfies the bounds.
std::vector<DivisorCombo> divisor_combinations(
    int r_merged, const std::vector<Index>& post_dims);

ModeEigs compute_mode_eigs(const TensorSeries& y);

FullFit fit_full(const TensorSeries& y, const RankSpec& spec,
                 const DivisorCombo& combo, const ModeEigs& eigs);
FullFit fit_full(const TensorSeries& y, const RankSpec& spec,
                 const DivisorCombo& combo);

/// Project every tensor of the series onto the column space of the
/// given basis along each listed mode (successive mode products with
/// Q Q', applied in factored form).
TensorSeries project_series(const TensorSeries& s,
                            const std::vector<const EigBasis*>& basis_per_mode);

/// Mode permutation turning `a` into a suffix set: survivors first in
/// ascending order, then the members of `a`.
std::vector<int> suffix_permutation(const ModeSet& a);

}  // namespace kronfm
