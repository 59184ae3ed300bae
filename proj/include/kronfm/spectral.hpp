// SPDX-License-Identifier: MIT
#pragma once

#include "kronfm/tensor.hpp"

#include <vector>

namespace kronfm {

/// Sample second-moment matrix (1/T) sum_t M_t M_t'.
struct ScatterMatrix {
    MatrixXd m;
    Index dim() const { return m.rows(); }
};

/// Leading eigenpairs of a symmetric PSD matrix: orthonormal columns,
/// eigenvalues descending and clamped at zero.
struct EigBasis {
    MatrixXd vectors;  // n x r
    VectorXd values;   // r, descending
    int rank() const { return static_cast<int>(values.size()); }
};

/// Accumulate (1/T) sum M M' over the list; symmetrized as (S+S')/2.
ScatterMatrix scatter(const std::vector<MatrixXd>& series);

/// Full symmetric eigendecomposition, eigenvalues descending. Kept as a
/// whole so that several retained ranks can be sliced from one solve.
struct FullEig {
    MatrixXd vectors;
    VectorXd values;
};
FullEig full_eig(const ScatterMatrix& s);

/// Top r eigenpairs of `e` under the deterministic sign rule: the
/// largest-magnitude entry of each column is made positive, ties broken
/// by the lowest row index. With repeated eigenvalues the returned
/// basis is whatever the solver produced, sign-fixed; downstream use
/// only depends on the projector V V'.
EigBasis take_top(const FullEig& e, int r);

/// take_top(full_eig(s), r).
EigBasis top_eigvecs(const ScatterMatrix& s, int r);

/// Top r eigenpairs of (1/T) Z Z' computed through the Gram matrix
/// Z'Z when Z is tall (n >> number of columns). Z holds the stacked
/// unfolding columns; `t_len` is the series length T used for
/// normalization. Same eigenvalues and (up to sign rule) eigenvectors
/// as the scatter route. Beyond the numerical rank of Z the basis is
/// completed deterministically from canonical vectors.
EigBasis top_eigvecs_gram(const MatrixXd& z, int r, Index t_len);

/// Apply the sign convention in place.
void fix_signs(MatrixXd& vectors);

}  // namespace kronfm
