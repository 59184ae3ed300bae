// SPDX-License-Identifier: MIT
#include "kronfm/spectral.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <stdexcept>

namespace kronfm {

ScatterMatrix scatter(const std::vector<MatrixXd>& series) {
    if (series.empty()) throw std::invalid_argument("scatter: empty series");
    const Index n = series.front().rows();
    const Index p = series.front().cols();
    MatrixXd s = MatrixXd::Zero(n, n);
    for (const MatrixXd& m : series) {
        if (m.rows() != n || m.cols() != p)
            throw std::invalid_argument("scatter: shape mismatch in series");
        s.selfadjointView<Eigen::Lower>().rankUpdate(m, 1.0);
    }
    s.triangularView<Eigen::StrictlyUpper>() =
        s.triangularView<Eigen::StrictlyLower>().transpose();
    s /= static_cast<double>(series.size());
    s = 0.5 * (s + s.transpose()).eval();
    return ScatterMatrix{std::move(s)};
}

FullEig full_eig(const ScatterMatrix& s) {
    Eigen::SelfAdjointEigenSolver<MatrixXd> solver(s.m);
    if (solver.info() != Eigen::Success)
        throw std::runtime_error("eigendecomposition failed to converge");
    // Solver returns ascending order; flip to descending.
    FullEig e;
    e.vectors = solver.eigenvectors().rowwise().reverse();
    e.values = solver.eigenvalues().reverse();
    return e;
}

void fix_signs(MatrixXd& vectors) {
    for (Index c = 0; c < vectors.cols(); ++c) {
        Index lead = 0;
        double best = std::abs(vectors(0, c));
        for (Index i = 1; i < vectors.rows(); ++i) {
            double a = std::abs(vectors(i, c));
            if (a > best) {
                best = a;
                lead = i;
            }
        }
        if (vectors(lead, c) < 0.0) vectors.col(c) = -vectors.col(c);
    }
}

EigBasis take_top(const FullEig& e, int r) {
    if (r < 1 || r > e.values.size())
        throw std::invalid_argument("take_top: rank out of range");
    EigBasis b;
    b.vectors = e.vectors.leftCols(r);
    b.values = e.values.head(r).cwiseMax(0.0);
    fix_signs(b.vectors);
    return b;
}

EigBasis top_eigvecs(const ScatterMatrix& s, int r) {
    return take_top(full_eig(s), r);
}

EigBasis top_eigvecs_gram(const MatrixXd& z, int r, Index t_len) {
    if (r < 1 || r > z.cols() || r > z.rows())
        throw std::invalid_argument("top_eigvecs_gram: rank out of range");
    if (t_len < 1) throw std::invalid_argument("top_eigvecs_gram: T must be >= 1");
    const Index m = z.cols();
    MatrixXd g = MatrixXd::Zero(m, m);
    g.selfadjointView<Eigen::Lower>().rankUpdate(z.transpose(),
                                                 1.0 / static_cast<double>(t_len));
    g.triangularView<Eigen::StrictlyUpper>() =
        g.triangularView<Eigen::StrictlyLower>().transpose();
    FullEig e = full_eig(ScatterMatrix{std::move(g)});

    EigBasis b;
    b.values = e.values.head(r).cwiseMax(0.0);
    b.vectors.resize(z.rows(), r);
    for (int i = 0; i < r; ++i) {
        double lambda = b.values[i];
        if (lambda > 0.0) {
            // Eigenvector of ZZ'/T with eigenvalue lambda: Z u / ||Z u||,
            // with ||Z u||^2 = T * lambda.
            b.vectors.col(i) = z * e.vectors.col(i) /
                               std::sqrt(lambda * static_cast<double>(t_len));
            continue;
        }
        // Rank-deficient data: the basis beyond the numerical rank is
        // arbitrary, so complete it deterministically from canonical
        // vectors orthogonalized against the accepted columns.
        VectorXd cand = VectorXd::Zero(z.rows());
        bool found = false;
        for (Index pos = 0; pos < z.rows() && !found; ++pos) {
            cand.setZero();
            cand[pos] = 1.0;
            cand -= b.vectors.leftCols(i) *
                    (b.vectors.leftCols(i).transpose() * cand);
            if (cand.norm() > 0.5) {
                b.vectors.col(i) = cand / cand.norm();
                found = true;
            }
        }
        if (!found)
            throw std::runtime_error(
                "top_eigvecs_gram: could not complete a deficient basis");
    }
    fix_signs(b.vectors);
    return b;
}

}  // namespace kronfm
