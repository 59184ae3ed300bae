// SPDX-License-Identifier: MIT
#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <initializer_list>
#include <vector>

namespace kronfm {

using Index = Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Strictly ascending set of mode indices (0-based) of an order-K tensor.
class ModeSet {
public:
    ModeSet(std::vector<int> modes, int order);

    /// The suffix set {first, first+1, ..., order-1}.
    static ModeSet suffix(int first, int order);

    int order() const { return order_; }
    int count() const { return static_cast<int>(modes_.size()); }
    const std::vector<int>& modes() const { return modes_; }
    bool contains(int mode) const;

    /// True when the set is {order-count, ..., order-1}.
    bool is_suffix() const;

private:
    std::vector<int> modes_;
    int order_;
};

/// Dense order-K tensor. The buffer is stored in the canonical
/// linearization with the first index varying fastest, so that the
/// vectorization of the tensor is exactly the buffer. An order-2
/// tensor shares its layout with a column-major matrix.
class Tensor {
public:
    /// Zero tensor of the given extents.
    explicit Tensor(std::vector<Index> dims);
    /// Wrap an existing canonical buffer. Length must match the extents.
    Tensor(std::vector<Index> dims, VectorXd data);

    int order() const { return static_cast<int>(dims_.size()); }
    const std::vector<Index>& dims() const { return dims_; }
    Index dim(int mode) const { return dims_[static_cast<size_t>(mode)]; }
    Index size() const { return data_.size(); }

    const VectorXd& data() const { return data_; }
    VectorXd& data() { return data_; }

    double at(const std::vector<Index>& index) const;
    double& at(const std::vector<Index>& index);

private:
    std::vector<Index> dims_;
    VectorXd data_;
};

/// A length-T series of same-shape tensors. Column t of `data` is the
/// canonical buffer of the t-th tensor.
struct TensorSeries {
    std::vector<Index> dims;
    MatrixXd data;

    static TensorSeries zeros(std::vector<Index> dims, Index len);

    Index length() const { return data.cols(); }
    Index tensor_size() const { return data.rows(); }
    Tensor at(Index t) const;
    void set(Index t, const Tensor& x);
};

/// Mode-k unfolding: d_k x (prod of remaining extents). Column j holds
/// the j-th mode-k fibre; columns are ordered by the canonical
/// linearization of the remaining indices (lowest surviving mode
/// varies fastest).
MatrixXd unfold(const Tensor& x, int mode);

/// Inverse of unfold: the tensor with the given extents whose mode-k
/// unfolding equals `m` exactly.
Tensor fold(const MatrixXd& m, const std::vector<Index>& dims, int mode);

/// Vectorization; the identity on the canonical buffer.
const VectorXd& vec(const Tensor& x);

/// Mode-k product: unfold(result, k) == a * unfold(x, k); extent d_k is
/// replaced by a.rows().
Tensor mode_product(const Tensor& x, const MatrixXd& a, int mode);

/// Kronecker product a (x) b with block (i,j) equal to a(i,j)*b.
/// Refuses to materialize results above kKronMaxEntries entries; large
/// Kronecker operators should be applied in factored form through
/// successive mode products instead.
inline constexpr Index kKronMaxEntries = 10'000'000;
MatrixXd kron(const MatrixXd& a, const MatrixXd& b);

/// Generic mode permutation: mode p of the result is mode perm[p] of
/// the input. `perm` must be a permutation of 0..K-1.
Tensor permute_modes(const Tensor& x, const std::vector<int>& perm);

/// Merge the modes in `a` into a single trailing mode. Surviving modes
/// keep their relative order; within the merged mode the lowest index
/// of `a` varies fastest. Result order is K - |a| + 1.
Tensor reshape(const Tensor& x, const ModeSet& a);

/// Recover the original tensor from reshape(x, a) given the original
/// extents: unreshape(reshape(x, a), dims(x), a) == x exactly.
Tensor unreshape(const Tensor& y, const std::vector<Index>& orig_dims,
                 const ModeSet& a);

// Series-level counterparts; applied per time point.
TensorSeries reshape(const TensorSeries& s, const ModeSet& a);
TensorSeries unreshape(const TensorSeries& s,
                       const std::vector<Index>& orig_dims, const ModeSet& a);
TensorSeries permute_modes(const TensorSeries& s, const std::vector<int>& perm);

namespace detail {
/// Unfold a canonical buffer without constructing a Tensor.
MatrixXd unfold_buffer(const std::vector<Index>& dims,
                       const Eigen::Ref<const VectorXd>& buf, int mode);
/// Scatter an unfolding back into a canonical buffer.
void fold_buffer(const MatrixXd& m, const std::vector<Index>& dims, int mode,
                 Eigen::Ref<VectorXd> out);
/// Buffer permutation used by permute_modes / reshape.
void permute_buffer(const std::vector<Index>& dims,
                    const Eigen::Ref<const VectorXd>& in,
                    const std::vector<int>& perm, Eigen::Ref<VectorXd> out);
std::vector<Index> permuted_dims(const std::vector<Index>& dims,
                                 const std::vector<int>& perm);
/// Modes not in `a`, ascending, followed by the modes of `a`.
std::vector<int> reshape_permutation(const ModeSet& a);
}  // namespace detail

}  // namespace kronfm
