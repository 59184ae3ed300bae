// SPDX-License-Identifier: MIT
#include "kronfm/tensor.hpp"

#include <numeric>
#include <stdexcept>
#include <string>

namespace kronfm {

namespace {

Index checked_size(const std::vector<Index>& dims) {
    if (dims.empty()) throw std::invalid_argument("tensor order must be >= 1");
    Index n = 1;
    for (Index d : dims) {
        if (d < 1) throw std::invalid_argument("tensor extents must be >= 1");
        n *= d;
    }
    return n;
}

void check_mode(const std::vector<Index>& dims, int mode) {
    if (mode < 0 || mode >= static_cast<int>(dims.size()))
        throw std::invalid_argument("mode index " + std::to_string(mode) +
                                    " out of range for order " +
                                    std::to_string(dims.size()));
}

}  // namespace

ModeSet::ModeSet(std::vector<int> modes, int order)
    : modes_(std::move(modes)), order_(order) {
    if (order_ < 1) throw std::invalid_argument("mode set: order must be >= 1");
    if (modes_.empty()) throw std::invalid_argument("mode set must be nonempty");
    for (size_t i = 0; i < modes_.size(); ++i) {
        if (modes_[i] < 0 || modes_[i] >= order_)
            throw std::invalid_argument("mode set entry out of range");
        if (i > 0 && modes_[i] <= modes_[i - 1])
            throw std::invalid_argument("mode set must be strictly ascending");
    }
}

ModeSet ModeSet::suffix(int first, int order) {
    std::vector<int> m;
    for (int k = first; k < order; ++k) m.push_back(k);
    return ModeSet(std::move(m), order);
}

bool ModeSet::contains(int mode) const {
    for (int m : modes_)
        if (m == mode) return true;
    return false;
}

bool ModeSet::is_suffix() const { return modes_.front() == order_ - count(); }

Tensor::Tensor(std::vector<Index> dims) : dims_(std::move(dims)) {
    data_ = VectorXd::Zero(checked_size(dims_));
}

Tensor::Tensor(std::vector<Index> dims, VectorXd data)
    : dims_(std::move(dims)), data_(std::move(data)) {
    if (checked_size(dims_) != data_.size())
        throw std::invalid_argument("tensor buffer length does not match extents");
}

double Tensor::at(const std::vector<Index>& index) const {
    return const_cast<Tensor*>(this)->at(index);
}

double& Tensor::at(const std::vector<Index>& index) {
    if (index.size() != dims_.size())
        throw std::invalid_argument("index order mismatch");
    Index pos = 0, stride = 1;
    for (size_t k = 0; k < dims_.size(); ++k) {
        if (index[k] < 0 || index[k] >= dims_[k])
            throw std::invalid_argument("tensor index out of range");
        pos += index[k] * stride;
        stride *= dims_[k];
    }
    return data_[pos];
}

TensorSeries TensorSeries::zeros(std::vector<Index> dims, Index len) {
    TensorSeries s;
    Index n = checked_size(dims);
    s.dims = std::move(dims);
    s.data = MatrixXd::Zero(n, len);
    return s;
}

Tensor TensorSeries::at(Index t) const { return Tensor(dims, data.col(t)); }

void TensorSeries::set(Index t, const Tensor& x) {
    if (x.dims() != dims)
        throw std::invalid_argument("series/tensor shape mismatch");
    data.col(t) = x.data();
}

namespace detail {

MatrixXd unfold_buffer(const std::vector<Index>& dims,
                       const Eigen::Ref<const VectorXd>& buf, int mode) {
    check_mode(dims, mode);
    Index dk = dims[static_cast<size_t>(mode)];
    Index inner = 1;  // product of extents below `mode`
    for (int k = 0; k < mode; ++k) inner *= dims[static_cast<size_t>(k)];
    Index outer = buf.size() / (inner * dk);

    MatrixXd m(dk, buf.size() / dk);
    // Buffer layout: [inner, dk, outer]; column index of entry
    // (q, i, o) is o*inner + q.
    for (Index o = 0; o < outer; ++o)
        for (Index i = 0; i < dk; ++i)
            for (Index q = 0; q < inner; ++q)
                m(i, o * inner + q) = buf[(o * dk + i) * inner + q];
    return m;
}

void fold_buffer(const MatrixXd& m, const std::vector<Index>& dims, int mode,
                 Eigen::Ref<VectorXd> out) {
    Index dk = dims[static_cast<size_t>(mode)];
    Index inner = 1;
    for (int k = 0; k < mode; ++k) inner *= dims[static_cast<size_t>(k)];
    Index outer = out.size() / (inner * dk);
    for (Index o = 0; o < outer; ++o)
        for (Index i = 0; i < dk; ++i)
            for (Index q = 0; q < inner; ++q)
                out[(o * dk + i) * inner + q] = m(i, o * inner + q);
}

void permute_buffer(const std::vector<Index>& dims,
                    const Eigen::Ref<const VectorXd>& in,
                    const std::vector<int>& perm, Eigen::Ref<VectorXd> out) {
    int order = static_cast<int>(dims.size());
    // Output stride attached to each *input* mode: out mode p draws from
    // input mode perm[p], so input mode perm[p] advances by the stride of
    // output mode p.
    std::vector<Index> out_stride_of_in(static_cast<size_t>(order), 0);
    Index stride = 1;
    for (int p = 0; p < order; ++p) {
        out_stride_of_in[static_cast<size_t>(perm[static_cast<size_t>(p)])] =
            stride;
        stride *= dims[static_cast<size_t>(perm[static_cast<size_t>(p)])];
    }
    std::vector<Index> idx(static_cast<size_t>(order), 0);
    Index out_pos = 0;
    for (Index p = 0; p < in.size(); ++p) {
        out[out_pos] = in[p];
        // Odometer step over the input index, keeping out_pos in sync.
        for (int k = 0; k < order; ++k) {
            idx[static_cast<size_t>(k)]++;
            out_pos += out_stride_of_in[static_cast<size_t>(k)];
            if (idx[static_cast<size_t>(k)] < dims[static_cast<size_t>(k)]) break;
            out_pos -= out_stride_of_in[static_cast<size_t>(k)] *
                       dims[static_cast<size_t>(k)];
            idx[static_cast<size_t>(k)] = 0;
        }
    }
}

std::vector<Index> permuted_dims(const std::vector<Index>& dims,
                                 const std::vector<int>& perm) {
    std::vector<Index> out(dims.size());
    for (size_t p = 0; p < dims.size(); ++p)
        out[p] = dims[static_cast<size_t>(perm[p])];
    return out;
}

std::vector<int> reshape_permutation(const ModeSet& a) {
    std::vector<int> perm;
    for (int k = 0; k < a.order(); ++k)
        if (!a.contains(k)) perm.push_back(k);
    for (int m : a.modes()) perm.push_back(m);
    return perm;
}

}  // namespace detail

MatrixXd unfold(const Tensor& x, int mode) {
    return detail::unfold_buffer(x.dims(), x.data(), mode);
}

Tensor fold(const MatrixXd& m, const std::vector<Index>& dims, int mode) {
    check_mode(dims, mode);
    Index n = checked_size(dims);
    Index dk = dims[static_cast<size_t>(mode)];
    if (m.rows() != dk || m.cols() != n / dk)
        throw std::invalid_argument("fold: matrix shape does not match extents");
    Tensor out(dims);
    detail::fold_buffer(m, dims, mode, out.data());
    return out;
}

const VectorXd& vec(const Tensor& x) { return x.data(); }

Tensor mode_product(const Tensor& x, const MatrixXd& a, int mode) {
    check_mode(x.dims(), mode);
    if (a.cols() != x.dim(mode))
        throw std::invalid_argument("mode_product: inner dimension mismatch");
    MatrixXd prod = a * unfold(x, mode);
    std::vector<Index> dims = x.dims();
    dims[static_cast<size_t>(mode)] = a.rows();
    return fold(prod, dims, mode);
}

MatrixXd kron(const MatrixXd& a, const MatrixXd& b) {
    Index rows = a.rows() * b.rows(), cols = a.cols() * b.cols();
    if (rows * cols > kKronMaxEntries)
        throw std::length_error("kron: result exceeds materialization cap");
    MatrixXd out(rows, cols);
    for (Index i = 0; i < a.rows(); ++i)
        for (Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) =
                a(i, j) * b;
    return out;
}

Tensor permute_modes(const Tensor& x, const std::vector<int>& perm) {
    int order = x.order();
    if (static_cast<int>(perm.size()) != order)
        throw std::invalid_argument("permute_modes: permutation length mismatch");
    std::vector<bool> seen(static_cast<size_t>(order), false);
    for (int p : perm) {
        if (p < 0 || p >= order || seen[static_cast<size_t>(p)])
            throw std::invalid_argument("permute_modes: not a permutation");
        seen[static_cast<size_t>(p)] = true;
    }
    VectorXd out(x.size());
    detail::permute_buffer(x.dims(), x.data(), perm, out);
    return Tensor(detail::permuted_dims(x.dims(), perm), std::move(out));
}

Tensor reshape(const Tensor& x, const ModeSet& a) {
    if (a.order() != x.order())
        throw std::invalid_argument("reshape: mode set order mismatch");
    // Moving the merged modes to the back (ascending) makes the merge a
    // pure reinterpretation of the trailing extents: the canonical
    // linearization of the trailing block equals the merged index with
    // the lowest merged mode varying fastest.
    std::vector<int> perm = detail::reshape_permutation(a);
    Tensor moved = permute_modes(x, perm);
    std::vector<Index> out_dims(moved.dims().begin(),
                                moved.dims().end() - a.count());
    Index merged = 1;
    for (int m : a.modes()) merged *= x.dim(m);
    out_dims.push_back(merged);
    VectorXd buf = std::move(moved.data());
    return Tensor(std::move(out_dims), std::move(buf));
}

Tensor unreshape(const Tensor& y, const std::vector<Index>& orig_dims,
                 const ModeSet& a) {
    if (a.order() != static_cast<int>(orig_dims.size()))
        throw std::invalid_argument("unreshape: mode set order mismatch");
    std::vector<int> perm = detail::reshape_permutation(a);
    std::vector<Index> moved_dims = detail::permuted_dims(orig_dims, perm);

    // Validate the reshaped extents against the claimed originals.
    std::vector<Index> expect(moved_dims.begin(), moved_dims.end() - a.count());
    Index merged = 1;
    for (int m : a.modes()) merged *= orig_dims[static_cast<size_t>(m)];
    expect.push_back(merged);
    if (y.dims() != expect)
        throw std::invalid_argument(
            "unreshape: extents inconsistent with original dims and mode set");

    Tensor moved(moved_dims, y.data());
    std::vector<int> inverse(perm.size());
    for (size_t p = 0; p < perm.size(); ++p)
        inverse[static_cast<size_t>(perm[p])] = static_cast<int>(p);
    return permute_modes(moved, inverse);
}

TensorSeries reshape(const TensorSeries& s, const ModeSet& a) {
    TensorSeries out;
    Tensor first = reshape(s.at(0), a);
    out.dims = first.dims();
    out.data.resize(s.tensor_size(), s.length());
    out.data.col(0) = first.data();
    for (Index t = 1; t < s.length(); ++t)
        out.data.col(t) = reshape(s.at(t), a).data();
    return out;
}

TensorSeries unreshape(const TensorSeries& s,
                       const std::vector<Index>& orig_dims, const ModeSet& a) {
    TensorSeries out;
    out.dims = orig_dims;
    out.data.resize(s.tensor_size(), s.length());
    for (Index t = 0; t < s.length(); ++t)
        out.data.col(t) = unreshape(s.at(t), orig_dims, a).data();
    return out;
}

TensorSeries permute_modes(const TensorSeries& s, const std::vector<int>& perm) {
    TensorSeries out;
    out.dims = detail::permuted_dims(s.dims, perm);
    out.data.resize(s.tensor_size(), s.length());
    for (Index t = 0; t < s.length(); ++t)
        out.data.col(t) = permute_modes(s.at(t), perm).data();
    return out;
}

}  // namespace kronfm
