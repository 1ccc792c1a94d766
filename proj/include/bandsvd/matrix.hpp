#ifndef BANDSVD_MATRIX_HPP
#define BANDSVD_MATRIX_HPP

#include <cmath>
#include <span>
#include <string>
#include <type_traits>
#include <utility>

#include <Eigen/Core>

#include "bandsvd/errors.hpp"
#include "bandsvd/precision.hpp"

namespace bandsvd {

template <typename S>
using Storage = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor>;

// Column-major dense matrix in a storage precision. Element (r, c) lives at
// data()[c * rows() + r]. orig_n() remembers the logical size before the
// matrix was padded up to a whole number of tiles.
template <typename S>
class DenseMatrix {
 public:
  using Scalar = S;

  DenseMatrix() = default;
  DenseMatrix(Index rows, Index cols) : data_(Storage<S>::Zero(rows, cols)), orig_n_(rows) {}
  explicit DenseMatrix(Storage<S> m) : data_(std::move(m)), orig_n_(data_.rows()) {}

  static DenseMatrix zero(Index rows, Index cols) { return DenseMatrix(rows, cols); }

  Index rows() const { return data_.rows(); }
  Index cols() const { return data_.cols(); }
  Index size() const { return data_.size(); }
  bool is_square() const { return rows() == cols(); }

  Index orig_n() const { return orig_n_; }
  void set_orig_n(Index n) { orig_n_ = n; }

  S& operator()(Index r, Index c) { return data_(r, c); }
  const S& operator()(Index r, Index c) const { return data_(r, c); }

  S* data() { return data_.data(); }
  const S* data() const { return data_.data(); }
  std::span<S> span() { return {data_.data(), static_cast<std::size_t>(data_.size())}; }
  std::span<const S> span() const {
    return {data_.data(), static_cast<std::size_t>(data_.size())};
  }

  Storage<S>& eigen() { return data_; }
  const Storage<S>& eigen() const { return data_; }

  /// Copy converted to another storage precision (rounds on narrowing).
  template <typename T>
  DenseMatrix<T> cast() const {
    DenseMatrix<T> out(data_.template cast<T>().eval());
    out.set_orig_n(orig_n_);
    return out;
  }

  /// Copy widened to double, for oracles and diagnostics.
  Eigen::MatrixXd to_double() const { return data_.template cast<double>(); }

 private:
  Storage<S> data_;
  Index orig_n_ = 0;
};

// Strided window onto a DenseMatrix. No data is owned or moved: a transposed
// view swaps the roles of rows and columns at index level only. Offsets are
// recorded in base coordinates, so view(i, j) reads
//   base(row_offset + i, col_offset + j)   when not transposed,
//   base(row_offset + j, col_offset + i)   when transposed.
template <typename S>
class MatrixView {
 public:
  using Scalar = S;

  MatrixView() = default;

  MatrixView(S* base, Index ld, Index row_offset, Index col_offset, Index rows, Index cols,
             bool transposed)
      : base_(base),
        ld_(ld),
        row_offset_(row_offset),
        col_offset_(col_offset),
        rows_(rows),
        cols_(cols),
        transposed_(transposed) {
    origin_ = base_ + row_offset_ + col_offset_ * ld_;
    row_stride_ = transposed_ ? ld_ : 1;
    col_stride_ = transposed_ ? 1 : ld_;
  }

  // MatrixView<T> -> MatrixView<const T>
  template <typename U, typename = std::enable_if_t<std::is_same_v<const U, S> &&
                                                    !std::is_same_v<U, S>>>
  MatrixView(const MatrixView<U>& other)  // NOLINT(google-explicit-constructor)
      : MatrixView(other.base(), other.ld(), other.row_offset(), other.col_offset(),
                   other.rows(), other.cols(), other.transposed()) {}

  S& operator()(Index i, Index j) const { return origin_[i * row_stride_ + j * col_stride_]; }

  Index rows() const { return rows_; }
  Index cols() const { return cols_; }
  bool transposed() const { return transposed_; }
  Index row_offset() const { return row_offset_; }
  Index col_offset() const { return col_offset_; }
  Index ld() const { return ld_; }
  S* base() const { return base_; }

  /// Sub-window starting at view-local (i, j).
  MatrixView block(Index i, Index j, Index rows, Index cols) const {
    if (i < 0 || j < 0 || rows < 0 || cols < 0 || i + rows > rows_ || j + cols > cols_) {
      throw RangeError("block (" + std::to_string(i) + ", " + std::to_string(j) + ") of size " +
                       std::to_string(rows) + "x" + std::to_string(cols) +
                       " exceeds a view of size " + std::to_string(rows_) + "x" +
                       std::to_string(cols_));
    }
    if (transposed_) {
      return MatrixView(base_, ld_, row_offset_ + j, col_offset_ + i, rows, cols, true);
    }
    return MatrixView(base_, ld_, row_offset_ + i, col_offset_ + j, rows, cols, false);
  }

  MatrixView transpose() const {
    return MatrixView(base_, ld_, row_offset_, col_offset_, cols_, rows_, !transposed_);
  }

 private:
  S* base_ = nullptr;
  S* origin_ = nullptr;
  Index ld_ = 0;
  Index row_offset_ = 0;
  Index col_offset_ = 0;
  Index rows_ = 0;
  Index cols_ = 0;
  Index row_stride_ = 1;
  Index col_stride_ = 0;
  bool transposed_ = false;
};

template <typename S>
MatrixView<S> view(DenseMatrix<S>& m) {
  return MatrixView<S>(m.data(), m.rows(), 0, 0, m.rows(), m.cols(), false);
}

template <typename S>
MatrixView<const S> view(const DenseMatrix<S>& m) {
  return MatrixView<const S>(m.data(), m.rows(), 0, 0, m.rows(), m.cols(), false);
}

template <typename S>
MatrixView<S> transpose(MatrixView<S> v) {
  return v.transpose();
}

/// The ts x ts tile at block position (tile_row, tile_col), zero-based.
template <typename S>
MatrixView<S> tile_view(MatrixView<S> m, Index tile_row, Index tile_col, Index ts) {
  if (ts <= 0 || m.rows() % ts != 0 || m.cols() % ts != 0) {
    throw ShapeError("view of size " + std::to_string(m.rows()) + "x" +
                     std::to_string(m.cols()) + " is not a whole number of " +
                     std::to_string(ts) + "x" + std::to_string(ts) + " tiles");
  }
  const Index tile_rows = m.rows() / ts;
  const Index tile_cols = m.cols() / ts;
  if (tile_row < 0 || tile_row >= tile_rows || tile_col < 0 || tile_col >= tile_cols) {
    throw RangeError("tile (" + std::to_string(tile_row) + ", " + std::to_string(tile_col) +
                     ") outside a " + std::to_string(tile_rows) + "x" +
                     std::to_string(tile_cols) + " tile grid");
  }
  return m.block(tile_row * ts, tile_col * ts, ts, ts);
}

template <typename S>
MatrixView<S> tile_view(DenseMatrix<S>& m, Index tile_row, Index tile_col, Index ts) {
  return tile_view(view(m), tile_row, tile_col, ts);
}

/// Zero-pads a square matrix up to the next multiple of ts. Already aligned
/// input is returned as is.
template <typename S>
DenseMatrix<S> pad_to_tiles(DenseMatrix<S> m, Index ts) {
  if (!m.is_square()) {
    throw ShapeError("matrix must be square, got " + std::to_string(m.rows()) + "x" +
                     std::to_string(m.cols()));
  }
  if (ts <= 0) throw ShapeError("tile size must be positive");
  const Index n = m.rows();
  const Index padded = ((n + ts - 1) / ts) * ts;
  if (padded == n && n > 0) return m;
  DenseMatrix<S> out(padded, padded);
  out.eigen().topLeftCorner(n, n) = m.eigen();
  out.set_orig_n(n);
  return out;
}

/// True when every entry is finite.
template <typename S>
bool all_finite(const DenseMatrix<S>& m) {
  for (const S& v : m.span()) {
    if (!std::isfinite(static_cast<double>(v))) return false;
  }
  return true;
}

enum class Side : int { rq = 0, lq = 1 };

// Normalized Householder coefficients, one column of length ts per
// (sweep k, tile l, side) slot. Column index = (k * nbtiles + l) * 2 + side.
template <typename S>
class TauStore {
 public:
  TauStore() = default;
  TauStore(Index ts, Index nbtiles)
      : ts_(ts), nbtiles_(nbtiles), values_(Storage<S>::Zero(ts, 2 * nbtiles * nbtiles)) {}

  Index tilesize() const { return ts_; }
  Index nbtiles() const { return nbtiles_; }

  Index slot(Index k, Index l, Side side) const {
    if (k < 0 || k >= nbtiles_ || l < 0 || l >= nbtiles_) {
      throw RangeError("tau slot (" + std::to_string(k) + ", " + std::to_string(l) +
                       ") outside " + std::to_string(nbtiles_) + " tiles");
    }
    return (k * nbtiles_ + l) * 2 + static_cast<Index>(side);
  }

  std::span<S> column(Index slot) {
    return {values_.col(slot).data(), static_cast<std::size_t>(ts_)};
  }
  std::span<const S> column(Index slot) const {
    return {values_.col(slot).data(), static_cast<std::size_t>(ts_)};
  }
  std::span<S> column(Index k, Index l, Side side) { return column(slot(k, l, side)); }
  std::span<const S> column(Index k, Index l, Side side) const {
    return column(slot(k, l, side));
  }

  const Storage<S>& values() const { return values_; }

 private:
  Index ts_ = 0;
  Index nbtiles_ = 0;
  Storage<S> values_;
};

}  // namespace bandsvd

#endif  // BANDSVD_MATRIX_HPP
