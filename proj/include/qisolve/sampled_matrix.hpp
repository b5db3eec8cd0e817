#pragma once

#include <qisolve/sampled_vector.hpp>

#include <bit>
#include <cmath>
#include <cstring>
#include <vector>

namespace qisolve {

template <typename Scalar>
struct MatrixEntry {
  Index row;
  Index col;
  Scalar value;
};

namespace detail {

inline std::uint64_t bits_of(double v) noexcept {
  if (v == 0.0) v = 0.0;  // fold -0 into +0
  return std::bit_cast<std::uint64_t>(v);
}

template <typename Scalar>
std::uint64_t entry_hash(Index i, Index j, const Scalar& value) noexcept {
  if (value == Scalar(0)) return 0;
  std::uint64_t h = mix64(static_cast<std::uint64_t>(i) * 0x9e3779b97f4a7c15ULL ^ mix64(j));
  if constexpr (std::is_same_v<Scalar, double>) {
    h = mix64(h ^ bits_of(value));
  } else {
    h = mix64(h ^ bits_of(value.real()));
    h = mix64(h ^ (bits_of(value.imag()) * 0xff51afd7ed558ccdULL));
  }
  return h;
}

}  // namespace detail

/**
 * Two-level length-squared sampling structure over an m x n matrix: a tree over the
 * row norms (leaf i holds ||A(i,.)||, root ||A||_F^2) on top of one SampledVector per
 * row. Supports
 *   - sample_row:    i with probability ||A(i,.)||^2 / ||A||_F^2
 *   - sample_in_row: j with probability |A(i,j)|^2 / ||A(i,.)||^2
 * and counted entry / norm queries. With `with_transpose` the same pair of trees is
 * kept for the columns as well.
 *
 * Leaves are stored densely (no sparse compression); space is O(mn).
 */
template <typename Scalar>
class SampledMatrix {
 public:
  using scalar_type = Scalar;
  using Entry = MatrixEntry<Scalar>;

  SampledMatrix() = default;

  SampledMatrix(Index m, Index n, std::span<const Entry> entries, bool with_transpose = false)
      : rows_count_(m), cols_count_(n), with_transpose_(with_transpose) {
    if (m == 0 || n == 0) throw Error(ErrorKind::EmptyVector, "matrix dimensions must be positive");
    std::vector<std::vector<Scalar>> dense(m, std::vector<Scalar>(n, Scalar(0)));
    std::vector<bool> seen(m * n, false);
    for (const auto& e : entries) {
      detail::check_index(e.row, m, "row");
      detail::check_index(e.col, n, "column");
      auto slot = e.row * n + e.col;
      if (seen[slot]) {
        throw Error(ErrorKind::DuplicateEntry, "entry (" + std::to_string(e.row) + ", " +
                                                   std::to_string(e.col) + ") given twice");
      }
      seen[slot] = true;
      dense[e.row][e.col] = e.value;
    }
    build([&](Index i, Index j) { return dense[i][j]; });
  }

  template <typename Derived>
  static SampledMatrix from_dense(const Eigen::MatrixBase<Derived>& a, bool with_transpose = false) {
    SampledMatrix out;
    out.rows_count_ = static_cast<Index>(a.rows());
    out.cols_count_ = static_cast<Index>(a.cols());
    out.with_transpose_ = with_transpose;
    if (out.rows_count_ == 0 || out.cols_count_ == 0) {
      throw Error(ErrorKind::EmptyVector, "matrix dimensions must be positive");
    }
    out.build([&](Index i, Index j) -> Scalar {
      return a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    });
    return out;
  }

  /// Builds from a callable value_at(i, j) without materializing a dense copy.
  template <typename ValueAt>
  static SampledMatrix from_function(Index m, Index n, ValueAt&& value_at, bool with_transpose = false) {
    if (m == 0 || n == 0) throw Error(ErrorKind::EmptyVector, "matrix dimensions must be positive");
    SampledMatrix out;
    out.rows_count_ = m;
    out.cols_count_ = n;
    out.with_transpose_ = with_transpose;
    out.build([&](Index i, Index j) -> Scalar { return value_at(i, j); });
    return out;
  }

  Index rows() const noexcept { return rows_count_; }
  Index cols() const noexcept { return cols_count_; }
  bool has_transpose() const noexcept { return with_transpose_; }

  Scalar entry(Index i, Index j) const {
    detail::check_index(i, rows_count_, "row");
    detail::check_index(j, cols_count_, "column");
    ledger_.count_entry();
    return rows_[i].raw_value(j);
  }

  double row_norm(Index i) const {
    detail::check_index(i, rows_count_, "row");
    ledger_.count_norm();
    return std::sqrt(rows_[i].raw_norm_sq());
  }

  /// Squared row norm; one norm query.
  double row_norm_sq(Index i) const {
    detail::check_index(i, rows_count_, "row");
    ledger_.count_norm();
    return rows_[i].raw_norm_sq();
  }

  double frobenius_sq() const noexcept {
    ledger_.count_norm();
    return row_norms_.raw_norm_sq();
  }

  Index sample_row(Rng& rng) const {
    ledger_.count_sample();
    if (!(row_norms_.raw_norm_sq() > 0.0)) {
      throw Error(ErrorKind::ZeroNormSample, "sampling a row of a zero matrix");
    }
    return row_norms_.raw_sample(rng);
  }

  Index sample_in_row(Index i, Rng& rng) const {
    detail::check_index(i, rows_count_, "row");
    ledger_.count_sample();
    return rows_[i].raw_sample(rng);
  }

  double column_norm(Index j) const {
    require_transpose();
    detail::check_index(j, cols_count_, "column");
    ledger_.count_norm();
    return std::sqrt(cols_[j].raw_norm_sq());
  }

  Index sample_column(Rng& rng) const {
    require_transpose();
    ledger_.count_sample();
    if (!(col_norms_.raw_norm_sq() > 0.0)) {
      throw Error(ErrorKind::ZeroNormSample, "sampling a column of a zero matrix");
    }
    return col_norms_.raw_sample(rng);
  }

  Index sample_in_column(Index j, Rng& rng) const {
    require_transpose();
    detail::check_index(j, cols_count_, "column");
    ledger_.count_sample();
    return cols_[j].raw_sample(rng);
  }

  /// O(log n) update of one stored entry and the norm trees above it.
  void write(Index i, Index j, Scalar value) {
    detail::check_index(i, rows_count_, "row");
    detail::check_index(j, cols_count_, "column");
    digest_ ^= detail::entry_hash(i, j, rows_[i].raw_value(j)) ^ detail::entry_hash(i, j, value);
    rows_[i].write(j, value);
    row_norms_.write(i, std::sqrt(rows_[i].raw_norm_sq()));
    if (with_transpose_) {
      cols_[j].write(i, value);
      col_norms_.write(j, std::sqrt(cols_[j].raw_norm_sq()));
    }
  }

  /// Recomputes every tree from the stored values, discarding accumulated rounding.
  void rebuild() {
    for (Index i = 0; i < rows_count_; ++i) {
      rows_[i].rebuild();
      row_norms_.write(i, std::sqrt(rows_[i].raw_norm_sq()));
    }
    row_norms_.rebuild();
    if (with_transpose_) {
      for (Index j = 0; j < cols_count_; ++j) {
        cols_[j].rebuild();
        col_norms_.write(j, std::sqrt(cols_[j].raw_norm_sq()));
      }
      col_norms_.rebuild();
    }
  }

  const SampledVector<Scalar>& row(Index i) const { return rows_.at(i); }
  const SampledVector<double>& row_norm_tree() const noexcept { return row_norms_; }
  const SampledVector<double>& column_norm_tree() const {
    require_transpose();
    return col_norms_;
  }

  /// Order-independent content hash of the nonzero entries; maintained on write.
  std::uint64_t digest() const noexcept { return digest_; }

  QueryLedger& ledger() const noexcept { return ledger_; }

  /// Uncounted dense copy (oracle / test use).
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> to_dense() const {
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> out(rows_count_, cols_count_);
    for (Index i = 0; i < rows_count_; ++i) {
      for (Index j = 0; j < cols_count_; ++j) {
        out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows_[i].raw_value(j);
      }
    }
    return out;
  }

 private:
  void require_transpose() const {
    if (!with_transpose_) {
      throw Error(ErrorKind::Config, "column access requires building with_transpose");
    }
  }

  template <typename ValueAt>
  void build(ValueAt&& value_at) {
    rows_.reserve(rows_count_);
    std::vector<double> norms(rows_count_);
    std::vector<Scalar> row(cols_count_);
    for (Index i = 0; i < rows_count_; ++i) {
      for (Index j = 0; j < cols_count_; ++j) {
        row[j] = value_at(i, j);
        digest_ ^= detail::entry_hash(i, j, row[j]);
      }
      rows_.emplace_back(std::span<const Scalar>(row));
      norms[i] = std::sqrt(rows_.back().raw_norm_sq());
    }
    row_norms_ = SampledVector<double>(std::span<const double>(norms));
    if (with_transpose_) {
      std::vector<Scalar> column(rows_count_);
      std::vector<double> cnorms(cols_count_);
      cols_.reserve(cols_count_);
      for (Index j = 0; j < cols_count_; ++j) {
        for (Index i = 0; i < rows_count_; ++i) column[i] = rows_[i].raw_value(j);
        cols_.emplace_back(std::span<const Scalar>(column));
        cnorms[j] = std::sqrt(cols_.back().raw_norm_sq());
      }
      col_norms_ = SampledVector<double>(std::span<const double>(cnorms));
    }
  }

  Index rows_count_ = 0;
  Index cols_count_ = 0;
  bool with_transpose_ = false;
  std::vector<SampledVector<Scalar>> rows_;
  SampledVector<double> row_norms_;
  std::vector<SampledVector<Scalar>> cols_;
  SampledVector<double> col_norms_;
  std::uint64_t digest_ = 0;
  mutable QueryLedger ledger_;
};

using ComplexSampledMatrix = SampledMatrix<Complex>;
using ComplexSampledVector = SampledVector<Complex>;

}  // namespace qisolve
