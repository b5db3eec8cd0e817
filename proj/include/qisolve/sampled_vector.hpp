#pragma once

#include <qisolve/ledger.hpp>
#include <qisolve/random.hpp>
#include <qisolve/types.hpp>

#include <bit>
#include <span>
#include <vector>

namespace qisolve {

/**
 * Binary sum-tree over a vector supporting O(log n) entry writes and exact
 * length-squared sampling, i.e. index i is drawn with probability |v(i)|^2 / ||v||^2.
 *
 * Layout is an implicit complete binary tree over the length padded to the next power
 * of two: node 1 is the root, node c has children 2c and 2c+1, and leaf i lives at
 * node `capacity + i` holding |v(i)|^2. Padding leaves hold 0. Stored values are kept
 * alongside so reads return exactly what was written.
 *
 * Public accessors (`read`, `norm_sq`, `sample`) are counted in the vector's
 * QueryLedger; the `raw_*` variants are uncounted and exist for composite structures
 * that do their own accounting.
 */
template <typename Scalar>
class SampledVector {
 public:
  using scalar_type = Scalar;

  SampledVector() = default;

  explicit SampledVector(std::span<const Scalar> values) { assign(values); }

  template <typename Derived>
  static SampledVector from_dense(const Eigen::MatrixBase<Derived>& v) {
    std::vector<Scalar> tmp(static_cast<std::size_t>(v.size()));
    for (Eigen::Index i = 0; i < v.size(); ++i) tmp[static_cast<std::size_t>(i)] = v(i);
    return SampledVector(std::span<const Scalar>(tmp));
  }

  /// Zero vector of the given length.
  static SampledVector zeros(Index n) {
    std::vector<Scalar> tmp(n, Scalar(0));
    return SampledVector(std::span<const Scalar>(tmp));
  }

  Index size() const noexcept { return values_.size(); }
  Index capacity() const noexcept { return capacity_; }

  Scalar read(Index i) const {
    detail::check_index(i, size(), "vector");
    ledger_.count_entry();
    return values_[i];
  }

  void write(Index i, Scalar value, std::size_t* visits = nullptr) {
    detail::check_index(i, size(), "vector");
    values_[i] = value;
    Index node = capacity_ + i;
    tree_[node] = detail::abs2(value);
    std::size_t touched = 1;
    while (node > 1) {
      node >>= 1;
      tree_[node] = tree_[2 * node] + tree_[2 * node + 1];
      touched += 2;  // parent plus the sibling read to form it
    }
    if (visits) *visits = touched;
  }

  double norm_sq() const noexcept {
    ledger_.count_norm();
    return tree_[1];
  }

  Index sample(Rng& rng, std::size_t* visits = nullptr) const {
    ledger_.count_sample();
    return raw_sample(rng, visits);
  }

  const Scalar& raw_value(Index i) const noexcept { return values_[i]; }
  double raw_norm_sq() const noexcept { return tree_[1]; }
  double leaf_weight(Index i) const noexcept { return tree_[capacity_ + i]; }
  /// Sum stored at an internal node (1 = root).
  double node(Index id) const noexcept { return tree_[id]; }

  /// Draws an index from D_v by descending from the root, branching left or right
  /// proportionally to the children's sums. Throws ZeroNormSample on a zero vector.
  Index raw_sample(Rng& rng, std::size_t* visits = nullptr) const {
    double total = tree_[1];
    if (!(total > 0.0)) throw Error(ErrorKind::ZeroNormSample, "sampling from a zero vector");
    double u = uniform01(rng) * total;
    Index node = 1;
    std::size_t touched = 1;
    while (node < capacity_) {
      const double left = tree_[2 * node];
      const double right = tree_[2 * node + 1];
      touched += 1;
      if (u < left || !(right > 0.0)) {
        node = 2 * node;
      } else {
        u -= left;
        node = 2 * node + 1;
      }
    }
    if (visits) *visits = touched;
    Index leaf = node - capacity_;
    // A degenerate all-zero subtree (rounding only) may land on padding; clamp.
    return leaf < size() ? leaf : size() - 1;
  }

  /// Recomputes every leaf and internal sum from the stored values.
  void rebuild() {
    for (Index i = 0; i < size(); ++i) tree_[capacity_ + i] = detail::abs2(values_[i]);
    for (Index node = capacity_ - 1; node >= 1; --node) {
      tree_[node] = tree_[2 * node] + tree_[2 * node + 1];
    }
  }

  std::span<const Scalar> values() const noexcept { return values_; }

  QueryLedger& ledger() const noexcept { return ledger_; }

 private:
  void assign(std::span<const Scalar> values) {
    if (values.empty()) throw Error(ErrorKind::EmptyVector, "cannot build a sampled vector of length 0");
    values_.assign(values.begin(), values.end());
    capacity_ = std::bit_ceil(values_.size());
    tree_.assign(2 * capacity_, 0.0);
    rebuild();
  }

  std::vector<Scalar> values_;
  std::vector<double> tree_;  // tree_[0] unused
  Index capacity_ = 0;
  mutable QueryLedger ledger_;
};

}  // namespace qisolve
