#pragma once

#include <Eigen/Dense>

#include <complex>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace qisolve {

using Index = std::size_t;
using Complex = std::complex<double>;

using CMatrix = Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic>;
using CVector = Eigen::Matrix<Complex, Eigen::Dynamic, 1>;
using RMatrix = Eigen::MatrixXd;
using RVector = Eigen::VectorXd;

/// Failure classes raised by the library. Every thrown qisolve::Error carries one.
enum class ErrorKind {
  EmptyVector,
  IndexError,
  ZeroNormSample,
  DuplicateEntry,
  NonfiniteSample,
  IterationCapExceeded,
  RankDeficientSketch,
  DimensionTooLarge,
  EstimatorFailure,
  ZeroSolution,
  NotPSD,
  Config,
  Parse,
  Io,
};

const char* to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

namespace detail {

inline void check_index(Index i, Index n, const char* what) {
  if (i >= n) {
    throw Error(ErrorKind::IndexError,
                std::string(what) + " index " + std::to_string(i) + " out of range [0, " +
                    std::to_string(n) + ")");
  }
}

inline double abs2(double v) noexcept { return v * v; }
inline double abs2(const Complex& v) noexcept { return std::norm(v); }

}  // namespace detail
}  // namespace qisolve
