#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace gptb {

/// Dense square matrix, row-major.
class Matrix {
 public:
  Matrix() = default;
  explicit Matrix(std::size_t n, double fill = 0.0) : n_(n), data_(n * n, fill) {}

  static Matrix identity(std::size_t n);
  static Matrix from_rows(const std::vector<std::vector<double>>& rows);

  std::size_t size() const noexcept { return n_; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * n_ + j]; }
  double& operator()(std::size_t i, std::size_t j) { return data_[i * n_ + j]; }

  std::span<const double> row(std::size_t i) const {
    return {data_.data() + i * n_, n_};
  }
  std::span<const double> data() const noexcept { return data_; }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t n_ = 0;
  std::vector<double> data_;
};

inline constexpr double kSymmetryTolerance = 1e-12;

/// Symmetric, unit-diagonal matrix with entries in [-1, 1]. Positive
/// semi-definiteness is not checked here; cholesky() is the gate for that.
class CorrelationMatrix {
 public:
  /// Validates and exactly symmetrizes `m`. Throws ErrorKind::InvalidMatrix.
  explicit CorrelationMatrix(Matrix m);

  static CorrelationMatrix identity(std::size_t n);
  static CorrelationMatrix equicorrelated(std::size_t n, double r);
  /// r_{jk} = lags[|j-k|]; requires lags.size() >= n and lags[0] == 1.
  static CorrelationMatrix stationary(std::span<const double> lags, std::size_t n);
  /// Normalizes a covariance matrix to unit diagonal.
  static CorrelationMatrix from_covariance(const Matrix& cov);

  std::size_t size() const noexcept { return m_.size(); }
  double operator()(std::size_t i, std::size_t j) const { return m_(i, j); }
  const Matrix& matrix() const noexcept { return m_; }

  /// True when some off-diagonal |r_jk| equals 1.
  bool has_repeated_variables() const;

 private:
  Matrix m_;
};

class CholeskyFactor {
 public:
  explicit CholeskyFactor(Matrix lower) : lower_(std::move(lower)) {}

  std::size_t size() const noexcept { return lower_.size(); }
  const Matrix& lower() const noexcept { return lower_; }

  /// max_{jk} |(L L^T)_{jk} - m_{jk}|
  double max_reconstruction_error(const Matrix& m) const;

 private:
  Matrix lower_;
};

inline constexpr double kCholeskyPivotTolerance = 1e-12;

/// Lower Cholesky factor of m + jitter*I. Throws NotPositiveDefiniteError
/// naming the first pivot <= 1e-12.
CholeskyFactor cholesky(const Matrix& m, double jitter = 0.0);
CholeskyFactor cholesky(const CorrelationMatrix& m, double jitter = 0.0);

}  // namespace gptb
