#include "gptb/core/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "gptb/error.hpp"

namespace gptb {

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::from_rows(const std::vector<std::vector<double>>& rows) {
  Matrix m(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != rows.size()) {
      std::ostringstream os;
      os << "row " << i << " has " << rows[i].size() << " entries, expected " << rows.size();
      throw Error(ErrorKind::InvalidMatrix, os.str());
    }
    std::copy(rows[i].begin(), rows[i].end(), m.data_.begin() + static_cast<std::ptrdiff_t>(i * m.n_));
  }
  return m;
}

CorrelationMatrix::CorrelationMatrix(Matrix m) : m_(std::move(m)) {
  const std::size_t n = m_.size();
  if (n == 0) throw Error(ErrorKind::InvalidMatrix, "correlation matrix must have n >= 1");
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (!std::isfinite(m_(i, j))) {
        std::ostringstream os;
        os << "entry (" << i << "," << j << ") is not finite";
        throw Error(ErrorKind::InvalidMatrix, os.str());
      }
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (std::abs(m_(i, i) - 1.0) > kSymmetryTolerance) {
      std::ostringstream os;
      os << "diagonal entry " << i << " is " << m_(i, i) << ", expected 1";
      throw Error(ErrorKind::InvalidMatrix, os.str());
    }
    m_(i, i) = 1.0;
    for (std::size_t j = i + 1; j < n; ++j) {
      const double a = m_(i, j);
      const double b = m_(j, i);
      if (std::abs(a - b) > kSymmetryTolerance) {
        std::ostringstream os;
        os << "asymmetric at (" << i << "," << j << "): " << a << " vs " << b;
        throw Error(ErrorKind::InvalidMatrix, os.str());
      }
      const double r = 0.5 * (a + b);
      if (std::abs(r) > 1.0) {
        std::ostringstream os;
        os << "correlation (" << i << "," << j << ") = " << r << " outside [-1, 1]";
        throw Error(ErrorKind::InvalidMatrix, os.str());
      }
      m_(i, j) = r;
      m_(j, i) = r;
    }
  }
}

CorrelationMatrix CorrelationMatrix::identity(std::size_t n) {
  return CorrelationMatrix(Matrix::identity(n));
}

CorrelationMatrix CorrelationMatrix::equicorrelated(std::size_t n, double r) {
  Matrix m(n, r);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return CorrelationMatrix(std::move(m));
}

CorrelationMatrix CorrelationMatrix::stationary(std::span<const double> lags, std::size_t n) {
  if (lags.size() < n) {
    std::ostringstream os;
    os << "stationary sequence has " << lags.size() << " lags, need " << n;
    throw Error(ErrorKind::InvalidMatrix, os.str());
  }
  Matrix m(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) m(i, j) = lags[i > j ? i - j : j - i];
  }
  return CorrelationMatrix(std::move(m));
}

CorrelationMatrix CorrelationMatrix::from_covariance(const Matrix& cov) {
  const std::size_t n = cov.size();
  std::vector<double> inv_sd(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(cov(i, i) > 0.0)) {
      std::ostringstream os;
      os << "variance " << i << " is " << cov(i, i) << ", must be positive";
      throw Error(ErrorKind::InvalidMatrix, os.str());
    }
    inv_sd[i] = 1.0 / std::sqrt(cov(i, i));
  }
  Matrix m(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      m(i, j) = i == j ? 1.0 : std::clamp(cov(i, j) * inv_sd[i] * inv_sd[j], -1.0, 1.0);
    }
  }
  return CorrelationMatrix(std::move(m));
}

bool CorrelationMatrix::has_repeated_variables() const {
  for (std::size_t i = 0; i < size(); ++i) {
    for (std::size_t j = i + 1; j < size(); ++j) {
      if (std::abs(m_(i, j)) >= 1.0) return true;
    }
  }
  return false;
}

double CholeskyFactor::max_reconstruction_error(const Matrix& m) const {
  const std::size_t n = size();
  double worst = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k <= j; ++k) s += lower_(i, k) * lower_(j, k);
      worst = std::max({worst, std::abs(s - m(i, j)), std::abs(s - m(j, i))});
    }
  }
  return worst;
}

CholeskyFactor cholesky(const Matrix& m, double jitter) {
  const std::size_t n = m.size();
  Matrix lower(n);
  for (std::size_t j = 0; j < n; ++j) {
    double pivot = m(j, j) + jitter;
    for (std::size_t k = 0; k < j; ++k) pivot -= lower(j, k) * lower(j, k);
    if (!(pivot > kCholeskyPivotTolerance)) throw NotPositiveDefiniteError(j, pivot);
    const double diag = std::sqrt(pivot);
    lower(j, j) = diag;
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = m(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= lower(i, k) * lower(j, k);
      lower(i, j) = s / diag;
    }
  }
  return CholeskyFactor(std::move(lower));
}

CholeskyFactor cholesky(const CorrelationMatrix& m, double jitter) {
  return cholesky(m.matrix(), jitter);
}

}  // namespace gptb
