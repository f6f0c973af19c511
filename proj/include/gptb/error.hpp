#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace gptb {

enum class ErrorKind {
  Domain,               // argument outside the mathematical domain
  InvalidMatrix,        // symmetry / unit diagonal / range violated
  NotPositiveDefinite,  // Cholesky pivot at or below tolerance
  DegenerateCorrelation,
  RepeatedVariable,     // |r_jk| = 1 off the diagonal
  UnsupportedDimension,
  Configuration,
  HTooLarge,            // a conditioning cap u - r(u+h) went negative
  Hypothesis,           // a theorem's hypothesis failed
  ResourceLimit,
  EmptyRange,
  Io,
};

std::string_view to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Raised by Cholesky when a pivot is not strictly positive; `index` is 0-based.
class NotPositiveDefiniteError : public Error {
 public:
  NotPositiveDefiniteError(std::size_t index, double pivot);

  std::size_t index() const noexcept { return index_; }
  double pivot() const noexcept { return pivot_; }

 private:
  std::size_t index_;
  double pivot_;
};

}  // namespace gptb
