#include "gptb/error.hpp"

#include <sstream>

namespace gptb {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Domain: return "domain";
    case ErrorKind::InvalidMatrix: return "invalid-matrix";
    case ErrorKind::NotPositiveDefinite: return "not-positive-definite";
    case ErrorKind::DegenerateCorrelation: return "degenerate-correlation";
    case ErrorKind::RepeatedVariable: return "repeated-variable";
    case ErrorKind::UnsupportedDimension: return "unsupported-dimension";
    case ErrorKind::Configuration: return "configuration";
    case ErrorKind::HTooLarge: return "h-too-large";
    case ErrorKind::Hypothesis: return "hypothesis";
    case ErrorKind::ResourceLimit: return "resource-limit";
    case ErrorKind::EmptyRange: return "empty-range";
    case ErrorKind::Io: return "io";
  }
  return "unknown";
}

namespace {

std::string pivot_message(std::size_t index, double pivot) {
  std::ostringstream os;
  os << "matrix is not positive definite: pivot " << index << " = " << pivot;
  return os.str();
}

}  // namespace

NotPositiveDefiniteError::NotPositiveDefiniteError(std::size_t index, double pivot)
    : Error(ErrorKind::NotPositiveDefinite, pivot_message(index, pivot)),
      index_(index),
      pivot_(pivot) {}

}  // namespace gptb
