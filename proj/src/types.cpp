#include <qisolve/types.hpp>

namespace qisolve {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::EmptyVector: return "EmptyVector";
    case ErrorKind::IndexError: return "IndexError";
    case ErrorKind::ZeroNormSample: return "ZeroNormSample";
    case ErrorKind::DuplicateEntry: return "DuplicateEntry";
    case ErrorKind::NonfiniteSample: return "NonfiniteSample";
    case ErrorKind::IterationCapExceeded: return "IterationCapExceeded";
    case ErrorKind::RankDeficientSketch: return "RankDeficientSketch";
    case ErrorKind::DimensionTooLarge: return "DimensionTooLarge";
    case ErrorKind::EstimatorFailure: return "EstimatorFailure";
    case ErrorKind::ZeroSolution: return "ZeroSolution";
    case ErrorKind::NotPSD: return "NotPSD";
    case ErrorKind::Config: return "Config";
    case ErrorKind::Parse: return "Parse";
    case ErrorKind::Io: return "Io";
  }
  return "Unknown";
}

}  // namespace qisolve
