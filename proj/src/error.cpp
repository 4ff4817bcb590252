#include "sratts/error.hpp"

namespace sratts {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidUtterance: return "invalid-utterance";
    case ErrorKind::kEmptyCorpus: return "empty-corpus";
    case ErrorKind::kDegenerateDistribution: return "degenerate-distribution";
    case ErrorKind::kInsufficientData: return "insufficient-data";
    case ErrorKind::kMissingFile: return "missing-file";
    case ErrorKind::kShapeMismatch: return "shape-mismatch";
    case ErrorKind::kDuplicateId: return "duplicate-id";
    case ErrorKind::kOutOfRange: return "out-of-range";
    case ErrorKind::kConfiguration: return "configuration";
    case ErrorKind::kMode: return "mode";
    case ErrorKind::kPositionalHorizon: return "positional-horizon";
    case ErrorKind::kDivergence: return "divergence";
    case ErrorKind::kFormat: return "format";
    case ErrorKind::kIo: return "io";
  }
  return "unknown";
}

}  // namespace sratts
