#include "qpspec/error.hpp"

namespace qpspec {

const char* to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::InvalidInput: return "invalid-input";
        case ErrorKind::PrecisionExhausted: return "precision-exhausted";
        case ErrorKind::ExcludedPhase: return "excluded-phase";
        case ErrorKind::Pole: return "pole";
        case ErrorKind::PoleOnOrbit: return "pole-on-orbit";
        case ErrorKind::Budget: return "budget";
        case ErrorKind::Subsequence: return "subsequence";
        case ErrorKind::DegenerateModel: return "degenerate-model";
        case ErrorKind::Range: return "range";
        case ErrorKind::Numeric: return "numeric";
        case ErrorKind::Config: return "config";
        case ErrorKind::Io: return "io";
    }
    return "unknown";
}

}  // namespace qpspec
