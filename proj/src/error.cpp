#include "diffbal/error.hpp"

namespace diffbal {

std::string_view to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::InvalidParameter: return "invalid-parameter";
        case ErrorKind::InvalidInput: return "invalid-input";
        case ErrorKind::Parse: return "parse-error";
        case ErrorKind::Validation: return "validation-error";
        case ErrorKind::GenerationFailure: return "generation-failure";
        case ErrorKind::NotIrreducible: return "not-irreducible";
        case ErrorKind::Unsupported: return "unsupported";
        case ErrorKind::SizeLimit: return "size-limit";
        case ErrorKind::NonConvergent: return "non-convergent";
        case ErrorKind::NonConverged: return "non-converged";
        case ErrorKind::HypothesisViolation: return "hypothesis-violation";
    }
    return "unknown";
}

}  // namespace diffbal
