#include "combforge/errors.hpp"

namespace combforge {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::index_collision: return "IndexCollision";
    case ErrorKind::index_not_found: return "IndexNotFound";
    case ErrorKind::signature_mismatch: return "SignatureMismatch";
    case ErrorKind::not_hermitian: return "NotHermitian";
    case ErrorKind::not_positive: return "NotPositive";
    case ErrorKind::causality_violation: return "CausalityViolation";
    case ErrorKind::not_a_channel: return "NotAChannel";
    case ErrorKind::normalization_violation: return "NormalizationViolation";
    case ErrorKind::probe_not_normalized: return "ProbeNotNormalized";
    case ErrorKind::not_a_state: return "NotAState";
    case ErrorKind::bad_probability: return "BadProbability";
    case ErrorKind::cap_exceeded: return "CapExceeded";
    case ErrorKind::degenerate_robustness: return "DegenerateRobustness";
    case ErrorKind::zero_dual: return "ZeroDual";
    case ErrorKind::invalid_input: return "InvalidInput";
    case ErrorKind::numerical_failure: return "NumericalFailure";
  }
  return "Unknown";
}

Error::Error(ErrorKind kind, const std::string& message, int level)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind), level_(level) {}

}  // namespace combforge
