#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace combforge {

enum class ErrorKind {
  index_collision,
  index_not_found,
  signature_mismatch,
  not_hermitian,
  not_positive,
  causality_violation,
  not_a_channel,
  normalization_violation,
  probe_not_normalized,
  not_a_state,
  bad_probability,
  cap_exceeded,
  degenerate_robustness,
  zero_dual,
  invalid_input,
  numerical_failure,
};

std::string_view to_string(ErrorKind kind) noexcept;

/// Library-wide exception. `level()` carries the slot level k for chain
/// violations, the channel index for NotAChannel and the effect index for
/// NotPositive; it is -1 when not applicable.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message, int level = -1);

  ErrorKind kind() const noexcept { return kind_; }
  int level() const noexcept { return level_; }

 private:
  ErrorKind kind_;
  int level_;
};

}  // namespace combforge
