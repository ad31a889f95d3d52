#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace sepcross {

enum class ErrorKind {
  syntax,
  unknown_identifier,
  unknown_function,
  missing_binding,
  domain,
  model,
  config,
  not_a_saddle,
  no_convergence,
  topology,
  fit_diverged,
  unsupported_regime,
  orbit,
  invalid_pseudo_phase,
  not_captured,
  measurement_suspect,
  integration,
  out_of_box,
  on_separatrix,
  window_too_short,
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

// Parse failures carry the byte offset into the source text.
class SyntaxError : public Error {
 public:
  SyntaxError(std::size_t offset, const std::string& what)
      : Error(ErrorKind::syntax, what + " at offset " + std::to_string(offset)),
        offset_(offset) {}

  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

}  // namespace sepcross
