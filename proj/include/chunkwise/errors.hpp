#pragma once

#include <stdexcept>
#include <string>

namespace chunkwise {

// Exit codes used by the command-line front end.
enum class ExitCode : int { kOk = 0, kUsage = 2, kFormat = 3, kNumeric = 4, kFailure = 1 };

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// A caller broke an operation's precondition (e.g. a fully masked attention row).
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class ChunkingError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class CapacityError : public std::length_error {
 public:
  using std::length_error::length_error;
};

class InsufficientInputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class StateError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class FormatError : public std::runtime_error {
 public:
  FormatError(const std::string& what, std::size_t byte_offset = 0)
      : std::runtime_error(what), byte_offset_(byte_offset) {}
  std::size_t byte_offset() const noexcept { return byte_offset_; }

 private:
  std::size_t byte_offset_;
};

// Training diverged; carries the global step index at which the loss went non-finite.
class TrainingError : public NumericError {
 public:
  TrainingError(const std::string& what, std::size_t step) : NumericError(what), step_(step) {}
  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t step_;
};

}  // namespace chunkwise
