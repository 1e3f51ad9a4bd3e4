#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace qstrat {

/// Base class of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// System names missing, duplicated, or with mismatched dimensions.
class LabelingError : public Error {
 public:
  using Error::Error;
};

/// A numerical precondition (Hermiticity, positivity, ...) does not hold.
class NumericContractError : public Error {
 public:
  using Error::Error;
};

/// An argument lies outside the mathematical domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// An SDP description is structurally inconsistent.
class BuildError : public Error {
 public:
  using Error::Error;
};

/// A solver report lacks data required by a post-processing step.
class ContractError : public Error {
 public:
  using Error::Error;
};

/// Malformed textual input. `position` is the 0-based character offset.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t position)
      : Error(what + " (at position " + std::to_string(position) + ")"),
        position_(position) {}

  std::size_t position() const noexcept { return position_; }

 private:
  std::size_t position_;
};

/// Plotting input is incomplete.
class RenderError : public Error {
 public:
  using Error::Error;
};

}  // namespace qstrat
