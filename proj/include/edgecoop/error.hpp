#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace edgecoop {

// Invalid arguments are reported with std::invalid_argument throughout; the
// types below cover the remaining failure modes callers may want to catch.

/// Not enough history to evaluate a windowed statistic.
class NotEnoughData : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Problem instance exceeds what an exact enumeration routine accepts.
class SizeLimitError : public std::length_error {
 public:
  using std::length_error::length_error;
};

/// A solver produced a non-finite value.
class NumericalFailure : public std::runtime_error {
 public:
  NumericalFailure(const std::string& what, std::size_t iteration)
      : std::runtime_error(what + " (iteration " + std::to_string(iteration) + ")"),
        iteration_(iteration) {}

  std::size_t iteration() const noexcept { return iteration_; }

 private:
  std::size_t iteration_;
};

}  // namespace edgecoop
