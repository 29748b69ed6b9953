#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ebn {

// Invalid parameters, shape mismatches and malformed config files.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A simulation produced a non-finite membrane value.
class DivergedError : public std::runtime_error {
 public:
  DivergedError(std::size_t iteration, std::size_t step, const std::string& what)
      : std::runtime_error(what), iteration_(iteration), step_(step) {}

  std::size_t iteration() const noexcept { return iteration_; }
  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t iteration_;
  std::size_t step_;
};

}  // namespace ebn
