// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace revode {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A constructor or operation received parameters outside its admissible set.
class InvalidParams : public Error {
 public:
  using Error::Error;
};

/// A value lies outside the domain of a reparametrisation or schedule query.
class OutOfRange : public Error {
 public:
  using Error::Error;
};

/// Iterates became non-finite or exceeded the divergence threshold.
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, std::ptrdiff_t stage = -1)
      : Error(what), stage_(stage) {}
  std::ptrdiff_t stage() const { return stage_; }

 private:
  std::ptrdiff_t stage_;
};

/// A failure inside a solver step, annotated with the step index.
class StepError : public Error {
 public:
  StepError(std::size_t step, const std::string& what)
      : Error("step " + std::to_string(step) + ": " + what), step_(step) {}
  std::size_t step() const { return step_; }

 private:
  std::size_t step_;
};

/// A study could not produce a meaningful result (e.g. oracle failure).
class StudyError : public Error {
 public:
  using Error::Error;
};

}  // namespace revode
