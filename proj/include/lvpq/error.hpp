#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <utility>

namespace lvpq {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class GisError : public Error {
 public:
  using Error::Error;
};

class MeterError : public Error {
 public:
  using Error::Error;
};

class ModelError : public Error {
 public:
  using Error::Error;
};

/// Raised by the power-flow kernels. Carries the last mismatch for
/// non-convergence and the harmonic order for singular per-order systems.
class SolverError : public Error {
 public:
  SolverError(const std::string& what, double last_mismatch = 0.0,
              std::optional<int> order = std::nullopt)
      : Error(what), last_mismatch_(last_mismatch), order_(order) {}

  double last_mismatch() const { return last_mismatch_; }
  std::optional<int> order() const { return order_; }

 private:
  double last_mismatch_;
  std::optional<int> order_;
};

class ShiftError : public Error {
 public:
  using Error::Error;
};

class PipelineError : public Error {
 public:
  PipelineError(std::string stage, const std::string& what)
      : Error("[" + stage + "] " + what), stage_(std::move(stage)) {}

  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

}  // namespace lvpq
