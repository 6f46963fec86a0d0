#pragma once

#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace nadac {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input outside the mathematical domain of an operation (negative radius, NaN).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A documented guarantee of a model component does not hold (e.g. a link
/// envelope evaluated to a non-positive modulus).
class ContractError : public Error {
 public:
  using Error::Error;
};

class PreconditionError : public Error {
 public:
  using Error::Error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, Eigen::MatrixXd best, double residual)
      : Error(what), best_(std::move(best)), residual_(residual) {}

  const Eigen::MatrixXd& best_iterate() const { return best_; }
  double residual() const { return residual_; }

 private:
  Eigen::MatrixXd best_;
  double residual_;
};

/// Configuration rejected before any computation; `path` names the offending field.
class ValidationError : public Error {
 public:
  ValidationError(std::string path, const std::string& message)
      : Error(path.empty() ? message : path + ": " + message), path_(std::move(path)) {}

  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

class GroundTruthRequired : public Error {
 public:
  using Error::Error;
};

struct RunRecord;

/// Simulation stopped at `step`; the record holds every row logged before that.
class RunAbort : public Error {
 public:
  RunAbort(const std::string& what, std::uint64_t step, std::shared_ptr<RunRecord> partial)
      : Error(what), step_(step), partial_(std::move(partial)) {}

  std::uint64_t step() const { return step_; }
  const std::shared_ptr<RunRecord>& partial_record() const { return partial_; }

 private:
  std::uint64_t step_;
  std::shared_ptr<RunRecord> partial_;
};

}  // namespace nadac
