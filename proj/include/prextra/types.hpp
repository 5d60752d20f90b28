#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace prextra {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Unconstrained d x r matrix (gradients, correction terms, projection inputs).
using AmbientMatrix = Matrix;

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Polar projection is not unique: the input is (numerically) rank deficient.
class RankDeficient : public Error {
 public:
  RankDeficient(double sigma_min, const std::string& where)
      : Error(where + ": rank-deficient input (sigma_min = " + std::to_string(sigma_min) + ")"),
        sigma_min_(sigma_min) {}
  double sigma_min() const noexcept { return sigma_min_; }

 private:
  double sigma_min_;
};

class ZeroDirection : public Error {
 public:
  using Error::Error;
};

class NoConvergence : public Error {
 public:
  using Error::Error;
};

class Lemma4Violation : public Error {
 public:
  using Error::Error;
};

class IndivisibleRows : public Error {
 public:
  using Error::Error;
};

class DegenerateSample : public Error {
 public:
  using Error::Error;
};

class InsufficientData : public Error {
 public:
  using Error::Error;
};

class MismatchedInstances : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class FormatError : public Error {
 public:
  using Error::Error;
};

}  // namespace prextra
