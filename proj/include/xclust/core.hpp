#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>

namespace xclust {

// Error hierarchy. Every failure surfaced by the library derives from Error so
// callers (the CLI in particular) can catch one type.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParameterError : public Error {
 public:
  using Error::Error;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class UnsupportedParameterError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Raised when an estimator sees too few events; carries the observed count.
class InsufficientDataError : public Error {
 public:
  InsufficientDataError(const std::string& what, std::size_t count)
      : Error(what + " (observed " + std::to_string(count) + ")"),
        count_(count) {}

  std::size_t count() const noexcept { return count_; }

 private:
  std::size_t count_;
};

enum class Norm { Sup, Euclidean };

inline double norm_of(std::span<const double> x, Norm norm) {
  double acc = 0.0;
  if (norm == Norm::Sup) {
    for (double v : x) acc = std::max(acc, std::abs(v));
    return acc;
  }
  for (double v : x) acc += v * v;
  return std::sqrt(acc);
}

/// A Monte Carlo estimate together with its standard error.
struct Estimate {
  double value = 0.0;
  double std_error = 0.0;
};

/// Sample mean and standard error of the mean (n - 1 denominator).
inline Estimate mean_estimate(std::span<const double> xs) {
  const auto n = xs.size();
  if (n == 0) return {};
  double mean = 0.0;
  double m2 = 0.0;
  std::size_t k = 0;
  for (double x : xs) {
    ++k;
    const double delta = x - mean;
    mean += delta / static_cast<double>(k);
    m2 += delta * (x - mean);
  }
  if (n < 2) return {mean, 0.0};
  const double var = m2 / static_cast<double>(n - 1);
  return {mean, std::sqrt(var / static_cast<double>(n))};
}

}  // namespace xclust
