#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace stcate {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input: bad arguments, unparsable files, inconsistent shapes.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Numerical breakdown: singular systems, non-PSD bounds, non-finite results.
class NumericalFailure : public Error {
 public:
  using Error::Error;
};

/// A design matrix lost column rank. `columns` names the dependent columns.
class RankDeficient : public NumericalFailure {
 public:
  RankDeficient(const std::string& what, std::vector<int> columns)
      : NumericalFailure(what), columns_(std::move(columns)) {}
  const std::vector<int>& columns() const { return columns_; }

 private:
  std::vector<int> columns_;
};

/// The propensity density vanishes where a treatment event was observed.
class OverlapViolation : public Error {
 public:
  OverlapViolation(const std::string& what, int t, double x, double y)
      : Error(what), t_(t), x_(x), y_(y) {}
  int t() const { return t_; }
  double x() const { return x_; }
  double y() const { return y_; }

 private:
  int t_;
  double x_;
  double y_;
};

}  // namespace stcate
