#pragma once

#include <Eigen/Core>
#include <stdexcept>
#include <string>

namespace elflow {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input violates a solvability condition (e.g. non-zero mean passed to a Poisson inversion).
class IncompatibleDataError : public Error {
 public:
  using Error::Error;
};

class CflError : public Error {
 public:
  CflError(double courant, double limit)
      : Error("CFL violation: courant number " + std::to_string(courant) + " exceeds " +
              std::to_string(limit)),
        courant_(courant) {}
  double courant() const { return courant_; }

 private:
  double courant_;
};

/// Non-finite values or runaway growth during time stepping.
class BlowUpError : public Error {
 public:
  BlowUpError(const std::string& what, double t) : Error(what), time_(t) {}
  double time() const { return time_; }

 private:
  double time_;
};

/// The label gradient ∇A lost invertibility somewhere on the grid. Carries the
/// worst collocation point and its determinant; the usual remedy is a label reset.
class SingularMapError : public Error {
 public:
  SingularMapError(Eigen::Index point, double det)
      : Error("label gradient near-singular at point " + std::to_string(point) +
              " (det = " + std::to_string(det) + "); reset labels"),
        point_(point),
        det_(det) {}
  Eigen::Index point() const { return point_; }
  double det() const { return det_; }

 private:
  Eigen::Index point_;
  double det_;
};

/// A time series does not cover the requested interval.
class IncompleteHistoryError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace elflow
