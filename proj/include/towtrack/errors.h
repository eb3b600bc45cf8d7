#ifndef TOWTRACK_ERRORS_H_
#define TOWTRACK_ERRORS_H_

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace towtrack {

// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Steering angle too close to +-pi/2 for the reduced dynamics.
class SingularSteeringError : public Error {
 public:
  using Error::Error;
};

// Argument outside the validity domain of a model (no extrapolation).
class DomainError : public Error {
 public:
  using Error::Error;
};

// Propulsion map gain V^T * Phi is not positive at the requested speed.
class DegenerateMapError : public Error {
 public:
  using Error::Error;
};

// Least-squares regressor lacks full column rank.
class IllConditionedFitError : public Error {
 public:
  IllConditionedFitError(const std::string& what,
                         std::vector<std::string> deficient_directions)
      : Error(what), deficient_directions_(std::move(deficient_directions)) {}

  const std::vector<std::string>& deficient_directions() const {
    return deficient_directions_;
  }

 private:
  std::vector<std::string> deficient_directions_;
};

class JackKnifeError : public Error {
 public:
  JackKnifeError(const std::string& what, std::size_t trailer, double angle)
      : Error(what), trailer_(trailer), angle_(angle) {}

  std::size_t trailer() const { return trailer_; }
  double angle() const { return angle_; }

 private:
  std::size_t trailer_;
  double angle_;
};

class InfeasibleTrajectoryError : public Error {
 public:
  InfeasibleTrajectoryError(const std::string& what, double minimum_radius)
      : Error(what), minimum_radius_(minimum_radius) {}

  double minimum_radius() const { return minimum_radius_; }

 private:
  double minimum_radius_;
};

class InvalidReferenceError : public Error {
 public:
  using Error::Error;
};

// Malformed input file; `row` is 1-based and counts the header line.
class IngestionError : public Error {
 public:
  IngestionError(const std::string& what, std::size_t row)
      : Error(what), row_(row) {}

  std::size_t row() const { return row_; }

 private:
  std::size_t row_;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace towtrack

#endif  // TOWTRACK_ERRORS_H_
