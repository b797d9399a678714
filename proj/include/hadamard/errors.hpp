#pragma once

#include <stdexcept>
#include <string>

namespace hadamard {

// Base for every error raised by the library. `kind()` is the stable name
// used in JSON reports and CLI diagnostics.
class Error : public std::runtime_error {
public:
  Error(std::string kind, const std::string& what)
      : std::runtime_error(kind + ": " + what), kind_(std::move(kind)) {}
  const std::string& kind() const noexcept { return kind_; }

private:
  std::string kind_;
};

#define HADAMARD_ERROR(Name)                                                   \
  class Name : public Error {                                                  \
  public:                                                                      \
    explicit Name(const std::string& what) : Error(#Name, what) {}             \
  };

HADAMARD_ERROR(ScheduleInfeasible)
HADAMARD_ERROR(MaxStepsExceeded)
HADAMARD_ERROR(InconsistentField)
HADAMARD_ERROR(AxisSingularity)
HADAMARD_ERROR(InvalidParameter)
HADAMARD_ERROR(DegenerateGradient)
HADAMARD_ERROR(OutsideSupport)
HADAMARD_ERROR(GridTooCoarse)
HADAMARD_ERROR(NonConvergence)
HADAMARD_ERROR(MeshTooCoarse)
HADAMARD_ERROR(CacheMiss)

#undef HADAMARD_ERROR

class ConstraintViolation : public Error {
public:
  ConstraintViolation(std::string name, double r, double margin);
  const std::string& constraint() const noexcept { return name_; }
  double radius() const noexcept { return r_; }
  double margin() const noexcept { return margin_; }

private:
  std::string name_;
  double r_;
  double margin_;
};

class SearchExhausted : public Error {
public:
  SearchExhausted(std::string junction, double lo, double hi);
  const std::string& junction() const noexcept { return junction_; }

private:
  std::string junction_;
};

class ContainmentFailed : public Error {
public:
  ContainmentFailed(double slack, double r);
  double slack() const noexcept { return slack_; }
  double radius() const noexcept { return r_; }

private:
  double slack_;
  double r_;
};

class ConfigError : public Error {
public:
  ConfigError(std::string path, const std::string& what)
      : Error("ConfigError", path + ": " + what), path_(std::move(path)) {}
  const std::string& path() const noexcept { return path_; }

private:
  std::string path_;
};

} // namespace hadamard
