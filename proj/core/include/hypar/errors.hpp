#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace hypar {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  ConfigError(std::string path, const std::string& msg)
      : Error(path + ": " + msg), path_(std::move(path)) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

// Raised when a state leaves the admissible set.
class PhaseError : public Error {
 public:
  PhaseError(const std::string& msg, std::vector<double> state, std::size_t point, double time)
      : Error(msg), state_(std::move(state)), point_(point), time_(time) {}
  const std::vector<double>& state() const { return state_; }
  std::size_t point() const { return point_; }
  double time() const { return time_; }

 private:
  std::vector<double> state_;
  std::size_t point_;
  double time_;
};

class CflError : public Error {
 public:
  CflError(const std::string& msg, double admissible_dt) : Error(msg), dt_(admissible_dt) {}
  double admissible_dt() const { return dt_; }

 private:
  double dt_;
};

}  // namespace hypar
