#pragma once

#include <stdexcept>
#include <string>

namespace ipp {

// Error classes map onto distinct CLI exit codes (see tools/ipp_main.cpp).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual const char* kind() const noexcept { return "error"; }
};

class ConfigError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "config_error"; }
};

class DataError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "data_error"; }
};

/// Malformed dataset or model file; message carries "line N".
class ParseError : public DataError {
 public:
  ParseError(const std::string& what, std::size_t line)
      : DataError("line " + std::to_string(line) + ": " + what), line_(line) {}
  const char* kind() const noexcept override { return "parse_error"; }
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class IncompatibleModel : public DataError {
 public:
  using DataError::DataError;
  const char* kind() const noexcept override { return "incompatible_model"; }
};

class GenerationError : public DataError {
 public:
  using DataError::DataError;
  const char* kind() const noexcept override { return "generation_error"; }
};

class TrainingError : public DataError {
 public:
  using DataError::DataError;
  const char* kind() const noexcept override { return "training_error"; }
};

class SensingError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "sensing_error"; }
};

/// A caller broke a documented precondition.
class ContractViolation : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "contract_violation"; }
};

/// Instance too large for exhaustive search.
class RefusalError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "refusal"; }
};

}  // namespace ipp
