#pragma once

#include <stdexcept>
#include <string>

namespace rdes {

// Base class for everything this library throws on purpose.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Dataset files that cannot be read or fail validation.
class LoadError : public Error {
 public:
  using Error::Error;
};

// Bad run configuration (unknown keys, out-of-range values, missing fields).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// LLM backend failures, tagged with a coarse class so callers can decide
// whether a retry makes sense.
class BackendError : public Error {
 public:
  enum class Kind { transport, timeout, auth, malformed, retries_exhausted };

  BackendError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

// Raw LLM output from which no unambiguous label could be recovered.
class LabelParseError : public Error {
 public:
  using Error::Error;
};

// Corrupt, truncated, or incompatible checkpoint files.
class CheckpointError : public Error {
 public:
  using Error::Error;
};

}  // namespace rdes
