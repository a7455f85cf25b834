#pragma once

#include <stdexcept>
#include <string>

namespace qacgen {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Unknown identifier (task id, backend id, augmenter name, ...).
class NotFoundError : public Error {
 public:
  using Error::Error;
};

// A caller violated an operation's precondition.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

class SerializationError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, int line)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

class CastError : public Error {
 public:
  using Error::Error;
};

class IngestError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// The backend does not support the requested operation (e.g. training a
// frozen remote model).
class CapabilityError : public Error {
 public:
  using Error::Error;
};

// Pipeline stage machine violation.
class StateError : public Error {
 public:
  using Error::Error;
};

class GenerationError : public Error {
 public:
  using Error::Error;
};

class AssemblyError : public Error {
 public:
  using Error::Error;
};

class ProtocolError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace qacgen
