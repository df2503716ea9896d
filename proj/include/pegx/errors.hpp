#pragma once

#include <stdexcept>
#include <string>

namespace pegx {

// Error categories. Each maps to a distinct failure mode callers may
// want to tell apart (the CLI maps all of them to exit code 1).

struct BoundsError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DomainError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ShapeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ProtocolError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct RangeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DependencyError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Bad command-line usage; the CLI exits with 2 instead of 1.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Checkpoint loading.
struct CorruptFileError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct VersionMismatchError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Also a ValidationError: an architecture mismatch is a config problem.
struct ShapeMismatchError : ValidationError {
  using ValidationError::ValidationError;
};

}  // namespace pegx
