#pragma once

#include <stdexcept>
#include <string>

namespace ora {

/// Input bytes/text do not match the expected file format.
class FormatError : public std::runtime_error {
 public:
  explicit FormatError(const std::string& what) : std::runtime_error(what) {}
};

/// Structurally valid input carrying values that violate a domain invariant
/// (non-finite coordinates, singular calibration, non-positive dimensions).
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

/// Degenerate geometric request (zero-norm ray, box footprint over the
/// sensor origin).
class GeometryError : public std::runtime_error {
 public:
  explicit GeometryError(const std::string& what) : std::runtime_error(what) {}
};

/// Invalid run configuration (budget over the cap without the unsafe flag,
/// empty sector, bad paths).
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace ora
