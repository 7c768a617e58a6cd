#pragma once

#include <stdexcept>
#include <string>

namespace egovol {

// Error categories map to CLI exit codes (see tools/egovol.cpp):
// ConfigError -> 2, DataError -> 3, NumericError -> 4.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed or inconsistent files (bad magic, version, truncation).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Contract violations between components: dimension mismatches,
// behind-camera projections, same-handed pairings.
class StructuralError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace egovol
