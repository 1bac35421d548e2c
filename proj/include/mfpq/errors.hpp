#pragma once

#include <Eigen/Core>
#include <stdexcept>
#include <string>

namespace mfpq {

struct ShapeError : std::runtime_error {
  explicit ShapeError(const std::string& what) : std::runtime_error(what) {}
};

struct SingularMatrixError : std::runtime_error {
  SingularMatrixError(const std::string& what, Eigen::Index row_in)
      : std::runtime_error(what), row(row_in) {}
  Eigen::Index row;
};

struct SequencingError : std::runtime_error {
  explicit SequencingError(const std::string& what) : std::runtime_error(what) {}
};

// Malformed external input: checkpoint, config, IDX file.
struct FormatError : std::runtime_error {
  explicit FormatError(const std::string& what) : std::runtime_error(what) {}
};

struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace mfpq
