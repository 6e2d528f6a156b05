// SPDX-License-Identifier: Apache-2.0

#ifndef TENSORCHART_ERRORS_HPP
#define TENSORCHART_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace tensorchart {

// Thrown when a file cannot be opened, read or written.
class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string &msg) : std::runtime_error(msg) {}
};

// Thrown when an artifact file has a bad magic, version, or truncated payload.
class CorruptArtifactError : public std::runtime_error {
 public:
  explicit CorruptArtifactError(const std::string &msg) : std::runtime_error(msg) {}
};

// Thrown when training produces a non-finite loss.
class DivergenceError : public std::runtime_error {
 public:
  explicit DivergenceError(const std::string &msg) : std::runtime_error(msg) {}
};

// Thrown when artifacts passed to one command do not belong together
// (mismatched sample counts or shapes).
class InconsistencyError : public std::runtime_error {
 public:
  explicit InconsistencyError(const std::string &msg) : std::runtime_error(msg) {}
};

}  // namespace tensorchart

#endif
