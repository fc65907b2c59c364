#pragma once

#include <stdexcept>
#include <string>

namespace rdfload {

/// Filesystem or stream failure (unwritable directory, unreadable file, ...).
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid configuration detected before any work is done.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A store failed in a way the benchmark treats as a crash.
class StoreFatalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace rdfload
