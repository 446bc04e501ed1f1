#pragma once

#include <stdexcept>
#include <string>

namespace bvmdp {

// Precondition on a numeric argument violated.
class InvalidParameter : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Operation not defined for the given kind of object.
class UnsupportedOperation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// A point needed for evaluation lies outside a path's domain or grid.
class OutOfDomain : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

class NonfiniteVariance : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DegenerateLimit : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// exp(t * statistic) overflowed for a replication.
class SaturationError : public std::overflow_error {
 public:
  SaturationError(const std::string& what, std::size_t replication)
      : std::overflow_error(what), replication_(replication) {}
  std::size_t replication() const { return replication_; }

 private:
  std::size_t replication_;
};

class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& field, const std::string& message)
      : std::runtime_error("config error in '" + field + "': " + message),
        field_(field) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

class FilesystemError : public std::runtime_error {
 public:
  FilesystemError(const std::string& path, const std::string& message)
      : std::runtime_error(message + ": " + path), path_(path) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

}  // namespace bvmdp
