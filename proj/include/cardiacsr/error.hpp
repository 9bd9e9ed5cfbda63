#pragma once

#include <fmt/format.h>
#include <stdexcept>
#include <string>

namespace cardiacsr {

enum struct ErrorKind
{
  Config,
  Schema,
  Data,
  Shape,
};

// CLI exit codes: 2 schema/config, 3 data, 4 shape.
inline int exitCodeFor(ErrorKind kind)
{
  switch (kind) {
  case ErrorKind::Config:
  case ErrorKind::Schema: return 2;
  case ErrorKind::Data: return 3;
  case ErrorKind::Shape: return 4;
  }
  return 1;
}

class Error : public std::runtime_error
{
public:
  Error(ErrorKind kind, std::string const &what)
    : std::runtime_error(what)
    , kind_{kind}
  {
  }

  ErrorKind kind() const { return kind_; }
  int exitCode() const { return exitCodeFor(kind_); }

private:
  ErrorKind kind_;
};

struct ConfigError : Error
{
  explicit ConfigError(std::string const &what) : Error(ErrorKind::Config, "config error: " + what) {}
};

struct SchemaError : Error
{
  explicit SchemaError(std::string const &what) : Error(ErrorKind::Schema, "schema error: " + what) {}
};

struct DataError : Error
{
  explicit DataError(std::string const &what) : Error(ErrorKind::Data, "data error: " + what) {}
};

struct ShapeError : Error
{
  explicit ShapeError(std::string const &what) : Error(ErrorKind::Shape, "shape error: " + what) {}
};

template <typename E, typename... Args>
[[noreturn]] void fail(fmt::format_string<Args...> fmtStr, Args &&...args)
{
  throw E(fmt::format(fmtStr, std::forward<Args>(args)...));
}

} // namespace cardiacsr
