#ifndef FUELSIM_CORE_ERROR_HPP
#define FUELSIM_CORE_ERROR_HPP

#include <cstddef>
#include <stdexcept>
#include <string>

namespace fuelsim {

/// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A configuration value violated an invariant. `field()` names the offending key.
class ConfigError : public Error {
 public:
  ConfigError(std::string field, const std::string& what, int line = 0)
      : Error(format(field, what, line)), field_(std::move(field)), reason_(what), line_(line) {}

  const std::string& field() const noexcept { return field_; }
  const std::string& reason() const noexcept { return reason_; }
  int line() const noexcept { return line_; }

 private:
  static std::string format(const std::string& field, const std::string& what, int line) {
    std::string msg = "config field '" + field + "'";
    if (line > 0) msg += " (line " + std::to_string(line) + ")";
    return msg + ": " + what;
  }

  std::string field_;
  std::string reason_;
  int line_;
};

/// Malformed wire-format input; `offset()` is the byte position of the problem.
class ParseError : public Error {
 public:
  ParseError(std::size_t offset, const std::string& reason)
      : Error("parse error at byte " + std::to_string(offset) + ": " + reason),
        offset_(offset) {}

  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

/// Error raised inside one engine while the governance loop runs it.
class ModuleError : public Error {
 public:
  ModuleError(std::string module, const std::string& what)
      : Error("[" + module + "] " + what), module_(std::move(module)) {}

  const std::string& module() const noexcept { return module_; }

 private:
  std::string module_;
};

}  // namespace fuelsim

#endif  // FUELSIM_CORE_ERROR_HPP
