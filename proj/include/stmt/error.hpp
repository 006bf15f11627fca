#pragma once

#include <stdexcept>
#include <string>

namespace stmt {

// Every failure surfaced by the library derives from Error so callers can
// catch the family and still dispatch on the concrete kind.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class MalformedPackError : public Error {
 public:
  MalformedPackError(const std::string& what, std::size_t line)
      : Error("malformed pack (line " + std::to_string(line) + "): " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class UnknownTaskError : public Error {
 public:
  explicit UnknownTaskError(const std::string& task_id)
      : Error("unknown task '" + task_id + "'"), task_id_(task_id) {}
  const std::string& task_id() const noexcept { return task_id_; }

 private:
  std::string task_id_;
};

class RenderError : public Error {
 public:
  RenderError(const std::string& what, std::string field) : Error(what), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

class DegenerateTaskError : public Error {
 public:
  using Error::Error;
};

class InvalidSpecError : public Error {
 public:
  using Error::Error;
};

class CannotFalsifyError : public Error {
 public:
  explicit CannotFalsifyError(const std::string& task_id, const std::string& detail = {})
      : Error("cannot build statements of both truth values for task '" + task_id + "'" +
              (detail.empty() ? std::string() : ": " + detail)) {}
};

class LoadError : public Error {
 public:
  using Error::Error;
};

// Dataset / checkpoint read failure carrying the offending line (0 if n/a).
class ReadError : public Error {
 public:
  ReadError(const std::string& what, std::size_t line)
      : Error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class InvalidInputError : public Error {
 public:
  using Error::Error;
};

class BackendError : public Error {
 public:
  using Error::Error;
};

class ClassificationError : public Error {
 public:
  using Error::Error;
};

class InvalidConfigError : public Error {
 public:
  using Error::Error;
};

class EnvironmentError : public Error {
 public:
  using Error::Error;
};

// Backend-reported allocation failure. The benchmark treats it as a probe
// result rather than a crash.
class OutOfMemoryError : public Error {
 public:
  using Error::Error;
};

}  // namespace stmt
