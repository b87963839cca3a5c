#pragma once

#include <stdexcept>
#include <string>

namespace dwc {

// Every error raised by the library derives from Error so callers (the CLI in
// particular) can report a machine-readable kind alongside the message.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& what)
      : std::runtime_error(what), kind_(std::move(kind)) {}
  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

struct ConfigError : Error {
  explicit ConfigError(const std::string& w) : Error("config", w) {}
};
struct ArgumentError : Error {
  explicit ArgumentError(const std::string& w) : Error("argument", w) {}
};
struct FormatError : Error {
  explicit FormatError(const std::string& w) : Error("format", w) {}
};
struct NumericError : Error {
  explicit NumericError(const std::string& w) : Error("numeric", w) {}
};
struct StateError : Error {
  explicit StateError(const std::string& w) : Error("state", w) {}
};
struct InternalError : Error {
  explicit InternalError(const std::string& w) : Error("internal", w) {}
};
struct IoError : Error {
  explicit IoError(const std::string& w) : Error("io", w) {}
};

class TrainingError : public Error {
 public:
  TrainingError(const std::string& w, int epoch) : Error("training", w), epoch_(epoch) {}
  int epoch() const noexcept { return epoch_; }

 private:
  int epoch_;
};

}  // namespace dwc
