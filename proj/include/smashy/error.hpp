#pragma once

#include <stdexcept>
#include <string>

namespace smashy {

// Base for every error the library throws. `kind()` is a stable short tag the
// command line tool reports in its machine-readable error output.
class Error : public std::runtime_error {
public:
  Error(std::string kind, const std::string& message)
      : std::runtime_error(message), kind_(std::move(kind)) {}

  const std::string& kind() const noexcept { return kind_; }

private:
  std::string kind_;
};

struct SpaceError : Error {
  explicit SpaceError(const std::string& m) : Error("space", m) {}
};

struct EncodingError : Error {
  explicit EncodingError(const std::string& m) : Error("encoding", m) {}
};

struct ArchiveError : Error {
  explicit ArchiveError(const std::string& m) : Error("archive", m) {}
};

struct InductionError : Error {
  explicit InductionError(const std::string& m) : Error("induction", m) {}
};

struct SpecError : Error {
  explicit SpecError(const std::string& m) : Error("spec", m) {}
};

struct ObjectiveError : Error {
  explicit ObjectiveError(const std::string& m) : Error("objective", m) {}
};

struct ParseError : Error {
  explicit ParseError(const std::string& m) : Error("parse", m) {}
};

struct IoError : Error {
  explicit IoError(const std::string& m) : Error("io", m) {}
};

}  // namespace smashy
