#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ripagg {

// Process exit codes shared by every command.
enum class ExitCode : int {
  kSuccess = 0,
  kValidation = 2,
  kAlignment = 3,
  kInvariant = 4,
};

class Error : public std::runtime_error {
 public:
  Error(ExitCode code, const std::string &what)
      : std::runtime_error(what), code_(code) {}

  ExitCode code() const noexcept { return code_; }

 private:
  ExitCode code_;
};

// Malformed input: bad configuration, zero-area boxes, bad records.
class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string &what)
      : Error(ExitCode::kValidation, what) {}
};

// A record that fails validation while reading a line-delimited file.
class ParseError : public ValidationError {
 public:
  ParseError(std::string source, std::size_t line, const std::string &what)
      : ValidationError(source + ":" + std::to_string(line) + ": " + what),
        source_(std::move(source)),
        line_(line) {}

  const std::string &source() const noexcept { return source_; }
  std::size_t line() const noexcept { return line_; }

 private:
  std::string source_;
  std::size_t line_;
};

// A box that does not fit the frame grid it is applied to.
class DimensionError : public ValidationError {
 public:
  DimensionError(std::size_t frame, const std::string &what)
      : ValidationError("frame " + std::to_string(frame) + ": " + what),
        frame_(frame) {}

  std::size_t frame() const noexcept { return frame_; }

 private:
  std::size_t frame_;
};

// Two streams that should cover the same frames do not.
class AlignmentError : public Error {
 public:
  AlignmentError(std::size_t first_divergent_frame, const std::string &what)
      : Error(ExitCode::kAlignment,
              "streams diverge at frame " +
                  std::to_string(first_divergent_frame) + ": " + what),
        frame_(first_divergent_frame) {}

  std::size_t frame() const noexcept { return frame_; }

 private:
  std::size_t frame_;
};

class InvariantError : public Error {
 public:
  explicit InvariantError(const std::string &what)
      : Error(ExitCode::kInvariant, "internal invariant violated: " + what) {}
};

}  // namespace ripagg
