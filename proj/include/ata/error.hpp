#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace ata {

// Base class for every error raised by this library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Malformed textual input. `line` is 1-based when known (0 otherwise);
// `byte_offset` points into the offending line.
class ParseError : public Error {
 public:
  explicit ParseError(const std::string& what, std::size_t line = 0,
                      std::size_t byte_offset = 0)
      : Error(what), line(line), byte_offset(byte_offset) {}
  std::size_t line;
  std::size_t byte_offset;
};

// Trace-set level ingestion problems (empty input, duplicate span ids).
class IngestError : public Error {
 public:
  using Error::Error;
};

// A cycle among task dependencies or parent links; carries the member ids.
class CycleError : public Error {
 public:
  CycleError(const std::string& what, std::vector<std::string> cycle)
      : Error(what), cycle(std::move(cycle)) {}
  std::vector<std::string> cycle;
};

// A depends_on target that never appears in the trace.
class MissingDependencyError : public Error {
 public:
  using Error::Error;
};

// Structurally invalid task-flow file.
class FlowFileError : public Error {
 public:
  using Error::Error;
};

// Expression evaluation failures, with the byte position where relevant.
class ExprError : public Error {
 public:
  enum class Kind { Syntax, DivideByZero, UnknownSnippet };
  ExprError(Kind kind, const std::string& what, std::size_t pos = 0)
      : Error(what), kind(kind), pos(pos) {}
  Kind kind;
  std::size_t pos;
};

// Benchmark directory problems: missing files, unknown case ids/candidates.
class BenchError : public Error {
 public:
  using Error::Error;
};

// Ground truth that contradicts itself (summary vs failure list).
class InconsistentGtError : public BenchError {
 public:
  using BenchError::BenchError;
};

// Suite configuration that cannot be satisfied.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Statistics preconditions (fewer than two runs/values/graphs).
class StatsError : public Error {
 public:
  using Error::Error;
};

}  // namespace ata
