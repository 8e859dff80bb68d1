#pragma once

#include <stdexcept>
#include <string>

namespace tracemine {

/// Base class for all toolkit errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A trace line is not a parseable record or violates the record contract.
class MalformedRecord : public Error {
 public:
  MalformedRecord(int line_no, const std::string& detail)
      : Error("line " + std::to_string(line_no) + ": " + detail),
        line_no_(line_no),
        detail_(detail) {}
  int line_no() const { return line_no_; }
  const std::string& detail() const { return detail_; }

 private:
  int line_no_;
  std::string detail_;
};

class EmptySession : public Error {
 public:
  EmptySession() : Error("session contains no records") {}
};

class NoCandidates : public Error {
 public:
  NoCandidates() : Error("empty candidate list") {}
};

class UnknownSignal : public Error {
 public:
  explicit UnknownSignal(const std::string& kind)
      : Error("signal kind has no lexicon entries: " + kind) {}
};

class LexiconError : public Error {
 public:
  using Error::Error;
};

class EmptySegment : public Error {
 public:
  EmptySegment() : Error("segment is empty") {}
};

class InfeasiblePlant : public Error {
 public:
  using Error::Error;
};

class InvariantViolation : public Error {
 public:
  using Error::Error;
};

class UnwritableOutput : public Error {
 public:
  using Error::Error;
};

}  // namespace tracemine
