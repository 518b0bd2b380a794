#pragma once

#include <stdexcept>
#include <string>

namespace prmkit {

// Base for every error this library throws. Subclasses are grouped by what
// the CLI maps them to: usage (1), I/O (2), backend (3).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class UsageError : public Error {
 public:
  using Error::Error;
};

class InvalidArgument : public UsageError {
 public:
  using UsageError::UsageError;
};

class EmptyInput : public UsageError {
 public:
  EmptyInput() : UsageError("empty input") {}
  using UsageError::UsageError;
};

class IOFailure : public Error {
 public:
  using Error::Error;
};

// --- backend family -------------------------------------------------------

class BackendError : public Error {
 public:
  using Error::Error;
};

class TransportError : public BackendError {
 public:
  using BackendError::BackendError;
};

class BackendRefusal : public BackendError {
 public:
  BackendRefusal(int status, const std::string& body)
      : BackendError("backend refused request (HTTP " + std::to_string(status) + "): " + body),
        status_(status) {}
  int status() const noexcept { return status_; }

 private:
  int status_;
};

class UnsupportedBackend : public BackendError {
 public:
  using BackendError::BackendError;
};

class ScriptMiss : public BackendError {
 public:
  using BackendError::BackendError;
};

class CacheCorrupt : public Error {
 public:
  using Error::Error;
};

// --- verification / search -----------------------------------------------

class NoVerdictFound : public Error {
 public:
  NoVerdictFound() : Error("text contains no boxed verdict") {}
};

class DegenerateMass : public Error {
 public:
  DegenerateMass() : Error("p(yes) + p(no) is zero; the scoring pathway returned no mass") {}
};

class AllChainsFailed : public Error {
 public:
  using Error::Error;
};

class EmptyScores : public UsageError {
 public:
  EmptyScores() : UsageError("step score sequence is empty") {}
};

class NoCandidates : public Error {
 public:
  NoCandidates() : Error("generator returned no candidate steps for any beam") {}
  using Error::Error;
};

class MissingSubset : public Error {
 public:
  using Error::Error;
};

}  // namespace prmkit
