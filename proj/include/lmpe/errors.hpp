#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace lmpe {

/// Base class for every error raised by the engine. Callers that do not care
/// about the precise failure can catch this one type.
class Error : public std::runtime_error {
public:
  explicit Error(std::string message) : std::runtime_error(std::move(message)) {}
};

/// Transport-level failure after the configured number of retries.
class BackendUnreachable : public Error {
public:
  BackendUnreachable(std::string message, std::string request_id)
      : Error(std::move(message)), request_id(std::move(request_id)) {}
  std::string request_id;
};

/// The backend answered, but the response violates the wire contract
/// (missing fields, token/text mismatch, non-finite logprobs, 4xx status).
class ProtocolViolation : public Error {
public:
  ProtocolViolation(std::string message, std::string request_id)
      : Error(std::move(message)), request_id(std::move(request_id)) {}
  std::string request_id;
};

/// The backend returned a completion with zero tokens.
class EmptyCompletion : public Error {
public:
  EmptyCompletion(std::string message, std::string request_id)
      : Error(std::move(message)), request_id(std::move(request_id)) {}
  std::string request_id;
};

/// A continuation handed to score() tokenizes to zero tokens.
class EmptyContinuation : public Error {
public:
  using Error::Error;
};

/// Echoed tokenization does not split cleanly at the prefix boundary and the
/// backend is configured strict.
class PrefixSliceMismatch : public Error {
public:
  PrefixSliceMismatch(std::string message, std::string request_id)
      : Error(std::move(message)), request_id(std::move(request_id)) {}
  std::string request_id;
};

/// A mock table file (or in-memory spec) fails validation.
class MalformedMockSpec : public Error {
public:
  using Error::Error;
};

/// A score that must be finite is NaN or infinite.
class NonFiniteScore : public Error {
public:
  using Error::Error;
};

/// Generative relevance classification produced neither "yes" nor "no".
class AmbiguousGeneration : public Error {
public:
  using Error::Error;
};

/// Step generation produced only whitespace.
class EmptyStep : public Error {
public:
  using Error::Error;
};

/// tree_search was invoked with an empty paragraph list.
class NoParagraphs : public Error {
public:
  using Error::Error;
};

/// select_final_answer was invoked with zero complete chains.
class NoCompleteChains : public Error {
public:
  using Error::Error;
};

/// Dataset JSON did not match the documented schema; `path` is a JSON
/// pointer to the offending element.
class SchemaViolation : public Error {
public:
  SchemaViolation(std::string message, std::string path)
      : Error(message + " (at " + path + ")"), path(std::move(path)) {}
  std::string path;
};

/// A question references a paragraph id that is not in the file.
class DanglingEvidenceId : public Error {
public:
  using Error::Error;
};

/// A benchmark builder was asked for more items than the corpus supports.
class InsufficientData : public Error {
public:
  using Error::Error;
};

/// Rethrows the in-flight exception with `note` prefixed to its message,
/// preserving the dynamic type. Call from a catch block only.
[[noreturn]] inline void annotate_and_rethrow(const std::string& note) {
  try {
    throw;
  } catch (const BackendUnreachable& e) {
    throw BackendUnreachable(note + e.what(), e.request_id);
  } catch (const ProtocolViolation& e) {
    throw ProtocolViolation(note + e.what(), e.request_id);
  } catch (const EmptyCompletion& e) {
    throw EmptyCompletion(note + e.what(), e.request_id);
  } catch (const PrefixSliceMismatch& e) {
    throw PrefixSliceMismatch(note + e.what(), e.request_id);
  } catch (const EmptyContinuation& e) {
    throw EmptyContinuation(note + e.what());
  } catch (const MalformedMockSpec& e) {
    throw MalformedMockSpec(note + e.what());
  } catch (const NonFiniteScore& e) {
    throw NonFiniteScore(note + e.what());
  } catch (const AmbiguousGeneration& e) {
    throw AmbiguousGeneration(note + e.what());
  } catch (const Error& e) {
    throw Error(note + e.what());
  }
}

}  // namespace lmpe
