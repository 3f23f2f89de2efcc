#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "lmpe/scored_text.hpp"

namespace lmpe {

/// Decoding parameters for complete(). temperature 0 = greedy; a deterministic
/// backend must then be a pure function of the prompt. seed only matters to
/// backends that sample (the mock folds it into fallback completions when
/// temperature > 0).
struct GenerationParams {
  int max_tokens = 128;
  std::vector<std::string> stop_sequences;
  double temperature = 0.0;
  std::uint64_t seed = 0;

  void validate() const {
    if (max_tokens < 1) throw Error("max_tokens must be >= 1");
    if (temperature < 0.0) throw Error("temperature must be >= 0");
  }
};

enum class BackendKind { mock, http };

/// Connection settings for backend construction. endpoint is required iff
/// kind == http.
struct BackendDescriptor {
  BackendKind kind = BackendKind::mock;
  std::string endpoint;
  std::string model_name;
  int parallelism = 1;
  std::chrono::milliseconds timeout{30000};
  int retries = 0;
  int retry_base_ms = 100;   // first backoff delay; doubles per attempt
  bool retry_jitter = false; // hash-derived jitter on top of the backoff
  bool strict_echo = false;  // error instead of warn on prefix-boundary straddle

  void validate() const {
    if (parallelism < 1) throw Error("parallelism must be >= 1");
    if (retries < 0) throw Error("retries must be >= 0");
    const bool has_endpoint = !endpoint.empty();
    if ((kind == BackendKind::http) != has_endpoint) {
      throw Error("endpoint must be set exactly when kind is http");
    }
  }
};

/// A prompt completion together with the scores of exactly the returned text.
struct Completion {
  std::string text;
  ScoredText scored;
};

/// Uniform interface to any model that can (a) complete a prompt and
/// (b) return per-token log-probabilities of a continuation under a prefix.
///
/// Implementations must be safely shareable across concurrent callers; at most
/// parallelism() requests run at once. Tokenization is the backend's
/// responsibility: the engine never tokenizes text itself.
class Backend {
public:
  virtual ~Backend() = default;

  /// Generates a continuation of `prompt`. The result honors
  /// params.stop_sequences (stop text excluded) and `scored` covers exactly
  /// the returned text.
  virtual Completion complete(const std::string& prompt, const GenerationParams& params) = 0;

  /// Per-token logprobs of `continuation` conditioned on `prefix`. Prefix
  /// tokens are never part of the result.
  virtual ScoredText score(const std::string& prefix, const std::string& continuation) = 0;

  virtual int parallelism() const = 0;

  /// Call counters, for budget accounting in tests and reports.
  std::uint64_t complete_calls() const { return complete_calls_.load(); }
  std::uint64_t score_calls() const { return score_calls_.load(); }

protected:
  std::atomic<std::uint64_t> complete_calls_{0};
  std::atomic<std::uint64_t> score_calls_{0};
};

using BackendPtr = std::shared_ptr<Backend>;

}  // namespace lmpe
