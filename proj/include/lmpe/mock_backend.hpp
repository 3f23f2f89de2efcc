#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "lmpe/backend.hpp"

namespace lmpe {

/// Deterministic tokenizer shared by the mock backend and the test stub
/// server: each token is a maximal whitespace run glued to the following
/// non-whitespace run ("Thus, the answer" -> ["Thus,", " the", " answer"]).
/// Concatenating the tokens always reproduces the input; "" gives no tokens.
std::vector<std::string> mock_tokenize(std::string_view text);

/// One scripted completion. A rule fires when the prompt equals
/// `exact_prompt` (if set) and contains every string in `prompt_contains`.
/// Rules are checked in order; the first match wins.
struct CompletionRule {
  std::optional<std::string> exact_prompt;
  std::vector<std::string> prompt_contains;
  std::string text;
};

/// One scripted score. Matching mirrors CompletionRule, on both the prefix
/// and the continuation. Exactly one of avg_nll / logprobs must be set:
/// avg_nll spreads -avg_nll over every token, logprobs lists per-token values
/// and must match the continuation's token count at use.
struct ScoreRule {
  std::optional<std::string> exact_prefix;
  std::vector<std::string> prefix_contains;
  std::optional<std::string> exact_continuation;
  std::vector<std::string> continuation_contains;
  std::optional<double> avg_nll;
  std::optional<std::vector<double>> logprobs;
};

/// Pure fallback rule: any pair not covered by the table is scored from a
/// stable hash of (prefix, continuation, salt) mapped into [nll_lo, nll_hi],
/// and any unscripted prompt completes to `completion_prefix` + 16 hex chars
/// of the prompt hash. This makes the mock total and reproducible across
/// processes and machines.
struct MockFallback {
  double nll_lo = 1.0;
  double nll_hi = 3.0;
  std::string completion_prefix = "step ";
};

/// Full mock specification. `logprob_shift` is added to every emitted token
/// logprob (table and fallback alike); shifting by c moves every avg_nll by
/// -c and must leave all downstream orderings unchanged.
struct MockSpec {
  std::uint64_t salt = 0;
  double logprob_shift = 0.0;
  MockFallback fallback;
  std::vector<CompletionRule> completions;
  std::vector<ScoreRule> scores;
};

/// Parses and validates a mock spec from its JSON form (see README for the
/// schema). Throws MalformedMockSpec.
MockSpec parse_mock_spec(const std::string& json_text);
MockSpec load_mock_spec(const std::string& path);

/// Table + fallback mock model. Thread-safe; every operation is a pure
/// function of (spec, inputs).
class MockBackend final : public Backend {
public:
  explicit MockBackend(MockSpec spec, int parallelism = 8);

  Completion complete(const std::string& prompt, const GenerationParams& params) override;
  ScoredText score(const std::string& prefix, const std::string& continuation) override;
  int parallelism() const override { return parallelism_; }

  const MockSpec& spec() const { return spec_; }

  /// Raw completion text for `prompt` before stop-sequence truncation.
  /// Exposed for the stub server, which applies the wire semantics itself.
  std::string raw_completion_text(const std::string& prompt, const GenerationParams& params) const;

  /// Per-token logprobs the mock assigns to `continuation` after `prefix`.
  std::vector<double> token_logprobs(const std::string& prefix, const std::string& continuation,
                                     std::size_t token_count) const;

private:
  MockSpec spec_;
  int parallelism_;
};

/// Convenience: fallback-only mock with the given range and salt.
BackendPtr make_fallback_mock(double nll_lo, double nll_hi, std::uint64_t salt = 0,
                              int parallelism = 8);

}  // namespace lmpe
