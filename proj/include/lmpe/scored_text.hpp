#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "lmpe/errors.hpp"

namespace lmpe {

/// One scored token of a continuation. Logprobs are natural-log units.
/// Probability-valid backends emit logprob <= 0, but the mock may emit any
/// finite real (e.g. shifted tables), so consumers must not assume sign.
struct TokenScore {
  std::string token;
  double logprob = 0.0;
};

/// A text continuation with its per-token log-probabilities.
///
/// avg_nll = -total_logprob / token count. Length is measured in tokens, not
/// characters, matching how LM APIs report logprobs. Lower avg_nll means the
/// backend finds the text more likely.
struct ScoredText {
  std::string text;
  std::vector<TokenScore> tokens;
  double total_logprob = 0.0;
  double avg_nll = 0.0;

  std::size_t token_count() const { return tokens.size(); }
};

/// Validating constructor: rejects zero tokens and non-finite logprobs, and
/// derives the total / average so the arithmetic invariants hold by
/// construction.
inline ScoredText make_scored_text(std::string text, std::vector<TokenScore> tokens) {
  if (tokens.empty()) {
    throw EmptyContinuation("scored text requires at least one token");
  }
  double total = 0.0;
  for (const TokenScore& t : tokens) {
    if (!std::isfinite(t.logprob)) {
      throw NonFiniteScore("non-finite token logprob for token '" + t.token + "'");
    }
    total += t.logprob;
  }
  ScoredText out;
  out.text = std::move(text);
  out.tokens = std::move(tokens);
  out.total_logprob = total;
  out.avg_nll = -total / static_cast<double>(out.tokens.size());
  return out;
}

/// Average NLL differences of a step when the paragraph or the question is
/// dropped from its scoring context. Negative delta_paragraph means the step
/// leans on the paragraph; negative delta_question means it stays on topic.
struct DeltaScores {
  double delta_paragraph = 0.0;
  double delta_question = 0.0;
};

inline DeltaScores delta_scores(double nll_with_both, double nll_question_only,
                                double nll_paragraph_only) {
  if (!std::isfinite(nll_with_both) || !std::isfinite(nll_question_only) ||
      !std::isfinite(nll_paragraph_only)) {
    throw NonFiniteScore("delta_scores requires finite inputs");
  }
  return DeltaScores{nll_with_both - nll_question_only, nll_with_both - nll_paragraph_only};
}

}  // namespace lmpe
