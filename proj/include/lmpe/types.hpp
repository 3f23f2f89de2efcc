#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "lmpe/errors.hpp"
#include "lmpe/scored_text.hpp"

namespace lmpe {

/// Yes/no answer space (binary questions only).
enum class Answer { yes, no };

inline const char* to_string(Answer a) { return a == Answer::yes ? "yes" : "no"; }

inline std::optional<Answer> answer_from_string(const std::string& s) {
  if (s == "yes") return Answer::yes;
  if (s == "no") return Answer::no;
  return std::nullopt;
}

/// One evidence unit.
struct Paragraph {
  std::string id;
  std::string title;
  std::string body;
};

/// One QA item. golden_facts are annotator statements carrying exactly the
/// knowledge needed for the answer; evidence_ids point into the paragraph
/// collection of the same dataset.
struct Question {
  std::string id;
  std::string text;
  std::optional<Answer> gold_answer;
  std::vector<std::string> evidence_ids;
  std::vector<std::string> golden_facts;
};

/// Which chain-ranking rule the search uses. Lower score = better under both.
enum class RankCriterion { chain_avg_nll, delta_sum };

inline const char* to_string(RankCriterion c) {
  return c == RankCriterion::chain_avg_nll ? "chain_avg_nll" : "delta_sum";
}

/// One generated reasoning step with its conditioning paragraph and the three
/// context scores plus their differences.
struct ReasoningStep {
  std::string text;
  std::string paragraph_id;
  double nll_with_both = 0.0;      // step scored with paragraph and question in context
  double nll_question_only = 0.0;  // paragraph removed
  double nll_paragraph_only = 0.0; // question removed
  double delta_paragraph = 0.0;    // nll_with_both - nll_question_only
  double delta_question = 0.0;     // nll_with_both - nll_paragraph_only
  std::size_t token_count = 0;     // tokens of the with-both scoring (for weighted averages)
};

/// Builds a step whose delta fields satisfy the difference identities by
/// construction.
inline ReasoningStep make_reasoning_step(std::string text, std::string paragraph_id,
                                         double nll_with_both, double nll_question_only,
                                         double nll_paragraph_only, std::size_t token_count) {
  const DeltaScores d = delta_scores(nll_with_both, nll_question_only, nll_paragraph_only);
  ReasoningStep step;
  step.text = std::move(text);
  step.paragraph_id = std::move(paragraph_id);
  step.nll_with_both = nll_with_both;
  step.nll_question_only = nll_question_only;
  step.nll_paragraph_only = nll_paragraph_only;
  step.delta_paragraph = d.delta_paragraph;
  step.delta_question = d.delta_question;
  step.token_count = token_count;
  return step;
}

enum class ChainStatus {
  open,      // still expandable
  complete,  // final step text contains a recognized answer
  forced     // answer fixed by NLL comparison at the step cap
};

inline const char* to_string(ChainStatus s) {
  switch (s) {
    case ChainStatus::open: return "open";
    case ChainStatus::complete: return "complete";
    default: return "forced";
  }
}

/// A path through the search tree: an ordered step sequence rooted at the
/// question. `id` is the creation-order identifier the search assigns (root
/// is 0); it doubles as the tie-break key when scores are equal.
struct Chain {
  std::uint64_t id = 0;
  std::string question_id;
  std::vector<ReasoningStep> steps;
  ChainStatus status = ChainStatus::open;
  std::optional<Answer> answer;
};

/// Aggregation switches for chain_score (see SearchConfig).
struct ChainScoreOptions {
  bool delta_aggregate_mean = false;    // mean of per-step (dP+dQ) instead of sum
  bool token_weighted_chain_avg = false;  // weight per-step averages by token count
};

/// Score of a chain under a criterion; lower is better. The empty chain maps
/// to -infinity so the bare question is always expanded first.
inline double chain_score(const Chain& chain, RankCriterion criterion,
                          const ChainScoreOptions& options = {}) {
  if (chain.steps.empty()) {
    return -std::numeric_limits<double>::infinity();
  }
  if (criterion == RankCriterion::chain_avg_nll) {
    if (options.token_weighted_chain_avg) {
      double weighted = 0.0;
      double tokens = 0.0;
      for (const ReasoningStep& s : chain.steps) {
        weighted += s.nll_with_both * static_cast<double>(s.token_count);
        tokens += static_cast<double>(s.token_count);
      }
      return tokens > 0.0 ? weighted / tokens : 0.0;
    }
    double sum = 0.0;
    for (const ReasoningStep& s : chain.steps) sum += s.nll_with_both;
    return sum / static_cast<double>(chain.steps.size());
  }
  double sum = 0.0;
  for (const ReasoningStep& s : chain.steps) sum += s.delta_paragraph + s.delta_question;
  if (options.delta_aggregate_mean) {
    return sum / static_cast<double>(chain.steps.size());
  }
  return sum;
}

/// Knobs of the tree search. Defaults: top 10 paragraphs, 5-step cap, stop
/// once 4 chains are complete, hard budget of 50 expansions.
struct SearchConfig {
  int top_n_paragraphs = 10;
  int max_steps = 5;
  int target_complete = 4;
  int max_expansions = 50;
  std::vector<std::string> step_stop_sequences = {"\n"};
  RankCriterion criterion = RankCriterion::chain_avg_nll;
  ChainScoreOptions score_options;
  bool exclude_used_paragraphs = false;  // skip paragraphs already in the chain
  int step_max_tokens = 128;

  void validate() const {
    if (top_n_paragraphs < 1) throw Error("top_n_paragraphs must be >= 1");
    if (max_steps < 1) throw Error("max_steps must be >= 1");
    if (target_complete < 1) throw Error("target_complete must be >= 1");
    if (max_expansions < target_complete) {
      throw Error("max_expansions must be >= target_complete");
    }
  }
};

}  // namespace lmpe
