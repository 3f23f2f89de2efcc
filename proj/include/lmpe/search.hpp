#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "lmpe/backend.hpp"
#include "lmpe/types.hpp"

namespace lmpe {

/// What happened to one generated child during an expansion.
struct ChildOutcome {
  std::uint64_t chain_id = 0;
  std::string paragraph_id;
  std::string step_text;
  double nll_with_both = 0.0;
  double nll_question_only = 0.0;
  double nll_paragraph_only = 0.0;
  double delta_paragraph = 0.0;
  double delta_question = 0.0;
  ChainStatus status = ChainStatus::open;
  std::optional<Answer> answer;
};

/// One search iteration: which chain was expanded, every child outcome
/// (ordered by paragraph index), and the set sizes afterwards.
struct SearchTraceEvent {
  int iteration = 0;
  std::uint64_t expanded_chain = 0;
  double expanded_score = 0.0;  // -infinity for the root
  int lm_calls = 0;             // calls spent in this iteration
  std::vector<ChildOutcome> children;
  std::size_t open_size = 0;
  std::size_t complete_size = 0;
};

struct SearchResult {
  std::string question_id;
  std::vector<Chain> complete;
  Answer answer = Answer::no;
  std::uint64_t selected_chain = 0;
  int total_lm_calls = 0;
  std::vector<SearchTraceEvent> trace;
};

/// The search ran out of budget (or of open chains) with zero complete
/// chains. Carries the best open chain so the caller can force-answer it,
/// plus the trace for auditing.
class BudgetExhaustedWithNoAnswer : public Error {
public:
  BudgetExhaustedWithNoAnswer(std::string message, Chain best_open,
                              std::vector<SearchTraceEvent> trace, int total_lm_calls)
      : Error(std::move(message)),
        best_open(std::move(best_open)),
        trace(std::move(trace)),
        total_lm_calls(total_lm_calls) {}

  Chain best_open;
  std::vector<SearchTraceEvent> trace;
  int total_lm_calls;
};

// Prompt renderers. Prefixes end with a newline so generated/scored text
// starts on a fresh line; prior chain steps are rendered in every context,
// each without its own conditioning paragraph (only the current paragraph is
// ever in context).
std::string render_step_prompt(const Question& question, const Chain& chain,
                               const Paragraph& paragraph);
std::string render_question_prefix(const Question& question, const Chain& chain);
std::string render_paragraph_prefix(const Paragraph& paragraph, const Chain& chain);
std::string render_force_prefix(const Question& question,
                                const std::vector<std::string>& step_texts);

/// Fixed answer sentences compared by force_answer, matching the surface form
/// the step generator is expected to produce.
inline const char* forced_answer_text(Answer a) {
  return a == Answer::yes ? "Thus, the answer is yes." : "Thus, the answer is no.";
}

/// Generates the next step of `chain` conditioned on `paragraph`, then scores
/// it in the with-both / question-only / paragraph-only contexts (1 completion
/// + 3 scorings). Throws EmptyStep when generation is all whitespace.
ReasoningStep generate_step(const Question& question, const Chain& chain,
                            const Paragraph& paragraph, Backend& backend,
                            const SearchConfig& config);

/// Recognizes "the answer is yes/no" (also "answer: yes/no"), case-insensitive,
/// anywhere in the step; first match wins.
std::optional<Answer> gives_answer(const std::string& step_text);

/// Resolves a chain at the step cap by comparing the NLL of the fixed yes/no
/// sentences after the chain context; ties answer no.
Answer force_answer(const Question& question, const std::vector<std::string>& step_texts,
                    Backend& backend);
Answer force_answer(const Question& question, const Chain& chain, Backend& backend);

/// Best-first search over evidence-conditioned reasoning chains:
/// repeatedly expands the lowest-scoring open chain (ties by creation order)
/// with one child per paragraph, moves answered children to the complete set,
/// force-answers children that hit max_steps, and stops once
/// config.target_complete chains are complete, the open set empties, or
/// config.max_expansions iterations elapse.
SearchResult tree_search(const Question& question, const std::vector<Paragraph>& paragraphs,
                         const SearchConfig& config, Backend& backend);

/// Answer of the best-scoring complete chain; exact score ties are resolved
/// by majority vote over the tied chains, then by no.
Answer select_final_answer(const SearchResult& result, RankCriterion criterion,
                           const ChainScoreOptions& options = {});

/// The chain select_final_answer would pick (lowest id among winners).
const Chain& select_final_chain(const std::vector<Chain>& complete, RankCriterion criterion,
                                const ChainScoreOptions& options = {});

// JSON-lines serialization of a search run: one meta line, one line per
// expansion event, one result line (schema in the README).
void write_search_jsonl(const SearchResult& result, const SearchConfig& config, std::ostream& out,
                        const std::string& note = "");
void write_exhausted_jsonl(const BudgetExhaustedWithNoAnswer& exhausted,
                           const std::string& question_id, const SearchConfig& config,
                           Answer fallback_answer, std::ostream& out);

}  // namespace lmpe
