#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

#include "lmpe/backend.hpp"
#include "lmpe/prompts.hpp"
#include "lmpe/types.hpp"

namespace lmpe {

/// One paragraph after ranking: average NLL of the question following the
/// paragraph, plus the final 0-based position. Ranks are sorted ascending by
/// (avg_nll, input index); ties keep input order.
struct RankedParagraph {
  std::string paragraph_id;
  double avg_nll = 0.0;
  std::size_t rank = 0;
};

struct FilterOptions {
  PromptSet prompts = PromptSet::defaults();
  /// strict: the first failing paragraph aborts the ranking. lenient: failed
  /// paragraphs are excluded with a warning collected in `failed_ids`.
  bool lenient = false;
  /// 0 = use backend.parallelism() for the fan-out over paragraphs.
  int workers = 0;
  /// Filled in lenient mode with the ids that were dropped (if non-null).
  std::vector<std::string>* failed_ids = nullptr;
};

/// Scores the question after every paragraph and sorts ascending by average
/// NLL. Deterministic regardless of request completion order.
std::vector<RankedParagraph> rank_paragraphs(const Question& question,
                                             const std::vector<Paragraph>& paragraphs,
                                             Backend& backend, const FilterOptions& options = {});

/// Prefix of length min(n, size); preserves order and ranks.
std::vector<RankedParagraph> top_n(const std::vector<RankedParagraph>& ranking, std::size_t n);

enum class Relevance { relevant, irrelevant };

inline const char* to_string(Relevance r) {
  return r == Relevance::relevant ? "relevant" : "irrelevant";
}

enum class ClassifyMode {
  nll_comparison,  // compare avg NLL of the fixed "yes" / "no" continuations
  generative       // generate and parse the first word
};

/// The prompting classifier baseline: is `paragraph` relevant to `question`?
/// Equal NLLs classify as irrelevant (conservative tie rule). Generative mode
/// raises AmbiguousGeneration when the completion starts with neither word.
Relevance classify_relevance_blackbox(const Question& question, const Paragraph& paragraph,
                                      const std::string& prompt_template, Backend& backend,
                                      ClassifyMode mode = ClassifyMode::nll_comparison);

/// Row-stochastic question-paragraph affinity matrix: entry (i, j) is the
/// softmax over paragraphs of the negated question avg NLL, so each row sums
/// to 1.
struct LikelihoodMatrix {
  std::vector<std::string> question_ids;
  std::vector<std::string> paragraph_ids;
  std::vector<std::vector<double>> weights;  // [question][paragraph]
};

LikelihoodMatrix likelihood_matrix(const std::vector<Question>& questions,
                                   const std::vector<Paragraph>& paragraphs, Backend& backend,
                                   const FilterOptions& options = {});

/// CSV with question ids as row headers and paragraph ids as column headers.
void write_csv(const LikelihoodMatrix& matrix, std::ostream& out);

}  // namespace lmpe
