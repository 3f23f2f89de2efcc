#pragma once

#include <string>
#include <vector>

#include "lmpe/types.hpp"

namespace lmpe {

/// Prompt text assets. The defaults are compiled in; any of them can be
/// overridden from a directory of plain-text files (scoring.txt,
/// classify.txt, no_cot.txt, cot.txt), which is how the few-shot exemplars
/// stay editable without a rebuild.
///
/// Rendering convention used across the engine: prefixes end with whitespace
/// and scored continuations start with non-whitespace, so echo-scoring
/// backends split cleanly at the prefix boundary.
struct PromptSet {
  /// Prefix for ranking: {paragraph} is replaced with the paragraph body and
  /// the question text is the scored continuation.
  std::string scoring_template;

  /// Relevance classification prompt with {paragraph} and {question}
  /// placeholders; the fixed continuations "yes" / "no" are compared.
  std::string classify_template;

  /// Few-shot preamble for direct answering (no reasoning text).
  std::string no_cot_preamble;

  /// Few-shot preamble for chain-of-reasoning answering.
  std::string cot_preamble;

  static PromptSet defaults();

  /// defaults() with per-file overrides from `dir` (missing files keep the
  /// default; unreadable dir throws Error).
  static PromptSet load_dir(const std::string& dir);
};

/// Replaces every occurrence of `placeholder` in `tmpl`.
std::string render_template(std::string tmpl, const std::string& placeholder,
                            const std::string& value);

/// Ranking prefix for one paragraph (continuation: question text).
std::string render_scoring_prefix(const PromptSet& prompts, const Paragraph& paragraph);

/// Classification prompt (continuations: "yes" / "no").
std::string render_classify_prompt(const PromptSet& prompts, const Question& question,
                                   const Paragraph& paragraph);

/// "Facts:" block used by the golden-facts modes; empty facts give "".
std::string render_facts_block(const std::vector<std::string>& facts);

/// Direct-answer prompt; facts may be empty. Continuations: "yes" / "no".
std::string render_answer_prompt(const PromptSet& prompts, const Question& question,
                                 const std::vector<std::string>& facts);

/// Reasoning prompt completed by the model up to a newline.
std::string render_reasoning_prompt(const PromptSet& prompts, const Question& question,
                                    const std::vector<std::string>& facts);

}  // namespace lmpe
