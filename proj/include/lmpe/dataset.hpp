#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "lmpe/filter.hpp"
#include "lmpe/types.hpp"

namespace lmpe {

/// A loaded QA dataset: questions plus the shared paragraph collection that
/// forms every question's knowledge pool. For a given question a pool
/// paragraph is tagged evidence when listed in its evidence_ids and
/// distractor otherwise.
struct Dataset {
  std::vector<Question> questions;
  std::vector<Paragraph> paragraphs;  // file order
  std::unordered_map<std::string, std::size_t> paragraph_index;

  const Paragraph& paragraph(const std::string& id) const {
    return paragraphs[paragraph_index.at(id)];
  }

  /// Tree-search eligibility: the question's reasoning is backed by at least
  /// one evidence paragraph (all ids are validated at load time).
  static bool fully_supported(const Question& q) { return !q.evidence_ids.empty(); }
};

/// Parses and validates the dataset JSON (schema in the README). Throws
/// SchemaViolation with a JSON pointer to the offending element, or
/// DanglingEvidenceId when a question references an unknown paragraph.
Dataset parse_dataset(const std::string& json_text);
Dataset load_dataset(const std::string& path);

/// One relevance-classification item; the dataset-level label balance is
/// exactly 50/50.
struct ClassificationItem {
  std::string question_id;
  std::string question_text;
  std::string paragraph_id;
  Relevance label = Relevance::irrelevant;
};

/// One ranking item: the question's true evidence paragraph hidden among
/// distractors drawn from other questions, position shuffled.
struct RankingItem {
  std::string question_id;
  std::string question_text;
  std::vector<std::string> paragraph_ids;
  std::size_t true_index = 0;
};

/// Samples `size` distinct questions (size must be even), pairs the first
/// half with one of their own evidence paragraphs and the second half with
/// another question's evidence, then shuffles the item order. Reproducible
/// from the seed.
std::vector<ClassificationItem> build_classification_benchmark(const Dataset& dataset,
                                                               std::size_t size,
                                                               std::uint64_t seed);

/// One item per fully supported question: its evidence paragraph plus
/// `distractors_per_item` unique paragraphs from other questions' evidence,
/// with the true position uniform under the seed.
std::vector<RankingItem> build_ranking_benchmark(const Dataset& dataset,
                                                 std::size_t distractors_per_item,
                                                 std::uint64_t seed);

/// Largest distractor count every fully supported question can satisfy; 0 for
/// datasets with no eligible questions.
std::size_t max_feasible_distractors(const Dataset& dataset);

// Benchmark file round-trip (schemas in the README). Writers emit canonical
// sorted-key JSON so files are byte-identical for a fixed seed.
std::string classification_to_json(const std::vector<ClassificationItem>& items,
                                   std::uint64_t seed);
std::string ranking_to_json(const std::vector<RankingItem>& items, std::uint64_t seed);
std::vector<RankingItem> ranking_from_json(const std::string& json_text);

}  // namespace lmpe
