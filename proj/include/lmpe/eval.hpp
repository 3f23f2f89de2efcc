#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "lmpe/backend.hpp"
#include "lmpe/dataset.hpp"
#include "lmpe/prompts.hpp"
#include "lmpe/types.hpp"

namespace lmpe {

/// Pipeline modes of the QA evaluation. no_cot answers directly by yes/no NLL
/// comparison; cot generates a reasoning line first; the tree modes run the
/// evidence filter then the chain search; the golden modes put the annotated
/// facts in context (upper-bound baselines).
enum class EvalMode { no_cot, cot, tree_nll, tree_delta, golden_facts, golden_facts_cot };

const char* to_string(EvalMode mode);
std::optional<EvalMode> eval_mode_from_string(const std::string& s);

struct ItemOutcome {
  std::string question_id;
  std::string gold;       // "yes" / "no"
  std::string predicted;  // empty when the item errored or was skipped
  bool correct = false;
  bool skipped = false;   // excluded from aggregates (e.g. not fully supported)
  std::string error;      // backend failure message; counted incorrect
  std::string note;       // e.g. "forced_fallback" when the budget ran out
  std::uint64_t lm_calls = 0;
  std::size_t true_rank = 0;  // filter evaluation only
};

struct EvalReport {
  std::string mode;
  std::uint64_t seed = 0;
  std::vector<ItemOutcome> items;
  std::size_t evaluated = 0;
  std::size_t correct = 0;
  std::size_t errored = 0;
  std::size_t skipped = 0;
  double accuracy = 0.0;                 // correct / evaluated, exactly
  std::vector<double> top_n_accuracy;    // filter reports: index n-1 = top-n
  std::uint64_t lm_calls = 0;
  nlohmann::json config_snapshot;        // resolved run configuration
  // Kept apart from the deterministic payload; report writers place these
  // under a "timing" key that comparisons may drop.
  double wall_clock_ms = 0.0;
  std::string started_at;
};

struct EvalOptions {
  PromptSet prompts = PromptSet::defaults();
  SearchConfig search;
  int workers = 1;           // item-level parallelism
  bool lenient = false;      // filter failure handling inside tree modes
  std::string trace_dir;     // tree modes write one JSONL per item when set
  std::uint64_t seed = 0;
  nlohmann::json config_snapshot = nlohmann::json::object();
};

/// Top-n accuracy of finding the true evidence paragraph, n = 1..max_n.
/// Bodies are resolved through `dataset`.
EvalReport eval_filter_topn(const std::vector<RankingItem>& items, const Dataset& dataset,
                            Backend& backend, std::size_t max_n, const EvalOptions& options = {});

/// Runs one QA pipeline mode over the dataset. Items that error at the
/// backend are reported and counted incorrect, never dropped; items a mode
/// cannot evaluate (tree modes on unsupported questions) are reported as
/// skipped and excluded from the aggregates.
EvalReport eval_qa(const Dataset& dataset, EvalMode mode, Backend& backend,
                   const EvalOptions& options = {});

/// Published full-scale reference accuracies (OPT-175B), recorded in reports
/// as non-reproducible context lines.
struct ReferenceLine {
  std::string label;
  double accuracy;
};
std::vector<ReferenceLine> reference_lines(const std::string& mode);

// Report rendering. JSON is canonical (sorted keys) so identical evaluations
// produce identical bytes; the human rendering is aligned columns; the curve
// CSV is (n, accuracy) rows.
nlohmann::json report_to_json(const EvalReport& report);
std::string report_to_text(const EvalReport& report);
std::string topn_to_csv(const EvalReport& report);

/// Writes report.json / report.txt (and topn.csv when the report carries a
/// curve) under `out_dir`, creating it if needed.
void write_report_files(const EvalReport& report, const std::string& out_dir);

}  // namespace lmpe
