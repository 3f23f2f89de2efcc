#pragma once

// Independent reference for the tree search, used as the oracle on small
// instances. It re-implements the control loop the slow, obvious way: every
// chain is kept in one flat list, the next chain to expand is found by a full
// linear scan, and scores are re-aggregated from scratch on every comparison.
// It shares only the prompt renderers and the backend with the real search
// (the mock tables key on rendered prompts), so the scheduling, bookkeeping
// and aggregation logic is checked end to end.

#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "lmpe/backend.hpp"
#include "lmpe/search.hpp"
#include "lmpe/types.hpp"

namespace lmpe::test {

struct RefChain {
  std::uint64_t id = 0;
  std::vector<ReasoningStep> steps;
  bool open = true;
  bool forced = false;
  std::optional<Answer> answer;
};

struct RefResult {
  std::vector<std::uint64_t> expansion_order;
  std::vector<RefChain> complete;  // completion order
  std::optional<Answer> final_answer;
  int lm_calls = 0;
  bool exhausted = false;
};

inline double ref_chain_score(const RefChain& chain, RankCriterion criterion) {
  if (chain.steps.empty()) return -std::numeric_limits<double>::infinity();
  double sum = 0.0;
  if (criterion == RankCriterion::chain_avg_nll) {
    for (const ReasoningStep& s : chain.steps) sum += s.nll_with_both;
    return sum / static_cast<double>(chain.steps.size());
  }
  for (const ReasoningStep& s : chain.steps) sum += s.delta_paragraph + s.delta_question;
  return sum;
}

inline RefResult reference_search(const Question& question,
                                  const std::vector<Paragraph>& paragraphs,
                                  const SearchConfig& config, Backend& backend) {
  RefResult result;
  std::vector<RefChain> chains;
  chains.push_back(RefChain{0, {}, true, false, std::nullopt});
  std::uint64_t next_id = 1;

  std::size_t completed = 0;
  for (int iteration = 0; iteration < config.max_expansions; ++iteration) {
    if (completed >= static_cast<std::size_t>(config.target_complete)) break;

    // Linear scan for the open chain with minimal (score, id).
    const RefChain* best = nullptr;
    for (const RefChain& c : chains) {
      if (!c.open) continue;
      if (!best || ref_chain_score(c, config.criterion) < ref_chain_score(*best, config.criterion) ||
          (ref_chain_score(c, config.criterion) == ref_chain_score(*best, config.criterion) &&
           c.id < best->id)) {
        best = &c;
      }
    }
    if (!best) break;

    const std::uint64_t expanded_id = best->id;
    result.expansion_order.push_back(expanded_id);
    RefChain expanded = *best;
    for (RefChain& c : chains) {
      if (c.id == expanded_id) c.open = false;
    }

    Chain proxy;  // renderers take the engine's chain type
    proxy.question_id = question.id;
    proxy.steps = expanded.steps;

    for (const Paragraph& p : paragraphs) {
      const ReasoningStep step = generate_step(question, proxy, p, backend, config);
      result.lm_calls += 4;

      RefChain child;
      child.id = next_id++;
      child.steps = expanded.steps;
      child.steps.push_back(step);

      if (std::optional<Answer> answer = gives_answer(step.text)) {
        child.open = false;
        child.answer = answer;
        result.complete.push_back(child);
        ++completed;
      } else if (child.steps.size() >= static_cast<std::size_t>(config.max_steps)) {
        std::vector<std::string> texts;
        for (const ReasoningStep& s : child.steps) texts.push_back(s.text);
        child.open = false;
        child.forced = true;
        child.answer = force_answer(question, texts, backend);
        result.lm_calls += 2;
        result.complete.push_back(child);
        ++completed;
      }
      chains.push_back(child);
    }
  }

  if (result.complete.empty()) {
    result.exhausted = true;
    return result;
  }

  // Final answer: minimal score, exact ties resolved by majority then no.
  double best_score = std::numeric_limits<double>::infinity();
  for (const RefChain& c : result.complete) {
    RefChain scored = c;
    const double s = ref_chain_score(scored, config.criterion);
    if (s < best_score) best_score = s;
  }
  std::vector<const RefChain*> tied;
  for (const RefChain& c : result.complete) {
    if (ref_chain_score(c, config.criterion) == best_score) tied.push_back(&c);
  }
  if (tied.size() == 1) {
    result.final_answer = tied[0]->answer;
  } else {
    std::size_t yes = 0;
    for (const RefChain* c : tied) {
      if (c->answer == Answer::yes) ++yes;
    }
    result.final_answer = yes * 2 > tied.size() ? Answer::yes : Answer::no;
  }
  return result;
}

}  // namespace lmpe::test
