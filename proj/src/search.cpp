#include "lmpe/search.hpp"

#include <algorithm>
#include <cctype>
#include <limits>
#include <regex>

#include <nlohmann/json.hpp>

#include "lmpe/parallel.hpp"

namespace lmpe {

using nlohmann::json;

namespace {

std::string trim(const std::string& s) {
  std::size_t begin = 0;
  std::size_t end = s.size();
  auto is_space = [](char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; };
  while (begin < end && is_space(s[begin])) ++begin;
  while (end > begin && is_space(s[end - 1])) --end;
  return s.substr(begin, end - begin);
}

void append_steps(std::string& out, const Chain& chain) {
  for (const ReasoningStep& step : chain.steps) {
    out += step.text;
    out += '\n';
  }
}

}  // namespace

std::string render_step_prompt(const Question& question, const Chain& chain,
                               const Paragraph& paragraph) {
  std::string out = paragraph.body + "\n\nQuestion: " + question.text + "\n";
  append_steps(out, chain);
  return out;
}

std::string render_question_prefix(const Question& question, const Chain& chain) {
  std::string out = "Question: " + question.text + "\n";
  append_steps(out, chain);
  return out;
}

std::string render_paragraph_prefix(const Paragraph& paragraph, const Chain& chain) {
  std::string out = paragraph.body + "\n\n";
  append_steps(out, chain);
  return out;
}

std::string render_force_prefix(const Question& question,
                                const std::vector<std::string>& step_texts) {
  std::string out = "Question: " + question.text + "\n";
  for (const std::string& text : step_texts) {
    out += text;
    out += '\n';
  }
  return out;
}

ReasoningStep generate_step(const Question& question, const Chain& chain,
                            const Paragraph& paragraph, Backend& backend,
                            const SearchConfig& config) {
  if (chain.status != ChainStatus::open) throw Error("generate_step requires an open chain");
  if (chain.steps.size() >= static_cast<std::size_t>(config.max_steps)) {
    throw Error("generate_step requires chain length < max_steps");
  }

  GenerationParams params;
  params.max_tokens = config.step_max_tokens;
  params.stop_sequences = config.step_stop_sequences;

  const std::string prompt = render_step_prompt(question, chain, paragraph);
  const Completion completion = backend.complete(prompt, params);
  const std::string text = trim(completion.text);
  if (text.empty()) {
    throw EmptyStep("generation produced only whitespace for paragraph '" + paragraph.id + "'");
  }

  const ScoredText with_both = backend.score(prompt, text);
  const ScoredText question_only = backend.score(render_question_prefix(question, chain), text);
  const ScoredText paragraph_only = backend.score(render_paragraph_prefix(paragraph, chain), text);

  return make_reasoning_step(text, paragraph.id, with_both.avg_nll, question_only.avg_nll,
                             paragraph_only.avg_nll, with_both.token_count());
}

std::optional<Answer> gives_answer(const std::string& step_text) {
  static const std::regex pattern(R"((the\s+answer\s+is|answer\s*:)\s*"?(yes|no)\b)",
                                  std::regex::icase);
  std::smatch match;
  if (!std::regex_search(step_text, match, pattern)) return std::nullopt;
  std::string word = match[2].str();
  for (char& c : word) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return word == "yes" ? Answer::yes : Answer::no;
}

Answer force_answer(const Question& question, const std::vector<std::string>& step_texts,
                    Backend& backend) {
  const std::string prefix = render_force_prefix(question, step_texts);
  const double nll_yes = backend.score(prefix, forced_answer_text(Answer::yes)).avg_nll;
  const double nll_no = backend.score(prefix, forced_answer_text(Answer::no)).avg_nll;
  return nll_yes < nll_no ? Answer::yes : Answer::no;  // tie answers no
}

Answer force_answer(const Question& question, const Chain& chain, Backend& backend) {
  std::vector<std::string> texts;
  texts.reserve(chain.steps.size());
  for (const ReasoningStep& step : chain.steps) texts.push_back(step.text);
  return force_answer(question, texts, backend);
}

namespace {

/// Index of the open chain to expand: minimal (score, creation id).
std::size_t best_open_index(const std::vector<Chain>& open, RankCriterion criterion,
                            const ChainScoreOptions& options) {
  std::size_t best = 0;
  double best_score = chain_score(open[0], criterion, options);
  for (std::size_t i = 1; i < open.size(); ++i) {
    const double score = chain_score(open[i], criterion, options);
    if (score < best_score || (score == best_score && open[i].id < open[best].id)) {
      best = i;
      best_score = score;
    }
  }
  return best;
}

}  // namespace

SearchResult tree_search(const Question& question, const std::vector<Paragraph>& paragraphs,
                         const SearchConfig& config, Backend& backend) {
  config.validate();
  if (paragraphs.empty()) throw NoParagraphs("tree_search requires at least one paragraph");

  std::vector<Chain> open;
  std::vector<Chain> complete;
  std::vector<SearchTraceEvent> trace;
  std::uint64_t next_id = 1;
  int total_calls = 0;

  Chain root;
  root.id = 0;
  root.question_id = question.id;
  open.push_back(std::move(root));

  int iteration = 0;
  while (complete.size() < static_cast<std::size_t>(config.target_complete) && !open.empty() &&
         iteration < config.max_expansions) {
    const std::size_t pick = best_open_index(open, config.criterion, config.score_options);
    Chain expanded = std::move(open[pick]);
    open.erase(open.begin() + static_cast<std::ptrdiff_t>(pick));

    std::vector<Paragraph> candidates;
    if (config.exclude_used_paragraphs) {
      for (const Paragraph& p : paragraphs) {
        const bool used = std::any_of(expanded.steps.begin(), expanded.steps.end(),
                                      [&](const ReasoningStep& s) { return s.paragraph_id == p.id; });
        if (!used) candidates.push_back(p);
      }
      if (candidates.empty()) continue;  // chain cannot be extended; drop it
    } else {
      candidates = paragraphs;
    }

    SearchTraceEvent event;
    event.iteration = iteration;
    event.expanded_chain = expanded.id;
    event.expanded_score = chain_score(expanded, config.criterion, config.score_options);

    // One child per paragraph; generation and scoring fan out concurrently,
    // results are ordered by paragraph index.
    std::vector<ReasoningStep> steps =
        parallel_map(candidates, backend.parallelism(), [&](std::size_t, const Paragraph& p) {
          return generate_step(question, expanded, p, backend, config);
        });
    int calls = 4 * static_cast<int>(candidates.size());

    for (ReasoningStep& step : steps) {
      Chain child;
      child.id = next_id++;
      child.question_id = question.id;
      child.steps = expanded.steps;
      child.steps.push_back(std::move(step));

      ChildOutcome outcome;
      outcome.chain_id = child.id;
      const ReasoningStep& added = child.steps.back();
      outcome.paragraph_id = added.paragraph_id;
      outcome.step_text = added.text;
      outcome.nll_with_both = added.nll_with_both;
      outcome.nll_question_only = added.nll_question_only;
      outcome.nll_paragraph_only = added.nll_paragraph_only;
      outcome.delta_paragraph = added.delta_paragraph;
      outcome.delta_question = added.delta_question;

      if (std::optional<Answer> answer = gives_answer(added.text)) {
        child.status = ChainStatus::complete;
        child.answer = answer;
      } else if (child.steps.size() >= static_cast<std::size_t>(config.max_steps)) {
        child.status = ChainStatus::forced;
        child.answer = force_answer(question, child, backend);
        calls += 2;
      }

      outcome.status = child.status;
      outcome.answer = child.answer;
      event.children.push_back(std::move(outcome));

      if (child.status == ChainStatus::open) {
        open.push_back(std::move(child));
      } else {
        complete.push_back(std::move(child));
      }
    }

    event.lm_calls = calls;
    event.open_size = open.size();
    event.complete_size = complete.size();
    trace.push_back(std::move(event));
    total_calls += calls;
    ++iteration;
  }

  if (complete.empty()) {
    Chain best_open;
    best_open.question_id = question.id;
    if (!open.empty()) {
      best_open = open[best_open_index(open, config.criterion, config.score_options)];
    }
    throw BudgetExhaustedWithNoAnswer(
        "search spent its budget (" + std::to_string(iteration) +
            " expansion(s)) with zero complete chains for question '" + question.id + "'",
        std::move(best_open), std::move(trace), total_calls);
  }

  SearchResult result;
  result.question_id = question.id;
  result.complete = std::move(complete);
  result.trace = std::move(trace);
  result.total_lm_calls = total_calls;
  const Chain& selected =
      select_final_chain(result.complete, config.criterion, config.score_options);
  result.selected_chain = selected.id;
  result.answer = *selected.answer;
  return result;
}

const Chain& select_final_chain(const std::vector<Chain>& complete, RankCriterion criterion,
                                const ChainScoreOptions& options) {
  if (complete.empty()) throw NoCompleteChains("no complete chains to select from");

  double best = std::numeric_limits<double>::infinity();
  for (const Chain& c : complete) {
    best = std::min(best, chain_score(c, criterion, options));
  }
  std::vector<const Chain*> tied;
  for (const Chain& c : complete) {
    if (chain_score(c, criterion, options) == best) tied.push_back(&c);
  }
  if (tied.size() == 1) return *tied[0];

  // Majority vote over the tied chains; a further tie answers no.
  std::size_t yes = 0;
  for (const Chain* c : tied) {
    if (c->answer == Answer::yes) ++yes;
  }
  const Answer majority = yes * 2 > tied.size() ? Answer::yes : Answer::no;
  for (const Chain* c : tied) {
    if (c->answer == majority) return *c;
  }
  return *tied[0];  // unreachable: some tied chain carries the majority answer
}

Answer select_final_answer(const SearchResult& result, RankCriterion criterion,
                           const ChainScoreOptions& options) {
  return *select_final_chain(result.complete, criterion, options).answer;
}

namespace {

json chain_to_json(const Chain& chain) {
  json steps = json::array();
  for (const ReasoningStep& s : chain.steps) {
    steps.push_back({{"paragraph", s.paragraph_id},
                     {"text", s.text},
                     {"nll_with_both", s.nll_with_both},
                     {"nll_question_only", s.nll_question_only},
                     {"nll_paragraph_only", s.nll_paragraph_only},
                     {"delta_paragraph", s.delta_paragraph},
                     {"delta_question", s.delta_question}});
  }
  return json{{"chain", chain.id},
              {"status", to_string(chain.status)},
              {"answer", chain.answer ? json(to_string(*chain.answer)) : json()},
              {"steps", std::move(steps)}};
}

json meta_line(const std::string& question_id, const SearchConfig& config) {
  return json{{"type", "meta"},
              {"question_id", question_id},
              {"criterion", to_string(config.criterion)},
              {"config",
               {{"top_n_paragraphs", config.top_n_paragraphs},
                {"max_steps", config.max_steps},
                {"target_complete", config.target_complete},
                {"max_expansions", config.max_expansions}}}};
}

json event_line(const SearchTraceEvent& event) {
  json children = json::array();
  for (const ChildOutcome& c : event.children) {
    children.push_back({{"chain", c.chain_id},
                        {"paragraph", c.paragraph_id},
                        {"step", c.step_text},
                        {"nll_with_both", c.nll_with_both},
                        {"nll_question_only", c.nll_question_only},
                        {"nll_paragraph_only", c.nll_paragraph_only},
                        {"delta_paragraph", c.delta_paragraph},
                        {"delta_question", c.delta_question},
                        {"status", to_string(c.status)},
                        {"answer", c.answer ? json(to_string(*c.answer)) : json()}});
  }
  // -infinity (the root sentinel) serializes as null.
  return json{{"type", "expansion"},
              {"iteration", event.iteration},
              {"expanded_chain", event.expanded_chain},
              {"expanded_score", event.expanded_score},
              {"lm_calls", event.lm_calls},
              {"children", std::move(children)},
              {"open_size", event.open_size},
              {"complete_size", event.complete_size}};
}

}  // namespace

void write_search_jsonl(const SearchResult& result, const SearchConfig& config, std::ostream& out,
                        const std::string& note) {
  out << meta_line(result.question_id, config).dump() << '\n';
  for (const SearchTraceEvent& event : result.trace) {
    out << event_line(event).dump() << '\n';
  }
  json complete = json::array();
  for (const Chain& c : result.complete) complete.push_back(chain_to_json(c));
  json line{{"type", "result"},
            {"answer", to_string(result.answer)},
            {"selected_chain", result.selected_chain},
            {"total_lm_calls", result.total_lm_calls},
            {"complete", std::move(complete)}};
  if (!note.empty()) line["note"] = note;
  out << line.dump() << '\n';
}

void write_exhausted_jsonl(const BudgetExhaustedWithNoAnswer& exhausted,
                           const std::string& question_id, const SearchConfig& config,
                           Answer fallback_answer, std::ostream& out) {
  out << meta_line(question_id, config).dump() << '\n';
  for (const SearchTraceEvent& event : exhausted.trace) {
    out << event_line(event).dump() << '\n';
  }
  json line{{"type", "result"},
            {"answer", to_string(fallback_answer)},
            {"selected_chain", json()},
            {"total_lm_calls", exhausted.total_lm_calls + 2},
            {"complete", json::array()},
            {"note", "budget_exhausted_forced"},
            {"forced_open_chain", chain_to_json(exhausted.best_open)}};
  out << line.dump() << '\n';
}

}  // namespace lmpe
