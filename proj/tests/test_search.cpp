#include <doctest.h>

#include <map>

#include <nlohmann/json.hpp>
#include <set>
#include <sstream>

#include "lmpe/mock_backend.hpp"
#include "lmpe/search.hpp"
#include "support/reference_search.hpp"

using namespace lmpe;
using lmpe::test::reference_search;
using lmpe::test::RefResult;

namespace {

Question police_question() {
  Question q;
  q.id = "police";
  q.text = "Could the members of The Police perform lawful arrests?";
  q.gold_answer = Answer::no;
  return q;
}

struct PoliceScenario {
  Question question = police_question();
  std::vector<Paragraph> paragraphs;
  MockSpec spec;
  std::vector<std::string> steps;
};

/// The four-step walkthrough: band members -> not officers -> no arrests ->
/// recognized answer. Ten paragraphs, three of them relevant.
PoliceScenario police_scenario() {
  PoliceScenario s;
  const std::string q = s.question.text;

  Paragraph members{"p-members", "The Police members",
                    "The Police were an English rock band formed by Sting, Stewart Copeland, "
                    "Andy Summers, and early guitarist Henry Padovani."};
  Paragraph band{"p-band", "The Police",
                 "The Police were a band of musicians; its members were artists, not members of "
                 "any law enforcement agency."};
  Paragraph law{"p-law", "Arrest",
                "Only sworn police officers are authorised to perform lawful arrests of "
                "suspects."};
  s.paragraphs = {members, band, law};
  for (int i = 0; i < 7; ++i) {
    s.paragraphs.push_back(Paragraph{"p-filler" + std::to_string(i), "Filler",
                                     "Unrelated filler paragraph number " + std::to_string(i) +
                                         " about gardening techniques."});
  }

  const std::string s1 =
      "The members of The Police are Sting, Stewart Copeland, Andy Summers, and Henry Padovani.";
  const std::string s2 = "The members of The Police are not police officers.";
  const std::string s3 = "Thus, the members of The Police could not perform lawful arrests.";
  const std::string s4 = "Thus, the answer is no.";
  s.steps = {s1, s2, s3, s4};

  auto completion = [&](std::vector<std::string> needles, const std::string& text) {
    CompletionRule rule;
    rule.prompt_contains = std::move(needles);
    rule.text = text;
    s.spec.completions.push_back(rule);
  };
  completion({q, s3}, s4);
  completion({q, law.body, s2}, s3);
  completion({q, band.body, s1}, s2);
  completion({q, members.body}, s1);

  auto score = [&](const std::string& continuation, std::vector<std::string> prefixes,
                   double nll) {
    ScoreRule rule;
    rule.exact_continuation = continuation;
    rule.prefix_contains = std::move(prefixes);
    rule.avg_nll = nll;
    s.spec.scores.push_back(rule);
  };
  auto step_scores = [&](const std::string& step, const std::string& body) {
    score(step, {step}, 2.5);  // repetition stays unattractive
    score(step, {body, q}, 0.05);
    score(step, {body}, 2.0);
    score(step, {}, 2.5);
  };
  step_scores(s1, members.body);
  step_scores(s2, band.body);
  step_scores(s3, law.body);
  score(s4, {s3}, 0.05);
  score("Thus, the answer is no.", {q}, 0.1);
  score("Thus, the answer is yes.", {q}, 3.0);

  s.spec.fallback.nll_lo = 1.0;
  s.spec.fallback.nll_hi = 3.0;
  return s;
}

/// Small scripted instances for oracle equivalence; the flavor rotates with
/// the seed between forced-only, answer-at-any-depth, and answer-from-depth-2
/// behavior.
struct ScriptedInstance {
  Question question;
  std::vector<Paragraph> paragraphs;
  SearchConfig config;
  MockSpec spec;
};

ScriptedInstance scripted_instance(std::uint64_t seed) {
  ScriptedInstance inst;
  inst.question.id = "scripted-" + std::to_string(seed);
  inst.question.text = "Does scripted instance " + std::to_string(seed) + " behave?";

  const int paragraph_count = 2 + static_cast<int>(seed % 3);
  for (int i = 0; i < paragraph_count; ++i) {
    inst.paragraphs.push_back(
        Paragraph{"p" + std::to_string(i), "t",
                  "Scripted paragraph " + std::to_string(i) + " of instance " +
                      std::to_string(seed) + "."});
  }

  inst.config.max_steps = 2 + static_cast<int>(seed % 2);
  inst.config.target_complete = 1 + static_cast<int>(seed % 3);
  inst.config.max_expansions = 12;
  inst.config.criterion = seed % 2 == 0 ? RankCriterion::chain_avg_nll : RankCriterion::delta_sum;

  inst.spec.salt = seed;
  inst.spec.fallback.nll_lo = 1.0;
  inst.spec.fallback.nll_hi = 3.0;

  const std::uint64_t flavor = seed % 3;
  if (flavor == 1) {
    CompletionRule rule;
    rule.prompt_contains = {inst.question.text, inst.paragraphs[0].body};
    rule.text = "Here the answer is yes.";
    inst.spec.completions.push_back(rule);
  } else if (flavor == 2) {
    CompletionRule rule;
    rule.prompt_contains = {inst.question.text, inst.paragraphs.back().body, "step "};
    rule.text = "Therefore, answer: no";
    inst.spec.completions.push_back(rule);
  }
  return inst;
}

std::vector<std::uint64_t> expansion_ids(const SearchResult& result) {
  std::vector<std::uint64_t> ids;
  for (const SearchTraceEvent& e : result.trace) ids.push_back(e.expanded_chain);
  return ids;
}

Chain make_complete_chain(std::uint64_t id, Answer answer, double nll, double delta_sum_value) {
  Chain c;
  c.id = id;
  c.question_id = "q";
  c.status = ChainStatus::complete;
  c.answer = answer;
  // One step engineered to hit the requested scores: avg = nll, dP+dQ = value.
  c.steps.push_back(
      make_reasoning_step("s", "p", nll, nll - delta_sum_value / 2.0, nll - delta_sum_value / 2.0, 1));
  return c;
}

}  // namespace

TEST_CASE("answer detection matches the recognized surface forms") {
  CHECK(gives_answer("Thus, the answer is no.") == Answer::no);
  CHECK(gives_answer("The members of The Police are not police officers.") == std::nullopt);
  CHECK(gives_answer("ANSWER: YES") == Answer::yes);

  CHECK(gives_answer("I think the answer is yes, probably.") == Answer::yes);
  CHECK(gives_answer("the  Answer   is  NO") == Answer::no);
  CHECK(gives_answer("answer: \"yes\"") == Answer::yes);
  CHECK(gives_answer("the answer is nothing") == std::nullopt);
  CHECK(gives_answer("the answer is now clear") == std::nullopt);
  CHECK(gives_answer("no answer given") == std::nullopt);
  CHECK(gives_answer("") == std::nullopt);
  // First match wins.
  CHECK(gives_answer("the answer is yes. later: the answer is no.") == Answer::yes);
}

TEST_CASE("force_answer compares the fixed sentences and ties to no") {
  Question q;
  q.id = "q";
  q.text = "Forced?";

  auto mock_with = [](double nll_yes, double nll_no) {
    MockSpec spec;
    ScoreRule yes;
    yes.exact_continuation = forced_answer_text(Answer::yes);
    yes.avg_nll = nll_yes;
    ScoreRule no;
    no.exact_continuation = forced_answer_text(Answer::no);
    no.avg_nll = nll_no;
    spec.scores.push_back(yes);
    spec.scores.push_back(no);
    return MockBackend(spec);
  };

  MockBackend no_wins = mock_with(1.4, 0.9);
  CHECK(force_answer(q, {"step one"}, no_wins) == Answer::no);
  MockBackend tied = mock_with(1.0, 1.0);
  CHECK(force_answer(q, {"step one"}, tied) == Answer::no);

  // Antisymmetry: swapping the two scores flips the answer (ties excluded).
  for (int i = 0; i < 20; ++i) {
    const double a = 0.1 * (i + 1);
    const double b = 2.0 - 0.07 * i;
    if (a == b) continue;
    MockBackend forward = mock_with(a, b);
    MockBackend swapped = mock_with(b, a);
    const Answer x = force_answer(q, std::vector<std::string>{}, forward);
    const Answer y = force_answer(q, std::vector<std::string>{}, swapped);
    CHECK(x != y);
  }
}

TEST_CASE("generate_step produces the Police first step with its scores") {
  const PoliceScenario s = police_scenario();
  MockBackend mock(s.spec);
  Chain root;
  root.question_id = s.question.id;
  SearchConfig config;

  const ReasoningStep step = generate_step(s.question, root, s.paragraphs[0], mock, config);
  CHECK(step.text ==
        "The members of The Police are Sting, Stewart Copeland, Andy Summers, and Henry "
        "Padovani.");
  CHECK(step.paragraph_id == "p-members");
  CHECK(step.nll_with_both == doctest::Approx(0.05));
  CHECK(step.delta_paragraph < 0.0);
  CHECK(step.delta_question < 0.0);
  CHECK(step.token_count == mock_tokenize(step.text).size());
}

TEST_CASE("a step copied verbatim from the paragraph scores lower with it in context") {
  Question q;
  q.id = "q";
  q.text = "Copying?";
  Paragraph p{"p", "t", "The sky is blue during the day."};

  MockSpec spec;
  CompletionRule rule;
  rule.prompt_contains = {p.body};
  rule.text = "The sky is blue during the day.";
  spec.completions.push_back(rule);
  ScoreRule with_p;
  with_p.exact_continuation = rule.text;
  with_p.prefix_contains = {p.body};
  with_p.avg_nll = 0.2;  // copying: very likely given the paragraph
  spec.scores.push_back(with_p);
  ScoreRule without_p;
  without_p.exact_continuation = rule.text;
  without_p.avg_nll = 1.8;
  spec.scores.push_back(without_p);
  MockBackend mock(spec);

  Chain root;
  root.question_id = q.id;
  const ReasoningStep step = generate_step(q, root, p, mock, SearchConfig{});
  CHECK(step.nll_with_both < step.nll_question_only);
  CHECK(step.delta_paragraph < 0.0);
}

TEST_CASE("identical scores across the three contexts give zero deltas") {
  Question q;
  q.id = "q";
  q.text = "Flat?";
  Paragraph p{"p", "t", "flat paragraph body."};
  MockSpec spec;
  CompletionRule rule;
  rule.prompt_contains = {p.body};
  rule.text = "a flat step.";
  spec.completions.push_back(rule);
  ScoreRule flat;
  flat.exact_continuation = "a flat step.";
  flat.avg_nll = 1.0;
  spec.scores.push_back(flat);
  MockBackend mock(spec);

  Chain root;
  root.question_id = q.id;
  const ReasoningStep step = generate_step(q, root, p, mock, SearchConfig{});
  CHECK(step.delta_paragraph == 0.0);
  CHECK(step.delta_question == 0.0);
}

TEST_CASE("whitespace-only generations raise EmptyStep") {
  Question q;
  q.id = "q";
  q.text = "Blank?";
  Paragraph p{"p", "t", "blank paragraph."};
  MockSpec spec;
  CompletionRule rule;
  rule.prompt_contains = {p.body};
  rule.text = "   ";
  spec.completions.push_back(rule);
  MockBackend mock(spec);

  Chain root;
  root.question_id = q.id;
  CHECK_THROWS_AS(generate_step(q, root, p, mock, SearchConfig{}), EmptyStep);
}

TEST_CASE("smallest instance: one paragraph, immediate answer") {
  Question q;
  q.id = "tiny";
  q.text = "Tiny?";
  Paragraph p{"p0", "t", "tiny paragraph body."};
  MockSpec spec;
  CompletionRule rule;
  rule.prompt_contains = {p.body};
  rule.text = "Thus, the answer is yes.";
  spec.completions.push_back(rule);
  MockBackend mock(spec);

  SearchConfig config;
  config.target_complete = 1;
  const SearchResult result = tree_search(q, {p}, config, mock);

  CHECK(result.trace.size() == 1);
  REQUIRE(result.complete.size() == 1);
  CHECK(result.complete[0].status == ChainStatus::complete);
  CHECK(result.answer == Answer::yes);
  CHECK(result.total_lm_calls == 4);
  CHECK(result.selected_chain == 1);
}

TEST_CASE("tree search requires paragraphs") {
  Question q;
  q.id = "q";
  q.text = "None?";
  MockBackend mock{MockSpec{}};
  CHECK_THROWS_AS(tree_search(q, {}, SearchConfig{}, mock), NoParagraphs);
}

TEST_CASE("the Police walkthrough: four steps ending in the recognized answer") {
  const PoliceScenario s = police_scenario();

  for (RankCriterion criterion : {RankCriterion::chain_avg_nll, RankCriterion::delta_sum}) {
    MockBackend mock(s.spec);
    SearchConfig config;
    config.criterion = criterion;
    const SearchResult result = tree_search(s.question, s.paragraphs, config, mock);

    CHECK(result.answer == *s.question.gold_answer);  // evaluated correct
    CHECK(result.trace.size() == 4);                  // root, s1, s2, s3 expansions

    const Chain* selected = nullptr;
    for (const Chain& c : result.complete) {
      if (c.id == result.selected_chain) selected = &c;
    }
    REQUIRE(selected != nullptr);  // member of the complete set
    REQUIRE(selected->steps.size() == 4);
    for (std::size_t i = 0; i < 4; ++i) {
      CHECK(selected->steps[i].text == s.steps[i]);
    }
    CHECK(selected->steps[0].paragraph_id == "p-members");
    CHECK(selected->steps[1].paragraph_id == "p-band");
    CHECK(selected->steps[2].paragraph_id == "p-law");
    CHECK(result.total_lm_calls == 4 * 4 * 10);
  }
}

TEST_CASE("trace invariants: best-first expansion, node conservation, monotone completes") {
  const PoliceScenario s = police_scenario();
  MockBackend mock(s.spec);
  SearchConfig config;
  const SearchResult result = tree_search(s.question, s.paragraphs, config, mock);

  // Replay the open set from the trace: scores of open chains are derived
  // from the recorded child outcomes.
  std::map<std::uint64_t, double> open_scores;  // chain id -> score
  open_scores[0] = -std::numeric_limits<double>::infinity();
  std::map<std::uint64_t, std::vector<double>> nlls;
  nlls[0] = {};

  std::size_t last_complete = 0;
  for (const SearchTraceEvent& event : result.trace) {
    // Best-first: the expanded chain's score is minimal over the open set.
    REQUIRE(open_scores.count(event.expanded_chain));
    const double expanded = open_scores[event.expanded_chain];
    for (const auto& [id, score] : open_scores) {
      CHECK(expanded <= score);
    }
    CHECK(event.expanded_score == expanded);

    // Conservation: every child lands in exactly one of the two sets.
    CHECK(event.children.size() == s.paragraphs.size());
    std::size_t became_open = 0, became_complete = 0;
    for (const ChildOutcome& child : event.children) {
      std::vector<double> chain_nlls = nlls[event.expanded_chain];
      chain_nlls.push_back(child.nll_with_both);
      if (child.status == ChainStatus::open) {
        ++became_open;
        nlls[child.chain_id] = chain_nlls;
        double sum = 0.0;
        for (double v : chain_nlls) sum += v;
        open_scores[child.chain_id] = sum / static_cast<double>(chain_nlls.size());
      } else {
        ++became_complete;
        CHECK(child.answer.has_value());
      }
    }
    CHECK(became_open + became_complete == event.children.size());

    open_scores.erase(event.expanded_chain);
    CHECK(event.open_size == open_scores.size());
    CHECK(event.complete_size >= last_complete);  // non-decreasing
    last_complete = event.complete_size;
  }

  // Every complete chain ends in a recognized or forced answer; no chain
  // exceeds the step cap.
  for (const Chain& c : result.complete) {
    CHECK(c.answer.has_value());
    CHECK(c.steps.size() <= static_cast<std::size_t>(config.max_steps));
    if (c.status == ChainStatus::complete) {
      CHECK(gives_answer(c.steps.back().text) == c.answer);
    }
  }
}

TEST_CASE("oracle equivalence on scripted small instances") {
  int exhausted_seen = 0;
  for (std::uint64_t seed = 0; seed < 12; ++seed) {
    ScriptedInstance inst = scripted_instance(seed);
    MockBackend real_mock(inst.spec);
    MockBackend ref_mock(inst.spec);

    RefResult expected = reference_search(inst.question, inst.paragraphs, inst.config, ref_mock);
    if (expected.exhausted) {
      ++exhausted_seen;
      CHECK_THROWS_AS(tree_search(inst.question, inst.paragraphs, inst.config, real_mock),
                      BudgetExhaustedWithNoAnswer);
      continue;
    }

    const SearchResult result = tree_search(inst.question, inst.paragraphs, inst.config, real_mock);
    CHECK(expansion_ids(result) == expected.expansion_order);
    CHECK(result.total_lm_calls == expected.lm_calls);
    CHECK(result.answer == expected.final_answer);

    REQUIRE(result.complete.size() == expected.complete.size());
    for (std::size_t i = 0; i < expected.complete.size(); ++i) {
      CHECK(result.complete[i].id == expected.complete[i].id);
      CHECK((result.complete[i].status == ChainStatus::forced) == expected.complete[i].forced);
      CHECK(result.complete[i].answer == expected.complete[i].answer);
      REQUIRE(result.complete[i].steps.size() == expected.complete[i].steps.size());
      for (std::size_t j = 0; j < expected.complete[i].steps.size(); ++j) {
        CHECK(result.complete[i].steps[j].text == expected.complete[i].steps[j].text);
        CHECK(result.complete[i].steps[j].paragraph_id ==
              expected.complete[i].steps[j].paragraph_id);
      }
    }
  }
  // The instance family must exercise the forced path somewhere.
  CHECK(exhausted_seen == 0);  // small max_steps: forcing completes chains instead
}

TEST_CASE("termination with a never-answering mock and exact call accounting") {
  Question q;
  q.id = "stubborn";
  q.text = "Will it ever answer?";
  std::vector<Paragraph> paragraphs;
  for (int i = 0; i < 3; ++i) {
    paragraphs.push_back(Paragraph{"p" + std::to_string(i), "t",
                                   "stubborn paragraph " + std::to_string(i) + "."});
  }
  MockSpec spec;  // pure fallback: never emits an answer
  spec.salt = 77;
  MockBackend mock(spec);

  SearchConfig config;
  config.max_steps = 4;
  config.target_complete = 4;
  config.max_expansions = 50;
  const SearchResult result = tree_search(q, paragraphs, config, mock);

  CHECK(result.trace.size() <= static_cast<std::size_t>(config.max_expansions));
  std::size_t forced = 0;
  for (const Chain& c : result.complete) {
    CHECK(c.status == ChainStatus::forced);  // answers only via the step cap
    CHECK(c.steps.size() == static_cast<std::size_t>(config.max_steps));
    ++forced;
  }
  CHECK(forced >= static_cast<std::size_t>(config.target_complete));

  // total = sum over expansions of 4*|paragraphs| + 2 per forced chain, and
  // the backend's own counters agree.
  int expected = 0;
  for (const SearchTraceEvent& e : result.trace) expected += e.lm_calls;
  CHECK(result.total_lm_calls == expected);
  const int generations = static_cast<int>(result.trace.size()) * 3;
  CHECK(mock.complete_calls() == static_cast<std::uint64_t>(generations));
  CHECK(mock.score_calls() == static_cast<std::uint64_t>(3 * generations + 2 * static_cast<int>(forced)));
  CHECK(result.total_lm_calls == 4 * generations + 2 * static_cast<int>(forced));
}

TEST_CASE("exhausted budget with zero complete chains throws, carrying the best open chain") {
  Question q;
  q.id = "deep";
  q.text = "Too deep?";
  std::vector<Paragraph> paragraphs = {{"p0", "t", "deep paragraph zero."},
                                       {"p1", "t", "deep paragraph one."}};
  MockSpec spec;
  spec.salt = 5;
  MockBackend mock(spec);

  SearchConfig config;
  config.max_steps = 50;  // unreachable cap
  config.target_complete = 1;
  config.max_expansions = 6;

  try {
    tree_search(q, paragraphs, config, mock);
    FAIL("expected BudgetExhaustedWithNoAnswer");
  } catch (const BudgetExhaustedWithNoAnswer& e) {
    CHECK(e.trace.size() == 6);
    CHECK(e.total_lm_calls == 6 * 4 * 2);
    CHECK_FALSE(e.best_open.steps.empty());
    // The caller can still force an answer on the best open chain.
    const Answer forced = force_answer(q, e.best_open, mock);
    CHECK((forced == Answer::yes || forced == Answer::no));
  }
}

TEST_CASE("search results are identical at parallelism 1 and 16") {
  const PoliceScenario s = police_scenario();
  MockBackend serial(s.spec, 1);
  MockBackend wide(s.spec, 16);
  SearchConfig config;

  const SearchResult a = tree_search(s.question, s.paragraphs, config, serial);
  const SearchResult b = tree_search(s.question, s.paragraphs, config, wide);

  std::ostringstream ja, jb;
  write_search_jsonl(a, config, ja);
  write_search_jsonl(b, config, jb);
  CHECK(ja.str() == jb.str());
}

TEST_CASE("expansion order is invariant under uniform logprob shifts") {
  for (double c : {-3.0, -1.0, 2.0}) {
    for (RankCriterion criterion : {RankCriterion::chain_avg_nll, RankCriterion::delta_sum}) {
      PoliceScenario s = police_scenario();
      SearchConfig config;
      config.criterion = criterion;

      MockBackend base(s.spec);
      const SearchResult reference = tree_search(s.question, s.paragraphs, config, base);

      MockSpec shifted_spec = s.spec;
      shifted_spec.logprob_shift = c;
      MockBackend shifted(shifted_spec);
      const SearchResult moved = tree_search(s.question, s.paragraphs, config, shifted);

      CHECK(expansion_ids(moved) == expansion_ids(reference));
      CHECK(moved.answer == reference.answer);
      CHECK(moved.selected_chain == reference.selected_chain);
    }
  }
}

TEST_CASE("excluding used paragraphs keeps chains from reusing them") {
  const PoliceScenario s = police_scenario();
  MockBackend mock(s.spec);
  SearchConfig config;
  config.exclude_used_paragraphs = true;
  const SearchResult result = tree_search(s.question, s.paragraphs, config, mock);
  for (const Chain& c : result.complete) {
    std::set<std::string> used;
    for (const ReasoningStep& step : c.steps) {
      CHECK(used.insert(step.paragraph_id).second);
    }
  }
}

TEST_CASE("select_final_answer: singleton, argmin, and majority tie rules") {
  // Singleton.
  SearchResult single;
  single.complete = {make_complete_chain(1, Answer::yes, 1.0, -0.5)};
  CHECK(select_final_answer(single, RankCriterion::delta_sum) == Answer::yes);

  // Argmin under delta_sum: (yes, -0.9) beats (no, -0.2).
  SearchResult argmin;
  argmin.complete = {make_complete_chain(1, Answer::yes, 1.0, -0.9),
                     make_complete_chain(2, Answer::no, 1.0, -0.2)};
  CHECK(select_final_answer(argmin, RankCriterion::delta_sum) == Answer::yes);

  // Three tied chains answering {yes, yes, no}: majority yes.
  SearchResult tied;
  tied.complete = {make_complete_chain(1, Answer::yes, 1.0, -0.4),
                   make_complete_chain(2, Answer::yes, 1.0, -0.4),
                   make_complete_chain(3, Answer::no, 1.0, -0.4)};
  CHECK(select_final_answer(tied, RankCriterion::delta_sum) == Answer::yes);
  const Chain& picked = select_final_chain(tied.complete, RankCriterion::delta_sum);
  CHECK(picked.id == 1);  // lowest id among majority holders

  // Exact two-way tie: no.
  SearchResult even;
  even.complete = {make_complete_chain(1, Answer::yes, 1.0, -0.4),
                   make_complete_chain(2, Answer::no, 1.0, -0.4)};
  CHECK(select_final_answer(even, RankCriterion::delta_sum) == Answer::no);

  SearchResult empty;
  CHECK_THROWS_AS(select_final_answer(empty, RankCriterion::delta_sum), NoCompleteChains);
}

TEST_CASE("search JSONL round-trips through the expected line shapes") {
  const PoliceScenario s = police_scenario();
  MockBackend mock(s.spec);
  SearchConfig config;
  const SearchResult result = tree_search(s.question, s.paragraphs, config, mock);

  std::ostringstream out;
  write_search_jsonl(result, config, out);
  std::istringstream in(out.str());
  std::string line;
  std::size_t lines = 0;
  while (std::getline(in, line)) {
    const auto j = nlohmann::json::parse(line);  // every line is valid JSON
    REQUIRE(j.contains("type"));
    ++lines;
  }
  CHECK(lines == result.trace.size() + 2);  // meta + events + result
}
