#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>

#include "lmpe/eval.hpp"
#include "lmpe/filter.hpp"
#include "lmpe/mock_backend.hpp"

using namespace lmpe;

namespace {

const char* kToyPath = LMPE_SOURCE_DIR "/data/toy_dataset.json";
const char* kToyMock = LMPE_SOURCE_DIR "/data/toy_mock.json";
const char* kToyMockInverted = LMPE_SOURCE_DIR "/data/toy_mock_inverted.json";

Dataset tiny_ranking_dataset(std::size_t question_count) {
  // One private evidence paragraph per question; every other question's
  // paragraph is a distractor candidate.
  std::string qs = "[";
  std::string ps = "[";
  for (std::size_t i = 0; i < question_count; ++i) {
    if (i > 0) {
      qs += ",";
      ps += ",";
    }
    ps += "{\"id\":\"p" + std::to_string(i) + "\",\"text\":\"Pool paragraph number " +
          std::to_string(i) + ".\"}";
    qs += "{\"id\":\"q" + std::to_string(i) + "\",\"question\":\"Ranked question " +
          std::to_string(i) + "?\",\"answer\":\"yes\",\"evidence\":[\"p" + std::to_string(i) +
          "\"]}";
  }
  return parse_dataset("{\"questions\":" + qs + "],\"paragraphs\":" + ps + "]}");
}

/// Oracle mock for ranking items: the true pairing scores lowest.
MockBackend oracle_for(const Dataset& ds) {
  MockSpec spec;
  for (const Question& q : ds.questions) {
    ScoreRule rule;
    rule.exact_continuation = q.text;
    rule.prefix_contains = {ds.paragraph(q.evidence_ids[0]).body};
    rule.avg_nll = 0.1;
    spec.scores.push_back(rule);
  }
  spec.fallback.nll_lo = 1.0;
  spec.fallback.nll_hi = 3.0;
  return MockBackend(spec);
}

nlohmann::json strip_timing(nlohmann::json j) {
  j.erase("timing");
  return j;
}

}  // namespace

TEST_CASE("adversarial uniform mock classifies at the exact analytic expectation") {
  // With constant scores every comparison ties and the conservative rule
  // answers irrelevant, so accuracy on a balanced set is exactly the
  // irrelevant fraction: 1/2.
  const Dataset ds = load_dataset(kToyPath);
  const auto items = build_classification_benchmark(ds, 20, 13);

  MockSpec uniform;
  uniform.fallback.nll_lo = 2.0;
  uniform.fallback.nll_hi = 2.0;
  MockBackend mock(uniform);

  const std::string tmpl = PromptSet::defaults().classify_template;
  std::size_t correct = 0;
  for (const ClassificationItem& item : items) {
    Question q;
    q.id = item.question_id;
    q.text = item.question_text;
    const Relevance predicted =
        classify_relevance_blackbox(q, ds.paragraph(item.paragraph_id), tmpl, mock);
    CHECK(predicted == Relevance::irrelevant);  // ties always answer irrelevant
    if (predicted == item.label) ++correct;
  }
  CHECK(correct * 2 == items.size());  // exactly 50%
}

TEST_CASE("perfect-oracle filtering reaches top-1 accuracy 1.0") {
  const Dataset ds = tiny_ranking_dataset(20);
  const auto items = build_ranking_benchmark(ds, 10, 5);
  MockBackend oracle = oracle_for(ds);

  const EvalReport report = eval_filter_topn(items, ds, oracle, 5);
  CHECK(report.top_n_accuracy[0] == 1.0);  // exactly
  for (double acc : report.top_n_accuracy) CHECK(acc == 1.0);
  CHECK(report.accuracy == 1.0);
  CHECK(report.evaluated == items.size());
}

TEST_CASE("uniform scores reduce top-n accuracy to the position expectation") {
  const Dataset ds = tiny_ranking_dataset(25);
  const auto items = build_ranking_benchmark(ds, 12, 9);
  MockSpec uniform;
  uniform.fallback.nll_lo = 2.0;
  uniform.fallback.nll_hi = 2.0;
  MockBackend mock(uniform);

  const std::size_t max_n = 13;
  const EvalReport report = eval_filter_topn(items, ds, mock, max_n);

  // With constant scores the stable tie-break keeps input order, so the true
  // paragraph lands exactly at its generated position; the closed form is the
  // fraction of items whose position is below n.
  for (std::size_t n = 1; n <= max_n; ++n) {
    double expected = 0.0;
    for (const RankingItem& item : items) {
      if (item.true_index < n) expected += 1.0;
    }
    expected /= static_cast<double>(items.size());
    CHECK(std::abs(report.top_n_accuracy[n - 1] - expected) < 1e-12);
  }
  // Monotone non-decreasing curve.
  for (std::size_t n = 1; n < max_n; ++n) {
    CHECK(report.top_n_accuracy[n] >= report.top_n_accuracy[n - 1]);
  }
}

TEST_CASE("filter report is self-consistent and carries the reference lines") {
  const Dataset ds = tiny_ranking_dataset(14);
  const auto items = build_ranking_benchmark(ds, 5, 2);
  MockBackend oracle = oracle_for(ds);
  const EvalReport report = eval_filter_topn(items, ds, oracle, 3);

  const nlohmann::json j = report_to_json(report);
  std::size_t correct = 0;
  for (const auto& item : j["items"]) {
    if (item["correct"].get<bool>()) ++correct;
  }
  CHECK(correct == j["aggregate"]["correct"].get<std::size_t>());
  CHECK(j["aggregate"]["accuracy"].get<double>() ==
        static_cast<double>(correct) / static_cast<double>(report.items.size()));
  REQUIRE(j["reference"].size() == 2);
  CHECK(j["reference"][0]["accuracy"].get<double>() == 0.79);
  CHECK(j["reference"][1]["accuracy"].get<double>() == 0.93);

  const std::string csv = topn_to_csv(report);
  CHECK(csv.rfind("n,accuracy\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);
}

TEST_CASE("toy dataset: scripted mock gives 100%, inverted mock gives 0%") {
  const Dataset ds = load_dataset(kToyPath);

  SUBCASE("tree_delta success") {
    MockBackend mock(load_mock_spec(kToyMock), 4);
    const EvalReport report = eval_qa(ds, EvalMode::tree_delta, mock);
    CHECK(report.accuracy == 1.0);
    CHECK(report.evaluated == 20);
    CHECK(report.errored == 0);
  }
  SUBCASE("tree_delta inverted") {
    MockBackend mock(load_mock_spec(kToyMockInverted), 4);
    const EvalReport report = eval_qa(ds, EvalMode::tree_delta, mock);
    CHECK(report.accuracy == 0.0);
    CHECK(report.correct == 0);
    CHECK(report.errored == 0);
  }
  SUBCASE("direct modes follow the script both ways") {
    MockBackend mock(load_mock_spec(kToyMock), 4);
    MockBackend inverted(load_mock_spec(kToyMockInverted), 4);
    for (EvalMode mode : {EvalMode::no_cot, EvalMode::cot, EvalMode::golden_facts,
                          EvalMode::golden_facts_cot}) {
      CHECK(eval_qa(ds, mode, mock).accuracy == 1.0);
      CHECK(eval_qa(ds, mode, inverted).accuracy == 0.0);
    }
  }
}

TEST_CASE("tree_nll and tree_delta agree on the toy set under the scripted mock") {
  const Dataset ds = load_dataset(kToyPath);
  MockBackend a(load_mock_spec(kToyMock), 4);
  MockBackend b(load_mock_spec(kToyMock), 4);
  const EvalReport nll = eval_qa(ds, EvalMode::tree_nll, a);
  const EvalReport delta = eval_qa(ds, EvalMode::tree_delta, b);
  REQUIRE(nll.items.size() == delta.items.size());
  for (std::size_t i = 0; i < nll.items.size(); ++i) {
    CHECK(nll.items[i].predicted == delta.items[i].predicted);
  }
}

TEST_CASE("golden modes demand golden facts and name the first offender") {
  Dataset ds = load_dataset(kToyPath);
  ds.questions[3].golden_facts.clear();
  MockBackend mock{MockSpec{}};
  CHECK_THROWS_WITH_AS(eval_qa(ds, EvalMode::golden_facts, mock),
                       doctest::Contains("q04"), Error);
}

TEST_CASE("items erroring at the backend are counted incorrect and tallied") {
  Dataset ds = load_dataset(kToyPath);
  ds.questions.resize(4);
  // Break exactly one question: its yes-scoring rule has the wrong arity.
  MockSpec spec = load_mock_spec(kToyMock);
  ScoreRule broken;
  broken.exact_continuation = "yes";
  broken.prefix_contains = {ds.questions[1].text};
  broken.logprobs = std::vector<double>{-1.0, -1.0};  // "yes" is one token
  spec.scores.insert(spec.scores.begin(), broken);
  MockBackend mock(spec, 2);

  const EvalReport report = eval_qa(ds, EvalMode::no_cot, mock);
  CHECK(report.evaluated == 4);
  CHECK(report.errored == 1);
  CHECK(report.correct == 3);
  CHECK(report.accuracy == 0.75);
  const ItemOutcome& bad = report.items[1];
  CHECK_FALSE(bad.error.empty());
  CHECK(bad.predicted.empty());
}

TEST_CASE("tree modes skip questions without evidence support") {
  Dataset ds = load_dataset(kToyPath);
  ds.questions[0].evidence_ids.clear();
  MockBackend mock(load_mock_spec(kToyMock), 2);
  const EvalReport report = eval_qa(ds, EvalMode::tree_delta, mock);
  CHECK(report.skipped == 1);
  CHECK(report.evaluated == 19);
  CHECK(report.items[0].skipped);
  CHECK(report.items[0].note == "skipped_not_fully_supported");
  CHECK(report.accuracy == 1.0);  // the evaluated remainder is still perfect
}

TEST_CASE("qa reports are byte-identical at parallelism 1 and 16") {
  const Dataset ds = load_dataset(kToyPath);

  EvalOptions serial;
  serial.workers = 1;
  MockBackend serial_mock(load_mock_spec(kToyMock), 1);
  EvalOptions wide;
  wide.workers = 16;
  MockBackend wide_mock(load_mock_spec(kToyMock), 16);

  const EvalReport a = eval_qa(ds, EvalMode::tree_delta, serial_mock, serial);
  const EvalReport b = eval_qa(ds, EvalMode::tree_delta, wide_mock, wide);
  CHECK(strip_timing(report_to_json(a)).dump(2) == strip_timing(report_to_json(b)).dump(2));
}

TEST_CASE("tree mode writes one JSONL trace per item when asked") {
  const Dataset ds = load_dataset(kToyPath);
  const std::string dir = (std::filesystem::temp_directory_path() / "lmpe-trace-test").string();
  std::filesystem::remove_all(dir);

  EvalOptions options;
  options.trace_dir = dir;
  MockBackend mock(load_mock_spec(kToyMock), 2);
  eval_qa(ds, EvalMode::tree_delta, mock, options);

  std::size_t files = 0;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    CHECK(entry.path().extension() == ".jsonl");
    ++files;
  }
  CHECK(files == 20);
  std::filesystem::remove_all(dir);
}

TEST_CASE("eval_qa validates its inputs") {
  MockBackend mock{MockSpec{}};
  Dataset empty;
  CHECK_THROWS_AS(eval_qa(empty, EvalMode::no_cot, mock), Error);
  CHECK(eval_mode_from_string("tree_delta") == EvalMode::tree_delta);
  CHECK(eval_mode_from_string("bogus") == std::nullopt);
  CHECK(std::string(to_string(EvalMode::golden_facts_cot)) == "golden_facts_cot");
}
