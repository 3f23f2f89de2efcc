#include <doctest.h>

#include <algorithm>
#include <map>
#include <set>

#include "lmpe/dataset.hpp"

using namespace lmpe;

namespace {

const char* kToyPath = LMPE_SOURCE_DIR "/data/toy_dataset.json";

/// Synthetic corpus large enough for the paper-sized builders: every question
/// has two private evidence paragraphs.
Dataset synthetic_corpus(std::size_t question_count) {
  std::string questions = "[";
  std::string paragraphs = "[";
  for (std::size_t i = 0; i < question_count; ++i) {
    const std::string id = "q" + std::to_string(i);
    const std::string pa = id + "a";
    const std::string pb = id + "b";
    if (i > 0) {
      questions += ",";
      paragraphs += ",";
    }
    questions += "{\"id\":\"" + id + "\",\"question\":\"Synthetic question " + std::to_string(i) +
                 "?\",\"answer\":\"" + (i % 2 == 0 ? "yes" : "no") +
                 "\",\"facts\":[\"fact\"],\"evidence\":[\"" + pa + "\",\"" + pb + "\"]}";
    paragraphs += "{\"id\":\"" + pa + "\",\"title\":\"t\",\"text\":\"Evidence A for item " +
                  std::to_string(i) + ".\"},{\"id\":\"" + pb +
                  "\",\"title\":\"t\",\"text\":\"Evidence B for item " + std::to_string(i) + ".\"}";
  }
  return parse_dataset("{\"questions\":" + questions + "],\"paragraphs\":" + paragraphs + "]}");
}

}  // namespace

TEST_CASE("the bundled toy fixture loads with 20 fully supported questions") {
  const Dataset ds = load_dataset(kToyPath);
  CHECK(ds.questions.size() == 20);
  CHECK(ds.paragraphs.size() == 40);
  std::size_t yes = 0;
  for (const Question& q : ds.questions) {
    CHECK(Dataset::fully_supported(q));
    CHECK(q.gold_answer.has_value());
    CHECK_FALSE(q.golden_facts.empty());
    for (const std::string& pid : q.evidence_ids) {
      CHECK(ds.paragraph_index.count(pid) == 1);
    }
    if (q.gold_answer == Answer::yes) ++yes;
  }
  CHECK(yes == 10);  // balanced fixture
}

TEST_CASE("dangling evidence ids are a hard load error") {
  CHECK_THROWS_AS(parse_dataset(R"({
    "questions": [{"id": "q", "question": "X?", "answer": "yes", "evidence": ["missing"]}],
    "paragraphs": [{"id": "p", "text": "body"}]
  })"),
                  DanglingEvidenceId);
}

TEST_CASE("schema violations name the offending JSON path") {
  auto path_of = [](const char* text) {
    try {
      parse_dataset(text);
    } catch (const SchemaViolation& e) {
      return e.path;
    }
    return std::string("no error");
  };

  CHECK(path_of(R"({"questions": [], "paragraphs": [{"id": "p"}]})") == "/paragraphs/0/text");
  CHECK(path_of(R"({"questions": [{"id": "q"}], "paragraphs": []})") == "/questions/0/question");
  CHECK(path_of(R"({
    "questions": [{"id": "q", "question": "X?", "answer": "maybe"}],
    "paragraphs": []
  })") == "/questions/0/answer");
  CHECK(path_of(R"({
    "questions": [
      {"id": "q", "question": "X?", "answer": "yes"},
      {"id": "q", "question": "Y?", "answer": "no"}
    ],
    "paragraphs": []
  })") == "/questions/1/id");
  CHECK_THROWS_AS(parse_dataset("answer: yes"), SchemaViolation);
  CHECK_THROWS_AS(load_dataset("/nonexistent/data.json"), Error);
}

TEST_CASE("classification benchmark is exactly balanced and seeded") {
  const Dataset ds = synthetic_corpus(400);
  const auto items = build_classification_benchmark(ds, 300, 7);
  REQUIRE(items.size() == 300);

  std::size_t relevant = 0;
  for (const ClassificationItem& item : items) {
    const Question* q = nullptr;
    for (const Question& candidate : ds.questions) {
      if (candidate.id == item.question_id) q = &candidate;
    }
    REQUIRE(q != nullptr);
    const bool is_own_evidence =
        std::find(q->evidence_ids.begin(), q->evidence_ids.end(), item.paragraph_id) !=
        q->evidence_ids.end();
    if (item.label == Relevance::relevant) {
      ++relevant;
      CHECK(is_own_evidence);
    } else {
      CHECK_FALSE(is_own_evidence);
    }
  }
  CHECK(relevant == 150);

  // Distinct questions, sampled without replacement.
  std::set<std::string> ids;
  for (const auto& item : items) ids.insert(item.question_id);
  CHECK(ids.size() == 300);

  // Same seed, same items; different seed, different items.
  const auto again = build_classification_benchmark(ds, 300, 7);
  CHECK(classification_to_json(items, 7) == classification_to_json(again, 7));
  const auto other = build_classification_benchmark(ds, 300, 8);
  CHECK(classification_to_json(items, 7) != classification_to_json(other, 7));
}

TEST_CASE("classification builder rejects impossible requests") {
  const Dataset tiny = synthetic_corpus(1);
  CHECK_THROWS_AS(build_classification_benchmark(tiny, 2, 0), InsufficientData);
  const Dataset ds = synthetic_corpus(10);
  CHECK_THROWS_AS(build_classification_benchmark(ds, 301, 0), std::invalid_argument);  // odd
  CHECK_THROWS_AS(build_classification_benchmark(ds, 0, 0), std::invalid_argument);
  CHECK_THROWS_AS(build_classification_benchmark(ds, 12, 0), InsufficientData);  // only 10
}

TEST_CASE("ranking benchmark has one true paragraph among unique distractors") {
  const Dataset ds = synthetic_corpus(60);
  const auto items = build_ranking_benchmark(ds, 99, 3);
  REQUIRE(items.size() == 60);

  for (const RankingItem& item : items) {
    CHECK(item.paragraph_ids.size() == 100);
    std::set<std::string> unique(item.paragraph_ids.begin(), item.paragraph_ids.end());
    CHECK(unique.size() == 100);

    const Question* q = nullptr;
    for (const Question& candidate : ds.questions) {
      if (candidate.id == item.question_id) q = &candidate;
    }
    REQUIRE(q != nullptr);
    std::size_t own = 0;
    for (std::size_t i = 0; i < item.paragraph_ids.size(); ++i) {
      const bool is_own = std::find(q->evidence_ids.begin(), q->evidence_ids.end(),
                                    item.paragraph_ids[i]) != q->evidence_ids.end();
      if (is_own) {
        ++own;
        CHECK(i == item.true_index);
      }
    }
    CHECK(own == 1);  // exactly one true, 99 from other questions
  }
}

TEST_CASE("true-paragraph positions are approximately uniform (chi-square at 0.01)") {
  const Dataset ds = synthetic_corpus(918);
  const auto items = build_ranking_benchmark(ds, 99, 42);
  REQUIRE(items.size() == 918);

  std::vector<double> counts(100, 0.0);
  for (const RankingItem& item : items) counts[item.true_index] += 1.0;
  const double expected = 918.0 / 100.0;
  double chi2 = 0.0;
  for (double c : counts) chi2 += (c - expected) * (c - expected) / expected;
  // 0.99 quantile of chi-square with 99 degrees of freedom.
  CHECK(chi2 < 134.64161685578915);
}

TEST_CASE("zero distractors degenerate to the evidence paragraph alone") {
  const Dataset ds = synthetic_corpus(5);
  const auto items = build_ranking_benchmark(ds, 0, 1);
  for (const RankingItem& item : items) {
    CHECK(item.paragraph_ids.size() == 1);
    CHECK(item.true_index == 0);
  }
}

TEST_CASE("ranking builder reports insufficient distractor pools") {
  const Dataset ds = synthetic_corpus(3);  // pool of 4 foreign paragraphs per item
  CHECK_THROWS_AS(build_ranking_benchmark(ds, 99, 0), InsufficientData);
}

TEST_CASE("benchmark files are byte-identical across runs for a fixed seed") {
  const Dataset ds = synthetic_corpus(50);
  const std::string a = ranking_to_json(build_ranking_benchmark(ds, 20, 11), 11);
  const std::string b = ranking_to_json(build_ranking_benchmark(ds, 20, 11), 11);
  CHECK(a == b);

  const auto parsed = ranking_from_json(a);
  REQUIRE(parsed.size() == 50);
  CHECK(parsed[0].paragraph_ids.size() == 21);

  CHECK_THROWS_AS(ranking_from_json("{}"), SchemaViolation);
  CHECK_THROWS_AS(ranking_from_json("not json"), SchemaViolation);
}
