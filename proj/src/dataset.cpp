#include "lmpe/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "lmpe/rng.hpp"

namespace lmpe {

using nlohmann::json;

namespace {

std::string ptr(const std::string& a) { return "/" + a; }
std::string ptr(const std::string& a, std::size_t i) { return "/" + a + "/" + std::to_string(i); }
std::string ptr(const std::string& a, std::size_t i, const std::string& b) {
  return ptr(a, i) + "/" + b;
}

std::string require_string(const json& obj, const char* key, const std::string& path,
                           bool allow_empty = false) {
  if (!obj.contains(key) || !obj[key].is_string()) {
    throw SchemaViolation(std::string("missing or non-string field '") + key + "'", path);
  }
  std::string value = obj[key].get<std::string>();
  if (!allow_empty && value.empty()) {
    throw SchemaViolation(std::string("field '") + key + "' must be non-empty", path);
  }
  return value;
}

std::vector<std::string> optional_string_array(const json& obj, const char* key,
                                               const std::string& path) {
  std::vector<std::string> out;
  if (!obj.contains(key)) return out;
  if (!obj[key].is_array()) {
    throw SchemaViolation(std::string("field '") + key + "' must be an array", path);
  }
  std::size_t i = 0;
  for (const auto& e : obj[key]) {
    if (!e.is_string()) {
      throw SchemaViolation("array entry must be a string", path + "/" + std::to_string(i));
    }
    out.push_back(e.get<std::string>());
    ++i;
  }
  return out;
}

}  // namespace

Dataset parse_dataset(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw SchemaViolation(std::string("dataset is not valid JSON: ") + e.what(), "");
  }
  if (!j.is_object() || !j.contains("questions") || !j["questions"].is_array() ||
      !j.contains("paragraphs") || !j["paragraphs"].is_array()) {
    throw SchemaViolation("dataset must be an object with questions and paragraphs arrays", "");
  }

  Dataset ds;
  std::size_t i = 0;
  for (const auto& p : j["paragraphs"]) {
    const std::string path = ptr("paragraphs", i);
    if (!p.is_object()) throw SchemaViolation("paragraph must be an object", path);
    Paragraph paragraph;
    paragraph.id = require_string(p, "id", path + "/id");
    paragraph.title = p.contains("title") ? require_string(p, "title", path + "/title", true) : "";
    paragraph.body = require_string(p, "text", path + "/text");
    if (ds.paragraph_index.count(paragraph.id)) {
      throw SchemaViolation("duplicate paragraph id '" + paragraph.id + "'", path + "/id");
    }
    ds.paragraph_index.emplace(paragraph.id, ds.paragraphs.size());
    ds.paragraphs.push_back(std::move(paragraph));
    ++i;
  }

  std::set<std::string> question_ids;
  i = 0;
  for (const auto& q : j["questions"]) {
    const std::string path = ptr("questions", i);
    if (!q.is_object()) throw SchemaViolation("question must be an object", path);
    Question question;
    question.id = require_string(q, "id", path + "/id");
    question.text = require_string(q, "question", path + "/question");
    const std::string answer = require_string(q, "answer", path + "/answer");
    question.gold_answer = answer_from_string(answer);
    if (!question.gold_answer) {
      throw SchemaViolation("answer must be \"yes\" or \"no\"", path + "/answer");
    }
    question.golden_facts = optional_string_array(q, "facts", ptr("questions", i, "facts"));
    question.evidence_ids = optional_string_array(q, "evidence", ptr("questions", i, "evidence"));
    for (const std::string& pid : question.evidence_ids) {
      if (!ds.paragraph_index.count(pid)) {
        throw DanglingEvidenceId("question '" + question.id + "' references unknown paragraph '" +
                                 pid + "'");
      }
    }
    if (!question_ids.insert(question.id).second) {
      throw SchemaViolation("duplicate question id '" + question.id + "'", path + "/id");
    }
    ds.questions.push_back(std::move(question));
    ++i;
  }
  return ds;
}

Dataset load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open dataset file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_dataset(buf.str());
}

std::vector<ClassificationItem> build_classification_benchmark(const Dataset& dataset,
                                                               std::size_t size,
                                                               std::uint64_t seed) {
  if (size == 0 || size % 2 != 0) {
    throw std::invalid_argument("classification benchmark size must be positive and even");
  }
  std::vector<std::size_t> eligible;
  for (std::size_t i = 0; i < dataset.questions.size(); ++i) {
    if (Dataset::fully_supported(dataset.questions[i])) eligible.push_back(i);
  }
  if (eligible.size() < size) {
    throw InsufficientData("classification benchmark of size " + std::to_string(size) +
                           " needs that many fully supported questions, have " +
                           std::to_string(eligible.size()));
  }
  if (eligible.size() < 2) {
    throw InsufficientData("irrelevant pairing needs at least two questions");
  }

  SeededRng rng(seed);
  const std::vector<std::size_t> picked = rng.sample_indices(eligible.size(), size);

  std::vector<ClassificationItem> items;
  items.reserve(size);
  for (std::size_t k = 0; k < size; ++k) {
    const Question& q = dataset.questions[eligible[picked[k]]];
    ClassificationItem item;
    item.question_id = q.id;
    item.question_text = q.text;
    if (k < size / 2) {
      item.label = Relevance::relevant;
      item.paragraph_id = q.evidence_ids[rng.below(q.evidence_ids.size())];
    } else {
      item.label = Relevance::irrelevant;
      // A paragraph from another question's evidence that is not also
      // evidence for this question.
      const std::set<std::string> own(q.evidence_ids.begin(), q.evidence_ids.end());
      std::string chosen;
      for (int attempt = 0; attempt < 1000; ++attempt) {
        const std::size_t other = eligible[rng.below(eligible.size())];
        const Question& oq = dataset.questions[other];
        if (oq.id == q.id) continue;
        const std::string& pid = oq.evidence_ids[rng.below(oq.evidence_ids.size())];
        if (!own.count(pid)) {
          chosen = pid;
          break;
        }
      }
      if (chosen.empty()) {
        throw InsufficientData("could not find an unrelated paragraph for question '" + q.id + "'");
      }
      item.paragraph_id = chosen;
    }
    items.push_back(std::move(item));
  }
  rng.shuffle(items);
  return items;
}

namespace {

// Distractor pool for one question: other questions' evidence, deduplicated,
// in stable paragraph order.
std::vector<std::string> distractor_pool(const Dataset& dataset, const Question& q) {
  const std::set<std::string> own(q.evidence_ids.begin(), q.evidence_ids.end());
  std::set<std::string> pool_set;
  for (const Question& other : dataset.questions) {
    if (other.id == q.id) continue;
    for (const std::string& pid : other.evidence_ids) {
      if (!own.count(pid)) pool_set.insert(pid);
    }
  }
  std::vector<std::string> pool;
  for (const Paragraph& p : dataset.paragraphs) {
    if (pool_set.count(p.id)) pool.push_back(p.id);
  }
  return pool;
}

}  // namespace

std::size_t max_feasible_distractors(const Dataset& dataset) {
  std::size_t feasible = 0;
  bool any = false;
  for (const Question& q : dataset.questions) {
    if (!Dataset::fully_supported(q)) continue;
    const std::size_t pool = distractor_pool(dataset, q).size();
    feasible = any ? std::min(feasible, pool) : pool;
    any = true;
  }
  return any ? feasible : 0;
}

std::vector<RankingItem> build_ranking_benchmark(const Dataset& dataset,
                                                 std::size_t distractors_per_item,
                                                 std::uint64_t seed) {
  SeededRng rng(seed);
  std::vector<RankingItem> items;

  for (const Question& q : dataset.questions) {
    if (!Dataset::fully_supported(q)) continue;

    const std::vector<std::string> pool = distractor_pool(dataset, q);
    if (pool.size() < distractors_per_item) {
      throw InsufficientData("question '" + q.id + "' has only " + std::to_string(pool.size()) +
                             " candidate distractors, need " +
                             std::to_string(distractors_per_item));
    }

    RankingItem item;
    item.question_id = q.id;
    item.question_text = q.text;
    const std::string true_id = q.evidence_ids[rng.below(q.evidence_ids.size())];
    for (std::size_t idx : rng.sample_indices(pool.size(), distractors_per_item)) {
      item.paragraph_ids.push_back(pool[idx]);
    }
    item.true_index = static_cast<std::size_t>(rng.below(item.paragraph_ids.size() + 1));
    item.paragraph_ids.insert(
        item.paragraph_ids.begin() + static_cast<std::ptrdiff_t>(item.true_index), true_id);
    items.push_back(std::move(item));
  }

  if (items.empty()) {
    throw InsufficientData("ranking benchmark needs at least one fully supported question");
  }
  return items;
}

std::string classification_to_json(const std::vector<ClassificationItem>& items,
                                   std::uint64_t seed) {
  json out;
  out["kind"] = "classification";
  out["seed"] = seed;
  out["size"] = items.size();
  json arr = json::array();
  for (const ClassificationItem& item : items) {
    arr.push_back({{"question_id", item.question_id},
                   {"question", item.question_text},
                   {"paragraph_id", item.paragraph_id},
                   {"label", to_string(item.label)}});
  }
  out["items"] = std::move(arr);
  return out.dump(2) + "\n";
}

std::string ranking_to_json(const std::vector<RankingItem>& items, std::uint64_t seed) {
  json out;
  out["kind"] = "ranking";
  out["seed"] = seed;
  out["size"] = items.size();
  json arr = json::array();
  for (const RankingItem& item : items) {
    arr.push_back({{"question_id", item.question_id},
                   {"question", item.question_text},
                   {"paragraph_ids", item.paragraph_ids},
                   {"true_index", item.true_index}});
  }
  out["items"] = std::move(arr);
  return out.dump(2) + "\n";
}

std::vector<RankingItem> ranking_from_json(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw SchemaViolation(std::string("benchmark is not valid JSON: ") + e.what(), "");
  }
  if (!j.is_object() || j.value("kind", "") != "ranking" || !j.contains("items") ||
      !j["items"].is_array()) {
    throw SchemaViolation("expected a ranking benchmark object with an items array", "");
  }
  std::vector<RankingItem> items;
  std::size_t i = 0;
  for (const auto& e : j["items"]) {
    const std::string path = "/items/" + std::to_string(i);
    RankingItem item;
    item.question_id = require_string(e, "question_id", path + "/question_id");
    item.question_text = require_string(e, "question", path + "/question");
    item.paragraph_ids = optional_string_array(e, "paragraph_ids", path + "/paragraph_ids");
    if (item.paragraph_ids.empty()) {
      throw SchemaViolation("paragraph_ids must be non-empty", path + "/paragraph_ids");
    }
    if (!e.contains("true_index") || !e["true_index"].is_number_unsigned() ||
        e["true_index"].get<std::size_t>() >= item.paragraph_ids.size()) {
      throw SchemaViolation("true_index must index into paragraph_ids", path + "/true_index");
    }
    item.true_index = e["true_index"].get<std::size_t>();
    items.push_back(std::move(item));
    ++i;
  }
  return items;
}

}  // namespace lmpe
