#include "lmpe/mock_backend.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "lmpe/hash.hpp"

namespace lmpe {

using nlohmann::json;

std::vector<std::string> mock_tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::size_t i = 0;
  const std::size_t n = text.size();
  auto is_space = [](char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; };
  while (i < n) {
    std::size_t j = i;
    while (j < n && is_space(text[j])) ++j;  // leading whitespace glues to the first word
    while (j < n && !is_space(text[j])) ++j;
    while (j < n && is_space(text[j])) ++j;  // trailing whitespace glues to this token
    tokens.emplace_back(text.substr(i, j - i));
    i = j;
  }
  return tokens;
}

namespace {

bool contains_all(const std::string& haystack, const std::vector<std::string>& needles) {
  for (const std::string& needle : needles) {
    if (haystack.find(needle) == std::string::npos) return false;
  }
  return true;
}

bool matches(const CompletionRule& rule, const std::string& prompt) {
  if (rule.exact_prompt && *rule.exact_prompt != prompt) return false;
  return contains_all(prompt, rule.prompt_contains);
}

bool matches(const ScoreRule& rule, const std::string& prefix, const std::string& continuation) {
  if (rule.exact_prefix && *rule.exact_prefix != prefix) return false;
  if (rule.exact_continuation && *rule.exact_continuation != continuation) return false;
  if (!contains_all(prefix, rule.prefix_contains)) return false;
  return contains_all(continuation, rule.continuation_contains);
}

void validate(const MockSpec& spec) {
  if (!std::isfinite(spec.logprob_shift)) {
    throw MalformedMockSpec("logprob_shift must be finite");
  }
  if (!std::isfinite(spec.fallback.nll_lo) || !std::isfinite(spec.fallback.nll_hi) ||
      spec.fallback.nll_lo > spec.fallback.nll_hi) {
    throw MalformedMockSpec("fallback nll range must be finite with lo <= hi");
  }
  for (const ScoreRule& rule : spec.scores) {
    if (rule.avg_nll.has_value() == rule.logprobs.has_value()) {
      throw MalformedMockSpec("score rule needs exactly one of avg_nll / logprobs");
    }
    if (rule.avg_nll && !std::isfinite(*rule.avg_nll)) {
      throw MalformedMockSpec("score rule avg_nll must be finite");
    }
    if (rule.logprobs) {
      if (rule.logprobs->empty()) throw MalformedMockSpec("score rule logprobs must be non-empty");
      for (double lp : *rule.logprobs) {
        if (!std::isfinite(lp)) throw MalformedMockSpec("score rule logprob must be finite");
      }
    }
  }
}

std::vector<std::string> parse_contains(const json& j, const char* key) {
  std::vector<std::string> out;
  if (!j.contains(key)) return out;
  if (!j[key].is_array()) throw MalformedMockSpec(std::string(key) + " must be an array");
  for (const auto& e : j[key]) {
    if (!e.is_string()) throw MalformedMockSpec(std::string(key) + " entries must be strings");
    out.push_back(e.get<std::string>());
  }
  return out;
}

}  // namespace

MockSpec parse_mock_spec(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw MalformedMockSpec(std::string("mock spec is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw MalformedMockSpec("mock spec must be a JSON object");

  MockSpec spec;
  try {
    spec.salt = j.value("salt", std::uint64_t{0});
    spec.logprob_shift = j.value("logprob_shift", 0.0);
    if (j.contains("fallback")) {
      const json& f = j["fallback"];
      if (f.contains("nll_range")) {
        spec.fallback.nll_lo = f["nll_range"].at(0).get<double>();
        spec.fallback.nll_hi = f["nll_range"].at(1).get<double>();
      }
      spec.fallback.completion_prefix = f.value("completion_prefix", spec.fallback.completion_prefix);
    }
    for (const auto& c : j.value("completions", json::array())) {
      CompletionRule rule;
      if (c.contains("prompt")) rule.exact_prompt = c["prompt"].get<std::string>();
      rule.prompt_contains = parse_contains(c, "prompt_contains");
      rule.text = c.at("text").get<std::string>();
      spec.completions.push_back(std::move(rule));
    }
    for (const auto& s : j.value("scores", json::array())) {
      ScoreRule rule;
      if (s.contains("prefix")) rule.exact_prefix = s["prefix"].get<std::string>();
      if (s.contains("continuation")) rule.exact_continuation = s["continuation"].get<std::string>();
      rule.prefix_contains = parse_contains(s, "prefix_contains");
      rule.continuation_contains = parse_contains(s, "continuation_contains");
      if (s.contains("avg_nll")) rule.avg_nll = s["avg_nll"].get<double>();
      if (s.contains("logprobs")) rule.logprobs = s["logprobs"].get<std::vector<double>>();
      spec.scores.push_back(std::move(rule));
    }
  } catch (const MalformedMockSpec&) {
    throw;
  } catch (const json::exception& e) {
    throw MalformedMockSpec(std::string("mock spec field error: ") + e.what());
  }
  validate(spec);
  return spec;
}

MockSpec load_mock_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw MalformedMockSpec("cannot open mock spec file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_mock_spec(buf.str());
}

MockBackend::MockBackend(MockSpec spec, int parallelism)
    : spec_(std::move(spec)), parallelism_(parallelism) {
  validate(spec_);
  if (parallelism_ < 1) throw Error("parallelism must be >= 1");
}

std::string MockBackend::raw_completion_text(const std::string& prompt,
                                             const GenerationParams& params) const {
  for (const CompletionRule& rule : spec_.completions) {
    if (matches(rule, prompt)) return rule.text;
  }
  std::uint64_t h = hash_combine(fnv1a64(prompt), spec_.salt);
  if (params.temperature > 0.0) {
    h = hash_combine(h, params.seed);
  }
  return spec_.fallback.completion_prefix + hex16(h);
}

std::vector<double> MockBackend::token_logprobs(const std::string& prefix,
                                                const std::string& continuation,
                                                std::size_t token_count) const {
  for (const ScoreRule& rule : spec_.scores) {
    if (!matches(rule, prefix, continuation)) continue;
    if (rule.logprobs) {
      if (rule.logprobs->size() != token_count) {
        throw MalformedMockSpec("score rule lists " + std::to_string(rule.logprobs->size()) +
                                " logprobs but continuation has " + std::to_string(token_count) +
                                " tokens");
      }
      std::vector<double> out = *rule.logprobs;
      for (double& lp : out) lp += spec_.logprob_shift;
      return out;
    }
    return std::vector<double>(token_count, -*rule.avg_nll + spec_.logprob_shift);
  }
  const std::uint64_t h =
      hash_combine(hash_combine(fnv1a64(prefix), fnv1a64(continuation)), spec_.salt);
  const double avg =
      spec_.fallback.nll_lo + hash_unit(h) * (spec_.fallback.nll_hi - spec_.fallback.nll_lo);
  return std::vector<double>(token_count, -avg + spec_.logprob_shift);
}

ScoredText MockBackend::score(const std::string& prefix, const std::string& continuation) {
  score_calls_.fetch_add(1);
  std::vector<std::string> toks = mock_tokenize(continuation);
  if (toks.empty()) {
    throw EmptyContinuation("continuation tokenizes to zero tokens");
  }
  const std::vector<double> logprobs = token_logprobs(prefix, continuation, toks.size());
  std::vector<TokenScore> scored;
  scored.reserve(toks.size());
  for (std::size_t i = 0; i < toks.size(); ++i) {
    scored.push_back(TokenScore{std::move(toks[i]), logprobs[i]});
  }
  return make_scored_text(continuation, std::move(scored));
}

Completion MockBackend::complete(const std::string& prompt, const GenerationParams& params) {
  complete_calls_.fetch_add(1);
  params.validate();
  std::string text = raw_completion_text(prompt, params);

  // Stop sequences end the generation; the stop text itself is excluded.
  std::size_t cut = std::string::npos;
  for (const std::string& stop : params.stop_sequences) {
    if (stop.empty()) continue;
    const std::size_t pos = text.find(stop);
    if (pos != std::string::npos) cut = std::min(cut, pos);
  }
  if (cut != std::string::npos) text.resize(cut);

  std::vector<std::string> toks = mock_tokenize(text);
  if (toks.empty()) {
    throw EmptyCompletion("mock returned zero tokens",
                          "req-" + hex16(hash_combine(fnv1a64("complete"), fnv1a64(prompt))));
  }
  if (static_cast<int>(toks.size()) > params.max_tokens) {
    toks.resize(static_cast<std::size_t>(params.max_tokens));
    text.clear();
    for (const std::string& t : toks) text += t;
  }

  const std::vector<double> logprobs = token_logprobs(prompt, text, toks.size());
  std::vector<TokenScore> scored;
  scored.reserve(toks.size());
  for (std::size_t i = 0; i < toks.size(); ++i) {
    scored.push_back(TokenScore{std::move(toks[i]), logprobs[i]});
  }
  Completion out;
  out.text = text;
  out.scored = make_scored_text(out.text, std::move(scored));
  return out;
}

BackendPtr make_fallback_mock(double nll_lo, double nll_hi, std::uint64_t salt, int parallelism) {
  MockSpec spec;
  spec.salt = salt;
  spec.fallback.nll_lo = nll_lo;
  spec.fallback.nll_hi = nll_hi;
  return std::make_shared<MockBackend>(std::move(spec), parallelism);
}

}  // namespace lmpe
