#include "lmpe/http_backend.hpp"

#include <chrono>
#include <cmath>
#include <condition_variable>
#include <cstdlib>
#include <mutex>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "lmpe/hash.hpp"

namespace lmpe {

using nlohmann::json;

// Bounds in-flight requests at descriptor.parallelism.
struct HttpBackend::Gate {
  explicit Gate(int slots) : available(slots) {}

  void acquire() {
    std::unique_lock lock(mutex);
    cv.wait(lock, [&] { return available > 0; });
    --available;
  }
  void release() {
    {
      std::lock_guard lock(mutex);
      ++available;
    }
    cv.notify_one();
  }

  std::mutex mutex;
  std::condition_variable cv;
  int available;
};

namespace {

template <typename G>
struct GateGuard {
  explicit GateGuard(G& g) : gate(g) { gate.acquire(); }
  ~GateGuard() { gate.release(); }
  G& gate;
};

struct Endpoint {
  std::string base;         // scheme://host:port
  std::string path_prefix;  // anything after the authority, no trailing slash
};

Endpoint split_endpoint(const std::string& endpoint) {
  std::string e = endpoint;
  while (!e.empty() && e.back() == '/') e.pop_back();
  const std::size_t scheme = e.find("://");
  if (scheme == std::string::npos) throw Error("endpoint must include a scheme: " + endpoint);
  const std::size_t path = e.find('/', scheme + 3);
  if (path == std::string::npos) return Endpoint{e, ""};
  return Endpoint{e.substr(0, path), e.substr(path)};
}

struct ParsedChoice {
  std::string text;
  std::vector<std::string> tokens;
  std::vector<json> token_logprobs;  // kept as json to preserve nulls
};

ParsedChoice parse_choice(const std::string& body, const std::string& request_id) {
  json j;
  try {
    j = json::parse(body);
  } catch (const json::exception& e) {
    throw ProtocolViolation(std::string("response is not valid JSON: ") + e.what(), request_id);
  }
  if (!j.is_object() || !j.contains("choices") || !j["choices"].is_array() ||
      j["choices"].empty()) {
    throw ProtocolViolation("response lacks a non-empty choices array", request_id);
  }
  const json& choice = j["choices"][0];
  if (!choice.contains("text") || !choice["text"].is_string()) {
    throw ProtocolViolation("choice lacks a text field", request_id);
  }
  if (!choice.contains("logprobs") || !choice["logprobs"].is_object()) {
    throw ProtocolViolation("choice lacks a logprobs object", request_id);
  }
  const json& lp = choice["logprobs"];
  if (!lp.contains("tokens") || !lp["tokens"].is_array() || !lp.contains("token_logprobs") ||
      !lp["token_logprobs"].is_array()) {
    throw ProtocolViolation("logprobs object lacks tokens/token_logprobs arrays", request_id);
  }
  if (lp["tokens"].size() != lp["token_logprobs"].size()) {
    throw ProtocolViolation("tokens and token_logprobs are not parallel arrays", request_id);
  }
  ParsedChoice out;
  out.text = choice["text"].get<std::string>();
  for (const auto& t : lp["tokens"]) {
    if (!t.is_string()) throw ProtocolViolation("token entry is not a string", request_id);
    out.tokens.push_back(t.get<std::string>());
  }
  for (const auto& v : lp["token_logprobs"]) out.token_logprobs.push_back(v);
  return out;
}

double require_finite_logprob(const json& v, const std::string& request_id) {
  if (!v.is_number()) {
    throw ProtocolViolation("token logprob is not a number", request_id);
  }
  const double d = v.get<double>();
  if (!std::isfinite(d)) {
    throw ProtocolViolation("token logprob is not finite", request_id);
  }
  return d;
}

std::string concat(const std::vector<std::string>& tokens, std::size_t begin, std::size_t end) {
  std::string out;
  for (std::size_t i = begin; i < end; ++i) out += tokens[i];
  return out;
}

}  // namespace

HttpBackend::HttpBackend(BackendDescriptor descriptor) : descriptor_(std::move(descriptor)) {
  descriptor_.validate();
  if (descriptor_.kind != BackendKind::http) {
    throw Error("HttpBackend requires a descriptor with kind http");
  }
  if (const char* key = std::getenv("LMPE_API_KEY")) {
    bearer_token_ = key;
  }
  gate_ = std::make_shared<Gate>(descriptor_.parallelism);
}

std::string HttpBackend::post_completions(const std::string& body, const std::string& request_id) {
  GateGuard guard(*gate_);
  const Endpoint ep = split_endpoint(descriptor_.endpoint);
  const std::string path = ep.path_prefix + "/completions";

  for (int attempt = 0;; ++attempt) {
    httplib::Client client(ep.base);
    const auto timeout = descriptor_.timeout;
    client.set_connection_timeout(std::chrono::duration_cast<std::chrono::seconds>(timeout).count(),
                                  (timeout % std::chrono::seconds(1)).count() * 1000);
    client.set_read_timeout(std::chrono::duration_cast<std::chrono::seconds>(timeout).count(),
                            (timeout % std::chrono::seconds(1)).count() * 1000);
    httplib::Headers headers;
    if (!bearer_token_.empty()) {
      headers.emplace("Authorization", "Bearer " + bearer_token_);
    }
    httplib::Result res = client.Post(path, headers, body, "application/json");

    if (res) {
      if (res->status == 200) return res->body;
      if (res->status < 500) {
        throw ProtocolViolation("server answered HTTP " + std::to_string(res->status), request_id);
      }
      // fall through to retry on 5xx
    }
    if (attempt >= descriptor_.retries) {
      const std::string reason = res ? ("HTTP " + std::to_string(res->status))
                                     : std::string("transport failure");
      throw BackendUnreachable("backend unreachable after " + std::to_string(attempt + 1) +
                                   " attempt(s): " + reason,
                               request_id);
    }
    std::int64_t delay_ms = static_cast<std::int64_t>(descriptor_.retry_base_ms) << attempt;
    if (descriptor_.retry_jitter) {
      const std::uint64_t h = hash_combine(fnv1a64(request_id), static_cast<std::uint64_t>(attempt));
      delay_ms += static_cast<std::int64_t>(hash_unit(h) * static_cast<double>(delay_ms) / 2.0);
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(delay_ms));
  }
}

Completion HttpBackend::complete(const std::string& prompt, const GenerationParams& params) {
  complete_calls_.fetch_add(1);
  params.validate();
  const std::string request_id = "req-" + hex16(hash_combine(fnv1a64("complete"), fnv1a64(prompt)));

  json body = {
      {"prompt", prompt},
      {"max_tokens", params.max_tokens},
      {"temperature", params.temperature},
      {"stop", params.stop_sequences},
      {"logprobs", 1},
      {"echo", false},
  };
  if (!descriptor_.model_name.empty()) body["model"] = descriptor_.model_name;

  ParsedChoice choice = parse_choice(post_completions(body.dump(), request_id), request_id);
  if (concat(choice.tokens, 0, choice.tokens.size()) != choice.text) {
    throw ProtocolViolation("token concatenation does not reproduce choice text", request_id);
  }

  // The server may or may not have cut at a stop sequence; enforce the
  // contract here. A token straddling the cut keeps its logprob but only the
  // text before the cut.
  std::size_t cut = std::string::npos;
  for (const std::string& stop : params.stop_sequences) {
    if (stop.empty()) continue;
    const std::size_t pos = choice.text.find(stop);
    if (pos != std::string::npos) cut = std::min(cut, pos);
  }

  std::vector<TokenScore> scored;
  std::string kept_text;
  std::size_t consumed = 0;
  for (std::size_t i = 0; i < choice.tokens.size(); ++i) {
    std::string tok = choice.tokens[i];
    if (cut != std::string::npos) {
      if (consumed >= cut) break;
      if (consumed + tok.size() > cut) tok.resize(cut - consumed);
    }
    consumed += choice.tokens[i].size();
    if (tok.empty()) continue;
    kept_text += tok;
    scored.push_back(TokenScore{std::move(tok), require_finite_logprob(choice.token_logprobs[i], request_id)});
  }
  if (scored.empty()) {
    throw EmptyCompletion("backend returned zero tokens (after stop handling)", request_id);
  }
  Completion out;
  out.text = kept_text;
  out.scored = make_scored_text(kept_text, std::move(scored));
  return out;
}

ScoredText HttpBackend::score(const std::string& prefix, const std::string& continuation) {
  score_calls_.fetch_add(1);
  const std::string request_id =
      "req-" + hex16(hash_combine(hash_combine(fnv1a64("score"), fnv1a64(prefix)),
                                  fnv1a64(continuation)));
  if (continuation.empty()) {
    throw EmptyContinuation("continuation is empty");
  }

  json body = {
      {"prompt", prefix + continuation},
      {"max_tokens", 0},
      {"temperature", 0.0},
      {"stop", json::array()},
      {"logprobs", 0},
      {"echo", true},
  };
  if (!descriptor_.model_name.empty()) body["model"] = descriptor_.model_name;

  ParsedChoice choice = parse_choice(post_completions(body.dump(), request_id), request_id);
  if (concat(choice.tokens, 0, choice.tokens.size()) != prefix + continuation) {
    throw ProtocolViolation("echoed tokens do not reproduce the requested text", request_id);
  }

  // Slice off the prefix's tokens. A token straddling the boundary belongs to
  // the continuation.
  std::size_t first = 0;
  std::size_t consumed = 0;
  while (first < choice.tokens.size() && consumed < prefix.size()) {
    if (consumed + choice.tokens[first].size() > prefix.size()) {
      if (descriptor_.strict_echo) {
        throw PrefixSliceMismatch("prefix boundary falls inside an echoed token", request_id);
      }
      boundary_warnings_.fetch_add(1);
      break;
    }
    consumed += choice.tokens[first].size();
    ++first;
  }
  if (first >= choice.tokens.size()) {
    throw EmptyContinuation("continuation tokenizes to zero tokens");
  }

  std::vector<TokenScore> scored;
  for (std::size_t i = first; i < choice.tokens.size(); ++i) {
    scored.push_back(
        TokenScore{choice.tokens[i], require_finite_logprob(choice.token_logprobs[i], request_id)});
  }
  return make_scored_text(concat(choice.tokens, first, choice.tokens.size()), std::move(scored));
}

}  // namespace lmpe
