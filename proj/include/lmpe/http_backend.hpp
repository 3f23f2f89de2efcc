#pragma once

#include <atomic>
#include <memory>
#include <string>

#include "lmpe/backend.hpp"

namespace lmpe {

/// Client for any server speaking the completions-with-logprobs wire shape:
/// POST {endpoint}/completions with JSON fields prompt, max_tokens,
/// temperature, stop, logprobs, echo; each response choice carries `text` and
/// a logprobs object with parallel `tokens` / `token_logprobs` arrays.
///
/// score() is echo-mode scoring: the server scores prefix+continuation as one
/// echoed prompt and the client slices off the prefix's tokens. If the prefix
/// does not end on a token boundary, the straddling token is attributed to
/// the continuation: counted in boundary_warnings(), or raised as
/// PrefixSliceMismatch when the descriptor is strict.
///
/// Transport failures and 5xx responses are retried descriptor.retries times
/// with exponential backoff; LMPE_API_KEY, when set in the environment, is
/// sent as a bearer token.
class HttpBackend final : public Backend {
public:
  explicit HttpBackend(BackendDescriptor descriptor);

  Completion complete(const std::string& prompt, const GenerationParams& params) override;
  ScoredText score(const std::string& prefix, const std::string& continuation) override;
  int parallelism() const override { return descriptor_.parallelism; }

  std::uint64_t boundary_warnings() const { return boundary_warnings_.load(); }

private:
  struct Gate;

  std::string post_completions(const std::string& body, const std::string& request_id);

  BackendDescriptor descriptor_;
  std::string bearer_token_;
  std::shared_ptr<Gate> gate_;
  std::atomic<std::uint64_t> boundary_warnings_{0};
};

}  // namespace lmpe
