#pragma once

#include <chrono>
#include <memory>
#include <optional>
#include <semaphore>
#include <string>

#include "prmkit/backend.hpp"

namespace prmkit {

enum class ScoringPathway {
  automatic,      // echo first, then top-logprobs on refusal
  echo,           // echo=true over prompt+candidate, sum continuation-token logprobs
  top_logprobs,   // one generated position, read candidates from top_logprobs
};

struct HttpBackendOptions {
  std::string base_url;  // e.g. http://localhost:8000/v1
  std::optional<std::string> api_key;  // falls back to $PRMKIT_API_KEY
  int max_in_flight = 8;
  std::chrono::seconds timeout{600};
  int max_retries = 3;
  std::chrono::milliseconds initial_backoff{500};
  std::chrono::milliseconds max_backoff{30000};
  ScoringPathway pathway = ScoringPathway::automatic;
  int top_logprobs = 20;
};

// Client for an OpenAI-compatible /completions endpoint.
class HttpBackend final : public Backend {
 public:
  explicit HttpBackend(HttpBackendOptions options);
  ~HttpBackend() override;

  CompletionResponse complete(const CompletionRequest& request) override;
  ContinuationLogprobs score_continuations(const std::string& model, const std::string& prompt,
                                           std::span<const std::string> candidates) override;
  std::string identity() const override { return "http:" + options_.base_url; }
  int max_in_flight() const noexcept override { return options_.max_in_flight; }
  BackendStats stats() const override { return stats_.snapshot(); }

 private:
  nlohmann::json post(const nlohmann::json& body);
  ContinuationLogprobs score_by_echo(const std::string& model, const std::string& prompt,
                                     std::span<const std::string> candidates);
  ContinuationLogprobs score_by_top_logprobs(const std::string& model, const std::string& prompt,
                                             std::span<const std::string> candidates);

  HttpBackendOptions options_;
  std::string scheme_host_port_;
  std::string path_prefix_;
  std::unique_ptr<std::counting_semaphore<>> in_flight_;
  detail::AtomicStats stats_;
};

std::optional<ScoringPathway> parse_scoring_pathway(std::string_view text) noexcept;

}  // namespace prmkit
