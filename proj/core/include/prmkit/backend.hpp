#pragma once

#include <atomic>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace prmkit {

enum class FinishReason { stop, length, other };
std::string_view to_string(FinishReason r) noexcept;
FinishReason parse_finish_reason(std::string_view text) noexcept;

struct CompletionRequest {
  std::string model;
  std::string prompt;
  int max_tokens = 256;
  double temperature = 0.0;
  std::optional<std::vector<std::string>> stop;
  int num_samples = 1;
  std::optional<std::int64_t> seed;
  bool want_logprobs = false;

  // Throws InvalidArgument when a field is out of range.
  void validate() const;
  // Requests that are not reproducible: sampled without a seed.
  bool cacheable() const noexcept { return temperature <= 0.0 || seed.has_value(); }
};

struct CompletionResponse {
  std::vector<std::string> texts;
  std::vector<std::int64_t> token_counts;
  std::vector<FinishReason> finish_reasons;
  // True when generation ended on one of the request's stop strings rather
  // than end-of-sequence. Meaningful only for finish_reason == stop.
  std::vector<bool> stop_sequence_hit;

  std::size_t size() const noexcept { return texts.size(); }
  std::int64_t total_tokens() const noexcept;
};

struct ContinuationScore {
  std::string candidate;
  double logprob = 0.0;  // natural log, <= 0
};

using ContinuationLogprobs = std::map<std::string, double>;

struct BackendStats {
  std::uint64_t requests = 0;       // calls made against this handle
  std::uint64_t network_calls = 0;  // calls that reached the underlying endpoint
  std::uint64_t cache_hits = 0;
  std::uint64_t cache_misses = 0;
  std::uint64_t cache_bypassed = 0;
  std::uint64_t corrupt_entries = 0;
  std::uint64_t generated_tokens = 0;
};

// Completions-style inference endpoint. Implementations are safe for
// concurrent use.
class Backend {
 public:
  virtual ~Backend() = default;

  virtual CompletionResponse complete(const CompletionRequest& request) = 0;

  // Log-probability of each candidate as the continuation of prompt.
  // Candidates must be nonempty and pairwise distinct.
  virtual ContinuationLogprobs score_continuations(const std::string& model,
                                                   const std::string& prompt,
                                                   std::span<const std::string> candidates) = 0;

  // Stable string naming the endpoint or script; part of cache keys.
  virtual std::string identity() const = 0;

  // Upper bound on concurrent requests callers should fan out to.
  virtual int max_in_flight() const noexcept { return 1; }

  virtual BackendStats stats() const = 0;
};

void validate_candidates(std::span<const std::string> candidates);

nlohmann::json to_json(const CompletionRequest& request);
nlohmann::json to_json(const CompletionResponse& response);
CompletionResponse completion_response_from_json(const nlohmann::json& doc);
nlohmann::json logprobs_to_json(const ContinuationLogprobs& scores);
ContinuationLogprobs logprobs_from_json(const nlohmann::json& doc);

namespace detail {

struct AtomicStats {
  std::atomic<std::uint64_t> requests{0};
  std::atomic<std::uint64_t> network_calls{0};
  std::atomic<std::uint64_t> cache_hits{0};
  std::atomic<std::uint64_t> cache_misses{0};
  std::atomic<std::uint64_t> cache_bypassed{0};
  std::atomic<std::uint64_t> corrupt_entries{0};
  std::atomic<std::uint64_t> generated_tokens{0};

  BackendStats snapshot() const noexcept;
};

}  // namespace detail
}  // namespace prmkit
