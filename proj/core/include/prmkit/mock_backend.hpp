#pragma once

// Deterministic scripted backend. See docs/mock_script.md for the script
// schema. Responses depend only on (script, seed, request).

#include <cstdint>
#include <filesystem>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "prmkit/backend.hpp"

namespace prmkit {

enum class MatchMode { contains, exact, prefix, suffix, any };

struct ScriptedCompletion {
  std::string pattern;
  MatchMode match = MatchMode::contains;
  std::optional<std::string> model;
  std::vector<std::string> responses;
  std::vector<std::int64_t> token_counts;  // optional, parallel to responses
};

struct ScriptedLogprobs {
  std::string pattern;
  MatchMode match = MatchMode::contains;
  std::optional<std::string> model;
  ContinuationLogprobs scores;
};

struct MockScript {
  std::vector<ScriptedCompletion> completions;
  std::map<std::string, std::vector<std::string>> prefix_table;  // exact prompt -> continuations
  std::vector<ScriptedLogprobs> logprobs;
  std::optional<std::vector<std::string>> default_completion;
  std::optional<ContinuationLogprobs> default_logprobs;
  // Candidates absent from a matched table get this logprob.
  double missing_logprob = -std::numeric_limits<double>::infinity();

  static MockScript from_json(const nlohmann::json& doc);
  static MockScript load(const std::filesystem::path& path);
  nlohmann::json to_json() const;
};

// Pieces of the form (leading whitespace + non-whitespace run); the mock's
// stand-in for a tokenizer.
std::vector<std::string_view> mock_tokenize(std::string_view text);

class MockBackend final : public Backend {
 public:
  MockBackend(MockScript script, std::uint64_t seed, int max_in_flight = 1);

  CompletionResponse complete(const CompletionRequest& request) override;
  ContinuationLogprobs score_continuations(const std::string& model, const std::string& prompt,
                                           std::span<const std::string> candidates) override;
  std::string identity() const override { return identity_; }
  int max_in_flight() const noexcept override { return max_in_flight_; }
  BackendStats stats() const override { return stats_.snapshot(); }

  // Order in which `m` scripted variants are walked for sampled requests.
  std::vector<std::size_t> variant_order(std::size_t m) const;

  const MockScript& script() const noexcept { return script_; }

 private:
  MockScript script_;
  std::uint64_t seed_;
  int max_in_flight_;
  std::string identity_;
  detail::AtomicStats stats_;
};

}  // namespace prmkit
