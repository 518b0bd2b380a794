#include "prmkit/backend.hpp"

#include <cmath>
#include <limits>
#include <set>

#include "prmkit/errors.hpp"

namespace prmkit {

using nlohmann::json;

std::string_view to_string(FinishReason r) noexcept {
  switch (r) {
    case FinishReason::stop: return "stop";
    case FinishReason::length: return "length";
    case FinishReason::other: return "other";
  }
  return "other";
}

FinishReason parse_finish_reason(std::string_view text) noexcept {
  if (text == "stop" || text == "eos") return FinishReason::stop;
  if (text == "length") return FinishReason::length;
  return FinishReason::other;
}

void CompletionRequest::validate() const {
  if (max_tokens < 1) throw InvalidArgument("max_tokens must be >= 1");
  if (!(temperature >= 0.0)) throw InvalidArgument("temperature must be >= 0");
  if (num_samples < 1) throw InvalidArgument("num_samples must be >= 1");
}

std::int64_t CompletionResponse::total_tokens() const noexcept {
  std::int64_t total = 0;
  for (auto t : token_counts) total += t;
  return total;
}

void validate_candidates(std::span<const std::string> candidates) {
  if (candidates.empty()) throw InvalidArgument("score_continuations: no candidates");
  std::set<std::string_view> seen;
  for (const auto& c : candidates) {
    if (!seen.insert(c).second) {
      throw InvalidArgument("score_continuations: duplicate candidate '" + c + "'");
    }
  }
}

json to_json(const CompletionRequest& r) {
  json doc;
  doc["model"] = r.model;
  doc["prompt"] = r.prompt;
  doc["max_tokens"] = r.max_tokens;
  doc["temperature"] = r.temperature;
  doc["stop"] = r.stop ? json(*r.stop) : json(nullptr);
  doc["num_samples"] = r.num_samples;
  doc["seed"] = r.seed ? json(*r.seed) : json(nullptr);
  doc["want_logprobs"] = r.want_logprobs;
  return doc;
}

json to_json(const CompletionResponse& r) {
  json reasons = json::array();
  for (auto f : r.finish_reasons) reasons.push_back(std::string(to_string(f)));
  json hits = json::array();
  for (bool b : r.stop_sequence_hit) hits.push_back(b);
  return {{"texts", r.texts},
          {"token_counts", r.token_counts},
          {"finish_reasons", std::move(reasons)},
          {"stop_sequence_hit", std::move(hits)}};
}

CompletionResponse completion_response_from_json(const json& doc) {
  CompletionResponse r;
  r.texts = doc.at("texts").get<std::vector<std::string>>();
  r.token_counts = doc.at("token_counts").get<std::vector<std::int64_t>>();
  for (const auto& f : doc.at("finish_reasons")) r.finish_reasons.push_back(parse_finish_reason(f.get<std::string>()));
  for (const auto& b : doc.at("stop_sequence_hit")) r.stop_sequence_hit.push_back(b.get<bool>());
  if (r.token_counts.size() != r.texts.size() || r.finish_reasons.size() != r.texts.size() ||
      r.stop_sequence_hit.size() != r.texts.size()) {
    throw json::other_error::create(501, "response arrays differ in length", &doc);
  }
  return r;
}

json logprobs_to_json(const ContinuationLogprobs& scores) {
  json doc = json::object();
  for (const auto& [candidate, lp] : scores) {
    doc[candidate] = std::isfinite(lp) ? json(lp) : json(nullptr);
  }
  return doc;
}

ContinuationLogprobs logprobs_from_json(const json& doc) {
  ContinuationLogprobs out;
  for (const auto& [candidate, lp] : doc.items()) {
    out[candidate] = lp.is_null() ? -std::numeric_limits<double>::infinity() : lp.get<double>();
  }
  return out;
}

namespace detail {

BackendStats AtomicStats::snapshot() const noexcept {
  BackendStats s;
  s.requests = requests.load();
  s.network_calls = network_calls.load();
  s.cache_hits = cache_hits.load();
  s.cache_misses = cache_misses.load();
  s.cache_bypassed = cache_bypassed.load();
  s.corrupt_entries = corrupt_entries.load();
  s.generated_tokens = generated_tokens.load();
  return s;
}

}  // namespace detail
}  // namespace prmkit
