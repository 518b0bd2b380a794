#include "prmkit/http_backend.hpp"

#include <httplib.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <thread>

#include "prmkit/errors.hpp"
#include "prmkit/mock_backend.hpp"

namespace prmkit {

using nlohmann::json;

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

bool retryable_status(int status) { return status == 408 || status == 409 || status == 429 || status >= 500; }

struct SemaphoreGuard {
  explicit SemaphoreGuard(std::counting_semaphore<>& s) : sem(s) { sem.acquire(); }
  ~SemaphoreGuard() { sem.release(); }
  std::counting_semaphore<>& sem;
};

const json& logprobs_block(const json& choice) {
  static const json kNull;
  auto it = choice.find("logprobs");
  return it == choice.end() ? kNull : *it;
}

}  // namespace

std::optional<ScoringPathway> parse_scoring_pathway(std::string_view text) noexcept {
  if (text == "auto" || text == "automatic") return ScoringPathway::automatic;
  if (text == "echo") return ScoringPathway::echo;
  if (text == "top_logprobs" || text == "top-logprobs") return ScoringPathway::top_logprobs;
  return std::nullopt;
}

HttpBackend::HttpBackend(HttpBackendOptions options) : options_(std::move(options)) {
  const auto& url = options_.base_url;
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw InvalidArgument("backend url needs a scheme: " + url);
  const auto path_begin = url.find('/', scheme_end + 3);
  scheme_host_port_ = url.substr(0, path_begin);
  path_prefix_ = path_begin == std::string::npos ? std::string{} : url.substr(path_begin);
  while (!path_prefix_.empty() && path_prefix_.back() == '/') path_prefix_.pop_back();
  if (path_prefix_.empty()) path_prefix_ = "/v1";
  if (!options_.api_key) {
    if (const char* env = std::getenv("PRMKIT_API_KEY"); env && *env) options_.api_key = env;
  }
  options_.max_in_flight = std::max(1, options_.max_in_flight);
  options_.max_retries = std::max(0, options_.max_retries);
  in_flight_ = std::make_unique<std::counting_semaphore<>>(options_.max_in_flight);
}

HttpBackend::~HttpBackend() = default;

json HttpBackend::post(const json& body) {
  const std::string path = path_prefix_ + "/completions";
  const std::string payload = body.dump();
  std::string last_error;
  auto backoff = options_.initial_backoff;
  for (int attempt = 0; attempt <= options_.max_retries; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(backoff);
      backoff = std::min(options_.max_backoff, backoff * 2);
    }
    stats_.network_calls.fetch_add(1);
    httplib::Result res{nullptr, httplib::Error::Unknown};
    {
      SemaphoreGuard guard(*in_flight_);
      httplib::Client client(scheme_host_port_);
      const auto secs = static_cast<time_t>(options_.timeout.count());
      client.set_connection_timeout(std::min<time_t>(secs, 30), 0);
      client.set_read_timeout(secs, 0);
      client.set_write_timeout(secs, 0);
      httplib::Headers headers;
      if (options_.api_key) headers.emplace("Authorization", "Bearer " + *options_.api_key);
      res = client.Post(path, headers, payload, "application/json");
    }
    if (!res) {
      last_error = httplib::to_string(res.error());
      continue;
    }
    if (res->status >= 200 && res->status < 300) {
      try {
        return json::parse(res->body);
      } catch (const json::exception& e) {
        throw TransportError(std::string("malformed JSON from backend: ") + e.what());
      }
    }
    if (!retryable_status(res->status)) {
      throw BackendRefusal(res->status, res->body.substr(0, 500));
    }
    last_error = "HTTP " + std::to_string(res->status);
  }
  throw TransportError("request to " + scheme_host_port_ + path + " failed after " +
                       std::to_string(options_.max_retries + 1) + " attempts: " + last_error);
}

CompletionResponse HttpBackend::complete(const CompletionRequest& request) {
  request.validate();
  stats_.requests.fetch_add(1);
  json body{{"model", request.model},
            {"prompt", request.prompt},
            {"max_tokens", request.max_tokens},
            {"temperature", request.temperature},
            {"n", request.num_samples}};
  if (request.stop) body["stop"] = *request.stop;
  if (request.seed) body["seed"] = *request.seed;
  if (request.want_logprobs) body["logprobs"] = 1;

  const json doc = post(body);
  std::vector<json> choices;
  try {
    choices = doc.at("choices").get<std::vector<json>>();
    std::stable_sort(choices.begin(), choices.end(), [](const json& a, const json& b) {
      return a.value("index", 0) < b.value("index", 0);
    });
  } catch (const json::exception& e) {
    throw TransportError(std::string("completions response without choices: ") + e.what());
  }
  if (choices.size() != static_cast<std::size_t>(request.num_samples)) {
    throw TransportError("backend returned " + std::to_string(choices.size()) + " choices for n=" +
                         std::to_string(request.num_samples));
  }

  CompletionResponse out;
  std::int64_t usage_total = -1;
  if (auto u = doc.find("usage"); u != doc.end() && u->is_object()) {
    usage_total = u->value("completion_tokens", std::int64_t{-1});
  }
  bool need_usage_split = false;
  for (const auto& c : choices) {
    out.texts.push_back(c.value("text", std::string{}));
    const auto reason = c.contains("finish_reason") && c.at("finish_reason").is_string()
                            ? parse_finish_reason(c.at("finish_reason").get<std::string>())
                            : FinishReason::other;
    out.finish_reasons.push_back(reason);
    // vLLM reports the matched stop string in stop_reason; null or a token id means EOS.
    bool hit = reason == FinishReason::stop;
    if (auto sr = c.find("stop_reason"); sr != c.end()) hit = sr->is_string();
    out.stop_sequence_hit.push_back(hit && reason == FinishReason::stop);
    const json& lp = logprobs_block(c);
    if (lp.is_object() && lp.contains("tokens") && lp.at("tokens").is_array()) {
      out.token_counts.push_back(static_cast<std::int64_t>(lp.at("tokens").size()));
    } else {
      out.token_counts.push_back(-1);
      need_usage_split = true;
    }
  }
  if (need_usage_split) {
    const auto n = static_cast<std::int64_t>(out.texts.size());
    for (std::size_t i = 0; i < out.texts.size(); ++i) {
      if (out.token_counts[i] >= 0) continue;
      if (usage_total >= 0) {
        out.token_counts[i] = usage_total / n + (static_cast<std::int64_t>(i) < usage_total % n ? 1 : 0);
      } else {
        out.token_counts[i] = static_cast<std::int64_t>(mock_tokenize(out.texts[i]).size());
      }
    }
  }
  stats_.generated_tokens.fetch_add(static_cast<std::uint64_t>(out.total_tokens()));
  return out;
}

ContinuationLogprobs HttpBackend::score_by_echo(const std::string& model, const std::string& prompt,
                                                std::span<const std::string> candidates) {
  ContinuationLogprobs out;
  for (const auto& candidate : candidates) {
    const std::string full = prompt + candidate;
    const json doc = post({{"model", model},
                           {"prompt", full},
                           {"max_tokens", 1},
                           {"temperature", 0.0},
                           {"echo", true},
                           {"logprobs", 1}});
    try {
      const json& lp = logprobs_block(doc.at("choices").at(0));
      const auto& tokens = lp.at("tokens");
      const auto& token_lps = lp.at("token_logprobs");
      std::vector<std::size_t> offsets;
      if (lp.contains("text_offset") && lp.at("text_offset").is_array()) {
        offsets = lp.at("text_offset").get<std::vector<std::size_t>>();
      } else {
        std::size_t pos = 0;
        for (const auto& t : tokens) {
          offsets.push_back(pos);
          pos += t.get<std::string>().size();
        }
      }
      double sum = 0.0;
      bool covered = false;
      for (std::size_t i = 0; i < tokens.size() && i < offsets.size(); ++i) {
        const std::size_t begin = offsets[i];
        const std::size_t end = begin + tokens[i].get<std::string>().size();
        if (begin >= full.size() || end <= prompt.size()) continue;
        if (token_lps.at(i).is_null()) continue;
        sum += token_lps.at(i).get<double>();
        covered = true;
      }
      if (!covered) throw TransportError("echo response did not cover candidate '" + candidate + "'");
      out[candidate] = std::min(0.0, sum);
    } catch (const json::exception& e) {
      throw UnsupportedBackend(std::string("echo logprobs unavailable: ") + e.what());
    }
  }
  return out;
}

ContinuationLogprobs HttpBackend::score_by_top_logprobs(const std::string& model,
                                                        const std::string& prompt,
                                                        std::span<const std::string> candidates) {
  const json doc = post({{"model", model},
                         {"prompt", prompt},
                         {"max_tokens", 1},
                         {"temperature", 0.0},
                         {"logprobs", options_.top_logprobs}});
  json top;
  try {
    top = logprobs_block(doc.at("choices").at(0)).at("top_logprobs").at(0);
  } catch (const json::exception& e) {
    throw UnsupportedBackend(std::string("top_logprobs unavailable: ") + e.what());
  }
  ContinuationLogprobs out;
  for (const auto& candidate : candidates) {
    auto it = top.find(candidate);
    out[candidate] = (it != top.end() && it->is_number()) ? std::min(0.0, it->get<double>()) : kNegInf;
  }
  return out;
}

ContinuationLogprobs HttpBackend::score_continuations(const std::string& model,
                                                      const std::string& prompt,
                                                      std::span<const std::string> candidates) {
  validate_candidates(candidates);
  stats_.requests.fetch_add(1);
  switch (options_.pathway) {
    case ScoringPathway::echo: return score_by_echo(model, prompt, candidates);
    case ScoringPathway::top_logprobs: return score_by_top_logprobs(model, prompt, candidates);
    case ScoringPathway::automatic: break;
  }
  try {
    return score_by_echo(model, prompt, candidates);
  } catch (const BackendRefusal&) {
  } catch (const UnsupportedBackend&) {
  }
  try {
    return score_by_top_logprobs(model, prompt, candidates);
  } catch (const BackendRefusal& e) {
    throw UnsupportedBackend(std::string("endpoint supports neither echo nor top_logprobs scoring: ") + e.what());
  }
}

}  // namespace prmkit
