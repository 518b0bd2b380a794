#include "prmkit/response_cache.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <sstream>
#include <thread>

#include <unistd.h>

#include "prmkit/errors.hpp"
#include "prmkit/hashing.hpp"

namespace prmkit {

using nlohmann::json;
namespace fs = std::filesystem;

CachedBackend::CachedBackend(std::shared_ptr<Backend> inner, fs::path dir)
    : inner_(std::move(inner)), dir_(std::move(dir)) {
  if (!inner_) throw InvalidArgument("CachedBackend: null inner backend");
  std::error_code ec;
  fs::create_directories(dir_, ec);
  if (ec) throw IOFailure("cannot create cache directory " + dir_.string() + ": " + ec.message());
}

std::string CachedBackend::key_for(const CompletionRequest& request) const {
  return canonical_hash({{"op", "complete"}, {"backend", inner_->identity()}, {"request", to_json(request)}});
}

std::string CachedBackend::key_for_scores(const std::string& model, const std::string& prompt,
                                          std::span<const std::string> candidates) const {
  std::vector<std::string> sorted(candidates.begin(), candidates.end());
  std::sort(sorted.begin(), sorted.end());
  return canonical_hash({{"op", "score_continuations"},
                         {"backend", inner_->identity()},
                         {"request", {{"model", model}, {"prompt", prompt}, {"candidates", sorted}}}});
}

std::shared_ptr<std::mutex> CachedBackend::lock_for(const std::string& key) {
  std::lock_guard guard(locks_guard_);
  auto& slot = locks_[key];
  if (!slot) slot = std::make_shared<std::mutex>();
  return slot;
}

std::optional<json> CachedBackend::lookup(const std::string& key) {
  std::ifstream in(entry_path(key), std::ios::binary);
  if (!in) return std::nullopt;
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return json::parse(buf.str());
  } catch (const json::exception&) {
    stats_.corrupt_entries.fetch_add(1);
    return std::nullopt;
  }
}

void CachedBackend::store(const std::string& key, const json& doc) {
  static std::atomic<std::uint64_t> counter{0};
  const fs::path final_path = entry_path(key);
  fs::path tmp = final_path;
  tmp += ".tmp." + std::to_string(::getpid()) + "." + std::to_string(counter.fetch_add(1));
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IOFailure("cannot write cache entry " + tmp.string());
    out << canonical_dump(doc);
    if (!out.flush()) throw IOFailure("cannot write cache entry " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, final_path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw IOFailure("cannot publish cache entry " + final_path.string());
  }
}

CompletionResponse CachedBackend::complete(const CompletionRequest& request) {
  request.validate();
  stats_.requests.fetch_add(1);
  if (!request.cacheable()) {
    stats_.cache_bypassed.fetch_add(1);
    stats_.network_calls.fetch_add(1);
    auto resp = inner_->complete(request);
    stats_.generated_tokens.fetch_add(static_cast<std::uint64_t>(resp.total_tokens()));
    return resp;
  }
  const std::string key = key_for(request);
  auto lock = lock_for(key);
  std::lock_guard guard(*lock);
  if (auto doc = lookup(key)) {
    try {
      auto resp = completion_response_from_json(*doc);
      stats_.cache_hits.fetch_add(1);
      stats_.generated_tokens.fetch_add(static_cast<std::uint64_t>(resp.total_tokens()));
      return resp;
    } catch (const json::exception&) {
      stats_.corrupt_entries.fetch_add(1);
    }
  }
  stats_.cache_misses.fetch_add(1);
  stats_.network_calls.fetch_add(1);
  auto resp = inner_->complete(request);
  store(key, to_json(resp));
  stats_.generated_tokens.fetch_add(static_cast<std::uint64_t>(resp.total_tokens()));
  return resp;
}

ContinuationLogprobs CachedBackend::score_continuations(const std::string& model,
                                                        const std::string& prompt,
                                                        std::span<const std::string> candidates) {
  validate_candidates(candidates);
  stats_.requests.fetch_add(1);
  const std::string key = key_for_scores(model, prompt, candidates);
  auto lock = lock_for(key);
  std::lock_guard guard(*lock);
  if (auto doc = lookup(key)) {
    try {
      auto scores = logprobs_from_json(doc->at("scores"));
      bool complete_hit = std::all_of(candidates.begin(), candidates.end(),
                                      [&](const std::string& c) { return scores.count(c) == 1; });
      if (complete_hit && scores.size() == candidates.size()) {
        stats_.cache_hits.fetch_add(1);
        return scores;
      }
    } catch (const json::exception&) {
    }
    stats_.corrupt_entries.fetch_add(1);
  }
  stats_.cache_misses.fetch_add(1);
  stats_.network_calls.fetch_add(1);
  auto scores = inner_->score_continuations(model, prompt, candidates);
  store(key, {{"scores", logprobs_to_json(scores)}});
  return scores;
}

BackendStats CachedBackend::stats() const { return stats_.snapshot(); }

}  // namespace prmkit
