#pragma once

#include <map>
#include <filesystem>
#include <memory>
#include <mutex>

#include "prmkit/backend.hpp"

namespace prmkit {

// Content-addressed cache in front of another backend. Layout:
// <dir>/<sha256>.json, one canonical response document per file. Sampled
// requests without a seed bypass the cache.
class CachedBackend final : public Backend {
 public:
  CachedBackend(std::shared_ptr<Backend> inner, std::filesystem::path dir);

  CompletionResponse complete(const CompletionRequest& request) override;
  ContinuationLogprobs score_continuations(const std::string& model, const std::string& prompt,
                                           std::span<const std::string> candidates) override;
  std::string identity() const override { return inner_->identity(); }
  int max_in_flight() const noexcept override { return inner_->max_in_flight(); }
  BackendStats stats() const override;

  std::string key_for(const CompletionRequest& request) const;
  std::string key_for_scores(const std::string& model, const std::string& prompt,
                             std::span<const std::string> candidates) const;
  std::filesystem::path entry_path(const std::string& key) const { return dir_ / (key + ".json"); }

 private:
  std::optional<nlohmann::json> lookup(const std::string& key);
  void store(const std::string& key, const nlohmann::json& doc);
  std::shared_ptr<std::mutex> lock_for(const std::string& key);

  std::shared_ptr<Backend> inner_;
  std::filesystem::path dir_;
  std::mutex locks_guard_;
  std::map<std::string, std::shared_ptr<std::mutex>> locks_;
  detail::AtomicStats stats_;
};

}  // namespace prmkit
