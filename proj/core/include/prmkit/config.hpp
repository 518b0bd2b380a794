#pragma once

// Effective run configuration: defaults, overlaid by one JSON config file,
// overlaid by command-line flags.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "prmkit/beam_search.hpp"
#include "prmkit/datagen.hpp"
#include "prmkit/metrics.hpp"
#include "prmkit/selection.hpp"
#include "prmkit/verifier.hpp"

namespace prmkit {

struct BackendSettings {
  std::string url;          // OpenAI-compatible endpoint; empty when mocked
  std::string mock_script;  // path to a mock script
  std::uint64_t mock_seed = 0;
  int max_in_flight = 8;
  std::string cache_dir;  // empty: $PRMKIT_CACHE_DIR, else no cache
  bool cache = true;
  std::string scoring = "auto";  // auto | echo | top_logprobs
  int timeout_s = 600;
  int max_retries = 3;
};

struct GeneratorSettings {
  std::string model = "generator";
  std::string prompt_template = "generator";  // built-in name or file path
  double temperature = kSmallGeneratorTemperature;
  double large_model_temperature = kLargeGeneratorTemperature;
  int max_tokens = 2048;
  std::string step_delimiter = "\n\n";
};

struct VerifySettings {
  std::string model = "verifier";
  std::string prompt_template = "decision-for-each-step";
  std::string method = "think";
  int cot_budget_tokens = 8192;
  std::string forced_suffix = "Is the solution correct?";
  std::vector<std::string> yes_forms{"yes", " yes", "Yes"};
  std::vector<std::string> no_forms{"no", " no", "No"};
  double temperature = 0.0;
  double parallel_temperature = 0.6;
  int K = 1;
  int R = 1;
  std::vector<std::string> trigger_phrases = kDefaultTriggerPhrases;
  int repetition_ngram = 8;
  double repetition_threshold = 0.5;
};

struct SelectionSettings {
  std::vector<int> n{4};
  std::string strategy = "weighted";
  int beams = 4;
  int candidates_per_beam = 4;
  int max_steps = 20;
  double beam_temperature = 0.6;
  bool vote_over_terminated = false;
};

struct DatagenSettings {
  std::string model = "verifier";
  std::string prompt_template = "decision-for-each-step";
  int n_per_prefix = 4;
  double temperature = 0.1;
  int max_tokens = 8192;       // sampling cap
  int filter_max_tokens = 4096;
  std::string filter_mode = "process";
  double balance_target = 0.5;
  double balance_tolerance = 0.05;
  std::string label_positive = "correct";
  std::string label_neutral = "correct";
  std::string label_negative = "incorrect";
  int mc_rollouts = 8;
  std::string mc_success_rule = "any";
  int target_kept = 0;  // 0: sample every prefix
  int batch_size = 16;
};

struct EvalSettings {
  std::string metric = "harmonic";  // harmonic | binary; both are always reported
  std::string invalid_policy = "as_wrong";
  double threshold = 0.5;
  double generator_params = 3.0e9;
  double verifier_params = 1.5e9;
  std::string flops_rule = "2*params*generated_tokens";
  int pass_at_1_samples = 32;
  int difficulty_bins = 4;
};

struct Config {
  std::int64_t seed = 0;
  BackendSettings backend;
  GeneratorSettings generator;
  VerifySettings verify;
  SelectionSettings selection;
  DatagenSettings datagen;
  EvalSettings eval;

  // Unknown keys are rejected. Throws InvalidArgument.
  static Config from_json(const nlohmann::json& doc);
  // Defaults overlaid (JSON merge patch) with the file's contents. Throws IOFailure.
  static Config load(const std::filesystem::path& path);
  nlohmann::json to_json() const;
  void validate() const;

  // SHA-256 of the canonical dump of to_json() minus execution-only
  // settings (in-flight bound, cache location, timeouts, retries), which do
  // not change results. Key order in the source file does not matter.
  std::string hash() const;

  GeneratorConfig generator_config() const;
  VerifyConfig verify_config() const;
  BeamConfig beam_config() const;
  SamplerConfig sampler_config() const;
  LabelMapping label_mapping() const;
  FlopsModel flops_model() const;
  InvalidPolicy invalid_policy() const;
  ChainLimits chain_limits() const;
};

// Built-in template name, else the contents of the named file.
std::string resolve_template(const std::string& name_or_path);

}  // namespace prmkit
