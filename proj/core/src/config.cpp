#include "prmkit/config.hpp"

#include "prmkit/errors.hpp"
#include "prmkit/hashing.hpp"
#include "prmkit/http_backend.hpp"
#include "prmkit/jsonl.hpp"

namespace prmkit {
namespace {

using nlohmann::json;

void reject_unknown_keys(const json& defaults, const json& doc, const std::string& where) {
  if (!doc.is_object()) throw InvalidArgument("config" + where + " must be an object");
  for (auto it = doc.begin(); it != doc.end(); ++it) {
    const std::string path = where + "." + it.key();
    if (!defaults.contains(it.key())) throw InvalidArgument("unknown config key " + path.substr(1));
    if (defaults[it.key()].is_object()) reject_unknown_keys(defaults[it.key()], it.value(), path);
  }
}

template <class T>
void get(const json& section, const char* key, T& out) {
  try {
    section.at(key).get_to(out);
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("config key ") + key + ": " + e.what());
  }
}

StepLabel label_named(const std::string& name) {
  auto l = parse_step_label(name);
  if (!l) throw InvalidArgument("label mapping: unknown label '" + name + "'");
  return *l;
}

}  // namespace

json Config::to_json() const {
  return {
      {"seed", seed},
      {"backend",
       {{"url", backend.url},
        {"mock_script", backend.mock_script},
        {"mock_seed", backend.mock_seed},
        {"max_in_flight", backend.max_in_flight},
        {"cache_dir", backend.cache_dir},
        {"cache", backend.cache},
        {"scoring", backend.scoring},
        {"timeout_s", backend.timeout_s},
        {"max_retries", backend.max_retries}}},
      {"generator",
       {{"model", generator.model},
        {"prompt_template", generator.prompt_template},
        {"temperature", generator.temperature},
        {"large_model_temperature", generator.large_model_temperature},
        {"max_tokens", generator.max_tokens},
        {"step_delimiter", generator.step_delimiter}}},
      {"verify",
       {{"model", verify.model},
        {"prompt_template", verify.prompt_template},
        {"method", verify.method},
        {"cot_budget_tokens", verify.cot_budget_tokens},
        {"forced_suffix", verify.forced_suffix},
        {"yes_forms", verify.yes_forms},
        {"no_forms", verify.no_forms},
        {"temperature", verify.temperature},
        {"parallel_temperature", verify.parallel_temperature},
        {"K", verify.K},
        {"R", verify.R},
        {"trigger_phrases", verify.trigger_phrases},
        {"repetition_ngram", verify.repetition_ngram},
        {"repetition_threshold", verify.repetition_threshold}}},
      {"selection",
       {{"n", selection.n},
        {"strategy", selection.strategy},
        {"beams", selection.beams},
        {"candidates_per_beam", selection.candidates_per_beam},
        {"max_steps", selection.max_steps},
        {"beam_temperature", selection.beam_temperature},
        {"vote_over_terminated", selection.vote_over_terminated}}},
      {"datagen",
       {{"model", datagen.model},
        {"prompt_template", datagen.prompt_template},
        {"n_per_prefix", datagen.n_per_prefix},
        {"temperature", datagen.temperature},
        {"max_tokens", datagen.max_tokens},
        {"filter_max_tokens", datagen.filter_max_tokens},
        {"filter_mode", datagen.filter_mode},
        {"balance_target", datagen.balance_target},
        {"balance_tolerance", datagen.balance_tolerance},
        {"label_positive", datagen.label_positive},
        {"label_neutral", datagen.label_neutral},
        {"label_negative", datagen.label_negative},
        {"mc_rollouts", datagen.mc_rollouts},
        {"mc_success_rule", datagen.mc_success_rule},
        {"target_kept", datagen.target_kept},
        {"batch_size", datagen.batch_size}}},
      {"eval",
       {{"metric", eval.metric},
        {"invalid_policy", eval.invalid_policy},
        {"threshold", eval.threshold},
        {"generator_params", eval.generator_params},
        {"verifier_params", eval.verifier_params},
        {"flops_rule", eval.flops_rule},
        {"pass_at_1_samples", eval.pass_at_1_samples},
        {"difficulty_bins", eval.difficulty_bins}}},
  };
}

Config Config::from_json(const json& doc) {
  json merged = Config{}.to_json();
  reject_unknown_keys(merged, doc, "");
  merged.merge_patch(doc);

  Config c;
  get(merged, "seed", c.seed);
  const json& b = merged.at("backend");
  get(b, "url", c.backend.url);
  get(b, "mock_script", c.backend.mock_script);
  get(b, "mock_seed", c.backend.mock_seed);
  get(b, "max_in_flight", c.backend.max_in_flight);
  get(b, "cache_dir", c.backend.cache_dir);
  get(b, "cache", c.backend.cache);
  get(b, "scoring", c.backend.scoring);
  get(b, "timeout_s", c.backend.timeout_s);
  get(b, "max_retries", c.backend.max_retries);
  const json& g = merged.at("generator");
  get(g, "model", c.generator.model);
  get(g, "prompt_template", c.generator.prompt_template);
  get(g, "temperature", c.generator.temperature);
  get(g, "large_model_temperature", c.generator.large_model_temperature);
  get(g, "max_tokens", c.generator.max_tokens);
  get(g, "step_delimiter", c.generator.step_delimiter);
  const json& v = merged.at("verify");
  get(v, "model", c.verify.model);
  get(v, "prompt_template", c.verify.prompt_template);
  get(v, "method", c.verify.method);
  get(v, "cot_budget_tokens", c.verify.cot_budget_tokens);
  get(v, "forced_suffix", c.verify.forced_suffix);
  get(v, "yes_forms", c.verify.yes_forms);
  get(v, "no_forms", c.verify.no_forms);
  get(v, "temperature", c.verify.temperature);
  get(v, "parallel_temperature", c.verify.parallel_temperature);
  get(v, "K", c.verify.K);
  get(v, "R", c.verify.R);
  get(v, "trigger_phrases", c.verify.trigger_phrases);
  get(v, "repetition_ngram", c.verify.repetition_ngram);
  get(v, "repetition_threshold", c.verify.repetition_threshold);
  const json& s = merged.at("selection");
  get(s, "n", c.selection.n);
  get(s, "strategy", c.selection.strategy);
  get(s, "beams", c.selection.beams);
  get(s, "candidates_per_beam", c.selection.candidates_per_beam);
  get(s, "max_steps", c.selection.max_steps);
  get(s, "beam_temperature", c.selection.beam_temperature);
  get(s, "vote_over_terminated", c.selection.vote_over_terminated);
  const json& d = merged.at("datagen");
  get(d, "model", c.datagen.model);
  get(d, "prompt_template", c.datagen.prompt_template);
  get(d, "n_per_prefix", c.datagen.n_per_prefix);
  get(d, "temperature", c.datagen.temperature);
  get(d, "max_tokens", c.datagen.max_tokens);
  get(d, "filter_max_tokens", c.datagen.filter_max_tokens);
  get(d, "filter_mode", c.datagen.filter_mode);
  get(d, "balance_target", c.datagen.balance_target);
  get(d, "balance_tolerance", c.datagen.balance_tolerance);
  get(d, "label_positive", c.datagen.label_positive);
  get(d, "label_neutral", c.datagen.label_neutral);
  get(d, "label_negative", c.datagen.label_negative);
  get(d, "mc_rollouts", c.datagen.mc_rollouts);
  get(d, "mc_success_rule", c.datagen.mc_success_rule);
  get(d, "target_kept", c.datagen.target_kept);
  get(d, "batch_size", c.datagen.batch_size);
  const json& e = merged.at("eval");
  get(e, "metric", c.eval.metric);
  get(e, "invalid_policy", c.eval.invalid_policy);
  get(e, "threshold", c.eval.threshold);
  get(e, "generator_params", c.eval.generator_params);
  get(e, "verifier_params", c.eval.verifier_params);
  get(e, "flops_rule", c.eval.flops_rule);
  get(e, "pass_at_1_samples", c.eval.pass_at_1_samples);
  get(e, "difficulty_bins", c.eval.difficulty_bins);
  c.validate();
  return c;
}

Config Config::load(const std::filesystem::path& path) {
  json doc;
  try {
    doc = json::parse(read_text(path));
  } catch (const json::parse_error& e) {
    throw IOFailure("config " + path.string() + ": " + e.what());
  }
  return from_json(doc);
}

void Config::validate() const {
  if (backend.max_in_flight < 1) throw InvalidArgument("backend.max_in_flight must be >= 1");
  if (!parse_scoring_pathway(backend.scoring)) throw InvalidArgument("backend.scoring: unknown pathway " + backend.scoring);
  if (!parse_verify_method(verify.method)) throw InvalidArgument("verify.method: unknown method " + verify.method);
  if (selection.n.empty()) throw InvalidArgument("selection.n must list at least one N");
  for (int n : selection.n) {
    if (n < 1) throw InvalidArgument("selection.n values must be >= 1");
  }
  if (!parse_selection_strategy(selection.strategy)) {
    throw InvalidArgument("selection.strategy: unknown strategy " + selection.strategy);
  }
  if (datagen.filter_mode != "process" && datagen.filter_mode != "outcome") {
    throw InvalidArgument("datagen.filter_mode must be process or outcome");
  }
  if (!parse_success_rule(datagen.mc_success_rule)) throw InvalidArgument("datagen.mc_success_rule must be any or majority");
  if (datagen.batch_size < 1) throw InvalidArgument("datagen.batch_size must be >= 1");
  if (datagen.target_kept < 0) throw InvalidArgument("datagen.target_kept must be >= 0");
  if (eval.metric != "harmonic" && eval.metric != "binary") throw InvalidArgument("eval.metric must be harmonic or binary");
  if (!parse_invalid_policy(eval.invalid_policy)) throw InvalidArgument("eval.invalid_policy must be as_wrong or exclude");
  if (eval.pass_at_1_samples < 1) throw InvalidArgument("eval.pass_at_1_samples must be >= 1");
  if (eval.difficulty_bins < 1) throw InvalidArgument("eval.difficulty_bins must be >= 1");
  label_mapping();
  flops_model().validate();
  verify_config().validate();
  beam_config().validate();
}

std::string Config::hash() const {
  json doc = to_json();
  for (const char* key : {"max_in_flight", "cache_dir", "cache", "timeout_s", "max_retries"}) {
    doc["backend"].erase(key);
  }
  return canonical_hash(doc);
}

std::string resolve_template(const std::string& name_or_path) {
  if (auto t = prompts::builtin(name_or_path)) return std::string(*t);
  return read_text(name_or_path);
}

GeneratorConfig Config::generator_config() const {
  GeneratorConfig g;
  g.model = generator.model;
  g.prompt_template = resolve_template(generator.prompt_template);
  g.temperature = generator.temperature;
  g.max_tokens = generator.max_tokens;
  g.seed = seed;
  g.step_delimiter = generator.step_delimiter;
  return g;
}

VerifyConfig Config::verify_config() const {
  VerifyConfig v;
  v.model = verify.model;
  v.prompt_template = resolve_template(verify.prompt_template);
  v.cot_budget_tokens = verify.cot_budget_tokens;
  v.forced_suffix = verify.forced_suffix;
  v.yes_forms = verify.yes_forms;
  v.no_forms = verify.no_forms;
  v.temperature = verify.temperature;
  v.parallel_temperature = verify.parallel_temperature;
  v.K = verify.K;
  v.R = verify.R;
  v.trigger_phrases = verify.trigger_phrases;
  v.seed = seed;
  v.limits = chain_limits();
  return v;
}

BeamConfig Config::beam_config() const {
  BeamConfig b;
  b.beams = selection.beams;
  b.candidates_per_beam = selection.candidates_per_beam;
  b.max_steps = selection.max_steps;
  b.temperature = selection.beam_temperature;
  b.step_delimiter = generator.step_delimiter;
  b.vote_over_terminated = selection.vote_over_terminated;
  return b;
}

SamplerConfig Config::sampler_config() const {
  SamplerConfig s;
  s.model = datagen.model;
  s.prompt_template = resolve_template(datagen.prompt_template);
  s.n_per_prefix = datagen.n_per_prefix;
  s.temperature = datagen.temperature;
  s.max_tokens = datagen.max_tokens;
  s.seed = seed;
  return s;
}

LabelMapping Config::label_mapping() const {
  return {label_named(datagen.label_positive), label_named(datagen.label_neutral),
          label_named(datagen.label_negative)};
}

FlopsModel Config::flops_model() const { return {eval.generator_params, eval.verifier_params, eval.flops_rule}; }

InvalidPolicy Config::invalid_policy() const { return *parse_invalid_policy(eval.invalid_policy); }

ChainLimits Config::chain_limits() const { return {verify.repetition_ngram, verify.repetition_threshold}; }

}  // namespace prmkit
