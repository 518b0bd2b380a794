#include "prmkit/metrics.hpp"

#include <cmath>

#include "prmkit/errors.hpp"
#include "prmkit/selection.hpp"

namespace prmkit {

std::string_view to_string(Prediction p) noexcept {
  switch (p) {
    case Prediction::correct: return "correct";
    case Prediction::incorrect: return "incorrect";
    case Prediction::invalid: return "invalid";
  }
  return "invalid";
}

std::optional<Prediction> parse_prediction(std::string_view text) noexcept {
  if (text == "correct") return Prediction::correct;
  if (text == "incorrect") return Prediction::incorrect;
  if (text == "invalid") return Prediction::invalid;
  return std::nullopt;
}

std::optional<InvalidPolicy> parse_invalid_policy(std::string_view text) noexcept {
  if (text == "as_wrong" || text == "wrong") return InvalidPolicy::as_wrong;
  if (text == "exclude") return InvalidPolicy::exclude;
  return std::nullopt;
}

Confusion confusion(std::span<const EvalItem> items, Prediction positive, InvalidPolicy policy) {
  if (positive == Prediction::invalid) throw InvalidArgument("confusion: positive class must be correct or incorrect");
  Confusion c;
  for (const auto& item : items) {
    const bool gold_positive = (positive == Prediction::incorrect) == item.gold_has_error;
    bool pred_positive;
    if (item.predicted == Prediction::invalid) {
      if (policy == InvalidPolicy::exclude) continue;
      pred_positive = !gold_positive;
    } else {
      pred_positive = item.predicted == positive;
    }
    if (gold_positive && pred_positive) ++c.tp;
    else if (gold_positive) ++c.fn;
    else if (pred_positive) ++c.fp;
    else ++c.tn;
  }
  return c;
}

double binary_f1(std::span<const EvalItem> items, Prediction positive, InvalidPolicy policy) {
  if (items.empty()) throw EmptyInput("binary_f1: no items");
  const Confusion c = confusion(items, positive, policy);
  const auto denom = 2 * c.tp + c.fp + c.fn;
  if (c.tp == 0 || denom == 0) return 0.0;
  return 2.0 * static_cast<double>(c.tp) / static_cast<double>(denom);
}

SubsetAccuracy subset_accuracy(std::span<const EvalItem> items, InvalidPolicy policy) {
  SubsetAccuracy s;
  std::int64_t hit_err = 0, hit_ok = 0;
  for (const auto& item : items) {
    if (item.predicted == Prediction::invalid && policy == InvalidPolicy::exclude) continue;
    if (item.gold_has_error) {
      ++s.n_erroneous;
      if (item.predicted == Prediction::incorrect) ++hit_err;
    } else {
      ++s.n_correct;
      if (item.predicted == Prediction::correct) ++hit_ok;
    }
  }
  if (s.n_erroneous == 0) throw MissingSubset("no items with an erroneous gold label");
  if (s.n_correct == 0) throw MissingSubset("no items with an error-free gold label");
  s.on_erroneous = static_cast<double>(hit_err) / static_cast<double>(s.n_erroneous);
  s.on_correct = static_cast<double>(hit_ok) / static_cast<double>(s.n_correct);
  return s;
}

double harmonic_subset_f1(std::span<const EvalItem> items, InvalidPolicy policy) {
  const auto s = subset_accuracy(items, policy);
  if (s.on_erroneous == 0.0 || s.on_correct == 0.0) return 0.0;
  return 2.0 * s.on_erroneous * s.on_correct / (s.on_erroneous + s.on_correct);
}

double invalid_rate(std::span<const EvalItem> items) {
  if (items.empty()) throw EmptyInput("invalid_rate: no items");
  std::int64_t bad = 0;
  for (const auto& item : items) bad += item.predicted == Prediction::invalid;
  return static_cast<double>(bad) / static_cast<double>(items.size());
}

double invalid_rate(std::span<const VerificationChain> chains) {
  if (chains.empty()) throw EmptyInput("invalid_rate: no chains");
  std::int64_t bad = 0;
  for (const auto& c : chains) bad += c.status.kind != ChainKind::valid;
  return static_cast<double>(bad) / static_cast<double>(chains.size());
}

double pass_at_1(Backend& backend, const Problem& problem, const GeneratorConfig& generator, int n,
                 const AnswerCanonicalizer& canonicalize) {
  if (n < 1) throw InvalidArgument("pass_at_1: n must be >= 1");
  if (!problem.gold_answer) throw InvalidArgument("pass_at_1: gold answer required for " + problem.id);
  CompletionRequest req;
  req.model = generator.model;
  req.prompt = prompts::render_problem(generator.prompt_template, problem.text);
  req.max_tokens = generator.max_tokens;
  req.temperature = generator.temperature;
  req.num_samples = n;
  req.seed = generator.seed;
  const auto resp = backend.complete(req);
  const std::string gold = canonicalize(*problem.gold_answer);
  int hits = 0;
  for (const auto& text : resp.texts) hits += canonicalize(text) == gold;
  return static_cast<double>(hits) / static_cast<double>(resp.size());
}

std::vector<int> difficulty_bins(std::span<const double> rates, int n_bins) {
  if (n_bins < 1) throw InvalidArgument("difficulty_bins: n_bins must be >= 1");
  std::vector<int> bins;
  bins.reserve(rates.size());
  for (double r : rates) {
    if (!(r >= 0.0)) r = 0.0;
    const double b = std::floor(r * n_bins);
    bins.push_back(b >= n_bins - 1 ? n_bins - 1 : static_cast<int>(b));
  }
  return bins;
}

void FlopsModel::validate() const {
  if (!(generator_params > 0.0) || !(verifier_params > 0.0)) {
    throw InvalidArgument("FLOPs model: parameter counts must be positive");
  }
  if (flops_per_token_rule != "2*params*generated_tokens") {
    throw InvalidArgument("FLOPs model: unknown rule " + flops_per_token_rule);
  }
}

double estimate_flops(const FlopsModel& model, std::int64_t generated_tokens, Role role) {
  if (generated_tokens < 0) throw InvalidArgument("estimate_flops: negative token count");
  const double params = role == Role::generator ? model.generator_params : model.verifier_params;
  return 2.0 * params * static_cast<double>(generated_tokens);
}

}  // namespace prmkit
