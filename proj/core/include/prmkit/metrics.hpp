#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "prmkit/answer.hpp"
#include "prmkit/backend.hpp"
#include "prmkit/cot_parser.hpp"
#include "prmkit/types.hpp"

namespace prmkit {

enum class Prediction { correct, incorrect, invalid };
std::string_view to_string(Prediction p) noexcept;
std::optional<Prediction> parse_prediction(std::string_view text) noexcept;

struct EvalItem {
  std::string id;
  bool gold_has_error = false;
  Prediction predicted = Prediction::invalid;
};

enum class InvalidPolicy { as_wrong, exclude };
std::optional<InvalidPolicy> parse_invalid_policy(std::string_view text) noexcept;

struct Confusion {
  std::int64_t tp = 0, fp = 0, fn = 0, tn = 0;
};

// positive is the class being detected: `incorrect` (solution has an error)
// by default. Invalid predictions count as whichever class gold does not
// demand, unless excluded.
Confusion confusion(std::span<const EvalItem> items, Prediction positive = Prediction::incorrect,
                    InvalidPolicy policy = InvalidPolicy::as_wrong);

// 0 when precision + recall = 0. Throws EmptyInput.
double binary_f1(std::span<const EvalItem> items, Prediction positive = Prediction::incorrect,
                 InvalidPolicy policy = InvalidPolicy::as_wrong);

struct SubsetAccuracy {
  double on_erroneous = 0.0;  // gold has an error, predicted incorrect
  double on_correct = 0.0;    // gold error-free, predicted correct
  std::int64_t n_erroneous = 0;
  std::int64_t n_correct = 0;
};

// Throws MissingSubset if either subset is empty after the policy applies.
SubsetAccuracy subset_accuracy(std::span<const EvalItem> items, InvalidPolicy policy = InvalidPolicy::as_wrong);

// Harmonic mean of the two subset accuracies.
double harmonic_subset_f1(std::span<const EvalItem> items, InvalidPolicy policy = InvalidPolicy::as_wrong);

double invalid_rate(std::span<const EvalItem> items);
double invalid_rate(std::span<const VerificationChain> chains);

struct GeneratorConfig;  // selection.hpp

// Fraction of n sampled solutions whose canonical answer matches gold.
double pass_at_1(Backend& backend, const Problem& problem, const GeneratorConfig& generator, int n = 32,
                 const AnswerCanonicalizer& canonicalize = default_canonicalizer());

// Equal-width bins over [0, 1]: min(floor(r * n_bins), n_bins - 1).
std::vector<int> difficulty_bins(std::span<const double> rates, int n_bins = 4);

enum class Role { generator, verifier };

struct FlopsModel {
  double generator_params = 3.0e9;
  double verifier_params = 1.5e9;
  // Only rule implemented: 2 * params * generated tokens, prefill excluded.
  std::string flops_per_token_rule = "2*params*generated_tokens";

  void validate() const;
};

double estimate_flops(const FlopsModel& model, std::int64_t generated_tokens, Role role);

}  // namespace prmkit
