#pragma once

// Generative verifier scoring: one verification CoT followed by a forced
// suffix, scored as P(yes) / (P(yes) + P(no)); parallel (@K) averaging and
// sequential budget-forced rounds on top of that.

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "prmkit/backend.hpp"
#include "prmkit/cot_parser.hpp"
#include "prmkit/prompts.hpp"
#include "prmkit/types.hpp"

namespace prmkit {

enum class VerifyMethod { think, parallel, sequential, judge, disc_aggregate };
std::string_view to_string(VerifyMethod m) noexcept;
std::optional<VerifyMethod> parse_verify_method(std::string_view text) noexcept;

struct VerifierScore {
  double value = 0.0;
  VerifyMethod method = VerifyMethod::think;
  int chains_used = 0;
  int rounds_used = 0;
  std::int64_t tokens_spent = 0;
  std::vector<VerificationChain> chains;
};

inline const std::vector<std::string> kDefaultTriggerPhrases{
    "Let me double check", "Let's verify again", "Did I miss something?"};

struct VerifyConfig {
  std::string model = "verifier";
  std::string prompt_template{prompts::kDecisionForEachStep};
  int cot_budget_tokens = 8192;
  std::string forced_suffix = "Is the solution correct?";
  std::vector<std::string> yes_forms{"yes", " yes", "Yes"};
  std::vector<std::string> no_forms{"no", " no", "No"};
  double temperature = 0.0;           // single-chain scoring
  double parallel_temperature = 0.6;  // @K chains
  int K = 1;
  int R = 1;
  std::vector<std::string> trigger_phrases = kDefaultTriggerPhrases;
  std::int64_t seed = 0;
  ChainLimits limits;
  NotationConfig notation;

  void validate() const;
};

enum class JudgeOutcome { yes, no, invalid };
std::string_view to_string(JudgeOutcome o) noexcept;

struct JudgeResult {
  JudgeOutcome outcome = JudgeOutcome::invalid;
  VerificationChain chain;
  std::int64_t tokens_spent = 0;
};

// Surface-form mass per side, renormalized. Order of forms does not matter.
// Throws DegenerateMass when both sides carry zero probability.
double score_from_logprobs(const ContinuationLogprobs& logprobs, std::span<const std::string> yes_forms,
                           std::span<const std::string> no_forms);

class Verifier {
 public:
  Verifier(std::shared_ptr<Backend> backend, VerifyConfig config);

  const VerifyConfig& config() const noexcept { return config_; }

  VerifierScore think_score(const StepwiseSolution& solution) const;
  VerifierScore parallel_score(const StepwiseSolution& solution) const;
  VerifierScore sequential_score(const StepwiseSolution& solution) const;
  JudgeResult judge(const StepwiseSolution& solution, std::string_view prompt_template) const;

  // Dispatch by method. judge maps yes -> 1, no and invalid -> 0.
  VerifierScore score(const StepwiseSolution& solution, VerifyMethod method) const;

  // Instruction followed by the opening think marker.
  std::string verification_prompt(const StepwiseSolution& solution) const;
  // Verification prompt + transcript + closing think marker + forced suffix.
  std::string scoring_prompt(const StepwiseSolution& solution, std::string_view transcript) const;

 private:
  VerifierScore run_chain(const StepwiseSolution& solution, double temperature, std::int64_t seed,
                          int rounds) const;

  std::shared_ptr<Backend> backend_;
  VerifyConfig config_;
  std::vector<std::string> candidates_;
};

using VerifyFn = std::function<VerifierScore(const StepwiseSolution&)>;

VerifyFn make_verify_fn(std::shared_ptr<const Verifier> verifier, VerifyMethod method);

enum class StepAggregation { last, min, product };
std::optional<StepAggregation> parse_step_aggregation(std::string_view text) noexcept;

// Solution-level score from per-step discriminative PRM scores. Throws EmptyScores.
double aggregate_step_scores(std::span<const double> step_scores,
                             StepAggregation method = StepAggregation::last);

}  // namespace prmkit
