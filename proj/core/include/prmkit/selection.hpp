#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "prmkit/answer.hpp"
#include "prmkit/backend.hpp"
#include "prmkit/metrics.hpp"
#include "prmkit/prompts.hpp"
#include "prmkit/types.hpp"
#include "prmkit/verifier.hpp"

namespace prmkit {

inline constexpr double kSmallGeneratorTemperature = 0.8;
inline constexpr double kLargeGeneratorTemperature = 0.4;

struct GeneratorConfig {
  std::string model = "generator";
  std::string prompt_template{prompts::kGenerator};
  double temperature = kSmallGeneratorTemperature;
  int max_tokens = 2048;
  std::int64_t seed = 0;
  std::string step_delimiter = "\n\n";
};

// Splits generated text on the delimiter, dropping blank pieces.
std::vector<std::string> split_steps(std::string_view text, std::string_view delimiter);

struct ScoredSolution {
  StepwiseSolution solution;
  VerifierScore score;
  std::string canonical_answer;
};

ScoredSolution make_scored(StepwiseSolution solution, VerifierScore score,
                           const AnswerCanonicalizer& canonicalize = default_canonicalizer());

enum class SelectionStrategy { weighted_vote, majority_vote, max_score, beam_search };
std::string_view to_string(SelectionStrategy s) noexcept;
std::optional<SelectionStrategy> parse_selection_strategy(std::string_view text) noexcept;

struct AnswerGroup {
  std::string answer;
  double weight = 0.0;
  int count = 0;
  std::size_t first_index = 0;
};

// One audit line per sample or search node.
struct TraceRecord {
  std::string kind;  // "sample" | "node"
  std::size_t node = 0;
  std::optional<std::size_t> parent;
  int depth = 0;
  std::string prompt_hash;
  std::optional<double> score;
  std::string answer;
  std::string decision;  // kept | dropped | retained | pruned | chosen | terminated
};

struct SelectionResult {
  std::string chosen_answer;
  std::optional<StepwiseSolution> chosen_solution;
  SelectionStrategy strategy = SelectionStrategy::weighted_vote;
  std::vector<AnswerGroup> group_scores;  // first-seen order
  std::int64_t generator_tokens = 0;
  std::int64_t verifier_tokens = 0;
  std::int64_t tokens_spent = 0;
  double flops_estimate = 0.0;
  int dropped_samples = 0;
  std::vector<std::string> drop_reasons;
  std::vector<TraceRecord> trace;
};

// Argmax of summed scores per canonical answer; ties go to the group seen first.
SelectionResult weighted_majority_vote(std::span<const ScoredSolution> items);
// Plurality by count; ties go to the group seen first.
SelectionResult majority_vote(std::span<const std::string> canonical_answers);
SelectionResult majority_vote(std::span<const StepwiseSolution> solutions,
                              const AnswerCanonicalizer& canonicalize = default_canonicalizer());
SelectionResult majority_vote(std::span<const ScoredSolution> items);
// Highest single score; ties go to the earliest item.
SelectionResult max_score_select(std::span<const ScoredSolution> items);

struct BestOfNOptions {
  int n = 4;
  SelectionStrategy strategy = SelectionStrategy::weighted_vote;
  FlopsModel flops;
  AnswerCanonicalizer canonicalize = default_canonicalizer();
};

// Samples options.n solutions, scores them (not for majority voting) and
// applies the strategy. Samples whose scoring fails are dropped and counted.
SelectionResult best_of_n(Backend& backend, const Problem& problem, const GeneratorConfig& generator,
                          const VerifyFn& verify, const BestOfNOptions& options);

}  // namespace prmkit
