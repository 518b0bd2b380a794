#pragma once

// Synthetic verification-chain pipeline: sample, filter, balance, finalize,
// Monte Carlo silver labels and dataset statistics.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "prmkit/answer.hpp"
#include "prmkit/backend.hpp"
#include "prmkit/cot_parser.hpp"
#include "prmkit/prompts.hpp"
#include "prmkit/selection.hpp"
#include "prmkit/types.hpp"

namespace prmkit {

// Raw step annotations: +1 good, 0 neutral, -1 bad.
struct LabelMapping {
  StepLabel positive = StepLabel::correct;
  StepLabel neutral = StepLabel::correct;
  StepLabel negative = StepLabel::incorrect;

  StepLabel map(int raw) const;  // throws InvalidArgument outside {-1, 0, 1}
};

struct LabeledPrefix {
  std::string id;
  std::string problem;
  std::vector<std::string> steps;
  std::vector<StepLabel> gold_step_labels;
  std::optional<bool> final_answer_correct;
  std::optional<std::string> final_answer;

  // final_answer_correct when known, else "every gold step is correct".
  std::optional<bool> solution_correct() const;
  StepwiseSolution as_solution() const;
  void validate() const;
};

struct SamplerConfig {
  std::string model = "verifier";
  std::string prompt_template{prompts::kDecisionForEachStep};
  int n_per_prefix = 4;
  double temperature = 0.1;
  int max_tokens = 8192;
  std::int64_t seed = 0;
};

enum class RejectReason { format, mismatch, overlong };
std::string_view to_string(RejectReason r) noexcept;
std::optional<RejectReason> parse_reject_reason(std::string_view text) noexcept;

struct FilterDecision {
  bool keep = true;
  std::optional<RejectReason> reason;
  std::string detail;
};

struct ChainRecord {
  std::string prefix_id;
  int sample = 0;
  std::string cot;
  std::vector<StepLabel> verdicts;
  std::optional<Verdict> final_verdict;
  ChainKind status = ChainKind::valid;
  std::int64_t token_count = 0;
  std::optional<FilterDecision> filter;
};

struct SampleFailure {
  std::string prefix_id;
  std::string error;
};

struct SampleResult {
  std::vector<ChainRecord> chains;  // prefix order, then sample order
  std::vector<SampleFailure> failures;
  std::int64_t tokens = 0;
};

// One request per prefix for n_per_prefix samples. Backend failures are
// recorded per prefix. Throws EmptyInput.
SampleResult sample_chains(Backend& backend, std::span<const LabeledPrefix> prefixes, const SamplerConfig& config,
                           const ChainLimits& limits = {}, const NotationConfig& notation = {});

// Checks format, then agreement with every gold label, then length.
FilterDecision process_filter(std::string_view cot, std::int64_t token_count, std::span<const StepLabel> gold,
                              std::int64_t max_tokens = 4096, const NotationConfig& notation = {});

// Last step verdict (else the final yes/no) against answer correctness.
FilterDecision outcome_filter(std::string_view cot, bool solution_answer_correct,
                              const NotationConfig& notation = {});

struct BalanceResult {
  std::vector<std::size_t> kept;  // ascending indices into the input
  std::optional<std::string> warning;
};

// Drops the latest records of the majority class until the correct fraction
// is within target +- tolerance.
BalanceResult balance(const std::vector<bool>& solution_correct, double target_ratio = 0.5,
                      double tolerance = 0.05);

struct TrainingRecord {
  std::string prefix_id;
  std::string input_text;
  std::string target_text;
  std::vector<StepLabel> step_labels;
  std::int64_t token_count = 0;
  std::optional<std::string> problem;
  std::optional<bool> solution_correct;
};

struct FinalizeResult {
  std::vector<TrainingRecord> records;
  std::vector<std::string> dropped;  // "<prefix_id>: reason"
};

// Cleans each kept chain and keeps it only if the cleaned text parses back to
// the verdicts of the raw chain. Chains whose prefix is unknown are dropped.
FinalizeResult finalize(std::span<const ChainRecord> kept, std::span<const LabeledPrefix> prefixes,
                        std::string_view prompt_template = prompts::kDecisionForEachStep,
                        const NotationConfig& notation = {});

enum class SuccessRule { any, majority };
std::optional<SuccessRule> parse_success_rule(std::string_view text) noexcept;

struct McLabel {
  StepLabel label = StepLabel::correct;
  int successes = 0;
  int rollouts = 0;
};

// Rollouts from the prefix truncated after step_index (1-based); correct iff
// the success fraction is > 0 (any) or > 0.5 (majority).
McLabel mc_label(Backend& backend, const LabeledPrefix& prefix, int step_index, int n_rollouts,
                 const GeneratorConfig& generator, SuccessRule rule = SuccessRule::any,
                 const AnswerCanonicalizer& canonicalize = default_canonicalizer());

template <class T>
struct MinAvgMax {
  T min{};
  double avg = 0.0;  // one decimal
  T max{};
};

struct DataStats {
  std::int64_t n_records = 0;
  std::int64_t n_correct_solutions = 0;
  std::int64_t n_incorrect_solutions = 0;
  std::int64_t n_correct_steps = 0;
  std::int64_t n_incorrect_steps = 0;
  std::int64_t unique_questions = 0;
  MinAvgMax<std::int64_t> steps_per_prefix;
  MinAvgMax<std::int64_t> chain_tokens;
};

// Throws EmptyInput. Record order does not matter.
DataStats stats(std::span<const TrainingRecord> records);

double round1(double x);

}  // namespace prmkit
