#pragma once

// JSONL row schemas for every file the pipeline reads or writes.

#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "prmkit/datagen.hpp"
#include "prmkit/metrics.hpp"
#include "prmkit/selection.hpp"
#include "prmkit/types.hpp"
#include "prmkit/verifier.hpp"

namespace prmkit::io {

// Row readers throw InvalidArgument naming the offending field.

// {id, problem, steps, step_labels?: [-1|0|1], final_answer?, answer_correct?}
LabeledPrefix prefix_from_json(const nlohmann::json& row, const LabelMapping& mapping = {});

// {prefix_id, sample, cot, verdicts, final_verdict, status, token_count,
//  filter_decision, reject_reason, reject_detail}
nlohmann::json to_json(const ChainRecord& chain);
ChainRecord chain_from_json(const nlohmann::json& row);

// {prefix_id, input_text, target_text, step_labels, token_count, problem?, solution_correct?}
nlohmann::json to_json(const TrainingRecord& record);
TrainingRecord record_from_json(const nlohmann::json& row);

nlohmann::json to_json(const DataStats& stats);

// Solutions to verify: {id, problem, steps, gold_answer?, step_labels?}.
// ProcessBench rows are accepted too.
StepwiseSolution solution_from_json(const nlohmann::json& row);

// Problems to solve: {id, problem, gold_answer?} ("answer" is accepted for gold_answer).
Problem problem_from_json(const nlohmann::json& row);

// ProcessBench: {id, problem, steps, first_error_index}; -1 means error-free.
struct ProcessBenchItem {
  StepwiseSolution solution;
  int first_error_index = -1;
  bool gold_has_error() const noexcept { return first_error_index >= 0; }
};
ProcessBenchItem processbench_from_json(const nlohmann::json& row);

// Prediction rows: {id, predicted} | {id, value} (threshold) | {id, judgment: yes|no|invalid}.
// A row carrying "error" is invalid.
Prediction prediction_from_json(const nlohmann::json& row, double threshold = 0.5);

nlohmann::json to_json(const VerificationChain& chain);
nlohmann::json to_json(const VerifierScore& score);
nlohmann::json to_json(const SelectionResult& result, bool include_solution = true);
nlohmann::json to_json(const TraceRecord& trace);

}  // namespace prmkit::io
