#pragma once

// Prompt templates with {{name}} placeholders. Double braces keep LaTeX
// such as \boxed{} literal inside templates.

#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>

#include "prmkit/types.hpp"

namespace prmkit::prompts {

// Step-by-step critique with a boxed verdict per step; used for data
// generation and, followed by an opening think marker, for verification.
extern const std::string_view kDecisionForEachStep;
// Whole-solution judgement ending in \boxed{yes} / \boxed{no}.
extern const std::string_view kSingleYesNo;
// Earliest faulty step index, then a boxed yes/no.
extern const std::string_view kBadStepIndex;
// Solution generation; asks for blank-line separated steps and a boxed answer.
extern const std::string_view kGenerator;

std::optional<std::string_view> builtin(std::string_view name);

// Unknown placeholders are left untouched.
std::string render(std::string_view tmpl, const std::map<std::string, std::string>& vars);

// "Step 1: ...\nStep 2: ..."
std::string format_steps(std::span<const std::string> steps);

std::string render_solution(std::string_view tmpl, const StepwiseSolution& solution);
std::string render_problem(std::string_view tmpl, std::string_view problem);

}  // namespace prmkit::prompts
