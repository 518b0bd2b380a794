#include "prmkit/prompts.hpp"

namespace prmkit::prompts {

const std::string_view kDecisionForEachStep =
    "You are given a math problem and a proposed step-by-step solution.\n"
    "\n"
    "[Problem]\n"
    "{{problem}}\n"
    "\n"
    "[Solution]\n"
    "{{solution}}\n"
    "\n"
    "Review the solution one step at a time. For each of the {{num_steps}} steps, reason about "
    "whether it is valid and close that step's review with \\boxed{correct} or "
    "\\boxed{incorrect}. Review only the steps shown, even if the solution is unfinished. After "
    "the last step, answer \"Is the solution correct?\" with \\boxed{yes} or \\boxed{no}.\n";

const std::string_view kSingleYesNo =
    "The following is a math problem and a solution split into steps.\n"
    "\n"
    "[Problem]\n"
    "{{problem}}\n"
    "\n"
    "[Solution]\n"
    "{{solution}}\n"
    "\n"
    "Decide whether the solution contains any mistake. Do not solve the problem yourself; judge "
    "the given steps. End with \\boxed{yes} if every step is correct, otherwise \\boxed{no}.\n";

const std::string_view kBadStepIndex =
    "The following is a math problem and a solution split into steps.\n"
    "\n"
    "[Problem]\n"
    "{{problem}}\n"
    "\n"
    "[Solution]\n"
    "{{solution}}\n"
    "\n"
    "Find the earliest step that contains an error and report its number, or -1 if no step is "
    "wrong. Then give the overall judgement: \\boxed{yes} if the solution is correct, "
    "\\boxed{no} if it is not.\n";

const std::string_view kGenerator =
    "{{problem}}\n"
    "\n"
    "Think step by step. Separate steps with a blank line and put the final answer in "
    "\\boxed{}.\n"
    "\n";

std::optional<std::string_view> builtin(std::string_view name) {
  if (name == "decision-for-each-step") return kDecisionForEachStep;
  if (name == "single-yes-no") return kSingleYesNo;
  if (name == "bad-step-index") return kBadStepIndex;
  if (name == "generator") return kGenerator;
  return std::nullopt;
}

std::string render(std::string_view tmpl, const std::map<std::string, std::string>& vars) {
  std::string out;
  out.reserve(tmpl.size());
  std::size_t i = 0;
  while (i < tmpl.size()) {
    const auto open = tmpl.find("{{", i);
    if (open == std::string_view::npos) {
      out.append(tmpl.substr(i));
      break;
    }
    const auto close = tmpl.find("}}", open + 2);
    if (close == std::string_view::npos) {
      out.append(tmpl.substr(i));
      break;
    }
    out.append(tmpl.substr(i, open - i));
    const std::string name(tmpl.substr(open + 2, close - open - 2));
    if (auto it = vars.find(name); it != vars.end()) {
      out.append(it->second);
    } else {
      out.append(tmpl.substr(open, close + 2 - open));
    }
    i = close + 2;
  }
  return out;
}

std::string format_steps(std::span<const std::string> steps) {
  std::string out;
  for (std::size_t i = 0; i < steps.size(); ++i) {
    if (i) out.push_back('\n');
    out += "Step " + std::to_string(i + 1) + ": " + steps[i];
  }
  return out;
}

std::string render_solution(std::string_view tmpl, const StepwiseSolution& solution) {
  return render(tmpl, {{"problem", solution.problem},
                       {"solution", format_steps(solution.steps)},
                       {"num_steps", std::to_string(solution.steps.size())}});
}

std::string render_problem(std::string_view tmpl, std::string_view problem) {
  return render(tmpl, {{"problem", std::string(problem)}});
}

}  // namespace prmkit::prompts
