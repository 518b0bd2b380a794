#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace prmkit {

enum class StepLabel { correct, incorrect };

std::string_view to_string(StepLabel label) noexcept;
std::optional<StepLabel> parse_step_label(std::string_view text) noexcept;

// A problem plus its ordered solution steps.
struct StepwiseSolution {
  std::string id;
  std::string problem;
  std::vector<std::string> steps;
  std::vector<StepLabel> gold_step_labels;  // empty when unlabeled
  std::optional<std::string> gold_answer;

  std::string joined(std::string_view delimiter = "\n\n") const;
};

struct Problem {
  std::string id;
  std::string text;
  std::optional<std::string> gold_answer;
};

}  // namespace prmkit
