#include "prmkit/types.hpp"

namespace prmkit {

std::string_view to_string(StepLabel label) noexcept {
  return label == StepLabel::correct ? "correct" : "incorrect";
}

std::optional<StepLabel> parse_step_label(std::string_view text) noexcept {
  if (text == "correct") return StepLabel::correct;
  if (text == "incorrect") return StepLabel::incorrect;
  return std::nullopt;
}

std::string StepwiseSolution::joined(std::string_view delimiter) const {
  std::string out;
  for (std::size_t i = 0; i < steps.size(); ++i) {
    if (i) out += delimiter;
    out += steps[i];
  }
  return out;
}

}  // namespace prmkit
