#pragma once

#include <functional>
#include <optional>
#include <string>
#include <string_view>

namespace prmkit {

// Raw content of the last \boxed{...} in text.
std::optional<std::string> extract_boxed_answer(std::string_view text);

bool has_boxed_answer(std::string_view text);

// Strip the boxed wrapper, trim, collapse interior whitespace, ASCII-fold.
std::string canonicalize_answer(std::string_view text);

// Swap in for math-aware equivalence.
using AnswerCanonicalizer = std::function<std::string(std::string_view)>;

inline AnswerCanonicalizer default_canonicalizer() {
  return [](std::string_view s) { return canonicalize_answer(s); };
}

}  // namespace prmkit
