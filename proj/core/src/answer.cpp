#include "prmkit/answer.hpp"

#include <cctype>

#include "prmkit/cot_parser.hpp"

namespace prmkit {

std::optional<std::string> extract_boxed_answer(std::string_view text) {
  const auto markers = scan_boxed(text);
  if (markers.empty()) return std::nullopt;
  const Span span = markers.back().span;
  const std::string_view marker = text.substr(span.begin, span.end - span.begin);
  const auto open = marker.find('{');
  return std::string(marker.substr(open + 1, marker.size() - open - 2));
}

bool has_boxed_answer(std::string_view text) { return !scan_boxed(text).empty(); }

std::string canonicalize_answer(std::string_view text) {
  std::string source = extract_boxed_answer(text).value_or(std::string(text));
  std::string out;
  bool pending_space = false;
  for (char c : source) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      pending_space = true;
      continue;
    }
    if (pending_space && !out.empty()) out.push_back(' ');
    pending_space = false;
    out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  return out;
}

}  // namespace prmkit
