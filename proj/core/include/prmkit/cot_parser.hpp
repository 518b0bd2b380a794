#pragma once

// Parsing, validation and cleanup of verification chains-of-thought.
//
// A chain carries one boxed verdict per solution step (\boxed{correct} or
// \boxed{incorrect}) and optionally a final \boxed{yes} / \boxed{no}. All
// functions here are pure.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "prmkit/types.hpp"

namespace prmkit {

inline constexpr std::string_view kThinkOpen = "<think>";
inline constexpr std::string_view kThinkClose = "</think>";

struct Span {
  std::size_t begin = 0;
  std::size_t end = 0;  // one past the closing brace
};

enum class Verdict { yes, no };
std::string_view to_string(Verdict v) noexcept;

struct StepVerdict {
  int index = 0;  // 1-based position among step verdicts
  StepLabel label = StepLabel::correct;
  Span span;
  // Step number announced by a "Step k" heading since the previous verdict.
  std::optional<int> claimed_step;
};

enum class ChainKind { valid, missing_labels, malformed, overlong, repetition_suspect };
std::string_view to_string(ChainKind kind) noexcept;
std::optional<ChainKind> parse_chain_kind(std::string_view text) noexcept;

struct ChainStatus {
  ChainKind kind = ChainKind::valid;
  std::string detail;

  bool valid() const noexcept { return kind == ChainKind::valid; }
};

struct VerificationChain {
  std::string prefix_id;
  std::string raw_text;
  std::vector<StepVerdict> verdicts;
  std::optional<Verdict> final_verdict;
  std::int64_t token_count = 0;
  ChainStatus status;
};

// Accepted boxed-notation spellings. Contents are compared after trimming,
// collapsing interior whitespace, unwrapping \text{...}-style commands and,
// when case_insensitive is set, ASCII case folding.
struct NotationConfig {
  std::vector<std::string> box_commands{"\\boxed"};
  std::vector<std::string> correct_forms{"correct"};
  std::vector<std::string> incorrect_forms{"incorrect"};
  std::vector<std::string> yes_forms{"yes"};
  std::vector<std::string> no_forms{"no"};
  bool case_insensitive = true;
  bool unwrap_text_commands = true;
};

struct ChainLimits {
  int repetition_ngram = 8;
  double repetition_threshold = 0.5;
};

enum class MarkerKind { correct, incorrect, yes, no, other };

struct BoxedMarker {
  Span span;
  std::string content;  // normalized
  MarkerKind kind = MarkerKind::other;
};

// Every brace-balanced boxed marker in document order, recognized or not.
std::vector<BoxedMarker> scan_boxed(std::string_view text, const NotationConfig& notation = {});

std::vector<StepVerdict> parse_step_verdicts(std::string_view text,
                                             const NotationConfig& notation = {});

// Last boxed yes/no marker, if any.
std::optional<Verdict> parse_final_verdict(std::string_view text,
                                           const NotationConfig& notation = {});

// Defect priority: overlong > malformed > missing_labels > repetition_suspect.
// expected_steps == 0 means "at least one verdict, any count".
ChainStatus classify_chain(std::string_view text, int expected_steps, std::int64_t max_tokens,
                           std::int64_t token_count, const ChainLimits& limits = {},
                           const NotationConfig& notation = {});

// Truncates after the last verdict marker (step or final yes/no), rewrites
// recognized markers to canonical spelling and wraps the result in think
// markers. Idempotent. Throws NoVerdictFound.
std::string clean_chain(std::string_view text, const NotationConfig& notation = {});

// 1 - distinct/total over whitespace-token n-grams; 0 when there are fewer
// tokens than ngram. Requires ngram >= 2.
double detect_repetition(std::string_view text, int ngram);

bool is_repetition_suspect(std::string_view text, const ChainLimits& limits);

VerificationChain parse_chain(std::string prefix_id, std::string text, int expected_steps,
                              std::int64_t max_tokens, std::int64_t token_count,
                              const ChainLimits& limits = {}, const NotationConfig& notation = {});

}  // namespace prmkit
