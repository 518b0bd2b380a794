#include "prmkit/cot_parser.hpp"

#include <algorithm>
#include <cctype>
#include <unordered_set>

#include "prmkit/errors.hpp"

namespace prmkit {
namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }
bool is_alpha(char c) { return std::isalpha(static_cast<unsigned char>(c)) != 0; }

std::string_view trim(std::string_view s) {
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

// Index of the brace closing the one at `open`, honoring \{ and \} escapes.
std::size_t match_brace(std::string_view s, std::size_t open) {
  int depth = 0;
  for (std::size_t i = open; i < s.size(); ++i) {
    const char c = s[i];
    if (c == '\\' && i + 1 < s.size() && (s[i + 1] == '{' || s[i + 1] == '}')) {
      ++i;
      continue;
    }
    if (c == '{') {
      ++depth;
    } else if (c == '}') {
      if (--depth == 0) return i;
    }
  }
  return std::string_view::npos;
}

constexpr std::string_view kTextCommands[] = {"\\text", "\\textbf", "\\textit", "\\mathrm",
                                              "\\mathbf", "\\textsf", "\\texttt"};

std::string normalize(std::string_view raw, const NotationConfig& notation) {
  std::string_view s = trim(raw);
  if (notation.unwrap_text_commands) {
    bool changed = true;
    while (changed) {
      changed = false;
      for (std::string_view cmd : kTextCommands) {
        if (s.size() <= cmd.size() || s.substr(0, cmd.size()) != cmd) continue;
        std::size_t pos = cmd.size();
        if (is_alpha(s[pos])) continue;
        while (pos < s.size() && is_space(s[pos])) ++pos;
        if (pos >= s.size() || s[pos] != '{') continue;
        if (match_brace(s, pos) != s.size() - 1) continue;
        s = trim(s.substr(pos + 1, s.size() - pos - 2));
        changed = true;
        break;
      }
    }
  }
  std::string out;
  out.reserve(s.size());
  bool pending_space = false;
  for (char c : s) {
    if (is_space(c)) {
      pending_space = true;
      continue;
    }
    if (pending_space && !out.empty()) out.push_back(' ');
    pending_space = false;
    out.push_back(notation.case_insensitive
                      ? static_cast<char>(std::tolower(static_cast<unsigned char>(c)))
                      : c);
  }
  return out;
}

bool in_forms(const std::string& content, const std::vector<std::string>& forms,
              const NotationConfig& notation) {
  return std::any_of(forms.begin(), forms.end(), [&](const std::string& f) {
    return normalize(f, notation) == content;
  });
}

MarkerKind classify_content(const std::string& content, const NotationConfig& notation) {
  if (in_forms(content, notation.correct_forms, notation)) return MarkerKind::correct;
  if (in_forms(content, notation.incorrect_forms, notation)) return MarkerKind::incorrect;
  if (in_forms(content, notation.yes_forms, notation)) return MarkerKind::yes;
  if (in_forms(content, notation.no_forms, notation)) return MarkerKind::no;
  return MarkerKind::other;
}

// First "Step k" heading at a line start inside region, e.g. "Step 3:",
// "**Step 3**", "## Step 3".
std::optional<int> find_step_heading(std::string_view region, bool region_starts_line) {
  std::size_t line = region_starts_line ? 0 : region.find('\n');
  while (line != std::string_view::npos && line < region.size()) {
    std::size_t i = line;
    if (region[i] == '\n') ++i;
    while (i < region.size() && (region[i] == ' ' || region[i] == '\t' || region[i] == '*' ||
                                 region[i] == '#' || region[i] == '-' || region[i] == '>')) {
      ++i;
    }
    if (i + 4 <= region.size()) {
      std::string word;
      for (std::size_t k = 0; k < 4; ++k)
        word.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(region[i + k]))));
      if (word == "step") {
        std::size_t j = i + 4;
        while (j < region.size() && (region[j] == ' ' || region[j] == '\t')) ++j;
        std::size_t digits = j;
        while (digits < region.size() && std::isdigit(static_cast<unsigned char>(region[digits])))
          ++digits;
        if (digits > j && digits - j <= 6) {
          return std::stoi(std::string(region.substr(j, digits - j)));
        }
      }
    }
    line = region.find('\n', line + 1);
  }
  return std::nullopt;
}

std::string canonical_marker(MarkerKind kind, const NotationConfig& notation) {
  const std::string& cmd = notation.box_commands.front();
  switch (kind) {
    case MarkerKind::correct: return cmd + "{" + notation.correct_forms.front() + "}";
    case MarkerKind::incorrect: return cmd + "{" + notation.incorrect_forms.front() + "}";
    case MarkerKind::yes: return cmd + "{" + notation.yes_forms.front() + "}";
    case MarkerKind::no: return cmd + "{" + notation.no_forms.front() + "}";
    case MarkerKind::other: break;
  }
  return {};
}

bool is_step_kind(MarkerKind k) { return k == MarkerKind::correct || k == MarkerKind::incorrect; }
bool is_verdict_kind(MarkerKind k) { return k != MarkerKind::other; }

}  // namespace

std::string_view to_string(Verdict v) noexcept { return v == Verdict::yes ? "yes" : "no"; }

std::string_view to_string(ChainKind kind) noexcept {
  switch (kind) {
    case ChainKind::valid: return "valid";
    case ChainKind::missing_labels: return "missing_labels";
    case ChainKind::malformed: return "malformed";
    case ChainKind::overlong: return "overlong";
    case ChainKind::repetition_suspect: return "repetition_suspect";
  }
  return "valid";
}

std::optional<ChainKind> parse_chain_kind(std::string_view text) noexcept {
  for (ChainKind k : {ChainKind::valid, ChainKind::missing_labels, ChainKind::malformed,
                      ChainKind::overlong, ChainKind::repetition_suspect}) {
    if (to_string(k) == text) return k;
  }
  return std::nullopt;
}

std::vector<BoxedMarker> scan_boxed(std::string_view text, const NotationConfig& notation) {
  std::vector<std::pair<std::size_t, std::size_t>> hits;  // (pos, command length)
  for (const std::string& cmd : notation.box_commands) {
    if (cmd.empty()) continue;
    for (std::size_t pos = text.find(cmd); pos != std::string_view::npos;
         pos = text.find(cmd, pos + 1)) {
      hits.emplace_back(pos, cmd.size());
    }
  }
  std::sort(hits.begin(), hits.end());

  std::vector<BoxedMarker> markers;
  std::size_t consumed = 0;
  for (auto [pos, len] : hits) {
    if (pos < consumed) continue;
    std::size_t i = pos + len;
    if (i < text.size() && is_alpha(text[i])) continue;
    while (i < text.size() && (text[i] == ' ' || text[i] == '\t')) ++i;
    if (i >= text.size() || text[i] != '{') continue;
    const std::size_t close = match_brace(text, i);
    if (close == std::string_view::npos) continue;
    BoxedMarker m;
    m.span = {pos, close + 1};
    m.content = normalize(text.substr(i + 1, close - i - 1), notation);
    m.kind = classify_content(m.content, notation);
    markers.push_back(std::move(m));
    consumed = close + 1;
  }
  return markers;
}

std::vector<StepVerdict> parse_step_verdicts(std::string_view text,
                                             const NotationConfig& notation) {
  std::vector<StepVerdict> out;
  std::size_t region_begin = 0;
  for (const BoxedMarker& m : scan_boxed(text, notation)) {
    if (!is_step_kind(m.kind)) continue;
    StepVerdict v;
    v.index = static_cast<int>(out.size()) + 1;
    v.label = m.kind == MarkerKind::correct ? StepLabel::correct : StepLabel::incorrect;
    v.span = m.span;
    v.claimed_step = find_step_heading(text.substr(region_begin, m.span.begin - region_begin),
                                       region_begin == 0);
    out.push_back(v);
    region_begin = m.span.end;
  }
  return out;
}

std::optional<Verdict> parse_final_verdict(std::string_view text,
                                           const NotationConfig& notation) {
  std::optional<Verdict> last;
  for (const BoxedMarker& m : scan_boxed(text, notation)) {
    if (m.kind == MarkerKind::yes) last = Verdict::yes;
    if (m.kind == MarkerKind::no) last = Verdict::no;
  }
  return last;
}

double detect_repetition(std::string_view text, int ngram) {
  if (ngram < 2) throw InvalidArgument("detect_repetition: ngram must be >= 2");
  std::vector<std::string_view> tokens;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && is_space(text[i])) ++i;
    const std::size_t start = i;
    while (i < text.size() && !is_space(text[i])) ++i;
    if (i > start) tokens.push_back(text.substr(start, i - start));
  }
  const auto n = static_cast<std::size_t>(ngram);
  if (tokens.size() < n) return 0.0;
  const std::size_t total = tokens.size() - n + 1;
  std::unordered_set<std::string> distinct;
  distinct.reserve(total);
  std::string key;
  for (std::size_t s = 0; s < total; ++s) {
    key.clear();
    for (std::size_t k = 0; k < n; ++k) {
      key.append(tokens[s + k]);
      key.push_back('\x1f');
    }
    distinct.insert(key);
  }
  return 1.0 - static_cast<double>(distinct.size()) / static_cast<double>(total);
}

bool is_repetition_suspect(std::string_view text, const ChainLimits& limits) {
  return detect_repetition(text, limits.repetition_ngram) > limits.repetition_threshold;
}

ChainStatus classify_chain(std::string_view text, int expected_steps, std::int64_t max_tokens,
                           std::int64_t token_count, const ChainLimits& limits,
                           const NotationConfig& notation) {
  if (expected_steps < 0) throw InvalidArgument("classify_chain: expected_steps must be >= 0");
  if (max_tokens <= 0) throw InvalidArgument("classify_chain: max_tokens must be > 0");

  if (token_count > max_tokens) {
    return {ChainKind::overlong, "token count " + std::to_string(token_count) +
                                     " exceeds budget " + std::to_string(max_tokens)};
  }
  const auto verdicts = parse_step_verdicts(text, notation);
  const auto n = static_cast<int>(verdicts.size());
  if (expected_steps > 0 && n > expected_steps) {
    return {ChainKind::malformed, std::to_string(n) + " verdicts for " +
                                      std::to_string(expected_steps) + " steps"};
  }
  for (const StepVerdict& v : verdicts) {
    if (v.claimed_step && *v.claimed_step != v.index) {
      return {ChainKind::malformed, "verdict " + std::to_string(v.index) + " is headed as step " +
                                        std::to_string(*v.claimed_step)};
    }
  }
  if ((expected_steps > 0 && n < expected_steps) || n == 0) {
    return {ChainKind::missing_labels, std::to_string(n) + " verdicts for " +
                                           std::to_string(expected_steps) + " steps"};
  }
  if (is_repetition_suspect(text, limits)) {
    return {ChainKind::repetition_suspect,
            "repeated " + std::to_string(limits.repetition_ngram) + "-gram ratio above " +
                std::to_string(limits.repetition_threshold)};
  }
  return {ChainKind::valid, {}};
}

std::string clean_chain(std::string_view text, const NotationConfig& notation) {
  std::string_view body = text;
  {
    std::string_view lead = body;
    while (!lead.empty() && is_space(lead.front())) lead.remove_prefix(1);
    if (lead.substr(0, kThinkOpen.size()) == kThinkOpen) body = lead.substr(kThinkOpen.size());
  }
  const auto markers = scan_boxed(body, notation);
  const auto last = std::find_if(markers.rbegin(), markers.rend(),
                                 [](const BoxedMarker& m) { return is_verdict_kind(m.kind); });
  if (last == markers.rend()) throw NoVerdictFound();
  const std::size_t last_end = last->span.end;

  std::string out(kThinkOpen);
  std::size_t cursor = 0;
  for (const BoxedMarker& m : markers) {
    if (m.span.begin >= last_end) break;
    out.append(body.substr(cursor, m.span.begin - cursor));
    if (is_verdict_kind(m.kind)) {
      out.append(canonical_marker(m.kind, notation));
    } else {
      out.append(body.substr(m.span.begin, m.span.end - m.span.begin));
    }
    cursor = m.span.end;
  }
  out.append(kThinkClose);
  return out;
}

VerificationChain parse_chain(std::string prefix_id, std::string text, int expected_steps,
                              std::int64_t max_tokens, std::int64_t token_count,
                              const ChainLimits& limits, const NotationConfig& notation) {
  VerificationChain chain;
  chain.prefix_id = std::move(prefix_id);
  chain.verdicts = parse_step_verdicts(text, notation);
  chain.final_verdict = parse_final_verdict(text, notation);
  chain.token_count = std::max<std::int64_t>(0, token_count);
  chain.status = classify_chain(text, expected_steps, max_tokens, chain.token_count, limits,
                                notation);
  chain.raw_text = std::move(text);
  return chain;
}

}  // namespace prmkit
