#include "prmkit/mock_backend.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <numeric>

#include "prmkit/errors.hpp"
#include "prmkit/hashing.hpp"

namespace prmkit {

using nlohmann::json;

namespace {

MatchMode parse_match(const std::string& s) {
  if (s == "contains") return MatchMode::contains;
  if (s == "exact") return MatchMode::exact;
  if (s == "prefix") return MatchMode::prefix;
  if (s == "suffix") return MatchMode::suffix;
  if (s == "any") return MatchMode::any;
  throw InvalidArgument("mock script: unknown match mode '" + s + "'");
}

std::string_view match_name(MatchMode m) {
  switch (m) {
    case MatchMode::contains: return "contains";
    case MatchMode::exact: return "exact";
    case MatchMode::prefix: return "prefix";
    case MatchMode::suffix: return "suffix";
    case MatchMode::any: return "any";
  }
  return "contains";
}

bool matches(MatchMode mode, std::string_view pattern, std::string_view prompt) {
  switch (mode) {
    case MatchMode::contains: return prompt.find(pattern) != std::string_view::npos;
    case MatchMode::exact: return prompt == pattern;
    case MatchMode::prefix: return prompt.substr(0, pattern.size()) == pattern;
    case MatchMode::suffix:
      return prompt.size() >= pattern.size() &&
             prompt.substr(prompt.size() - pattern.size()) == pattern;
    case MatchMode::any: return true;
  }
  return false;
}

std::vector<std::string> strings_of(const json& v, const char* what) {
  if (v.is_string()) return {v.get<std::string>()};
  if (v.is_array()) return v.get<std::vector<std::string>>();
  throw InvalidArgument(std::string("mock script: ") + what + " must be a string or array");
}

ContinuationLogprobs scores_of(const json& v) {
  if (!v.is_object()) throw InvalidArgument("mock script: scores must be an object");
  ContinuationLogprobs out = logprobs_from_json(v);
  for (const auto& [cand, lp] : out) {
    if (lp > 0.0) throw InvalidArgument("mock script: logprob for '" + cand + "' is positive");
  }
  return out;
}

// Longest matching pattern wins; ties go to the earliest entry.
template <class Entry>
const Entry* resolve(const std::vector<Entry>& entries, const std::string& model,
                     const std::string& prompt) {
  const Entry* best = nullptr;
  for (const Entry& e : entries) {
    if (e.model && *e.model != model) continue;
    if (!matches(e.match, e.pattern, prompt)) continue;
    if (!best || e.pattern.size() > best->pattern.size()) best = &e;
  }
  return best;
}

std::string excerpt(std::string_view s) {
  constexpr std::size_t kMax = 80;
  std::string out(s.substr(s.size() > kMax ? s.size() - kMax : 0));
  for (char& c : out) {
    if (c == '\n') c = ' ';
  }
  return s.size() > kMax ? "..." + out : out;
}

}  // namespace

MockScript MockScript::from_json(const json& doc) {
  if (!doc.is_object()) throw InvalidArgument("mock script: top level must be an object");
  MockScript script;
  try {
    if (doc.contains("completions")) {
      for (const auto& e : doc.at("completions")) {
        ScriptedCompletion c;
        c.pattern = e.value("pattern", std::string{});
        c.match = parse_match(e.value("match", std::string{"contains"}));
        if (e.contains("model") && !e.at("model").is_null()) c.model = e.at("model").get<std::string>();
        c.responses = strings_of(e.at("responses"), "responses");
        if (c.responses.empty()) throw InvalidArgument("mock script: empty responses list");
        if (e.contains("token_counts")) {
          c.token_counts = e.at("token_counts").get<std::vector<std::int64_t>>();
          if (c.token_counts.size() != c.responses.size()) {
            throw InvalidArgument("mock script: token_counts length differs from responses");
          }
        }
        script.completions.push_back(std::move(c));
      }
    }
    if (doc.contains("prefix_table")) {
      for (const auto& [prompt, conts] : doc.at("prefix_table").items()) {
        auto list = strings_of(conts, "prefix_table values");
        if (list.empty()) throw InvalidArgument("mock script: empty prefix_table entry");
        script.prefix_table[prompt] = std::move(list);
      }
    }
    if (doc.contains("logprobs")) {
      for (const auto& e : doc.at("logprobs")) {
        ScriptedLogprobs l;
        l.pattern = e.value("pattern", std::string{});
        l.match = parse_match(e.value("match", std::string{"contains"}));
        if (e.contains("model") && !e.at("model").is_null()) l.model = e.at("model").get<std::string>();
        l.scores = scores_of(e.at("scores"));
        script.logprobs.push_back(std::move(l));
      }
    }
    if (doc.contains("default_completion") && !doc.at("default_completion").is_null()) {
      script.default_completion = strings_of(doc.at("default_completion"), "default_completion");
      if (script.default_completion->empty()) script.default_completion.reset();
    }
    if (doc.contains("default_logprobs") && !doc.at("default_logprobs").is_null()) {
      script.default_logprobs = scores_of(doc.at("default_logprobs"));
    }
    if (doc.contains("missing_logprob")) {
      const auto& v = doc.at("missing_logprob");
      script.missing_logprob = v.is_null() ? -std::numeric_limits<double>::infinity() : v.get<double>();
      if (script.missing_logprob > 0.0) throw InvalidArgument("mock script: missing_logprob is positive");
    }
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("mock script: ") + e.what());
  }
  return script;
}

MockScript MockScript::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IOFailure("cannot open mock script " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw InvalidArgument("mock script " + path.string() + ": " + e.what());
  }
  return from_json(doc);
}

json MockScript::to_json() const {
  json doc = json::object();
  json comps = json::array();
  for (const auto& c : completions) {
    json e{{"pattern", c.pattern}, {"match", std::string(match_name(c.match))}, {"responses", c.responses}};
    e["model"] = c.model ? json(*c.model) : json(nullptr);
    if (!c.token_counts.empty()) e["token_counts"] = c.token_counts;
    comps.push_back(std::move(e));
  }
  doc["completions"] = std::move(comps);
  doc["prefix_table"] = prefix_table;
  json lps = json::array();
  for (const auto& l : logprobs) {
    json e{{"pattern", l.pattern}, {"match", std::string(match_name(l.match))}, {"scores", logprobs_to_json(l.scores)}};
    e["model"] = l.model ? json(*l.model) : json(nullptr);
    lps.push_back(std::move(e));
  }
  doc["logprobs"] = std::move(lps);
  doc["default_completion"] = default_completion ? json(*default_completion) : json(nullptr);
  doc["default_logprobs"] = default_logprobs ? logprobs_to_json(*default_logprobs) : json(nullptr);
  doc["missing_logprob"] = std::isfinite(missing_logprob) ? json(missing_logprob) : json(nullptr);
  return doc;
}

std::vector<std::string_view> mock_tokenize(std::string_view text) {
  std::vector<std::string_view> pieces;
  std::size_t i = 0;
  while (i < text.size()) {
    const std::size_t start = i;
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    pieces.push_back(text.substr(start, i - start));
  }
  return pieces;
}

MockBackend::MockBackend(MockScript script, std::uint64_t seed, int max_in_flight)
    : script_(std::move(script)), seed_(seed), max_in_flight_(std::max(1, max_in_flight)) {
  identity_ = "mock:" + sha256_hex(canonical_dump(script_.to_json())).substr(0, 16) +
              ":seed=" + std::to_string(seed_);
}

std::vector<std::size_t> MockBackend::variant_order(std::size_t m) const {
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::uint64_t state = mix64(seed_ ^ 0x6d6f636b5f6f7264ULL);
  for (std::size_t i = m; i > 1; --i) {
    state = mix64(state);
    std::swap(order[i - 1], order[state % i]);
  }
  return order;
}

CompletionResponse MockBackend::complete(const CompletionRequest& request) {
  request.validate();
  stats_.requests.fetch_add(1);
  stats_.network_calls.fetch_add(1);

  const std::vector<std::string>* variants = nullptr;
  const std::vector<std::int64_t>* counts = nullptr;
  if (auto it = script_.prefix_table.find(request.prompt); it != script_.prefix_table.end()) {
    variants = &it->second;
  } else if (const auto* entry = resolve(script_.completions, request.model, request.prompt)) {
    variants = &entry->responses;
    if (!entry->token_counts.empty()) counts = &entry->token_counts;
  } else if (script_.default_completion) {
    variants = &*script_.default_completion;
  } else {
    throw ScriptMiss("mock script has no completion for prompt ending '" + excerpt(request.prompt) + "'");
  }

  const std::size_t m = variants->size();
  const auto order = variant_order(m);
  const auto request_seed = static_cast<std::uint64_t>(request.seed.value_or(0));

  CompletionResponse out;
  for (int i = 0; i < request.num_samples; ++i) {
    const std::size_t idx =
        request.temperature <= 0.0 ? 0 : order[(request_seed + static_cast<std::uint64_t>(i)) % m];
    std::string text = (*variants)[idx];
    std::optional<std::int64_t> explicit_count;
    if (counts) explicit_count = (*counts)[idx];

    bool stop_hit = false;
    if (request.stop) {
      std::size_t cut = std::string::npos;
      for (const auto& s : *request.stop) {
        if (s.empty()) continue;
        cut = std::min(cut, text.find(s));
      }
      if (cut != std::string::npos) {
        text.resize(cut);
        stop_hit = true;
        explicit_count.reset();
      }
    }

    const auto pieces = mock_tokenize(text);
    std::int64_t count = explicit_count.value_or(static_cast<std::int64_t>(pieces.size()));
    FinishReason finish = FinishReason::stop;
    if (count > request.max_tokens) {
      std::size_t keep = static_cast<std::size_t>(request.max_tokens);
      if (explicit_count) {
        keep = static_cast<std::size_t>(std::ceil(static_cast<double>(pieces.size()) *
                                                  static_cast<double>(request.max_tokens) /
                                                  static_cast<double>(count)));
      }
      keep = std::min(keep, pieces.size());
      std::string truncated;
      for (std::size_t k = 0; k < keep; ++k) truncated.append(pieces[k]);
      text = std::move(truncated);
      count = request.max_tokens;
      finish = FinishReason::length;
      stop_hit = false;
    }
    stats_.generated_tokens.fetch_add(static_cast<std::uint64_t>(count));
    out.texts.push_back(std::move(text));
    out.token_counts.push_back(count);
    out.finish_reasons.push_back(finish);
    out.stop_sequence_hit.push_back(stop_hit);
  }
  return out;
}

ContinuationLogprobs MockBackend::score_continuations(const std::string& model,
                                                      const std::string& prompt,
                                                      std::span<const std::string> candidates) {
  validate_candidates(candidates);
  stats_.requests.fetch_add(1);
  stats_.network_calls.fetch_add(1);

  const ContinuationLogprobs* table = nullptr;
  if (const auto* entry = resolve(script_.logprobs, model, prompt)) {
    table = &entry->scores;
  } else if (script_.default_logprobs) {
    table = &*script_.default_logprobs;
  } else {
    throw ScriptMiss("mock script has no logprob table for prompt ending '" + excerpt(prompt) + "'");
  }
  ContinuationLogprobs out;
  for (const auto& c : candidates) {
    auto it = table->find(c);
    out[c] = it != table->end() ? it->second : script_.missing_logprob;
  }
  return out;
}

}  // namespace prmkit
