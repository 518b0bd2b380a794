#include "prmkit/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>

#include "prmkit/beam_search.hpp"
#include "prmkit/concurrency.hpp"
#include "prmkit/errors.hpp"

namespace prmkit {
namespace {

std::vector<StepLabel> labels_of(const std::vector<StepVerdict>& verdicts) {
  std::vector<StepLabel> out;
  out.reserve(verdicts.size());
  for (const auto& v : verdicts) out.push_back(v.label);
  return out;
}

FilterDecision reject(RejectReason reason, std::string detail) { return {false, reason, std::move(detail)}; }

}  // namespace

StepLabel LabelMapping::map(int raw) const {
  switch (raw) {
    case 1: return positive;
    case 0: return neutral;
    case -1: return negative;
    default: throw InvalidArgument("step label must be -1, 0 or 1, got " + std::to_string(raw));
  }
}

std::optional<bool> LabeledPrefix::solution_correct() const {
  if (final_answer_correct) return final_answer_correct;
  if (gold_step_labels.empty()) return std::nullopt;
  return std::all_of(gold_step_labels.begin(), gold_step_labels.end(),
                     [](StepLabel l) { return l == StepLabel::correct; });
}

StepwiseSolution LabeledPrefix::as_solution() const {
  return {id, problem, steps, gold_step_labels, final_answer};
}

void LabeledPrefix::validate() const {
  if (steps.empty()) throw InvalidArgument("prefix " + id + ": no steps");
  if (!gold_step_labels.empty() && gold_step_labels.size() != steps.size()) {
    throw InvalidArgument("prefix " + id + ": " + std::to_string(gold_step_labels.size()) + " labels for " +
                          std::to_string(steps.size()) + " steps");
  }
}

std::string_view to_string(RejectReason r) noexcept {
  switch (r) {
    case RejectReason::format: return "format";
    case RejectReason::mismatch: return "mismatch";
    case RejectReason::overlong: return "overlong";
  }
  return "format";
}

std::optional<RejectReason> parse_reject_reason(std::string_view text) noexcept {
  if (text == "format") return RejectReason::format;
  if (text == "mismatch") return RejectReason::mismatch;
  if (text == "overlong") return RejectReason::overlong;
  return std::nullopt;
}

SampleResult sample_chains(Backend& backend, std::span<const LabeledPrefix> prefixes, const SamplerConfig& config,
                           const ChainLimits& limits, const NotationConfig& notation) {
  if (prefixes.empty()) throw EmptyInput("sample_chains: no prefixes");
  if (config.n_per_prefix < 1) throw InvalidArgument("sample_chains: n_per_prefix must be >= 1");
  for (const auto& p : prefixes) p.validate();

  std::vector<std::optional<CompletionResponse>> responses(prefixes.size());
  std::vector<std::string> errors(prefixes.size());
  parallel_for(prefixes.size(), backend.max_in_flight(), [&](std::size_t i) {
    CompletionRequest req;
    req.model = config.model;
    req.prompt = prompts::render_solution(config.prompt_template, prefixes[i].as_solution());
    req.max_tokens = config.max_tokens;
    req.temperature = config.temperature;
    req.num_samples = config.n_per_prefix;
    req.seed = config.seed;
    try {
      responses[i] = backend.complete(req);
    } catch (const BackendError& e) {
      errors[i] = e.what();
    }
  });

  SampleResult out;
  for (std::size_t i = 0; i < prefixes.size(); ++i) {
    if (!responses[i]) {
      out.failures.push_back({prefixes[i].id, errors[i]});
      continue;
    }
    const auto& resp = *responses[i];
    out.tokens += resp.total_tokens();
    for (std::size_t j = 0; j < resp.size(); ++j) {
      const auto chain = parse_chain(prefixes[i].id, resp.texts[j], static_cast<int>(prefixes[i].steps.size()),
                                     config.max_tokens, resp.token_counts[j], limits, notation);
      ChainRecord r;
      r.prefix_id = prefixes[i].id;
      r.sample = static_cast<int>(j);
      r.cot = resp.texts[j];
      r.verdicts = labels_of(chain.verdicts);
      r.final_verdict = chain.final_verdict;
      r.status = chain.status.kind;
      r.token_count = chain.token_count;
      out.chains.push_back(std::move(r));
    }
  }
  return out;
}

FilterDecision process_filter(std::string_view cot, std::int64_t token_count, std::span<const StepLabel> gold,
                              std::int64_t max_tokens, const NotationConfig& notation) {
  if (gold.empty()) return reject(RejectReason::format, "no gold labels");
  const auto verdicts = parse_step_verdicts(cot, notation);
  if (verdicts.size() != gold.size()) {
    return reject(RejectReason::format, std::to_string(verdicts.size()) + " verdicts for " +
                                            std::to_string(gold.size()) + " steps");
  }
  for (const auto& v : verdicts) {
    if (v.claimed_step && *v.claimed_step != v.index) {
      return reject(RejectReason::format, "verdict " + std::to_string(v.index) + " sits under step " +
                                              std::to_string(*v.claimed_step));
    }
  }
  for (std::size_t i = 0; i < gold.size(); ++i) {
    if (verdicts[i].label != gold[i]) {
      return reject(RejectReason::mismatch, "step " + std::to_string(i + 1) + " judged " +
                                                std::string(to_string(verdicts[i].label)) + ", gold " +
                                                std::string(to_string(gold[i])));
    }
  }
  if (token_count > max_tokens) {
    return reject(RejectReason::overlong,
                  std::to_string(token_count) + " tokens > " + std::to_string(max_tokens));
  }
  return {};
}

FilterDecision outcome_filter(std::string_view cot, bool solution_answer_correct, const NotationConfig& notation) {
  const auto verdicts = parse_step_verdicts(cot, notation);
  std::optional<bool> says_correct;
  if (!verdicts.empty()) {
    says_correct = verdicts.back().label == StepLabel::correct;
  } else if (auto f = parse_final_verdict(cot, notation)) {
    says_correct = *f == Verdict::yes;
  }
  if (!says_correct) return reject(RejectReason::format, "no verdict");
  if (*says_correct != solution_answer_correct) {
    return reject(RejectReason::mismatch, std::string("last verdict ") + (*says_correct ? "correct" : "incorrect") +
                                              ", answer " + (solution_answer_correct ? "correct" : "incorrect"));
  }
  return {};
}

BalanceResult balance(const std::vector<bool>& solution_correct, double target_ratio, double tolerance) {
  if (!(target_ratio > 0.0 && target_ratio < 1.0)) throw InvalidArgument("balance: target ratio must be in (0, 1)");
  if (!(tolerance >= 0.0)) throw InvalidArgument("balance: tolerance must be >= 0");
  BalanceResult out;
  std::int64_t n_correct = std::count(solution_correct.begin(), solution_correct.end(), true);
  std::int64_t n_incorrect = static_cast<std::int64_t>(solution_correct.size()) - n_correct;
  std::vector<bool> keep(solution_correct.size(), true);

  if (n_correct == 0 || n_incorrect == 0) {
    out.warning = "balance: only one class present, input returned unchanged";
  } else {
    auto fraction = [&] { return static_cast<double>(n_correct) / static_cast<double>(n_correct + n_incorrect); };
    const bool drop_correct = fraction() > target_ratio + tolerance;
    const bool drop_incorrect = fraction() < target_ratio - tolerance;
    auto out_of_band = [&] {
      return drop_correct ? fraction() > target_ratio + tolerance : fraction() < target_ratio - tolerance;
    };
    if (drop_correct || drop_incorrect) {
      for (std::size_t cursor = solution_correct.size(); cursor > 0 && out_of_band();) {
        --cursor;
        if (solution_correct[cursor] != drop_correct) continue;
        keep[cursor] = false;
        --(drop_correct ? n_correct : n_incorrect);
      }
    }
    if (std::abs(fraction() - target_ratio) > tolerance) {
      out.warning = "balance: could not reach the target ratio within tolerance";
    }
  }
  for (std::size_t i = 0; i < keep.size(); ++i) {
    if (keep[i]) out.kept.push_back(i);
  }
  return out;
}

FinalizeResult finalize(std::span<const ChainRecord> kept, std::span<const LabeledPrefix> prefixes,
                        std::string_view prompt_template, const NotationConfig& notation) {
  std::map<std::string, const LabeledPrefix*> by_id;
  for (const auto& p : prefixes) by_id.emplace(p.id, &p);

  FinalizeResult out;
  for (const auto& chain : kept) {
    auto it = by_id.find(chain.prefix_id);
    if (it == by_id.end()) {
      out.dropped.push_back(chain.prefix_id + ": unknown prefix");
      continue;
    }
    const auto verified = labels_of(parse_step_verdicts(chain.cot, notation));
    std::string target;
    try {
      target = clean_chain(chain.cot, notation);
    } catch (const NoVerdictFound&) {
      out.dropped.push_back(chain.prefix_id + ": no verdict");
      continue;
    }
    if (verified.empty() || labels_of(parse_step_verdicts(target, notation)) != verified) {
      out.dropped.push_back(chain.prefix_id + ": cleaned text does not reproduce its verdicts");
      continue;
    }
    const LabeledPrefix& prefix = *it->second;
    TrainingRecord r;
    r.prefix_id = chain.prefix_id;
    r.input_text = prompts::render_solution(prompt_template, prefix.as_solution());
    r.target_text = std::move(target);
    r.step_labels = verified;
    r.token_count = chain.token_count;
    r.problem = prefix.problem;
    r.solution_correct = prefix.solution_correct();
    out.records.push_back(std::move(r));
  }
  return out;
}

std::optional<SuccessRule> parse_success_rule(std::string_view text) noexcept {
  if (text == "any") return SuccessRule::any;
  if (text == "majority") return SuccessRule::majority;
  return std::nullopt;
}

McLabel mc_label(Backend& backend, const LabeledPrefix& prefix, int step_index, int n_rollouts,
                 const GeneratorConfig& generator, SuccessRule rule, const AnswerCanonicalizer& canonicalize) {
  if (!prefix.final_answer) throw InvalidArgument("mc_label: prefix " + prefix.id + " has no gold answer");
  if (step_index < 1 || step_index > static_cast<int>(prefix.steps.size())) {
    throw InvalidArgument("mc_label: step index " + std::to_string(step_index) + " out of range");
  }
  if (n_rollouts < 1) throw InvalidArgument("mc_label: n_rollouts must be >= 1");

  const std::span<const std::string> head(prefix.steps.data(), static_cast<std::size_t>(step_index));
  CompletionRequest req;
  req.model = generator.model;
  req.prompt = beam_prompt(generator, prefix.problem, head, generator.step_delimiter);
  req.max_tokens = generator.max_tokens;
  req.temperature = generator.temperature;
  req.num_samples = n_rollouts;
  req.seed = generator.seed;
  const auto resp = backend.complete(req);

  const std::string gold = canonicalize(*prefix.final_answer);
  McLabel out;
  out.rollouts = static_cast<int>(resp.size());
  for (const auto& text : resp.texts) out.successes += canonicalize(text) == gold;
  const bool ok = rule == SuccessRule::any ? out.successes > 0 : 2 * out.successes > out.rollouts;
  out.label = ok ? StepLabel::correct : StepLabel::incorrect;
  return out;
}

double round1(double x) { return std::round(x * 10.0) / 10.0; }

DataStats stats(std::span<const TrainingRecord> records) {
  if (records.empty()) throw EmptyInput("stats: no records");
  DataStats s;
  s.n_records = static_cast<std::int64_t>(records.size());
  std::set<std::string> questions;
  s.steps_per_prefix.min = s.chain_tokens.min = std::numeric_limits<std::int64_t>::max();
  s.steps_per_prefix.max = s.chain_tokens.max = std::numeric_limits<std::int64_t>::min();
  std::int64_t step_sum = 0, token_sum = 0;
  for (const auto& r : records) {
    for (auto l : r.step_labels) ++(l == StepLabel::correct ? s.n_correct_steps : s.n_incorrect_steps);
    const bool correct = r.solution_correct.value_or(
        std::all_of(r.step_labels.begin(), r.step_labels.end(), [](StepLabel l) { return l == StepLabel::correct; }));
    ++(correct ? s.n_correct_solutions : s.n_incorrect_solutions);
    questions.insert(r.problem.value_or(r.prefix_id));
    const auto steps = static_cast<std::int64_t>(r.step_labels.size());
    s.steps_per_prefix.min = std::min(s.steps_per_prefix.min, steps);
    s.steps_per_prefix.max = std::max(s.steps_per_prefix.max, steps);
    s.chain_tokens.min = std::min(s.chain_tokens.min, r.token_count);
    s.chain_tokens.max = std::max(s.chain_tokens.max, r.token_count);
    step_sum += steps;
    token_sum += r.token_count;
  }
  s.unique_questions = static_cast<std::int64_t>(questions.size());
  s.steps_per_prefix.avg = round1(static_cast<double>(step_sum) / static_cast<double>(s.n_records));
  s.chain_tokens.avg = round1(static_cast<double>(token_sum) / static_cast<double>(s.n_records));
  return s;
}

}  // namespace prmkit
