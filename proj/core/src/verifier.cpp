#include "prmkit/verifier.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "prmkit/concurrency.hpp"
#include "prmkit/errors.hpp"

namespace prmkit {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_mass(const ContinuationLogprobs& logprobs, std::span<const std::string> forms) {
  std::vector<double> values;
  values.reserve(forms.size());
  for (const auto& f : forms) {
    auto it = logprobs.find(f);
    if (it != logprobs.end()) values.push_back(it->second);
  }
  std::sort(values.begin(), values.end(), std::greater<>());
  if (values.empty() || values.front() == kNegInf) return kNegInf;
  const double top = values.front();
  double sum = 0.0;
  for (double v : values) sum += std::exp(v - top);
  return top + std::log(sum);
}

}  // namespace

std::string_view to_string(VerifyMethod m) noexcept {
  switch (m) {
    case VerifyMethod::think: return "think";
    case VerifyMethod::parallel: return "parallel";
    case VerifyMethod::sequential: return "sequential";
    case VerifyMethod::judge: return "judge";
    case VerifyMethod::disc_aggregate: return "disc_aggregate";
  }
  return "think";
}

std::optional<VerifyMethod> parse_verify_method(std::string_view text) noexcept {
  for (auto m : {VerifyMethod::think, VerifyMethod::parallel, VerifyMethod::sequential,
                 VerifyMethod::judge, VerifyMethod::disc_aggregate}) {
    if (to_string(m) == text) return m;
  }
  return std::nullopt;
}

std::string_view to_string(JudgeOutcome o) noexcept {
  switch (o) {
    case JudgeOutcome::yes: return "yes";
    case JudgeOutcome::no: return "no";
    case JudgeOutcome::invalid: return "invalid";
  }
  return "invalid";
}

void VerifyConfig::validate() const {
  if (cot_budget_tokens < 1) throw InvalidArgument("cot_budget_tokens must be positive");
  if (yes_forms.empty() || no_forms.empty()) throw InvalidArgument("yes_forms and no_forms must be nonempty");
  std::set<std::string> yes(yes_forms.begin(), yes_forms.end());
  if (yes.size() != yes_forms.size()) throw InvalidArgument("yes_forms contains duplicates");
  std::set<std::string> no(no_forms.begin(), no_forms.end());
  if (no.size() != no_forms.size()) throw InvalidArgument("no_forms contains duplicates");
  for (const auto& f : no_forms) {
    if (yes.count(f)) throw InvalidArgument("'" + f + "' is both a yes form and a no form");
  }
  if (!(temperature >= 0.0) || !(parallel_temperature >= 0.0)) throw InvalidArgument("temperatures must be >= 0");
  if (K < 1) throw InvalidArgument("K must be >= 1");
  if (R < 1 || R > 4) throw InvalidArgument("R must be in [1, 4]");
  if (static_cast<std::size_t>(R - 1) > trigger_phrases.size()) {
    throw InvalidArgument("R = " + std::to_string(R) + " needs " + std::to_string(R - 1) + " trigger phrases");
  }
}

double score_from_logprobs(const ContinuationLogprobs& logprobs, std::span<const std::string> yes_forms,
                           std::span<const std::string> no_forms) {
  const double yes = log_mass(logprobs, yes_forms);
  const double no = log_mass(logprobs, no_forms);
  if (yes == kNegInf && no == kNegInf) throw DegenerateMass();
  // Computed from the larger side whichever it is. 1 - major is exact for
  // major in [0.5, 1], so swapping yes and no yields exactly 1 - value.
  const double hi = std::max(yes, no);
  const double lo = std::min(yes, no);
  const double ratio = std::exp(lo - hi);
  const double major = 1.0 - ratio / (1.0 + ratio);
  return yes >= no ? major : 1.0 - major;
}

Verifier::Verifier(std::shared_ptr<Backend> backend, VerifyConfig config)
    : backend_(std::move(backend)), config_(std::move(config)) {
  if (!backend_) throw InvalidArgument("Verifier: null backend");
  config_.validate();
  candidates_ = config_.yes_forms;
  candidates_.insert(candidates_.end(), config_.no_forms.begin(), config_.no_forms.end());
}

std::string Verifier::verification_prompt(const StepwiseSolution& solution) const {
  return prompts::render_solution(config_.prompt_template, solution) + std::string(kThinkOpen);
}

std::string Verifier::scoring_prompt(const StepwiseSolution& solution, std::string_view transcript) const {
  std::string out = verification_prompt(solution);
  out.append(transcript);
  out.append(kThinkClose);
  out.push_back('\n');
  out.append(config_.forced_suffix);
  return out;
}

VerifierScore Verifier::run_chain(const StepwiseSolution& solution, double temperature, std::int64_t seed,
                                  int rounds) const {
  if (solution.steps.empty()) throw InvalidArgument("cannot verify a solution with no steps");
  const std::string prompt = verification_prompt(solution);
  const std::int64_t budget = config_.cot_budget_tokens;

  std::string transcript;
  std::int64_t used = 0;
  int rounds_used = 0;
  for (int r = 1; r <= rounds; ++r) {
    const std::int64_t remaining = budget - used;
    if (remaining <= 0) break;
    if (r > 1) {
      transcript += "\n\n";
      transcript += config_.trigger_phrases[static_cast<std::size_t>(r - 2)];
    }
    CompletionRequest req;
    req.model = config_.model;
    req.prompt = prompt + transcript;
    req.max_tokens = static_cast<int>(remaining);
    req.temperature = temperature;
    req.stop = std::vector<std::string>{std::string(kThinkClose)};
    req.seed = seed + (r - 1);
    const CompletionResponse resp = backend_->complete(req);
    if (resp.size() != 1) throw TransportError("expected one completion, got " + std::to_string(resp.size()));
    transcript += resp.texts[0];
    used += resp.token_counts[0];
    rounds_used = r;
    if (resp.finish_reasons[0] == FinishReason::length || used >= budget) break;
  }

  const auto logprobs =
      backend_->score_continuations(config_.model, scoring_prompt(solution, transcript), candidates_);

  VerifierScore score;
  score.value = score_from_logprobs(logprobs, config_.yes_forms, config_.no_forms);
  score.method = rounds > 1 ? VerifyMethod::sequential : VerifyMethod::think;
  score.chains_used = 1;
  score.rounds_used = rounds_used;
  score.tokens_spent = used;
  score.chains.push_back(parse_chain(solution.id, std::move(transcript), static_cast<int>(solution.steps.size()),
                                     budget, used, config_.limits, config_.notation));
  return score;
}

VerifierScore Verifier::think_score(const StepwiseSolution& solution) const {
  auto score = run_chain(solution, config_.temperature, config_.seed, 1);
  score.method = VerifyMethod::think;
  return score;
}

VerifierScore Verifier::parallel_score(const StepwiseSolution& solution) const {
  const auto k = static_cast<std::size_t>(config_.K);
  std::vector<std::optional<VerifierScore>> results(k);
  std::vector<std::string> errors(k);
  parallel_for(k, backend_->max_in_flight(), [&](std::size_t i) {
    try {
      results[i] = run_chain(solution, config_.parallel_temperature, config_.seed + static_cast<std::int64_t>(i), 1);
    } catch (const Error& e) {
      errors[i] = e.what();
    }
  });

  VerifierScore out;
  out.method = VerifyMethod::parallel;
  out.rounds_used = 1;
  double sum = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    if (!results[i]) continue;
    sum += results[i]->value;
    out.tokens_spent += results[i]->tokens_spent;
    out.chains.push_back(std::move(results[i]->chains.front()));
  }
  out.chains_used = static_cast<int>(out.chains.size());
  if (out.chains_used == 0) {
    throw AllChainsFailed("all " + std::to_string(k) + " verification chains failed: " + errors.front());
  }
  out.value = sum / static_cast<double>(out.chains_used);
  return out;
}

VerifierScore Verifier::sequential_score(const StepwiseSolution& solution) const {
  auto score = run_chain(solution, config_.temperature, config_.seed, config_.R);
  score.method = VerifyMethod::sequential;
  return score;
}

JudgeResult Verifier::judge(const StepwiseSolution& solution, std::string_view prompt_template) const {
  if (solution.steps.empty()) throw InvalidArgument("cannot judge a solution with no steps");
  CompletionRequest req;
  req.model = config_.model;
  req.prompt = prompts::render_solution(prompt_template, solution);
  req.max_tokens = config_.cot_budget_tokens;
  req.temperature = config_.temperature;
  req.seed = config_.seed;
  const auto resp = backend_->complete(req);
  if (resp.size() != 1) throw TransportError("expected one completion, got " + std::to_string(resp.size()));

  JudgeResult out;
  out.tokens_spent = resp.token_counts[0];
  out.chain = parse_chain(solution.id, resp.texts[0], 0, config_.cot_budget_tokens, resp.token_counts[0],
                          config_.limits, config_.notation);
  if (out.chain.final_verdict) {
    out.outcome = *out.chain.final_verdict == Verdict::yes ? JudgeOutcome::yes : JudgeOutcome::no;
  }
  return out;
}

VerifierScore Verifier::score(const StepwiseSolution& solution, VerifyMethod method) const {
  switch (method) {
    case VerifyMethod::think: return think_score(solution);
    case VerifyMethod::parallel: return parallel_score(solution);
    case VerifyMethod::sequential: return sequential_score(solution);
    case VerifyMethod::judge: {
      auto j = judge(solution, prompts::kSingleYesNo);
      VerifierScore s;
      s.value = j.outcome == JudgeOutcome::yes ? 1.0 : 0.0;
      s.method = VerifyMethod::judge;
      s.chains_used = 1;
      s.rounds_used = 1;
      s.tokens_spent = j.tokens_spent;
      s.chains.push_back(std::move(j.chain));
      return s;
    }
    case VerifyMethod::disc_aggregate: break;
  }
  throw InvalidArgument("disc_aggregate scores come from an external PRM; use aggregate_step_scores");
}

VerifyFn make_verify_fn(std::shared_ptr<const Verifier> verifier, VerifyMethod method) {
  return [verifier = std::move(verifier), method](const StepwiseSolution& s) { return verifier->score(s, method); };
}

std::optional<StepAggregation> parse_step_aggregation(std::string_view text) noexcept {
  if (text == "last") return StepAggregation::last;
  if (text == "min") return StepAggregation::min;
  if (text == "product") return StepAggregation::product;
  return std::nullopt;
}

double aggregate_step_scores(std::span<const double> step_scores, StepAggregation method) {
  if (step_scores.empty()) throw EmptyScores();
  switch (method) {
    case StepAggregation::last: return step_scores.back();
    case StepAggregation::min: return *std::min_element(step_scores.begin(), step_scores.end());
    case StepAggregation::product: {
      double p = 1.0;
      for (double s : step_scores) p *= s;
      return p;
    }
  }
  return step_scores.back();
}

}  // namespace prmkit
