#include "prmkit/selection.hpp"

#include <unordered_map>

#include "prmkit/concurrency.hpp"
#include "prmkit/errors.hpp"
#include "prmkit/hashing.hpp"

namespace prmkit {
namespace {

struct Grouping {
  std::vector<AnswerGroup> groups;
  std::vector<std::size_t> group_of;  // item index -> group index
};

template <class AnswerOf, class WeightOf>
Grouping group_answers(std::size_t n, AnswerOf answer_of, WeightOf weight_of) {
  Grouping g;
  std::unordered_map<std::string, std::size_t> index;
  g.group_of.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::string& answer = answer_of(i);
    auto [it, inserted] = index.try_emplace(answer, g.groups.size());
    if (inserted) g.groups.push_back({answer, 0.0, 0, i});
    AnswerGroup& group = g.groups[it->second];
    group.weight += weight_of(i);
    ++group.count;
    g.group_of[i] = it->second;
  }
  return g;
}

std::size_t argmax_weight(const std::vector<AnswerGroup>& groups) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < groups.size(); ++i) {
    if (groups[i].weight > groups[best].weight) best = i;
  }
  return best;
}

std::int64_t verifier_tokens_of(std::span<const ScoredSolution> items) {
  std::int64_t total = 0;
  for (const auto& s : items) total += s.score.tokens_spent;
  return total;
}

}  // namespace

std::vector<std::string> split_steps(std::string_view text, std::string_view delimiter) {
  std::vector<std::string> steps;
  auto push = [&](std::string_view piece) {
    if (piece.find_first_not_of(" \t\r\n") != std::string_view::npos) steps.emplace_back(piece);
  };
  if (delimiter.empty()) {
    push(text);
    return steps;
  }
  std::size_t start = 0;
  for (auto pos = text.find(delimiter); pos != std::string_view::npos; pos = text.find(delimiter, start)) {
    push(text.substr(start, pos - start));
    start = pos + delimiter.size();
  }
  push(text.substr(start));
  return steps;
}

ScoredSolution make_scored(StepwiseSolution solution, VerifierScore score, const AnswerCanonicalizer& canonicalize) {
  std::string answer = canonicalize(solution.joined());
  return {std::move(solution), std::move(score), std::move(answer)};
}

std::string_view to_string(SelectionStrategy s) noexcept {
  switch (s) {
    case SelectionStrategy::weighted_vote: return "weighted";
    case SelectionStrategy::majority_vote: return "majority";
    case SelectionStrategy::max_score: return "max";
    case SelectionStrategy::beam_search: return "beam";
  }
  return "weighted";
}

std::optional<SelectionStrategy> parse_selection_strategy(std::string_view text) noexcept {
  if (text == "weighted" || text == "weighted_vote") return SelectionStrategy::weighted_vote;
  if (text == "majority" || text == "majority_vote") return SelectionStrategy::majority_vote;
  if (text == "max" || text == "max_score") return SelectionStrategy::max_score;
  if (text == "beam" || text == "beam_search") return SelectionStrategy::beam_search;
  return std::nullopt;
}

SelectionResult weighted_majority_vote(std::span<const ScoredSolution> items) {
  if (items.empty()) throw EmptyInput("weighted_majority_vote: no solutions");
  auto g = group_answers(
      items.size(), [&](std::size_t i) -> const std::string& { return items[i].canonical_answer; },
      [&](std::size_t i) { return items[i].score.value; });
  const std::size_t winner = argmax_weight(g.groups);

  std::optional<std::size_t> best_item;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (g.group_of[i] != winner) continue;
    if (!best_item || items[i].score.value > items[*best_item].score.value) best_item = i;
  }
  SelectionResult r;
  r.strategy = SelectionStrategy::weighted_vote;
  r.chosen_answer = g.groups[winner].answer;
  r.chosen_solution = items[*best_item].solution;
  r.group_scores = std::move(g.groups);
  r.verifier_tokens = verifier_tokens_of(items);
  r.tokens_spent = r.verifier_tokens;
  return r;
}

SelectionResult majority_vote(std::span<const std::string> canonical_answers) {
  if (canonical_answers.empty()) throw EmptyInput("majority_vote: no answers");
  auto g = group_answers(
      canonical_answers.size(), [&](std::size_t i) -> const std::string& { return canonical_answers[i]; },
      [](std::size_t) { return 1.0; });
  const std::size_t winner = argmax_weight(g.groups);
  SelectionResult r;
  r.strategy = SelectionStrategy::majority_vote;
  r.chosen_answer = g.groups[winner].answer;
  r.group_scores = std::move(g.groups);
  return r;
}

SelectionResult majority_vote(std::span<const StepwiseSolution> solutions, const AnswerCanonicalizer& canonicalize) {
  std::vector<std::string> answers;
  answers.reserve(solutions.size());
  for (const auto& s : solutions) answers.push_back(canonicalize(s.joined()));
  auto r = majority_vote(answers);
  for (std::size_t i = 0; i < solutions.size(); ++i) {
    if (answers[i] == r.chosen_answer) {
      r.chosen_solution = solutions[i];
      break;
    }
  }
  return r;
}

SelectionResult majority_vote(std::span<const ScoredSolution> items) {
  std::vector<std::string> answers;
  answers.reserve(items.size());
  for (const auto& s : items) answers.push_back(s.canonical_answer);
  auto r = majority_vote(answers);
  for (const auto& s : items) {
    if (s.canonical_answer == r.chosen_answer) {
      r.chosen_solution = s.solution;
      break;
    }
  }
  r.verifier_tokens = verifier_tokens_of(items);
  r.tokens_spent = r.verifier_tokens;
  return r;
}

SelectionResult max_score_select(std::span<const ScoredSolution> items) {
  if (items.empty()) throw EmptyInput("max_score_select: no solutions");
  std::size_t best = 0;
  for (std::size_t i = 1; i < items.size(); ++i) {
    if (items[i].score.value > items[best].score.value) best = i;
  }
  auto g = group_answers(
      items.size(), [&](std::size_t i) -> const std::string& { return items[i].canonical_answer; },
      [&](std::size_t i) { return items[i].score.value; });
  SelectionResult r;
  r.strategy = SelectionStrategy::max_score;
  r.chosen_answer = items[best].canonical_answer;
  r.chosen_solution = items[best].solution;
  r.group_scores = std::move(g.groups);
  r.verifier_tokens = verifier_tokens_of(items);
  r.tokens_spent = r.verifier_tokens;
  return r;
}

SelectionResult best_of_n(Backend& backend, const Problem& problem, const GeneratorConfig& generator,
                          const VerifyFn& verify, const BestOfNOptions& options) {
  if (options.n < 1) throw InvalidArgument("best_of_n: N must be >= 1");
  if (options.strategy == SelectionStrategy::beam_search) {
    throw InvalidArgument("best_of_n: beam search is a separate entry point");
  }
  options.flops.validate();

  CompletionRequest req;
  req.model = generator.model;
  req.prompt = prompts::render_problem(generator.prompt_template, problem.text);
  req.max_tokens = generator.max_tokens;
  req.temperature = generator.temperature;
  req.num_samples = options.n;
  req.seed = generator.seed;
  const CompletionResponse resp = backend.complete(req);
  const std::string prompt_hash = sha256_hex(req.prompt).substr(0, 16);

  const std::size_t n = resp.size();
  std::vector<ScoredSolution> samples(n);
  for (std::size_t i = 0; i < n; ++i) {
    StepwiseSolution s;
    s.id = problem.id + "#" + std::to_string(i);
    s.problem = problem.text;
    s.steps = split_steps(resp.texts[i], generator.step_delimiter);
    s.gold_answer = problem.gold_answer;
    samples[i].canonical_answer = options.canonicalize(resp.texts[i]);
    samples[i].solution = std::move(s);
  }

  std::vector<bool> ok(n, true);
  std::vector<std::string> errors(n);
  if (options.strategy != SelectionStrategy::majority_vote) {
    if (!verify) throw InvalidArgument("best_of_n: strategy needs a verifier");
    parallel_for(n, backend.max_in_flight(), [&](std::size_t i) {
      try {
        samples[i].score = verify(samples[i].solution);
      } catch (const Error& e) {
        ok[i] = false;
        errors[i] = e.what();
      }
    });
  }

  std::vector<ScoredSolution> kept;
  std::vector<std::size_t> kept_index;
  std::vector<std::string> drop_reasons;
  for (std::size_t i = 0; i < n; ++i) {
    if (ok[i]) {
      kept.push_back(samples[i]);
      kept_index.push_back(i);
    } else {
      drop_reasons.push_back(samples[i].solution.id + ": " + errors[i]);
    }
  }
  if (kept.empty()) {
    throw AllChainsFailed("best_of_n: every sample failed scoring: " +
                          (drop_reasons.empty() ? std::string("no samples") : drop_reasons.front()));
  }

  SelectionResult r;
  switch (options.strategy) {
    case SelectionStrategy::majority_vote: r = majority_vote(std::span<const ScoredSolution>(kept)); break;
    case SelectionStrategy::max_score: r = max_score_select(kept); break;
    default: r = weighted_majority_vote(kept); break;
  }
  r.dropped_samples = static_cast<int>(drop_reasons.size());
  r.drop_reasons = std::move(drop_reasons);
  r.generator_tokens = resp.total_tokens();
  r.tokens_spent = r.generator_tokens + r.verifier_tokens;
  r.flops_estimate = estimate_flops(options.flops, r.generator_tokens, Role::generator) +
                     estimate_flops(options.flops, r.verifier_tokens, Role::verifier);

  std::optional<std::size_t> chosen;
  for (std::size_t k = 0; k < kept.size() && r.chosen_solution; ++k) {
    if (kept[k].solution.id == r.chosen_solution->id) chosen = kept_index[k];
  }
  for (std::size_t i = 0; i < n; ++i) {
    TraceRecord t;
    t.kind = "sample";
    t.node = i;
    t.prompt_hash = prompt_hash;
    if (ok[i] && options.strategy != SelectionStrategy::majority_vote) t.score = samples[i].score.value;
    t.answer = samples[i].canonical_answer;
    t.decision = !ok[i] ? "dropped" : (chosen && *chosen == i ? "chosen" : "kept");
    r.trace.push_back(std::move(t));
  }
  return r;
}

}  // namespace prmkit
