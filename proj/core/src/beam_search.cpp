#include "prmkit/beam_search.hpp"

#include <algorithm>

#include "prmkit/concurrency.hpp"
#include "prmkit/errors.hpp"
#include "prmkit/hashing.hpp"

namespace prmkit {
namespace {

bool is_blank(std::string_view s) { return s.find_first_not_of(" \t\r\n") == std::string_view::npos; }

struct Expansion {
  CompletionResponse response;
  std::string prompt_hash;
};

}  // namespace

void BeamConfig::validate() const {
  if (beams < 1) throw InvalidArgument("beam search: N_beams must be >= 1");
  if (candidates_per_beam < 1) throw InvalidArgument("beam search: M must be >= 1");
  if (max_steps < 1) throw InvalidArgument("beam search: max_steps must be >= 1");
  if (temperature < 0.0) throw InvalidArgument("beam search: temperature must be >= 0");
}

std::string beam_prompt(const GeneratorConfig& generator, std::string_view problem,
                        std::span<const std::string> steps, std::string_view delimiter) {
  std::string prompt = prompts::render_problem(generator.prompt_template, problem);
  for (const auto& s : steps) {
    prompt += s;
    prompt += delimiter;
  }
  return prompt;
}

BeamSearchResult beam_search(Backend& backend, const Problem& problem, const GeneratorConfig& generator,
                             const VerifyFn& verify, const BeamConfig& config, const FlopsModel& flops,
                             const AnswerCanonicalizer& canonicalize) {
  config.validate();
  flops.validate();
  if (!verify) throw InvalidArgument("beam search: verifier required");

  BeamSearchResult out;
  std::vector<BeamNode>& nodes = out.nodes;
  nodes.push_back(BeamNode{});
  std::vector<std::string> node_hash{""};
  std::vector<int> children_of(1, 0);

  std::vector<std::size_t> active{0};
  std::vector<std::size_t> finished;
  std::int64_t generator_tokens = 0;
  std::int64_t verifier_tokens = 0;
  const int workers = backend.max_in_flight();

  for (int depth = 1; depth <= config.max_steps && !active.empty(); ++depth) {
    std::vector<Expansion> expansions(active.size());
    parallel_for(active.size(), workers, [&](std::size_t i) {
      const BeamNode& beam = nodes[active[i]];
      CompletionRequest req;
      req.model = generator.model;
      req.prompt = beam_prompt(generator, problem.text, beam.steps, config.step_delimiter);
      req.max_tokens = generator.max_tokens;
      req.temperature = config.temperature;
      req.stop = std::vector<std::string>{config.step_delimiter};
      req.num_samples = config.candidates_per_beam;
      req.seed = generator.seed;
      expansions[i].prompt_hash = sha256_hex(req.prompt).substr(0, 16);
      expansions[i].response = backend.complete(req);
    });

    // Children get ids in (beam order, sample order), independent of timing.
    std::vector<std::size_t> fresh;
    for (std::size_t i = 0; i < active.size(); ++i) {
      const auto& resp = expansions[i].response;
      generator_tokens += resp.total_tokens();
      bool any = false;
      for (std::size_t j = 0; j < resp.size(); ++j) {
        if (is_blank(resp.texts[j])) continue;
        any = true;
        BeamNode child;
        child.id = nodes.size();
        child.parent = active[i];
        child.steps = nodes[active[i]].steps;
        child.steps.push_back(resp.texts[j]);
        child.depth = depth;
        const bool eos = resp.finish_reasons[j] == FinishReason::stop && !resp.stop_sequence_hit[j];
        child.terminated = has_boxed_answer(resp.texts[j]) || eos;
        nodes.push_back(std::move(child));
        node_hash.push_back(expansions[i].prompt_hash);
        children_of.push_back(0);
        ++children_of[active[i]];
        fresh.push_back(nodes.size() - 1);
      }
      // Nothing to extend with: the beam stops here and keeps its score.
      if (!any && active[i] != 0) {
        nodes[active[i]].terminated = true;
        finished.push_back(active[i]);
      }
    }

    std::vector<VerifierScore> scores(fresh.size());
    parallel_for(fresh.size(), workers, [&](std::size_t k) {
      const BeamNode& n = nodes[fresh[k]];
      StepwiseSolution s;
      s.id = problem.id + "#n" + std::to_string(n.id);
      s.problem = problem.text;
      s.steps = n.steps;
      s.gold_answer = problem.gold_answer;
      scores[k] = verify(s);
    });
    for (std::size_t k = 0; k < fresh.size(); ++k) {
      nodes[fresh[k]].score = scores[k].value;
      verifier_tokens += scores[k].tokens_spent;
    }

    std::vector<std::size_t> pool = fresh;
    pool.insert(pool.end(), finished.begin(), finished.end());
    if (pool.empty()) break;
    std::sort(pool.begin(), pool.end(), [&](std::size_t a, std::size_t b) {
      if (nodes[a].score != nodes[b].score) return nodes[a].score > nodes[b].score;
      return a < b;
    });
    if (pool.size() > static_cast<std::size_t>(config.beams)) pool.resize(config.beams);
    out.retained.push_back(pool);

    active.clear();
    finished.clear();
    for (auto id : pool) (nodes[id].terminated ? finished : active).push_back(id);
  }

  if (out.retained.empty()) throw NoCandidates("beam search: generator returned nothing for " + problem.id);
  const auto& last = out.retained.back();

  std::vector<std::size_t> terminated;
  for (auto id : last) {
    if (nodes[id].terminated) terminated.push_back(id);
  }
  const auto& finalists = terminated.empty() ? last : terminated;

  std::vector<ScoredSolution> scored;
  for (auto id : finalists) {
    StepwiseSolution s;
    s.id = problem.id + "#n" + std::to_string(id);
    s.problem = problem.text;
    s.steps = nodes[id].steps;
    s.gold_answer = problem.gold_answer;
    VerifierScore v;
    v.value = nodes[id].score;
    scored.push_back(make_scored(std::move(s), std::move(v), canonicalize));
  }

  // finalists is sorted by (score desc, id asc), so the first entry is the best beam.
  std::size_t best = finalists.front();
  SelectionResult& r = out.selection;
  if (config.vote_over_terminated && !terminated.empty()) {
    r = weighted_majority_vote(scored);
    for (std::size_t k = 0; k < scored.size(); ++k) {
      if (scored[k].canonical_answer == r.chosen_answer) {
        best = finalists[k];
        break;
      }
    }
  } else {
    r = weighted_majority_vote(scored);
    r.chosen_answer = scored.front().canonical_answer;
    r.chosen_solution = scored.front().solution;
  }
  r.strategy = SelectionStrategy::beam_search;
  r.generator_tokens = generator_tokens;
  r.verifier_tokens = verifier_tokens;
  r.tokens_spent = generator_tokens + verifier_tokens;
  r.flops_estimate = estimate_flops(flops, generator_tokens, Role::generator) +
                     estimate_flops(flops, verifier_tokens, Role::verifier);
  out.best = nodes[best];

  std::vector<bool> in_last(nodes.size(), false);
  for (auto id : last) in_last[id] = true;
  for (std::size_t id = 1; id < nodes.size(); ++id) {
    TraceRecord t;
    t.kind = "node";
    t.node = id;
    t.parent = nodes[id].parent;
    t.depth = nodes[id].depth;
    t.prompt_hash = node_hash[id];
    t.score = nodes[id].score;
    t.answer = canonicalize(nodes[id].steps.back());
    if (id == best) t.decision = "chosen";
    else if (in_last[id]) t.decision = nodes[id].terminated ? "terminated" : "retained";
    else if (children_of[id] > 0) t.decision = "expanded";
    else t.decision = "pruned";
    r.trace.push_back(std::move(t));
  }
  return out;
}

}  // namespace prmkit
