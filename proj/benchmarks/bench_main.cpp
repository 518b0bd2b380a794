// Microbenchmarks for the hot paths: chain parsing, voting, verifier scoring
// on the mock backend, and beam search over a scripted tree.

#include <benchmark/benchmark.h>

#include <cmath>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "prmkit/beam_search.hpp"
#include "prmkit/cot_parser.hpp"
#include "prmkit/mock_backend.hpp"
#include "prmkit/selection.hpp"
#include "prmkit/verifier.hpp"

using namespace prmkit;
using nlohmann::json;

namespace {

std::string make_chain(int steps) {
  std::string text;
  for (int i = 1; i <= steps; ++i) {
    text += "Step " + std::to_string(i) + ": The substitution is valid, so 3 * 4 = 12.\n";
    text += i % 5 == 0 ? "\\boxed{\\text{incorrect}}\n\n" : "\\boxed{correct}\n\n";
  }
  return text + "Is the solution correct? \\boxed{no}";
}

void BM_ParseStepVerdicts(benchmark::State& state) {
  const auto text = make_chain(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(parse_step_verdicts(text));
  state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations() * text.size()));
}
BENCHMARK(BM_ParseStepVerdicts)->Arg(10)->Arg(100)->Arg(1000);

void BM_CleanChain(benchmark::State& state) {
  const auto text = make_chain(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(clean_chain(text));
  state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations() * text.size()));
}
BENCHMARK(BM_CleanChain)->Arg(10)->Arg(100);

std::vector<ScoredSolution> scored_set(std::size_t n, int answers) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<ScoredSolution> items(n);
  for (std::size_t i = 0; i < n; ++i) {
    items[i].canonical_answer = std::to_string(rng() % static_cast<std::uint64_t>(answers));
    items[i].score.value = u(rng);
  }
  return items;
}

void BM_WeightedVote(benchmark::State& state) {
  const auto items = scored_set(static_cast<std::size_t>(state.range(0)), 8);
  for (auto _ : state) benchmark::DoNotOptimize(weighted_majority_vote(items));
}
BENCHMARK(BM_WeightedVote)->Arg(16)->Arg(256)->Arg(4096);

void BM_MaxScore(benchmark::State& state) {
  const auto items = scored_set(static_cast<std::size_t>(state.range(0)), 8);
  for (auto _ : state) benchmark::DoNotOptimize(max_score_select(items));
}
BENCHMARK(BM_MaxScore)->Arg(16)->Arg(256)->Arg(4096);

void BM_ThinkScoreMock(benchmark::State& state) {
  const json script{{"default_completion", make_chain(8)},
                    {"default_logprobs", {{"yes", std::log(0.7)}, {"no", std::log(0.3)}}}};
  Verifier verifier(std::make_shared<MockBackend>(MockScript::from_json(script), 0), VerifyConfig{});
  StepwiseSolution s;
  s.id = "bench";
  s.problem = "What is 3 * 4?";
  s.steps = {"3 * 4 = 12", "\\boxed{12}"};
  for (auto _ : state) benchmark::DoNotOptimize(verifier.think_score(s));
}
BENCHMARK(BM_ThinkScoreMock);

// Complete b-ary tree of the given depth, scripted by prompt.
void BM_BeamSearch(benchmark::State& state) {
  const int depth = 4, branching = 3;
  GeneratorConfig g;
  Problem p{"bench", "Find x.", std::nullopt};
  json table = json::object();
  auto walk = [&](auto&& self, std::vector<std::string> steps) -> void {
    if (static_cast<int>(steps.size()) == depth) return;
    json conts = json::array();
    for (int b = 0; b < branching; ++b) {
      const std::string step = "s" + std::to_string(steps.size()) + "." + std::to_string(b);
      conts.push_back(static_cast<int>(steps.size()) + 1 == depth ? step + " \\boxed{" + std::to_string(b) + "}"
                                                                   : step + "\n\nrest");
    }
    table[beam_prompt(g, p.text, steps, g.step_delimiter)] = conts;
    for (int b = 0; b < branching; ++b) {
      auto next = steps;
      const std::string step = "s" + std::to_string(steps.size()) + "." + std::to_string(b);
      next.push_back(static_cast<int>(steps.size()) + 1 == depth ? step + " \\boxed{" + std::to_string(b) + "}" : step);
      self(self, next);
    }
  };
  walk(walk, {});
  MockBackend backend(MockScript::from_json(json{{"prefix_table", table}}), 0);
  VerifyFn verify = [](const StepwiseSolution& s) {
    VerifierScore v;
    v.value = static_cast<double>(std::hash<std::string>{}(s.steps.back()) % 1000) / 1000.0;
    return v;
  };
  BeamConfig cfg;
  cfg.beams = static_cast<int>(state.range(0));
  cfg.candidates_per_beam = branching;
  for (auto _ : state) benchmark::DoNotOptimize(beam_search(backend, p, g, verify, cfg));
}
BENCHMARK(BM_BeamSearch)->Arg(1)->Arg(4)->Arg(27);

}  // namespace

BENCHMARK_MAIN();
