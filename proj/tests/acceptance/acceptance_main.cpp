// Acceptance suite: one PASS/FAIL/SKIP line per criterion. Exit status is
// nonzero when any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "prmkit/beam_search.hpp"
#include "prmkit/config.hpp"
#include "prmkit/cot_parser.hpp"
#include "prmkit/datagen.hpp"
#include "prmkit/errors.hpp"
#include "prmkit/io.hpp"
#include "prmkit/jsonl.hpp"
#include "prmkit/metrics.hpp"
#include "prmkit/selection.hpp"
#include "prmkit/verifier.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"
#include "pipeline.hpp"
#include "synth.hpp"

using namespace prmkit;
using namespace prmkit::testing;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

enum class Outcome { pass, fail, skip };

struct Report {
  Outcome outcome = Outcome::pass;
  std::string detail;
};

// Collects mismatches; the first few are kept for the report line.
struct Checker {
  int failures = 0;
  std::vector<std::string> first;
  void expect(bool ok, const std::string& what) {
    if (ok) return;
    ++failures;
    if (first.size() < 3) first.push_back(what);
  }
  Report verdict(const std::string& summary) const {
    if (failures == 0) return {Outcome::pass, summary};
    std::string d = std::to_string(failures) + " mismatches";
    for (const auto& f : first) d += "; " + f;
    return {Outcome::fail, d};
  }
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(double x, int precision = 3) {
  std::ostringstream s;
  s.precision(precision);
  s << x;
  return s.str();
}

Report with_time_limit(Report v, double elapsed, double limit) {
  if (v.outcome == Outcome::pass && elapsed >= limit) {
    return {Outcome::fail, "took " + fmt(elapsed) + " s, limit " + fmt(limit) + " s"};
  }
  v.detail += ", " + fmt(elapsed) + " s";
  return v;
}

// --- 1 ---------------------------------------------------------------------

Report scoring_formula() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(20240601);
  std::uniform_real_distribution<double> lp(-25.0, 0.0);
  VerifyConfig cfg;
  cfg.yes_forms = {"yes"};
  cfg.no_forms = {"no"};
  const auto sol = solution("s", {"2 + 2 = 4", "\\boxed{4}"});
  Checker c;
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const double a = lp(rng), b = lp(rng);
    const json chain = "Step 1 fine \\boxed{correct} Step 2 fine \\boxed{correct}";
    Verifier v(mock({{"default_completion", chain}, {"default_logprobs", {{"yes", a}, {"no", b}}}}), cfg);
    Verifier w(mock({{"default_completion", chain}, {"default_logprobs", {{"yes", b}, {"no", a}}}}), cfg);
    const double got = v.think_score(sol).value;
    const double want = std::exp(a) / (std::exp(a) + std::exp(b));
    worst = std::max(worst, std::abs(got - want));
    c.expect(std::abs(got - want) <= 1e-12, "pair " + std::to_string(i) + " off by " + fmt(std::abs(got - want)));
    const double swapped = w.think_score(sol).value;
    c.expect(swapped == 1.0 - got, "swap not exact at pair " + std::to_string(i));
  }
  return with_time_limit(c.verdict("1000 pairs, max abs error " + fmt(worst, 2) + ", swap exact"), seconds_since(t0), 5.0);
}

// --- 2 ---------------------------------------------------------------------

Report selection_oracles() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(77);
  Checker c;
  // Weights on a 1/8 grid make ties frequent and keep scaled sums exact.
  const std::vector<double> factors{0.25, 2.0, 3.0, 16.0};
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 1 + rng() % 16;
    const std::size_t k = 1 + rng() % 5;
    std::vector<std::string> answers;
    std::vector<double> weights;
    std::vector<ScoredSolution> items;
    for (std::size_t i = 0; i < n; ++i) {
      answers.push_back("ans" + std::to_string(rng() % k));
      weights.push_back(static_cast<double>(rng() % 9) / 8.0);
      ScoredSolution s;
      s.solution = solution("t" + std::to_string(trial) + "-" + std::to_string(i), {"\\boxed{" + answers.back() + "}"});
      s.canonical_answer = answers.back();
      s.score.value = weights.back();
      items.push_back(std::move(s));
    }
    const std::string tag = "trial " + std::to_string(trial);
    const auto wv = weighted_majority_vote(items).chosen_answer;
    const auto mv = majority_vote(std::span<const std::string>(answers)).chosen_answer;
    const auto ms = max_score_select(items).chosen_answer;
    c.expect(wv == oracle::weighted_vote(answers, weights), tag + " weighted");
    c.expect(mv == oracle::majority(answers), tag + " majority");
    c.expect(ms == answers[oracle::argmax(weights)], tag + " max");
    for (double f : factors) {
      auto scaled = items;
      for (auto& s : scaled) s.score.value *= f;
      c.expect(weighted_majority_vote(scaled).chosen_answer == wv, tag + " weighted scaling x" + fmt(f));
      c.expect(max_score_select(scaled).chosen_answer == ms, tag + " max scaling x" + fmt(f));
    }
  }
  return with_time_limit(c.verdict("1000 sets x 3 strategies + 4 scale factors"), seconds_since(t0), 10.0);
}

// --- 3 ---------------------------------------------------------------------

std::string steps_key(const std::vector<std::string>& steps) {
  std::string k;
  for (const auto& s : steps) k += s + '\x1f';
  return k;
}

struct ScriptedTree {
  std::vector<oracle::TreeNode> nodes;
  int branching = 1;
  int leaves = 0;
};

ScriptedTree random_tree(std::mt19937_64& rng, int tree_id) {
  ScriptedTree t;
  t.branching = 1 + static_cast<int>(rng() % 3);
  const int depth = 1 + static_cast<int>(rng() % 4);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  t.nodes.resize(1);
  std::vector<std::pair<int, int>> frontier{{0, 0}};  // (node, depth)
  while (!frontier.empty()) {
    auto [id, d] = frontier.back();
    frontier.pop_back();
    const bool leaf = d == depth || (d > 0 && rng() % 5 == 0);
    if (leaf) {
      ++t.leaves;
      t.nodes[id].step += " \\boxed{" + std::to_string(tree_id) + "-" + std::to_string(id) + "}";
      continue;
    }
    for (int b = 0; b < t.branching; ++b) {
      oracle::TreeNode n;
      n.step = "t" + std::to_string(tree_id) + " n" + std::to_string(t.nodes.size());
      n.score = u(rng);
      t.nodes[id].children.push_back(static_cast<int>(t.nodes.size()));
      frontier.push_back({static_cast<int>(t.nodes.size()), d + 1});
      t.nodes.push_back(n);
    }
  }
  return t;
}

Report beam_search_trees() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(314);
  Checker c;
  int exhaustive = 0, narrow = 0;
  const std::string delim = "\n\n";
  for (int tree_id = 0; tree_id < 50; ++tree_id) {
    const auto tree = random_tree(rng, tree_id);
    Problem p{"tree" + std::to_string(tree_id), "Tree problem " + std::to_string(tree_id), std::nullopt};
    GeneratorConfig g;

    json table = json::object();
    auto scores = std::make_shared<std::map<std::string, double>>();
    auto walk = [&](auto&& self, int id, std::vector<std::string> steps) -> void {
      if (id != 0) {
        steps.push_back(tree.nodes[id].step);
        (*scores)[steps_key(steps)] = tree.nodes[id].score;
      }
      if (tree.nodes[id].children.empty()) return;
      json conts = json::array();
      for (int ch : tree.nodes[id].children) {
        const auto& n = tree.nodes[ch];
        // Internal steps end on the delimiter; leaves end generation with an answer.
        conts.push_back(n.children.empty() ? n.step : n.step + delim + "discarded");
      }
      table[beam_prompt(g, p.text, steps, delim)] = conts;
      for (int ch : tree.nodes[id].children) self(self, ch, steps);
    };
    walk(walk, 0, {});
    auto backend = mock({{"prefix_table", table}}, static_cast<std::uint64_t>(tree_id), 4);
    VerifyFn verify = [scores](const StepwiseSolution& s) {
      VerifierScore v;
      v.value = scores->at(steps_key(s.steps));
      return v;
    };

    std::vector<int> widths{tree.leaves, 1, std::max(1, tree.leaves / 2)};
    for (int width : widths) {
      BeamConfig cfg;
      cfg.beams = width;
      cfg.candidates_per_beam = tree.branching;
      const auto r = beam_search(*backend, p, g, verify, cfg);
      const std::string tag = "tree " + std::to_string(tree_id) + " N=" + std::to_string(width);
      std::set<std::size_t> ever{0};
      for (std::size_t round = 0; round < r.retained.size(); ++round) {
        const auto& kept = r.retained[round];
        c.expect(static_cast<int>(kept.size()) <= width, tag + " round " + std::to_string(round) + " over width");
        for (auto id : kept) {
          const auto& n = r.nodes[id];
          c.expect(n.depth == static_cast<int>(n.steps.size()), tag + " depth != |steps|");
          c.expect(n.parent && ever.count(*n.parent) == 1, tag + " node " + std::to_string(id) + " extends unretained");
          if (n.parent) {
            const auto& parent = r.nodes[*n.parent];
            c.expect(parent.depth == n.depth - 1, tag + " parent depth");
            c.expect(std::equal(parent.steps.begin(), parent.steps.end(), n.steps.begin()), tag + " not a prefix extension");
          }
        }
        ever.insert(kept.begin(), kept.end());
      }
      if (width >= tree.leaves) {
        ++exhaustive;
        std::vector<std::string> want;
        for (int id : oracle::best_leaf_path(tree.nodes)) want.push_back(tree.nodes[id].step);
        c.expect(r.best.steps == want, tag + " best path differs from enumeration");
      } else {
        ++narrow;
      }
    }
  }
  return with_time_limit(c.verdict("50 trees, " + std::to_string(exhaustive) + " exhaustive-width runs match enumeration, " +
                                   std::to_string(narrow) + " narrow runs keep invariants"),
                         seconds_since(t0), 30.0);
}

// --- 4 ---------------------------------------------------------------------

std::string decision_name(const FilterDecision& d) { return d.keep ? "keep" : std::string(to_string(*d.reason)); }

std::vector<StepLabel> as_labels(const std::vector<bool>& bs) {
  std::vector<StepLabel> out;
  for (bool b : bs) out.push_back(b ? StepLabel::correct : StepLabel::incorrect);
  return out;
}

Report filtering() {
  std::mt19937_64 rng(4096);
  Checker c;
  std::map<std::string, int> seen;
  for (int i = 0; i < 200; ++i) {
    const auto labels = synth::random_labels(rng, 1 + rng() % 10);
    // Token counts cluster around the cap so the boundary is exercised.
    const std::int64_t tokens = rng() % 4 == 0 ? 4096 + static_cast<std::int64_t>(rng() % 3) - 1
                                               : 200 + static_cast<std::int64_t>(rng() % 7000);
    const auto chain = synth::make_chain(rng, labels, rng() % 6 == 0, tokens);
    const auto gold = synth::perturbed_gold(rng, labels);
    const std::string tag = "chain " + std::to_string(i);
    const auto want = oracle::process_decision(chain.truth, gold, 4096);
    const auto got = process_filter(chain.text, tokens, as_labels(gold));
    c.expect(decision_name(got) == want, tag + " process " + decision_name(got) + " vs " + want);
    ++seen[want];
    const bool answer_correct = rng() % 2 == 0;
    const auto o = outcome_filter(chain.text, answer_correct);
    c.expect(decision_name(o) == oracle::outcome_decision(chain.truth, answer_correct), tag + " outcome");
  }
  const Config defaults;
  c.expect(defaults.datagen.filter_max_tokens == 4096, "config filter_max_tokens != 4096");
  const std::vector<StepLabel> one{StepLabel::correct};
  c.expect(process_filter("\\boxed{correct}", 4096, one).keep, "4096 tokens rejected by default cap");
  c.expect(!process_filter("\\boxed{correct}", 4097, one).keep, "4097 tokens kept by default cap");
  std::string mix;
  for (const auto& [k, v] : seen) mix += (mix.empty() ? "" : " ") + k + "=" + std::to_string(v);
  return c.verdict("200 chains [" + mix + "], cap 4096 audited");
}

// --- 5 ---------------------------------------------------------------------

Report parser_round_trip() {
  std::mt19937_64 rng(555);
  Checker c;
  for (int i = 0; i < 1000; ++i) {
    const auto labels = synth::random_labels(rng, 1 + rng() % 24);
    const auto chain = synth::make_chain(rng, labels, rng() % 10 == 0, 100);
    const std::string tag = "chain " + std::to_string(i);
    std::vector<bool> parsed;
    for (const auto& v : parse_step_verdicts(chain.text)) parsed.push_back(v.label == StepLabel::correct);
    c.expect(parsed == labels, tag + " labels not recovered");
    const auto once = clean_chain(chain.text);
    const auto twice = clean_chain(once);
    c.expect(once == twice, tag + " clean_chain not idempotent");
    std::vector<bool> after;
    for (const auto& v : parse_step_verdicts(once)) after.push_back(v.label == StepLabel::correct);
    c.expect(after == labels, tag + " labels changed by cleaning");
    if (chain.has_final) {
      c.expect(parse_final_verdict(once) == (chain.final_yes ? prmkit::Verdict::yes : prmkit::Verdict::no),
               tag + " final verdict lost");
    }
  }
  return c.verdict("1000 chains, labels recovered and cleaning idempotent");
}

// --- 6 ---------------------------------------------------------------------

Report metrics() {
  Checker c;
  using P = Prediction;
  auto items = [](const std::vector<bool>& gold, const std::vector<P>& pred) {
    std::vector<EvalItem> out;
    for (std::size_t i = 0; i < gold.size(); ++i) out.push_back({std::to_string(i), gold[i], pred[i]});
    return out;
  };
  const double f1 = binary_f1(items({true, true, false, false}, {P::incorrect, P::correct, P::correct, P::incorrect}));
  c.expect(std::abs(f1 - 0.5) <= 1e-12, "binary_f1 fixture " + fmt(f1, 17));
  // acc_err = 3/5, acc_ok = 4/5.
  const auto h_items = items({true, true, true, true, true, false, false, false, false, false},
                             {P::incorrect, P::incorrect, P::incorrect, P::correct, P::invalid, P::correct, P::correct,
                              P::correct, P::correct, P::invalid});
  const double h = harmonic_subset_f1(h_items);
  c.expect(std::abs(h - 24.0 / 35.0) <= 1e-12, "harmonic fixture " + fmt(h, 17));
  c.expect(std::abs(h - 0.685714285714) <= 1e-12, "harmonic fixture digits");

  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + rng() % 40;
    std::vector<bool> gold(n);
    std::vector<P> pred(n);
    std::vector<int> codes(n);
    std::size_t invalid = 0;
    for (std::size_t i = 0; i < n; ++i) {
      gold[i] = rng() % 2 == 0;
      pred[i] = static_cast<P>(rng() % 3);
      codes[i] = pred[i] == P::incorrect ? 1 : pred[i] == P::correct ? 0 : -1;
      invalid += pred[i] == P::invalid;
    }
    const auto xs = items(gold, pred);
    c.expect(std::abs(binary_f1(xs) - oracle::binary_f1(gold, codes)) <= 1e-12, "binary_f1 trial " + std::to_string(trial));
    c.expect(invalid_rate(xs) == static_cast<double>(invalid) / static_cast<double>(n), "invalid_rate trial " + std::to_string(trial));
  }

  std::vector<double> rates;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 2000; ++i) rates.push_back(i % 50 == 0 ? 1.0 : u(rng));
  for (int n_bins : {1, 4, 7}) {
    const auto bins = difficulty_bins(rates, n_bins);
    for (std::size_t i = 0; i < rates.size(); ++i) {
      int want = 0;
      while (want < n_bins - 1 && rates[i] * n_bins >= want + 1) ++want;
      c.expect(bins[i] == want, "bin of " + fmt(rates[i], 17) + " with " + std::to_string(n_bins) + " bins");
    }
  }
  const auto fixed = difficulty_bins(std::vector<double>{0.0, 0.3, 0.6, 0.9, 1.0}, 4);
  c.expect(fixed == std::vector<int>{0, 1, 2, 3, 3}, "bins fixture");
  return c.verdict("F1 0.5, harmonic 24/35 within 1e-12; invalid_rate and bins match counting oracles");
}

// --- 7 ---------------------------------------------------------------------

std::size_t count_of(const std::string& hay, const std::string& needle) {
  std::size_t n = 0;
  for (auto p = hay.find(needle); p != std::string::npos; p = hay.find(needle, p + 1)) ++n;
  return n;
}

Report budget_forcing() {
  Checker c;
  const std::vector<std::string> phrases{"Let me double check", "Let's verify again", "Did I miss something?"};
  const json script{{"completions",
                     {{{"pattern", "<think>"}, {"match", "suffix"}, {"responses", "Step 1 holds. \\boxed{correct}"}},
                      {{"pattern", phrases[0]}, {"match", "suffix"}, {"responses", " Yes, step 1 is still right."}},
                      {{"pattern", phrases[1]}, {"match", "suffix"}, {"responses", " The algebra is consistent."}},
                      {{"pattern", phrases[2]}, {"match", "suffix"}, {"responses", " No. \\boxed{correct}"}}}},
                    {"default_logprobs", {{"yes", std::log(0.7)}, {"no", std::log(0.3)}}}};
  for (int i = 0; i < 5; ++i) {
    const auto sol = solution("s" + std::to_string(i), {"x = " + std::to_string(i), "\\boxed{" + std::to_string(i) + "}"});
    VerifyConfig cfg;
    cfg.R = 4;
    const auto seq = Verifier(mock(script), cfg).sequential_score(sol);
    const auto& t = seq.chains.at(0).raw_text;
    std::size_t last = 0;
    for (const auto& ph : phrases) {
      c.expect(count_of(t, ph) == 1, "phrase '" + ph + "' count " + std::to_string(count_of(t, ph)));
      const auto pos = t.find(ph);
      c.expect(pos != std::string::npos && pos >= last, "phrase '" + ph + "' out of order");
      if (pos != std::string::npos) last = pos;
    }
    c.expect(seq.rounds_used == 4, "rounds_used " + std::to_string(seq.rounds_used));

    VerifyConfig one;
    one.R = 1;
    const auto think = Verifier(mock(script), VerifyConfig{}).think_score(sol);
    const auto r1 = Verifier(mock(script), one).sequential_score(sol);
    c.expect(r1.value == think.value, "R=1 value differs");
    c.expect(r1.chains.at(0).raw_text == think.chains.at(0).raw_text, "R=1 transcript differs");
    c.expect(r1.tokens_spent == think.tokens_spent, "R=1 tokens differ");
    c.expect(io::to_json(r1.chains.at(0)).dump() == io::to_json(think.chains.at(0)).dump(), "R=1 chain record differs");
  }
  return c.verdict("R=4 transcripts carry the 3 phrases once each in order; R=1 equals think_score");
}

// --- 8 ---------------------------------------------------------------------

std::map<std::string, std::string> artifacts(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (!e.is_regular_file()) continue;
    const auto name = e.path().filename().string();
    if (name.starts_with("manifest-")) continue;
    out[fs::relative(e.path(), root).string()] = read_file(e.path());
  }
  return out;
}

Report determinism_and_cache() {
  TempDir d;
  const auto in = write_pipeline_inputs(d.path());
  Checker c;
  const auto first = run_pipeline(in, d / "run1", d / "cache", 1);
  if (first.code != 0) return {Outcome::fail, "pipeline failed: " + first.err};
  const auto second = run_pipeline(in, d / "run2", d / "cache", 8);
  if (second.code != 0) return {Outcome::fail, "cached rerun failed: " + second.err};
  const auto fresh = run_pipeline(in, d / "run3", d / "cache-fresh", 8);
  if (fresh.code != 0) return {Outcome::fail, "fresh in-flight 8 run failed: " + fresh.err};

  const auto a = artifacts(d / "run1"), b = artifacts(d / "run2"), f = artifacts(d / "run3");
  c.expect(a.size() >= 10, "only " + std::to_string(a.size()) + " artifacts");
  for (const auto& [name, bytes] : a) {
    c.expect(b.count(name) && b.at(name) == bytes, name + " differs on cached rerun");
    c.expect(f.count(name) && f.at(name) == bytes, name + " differs at in-flight 8");
  }
  c.expect(a.size() == b.size() && a.size() == f.size(), "artifact sets differ");

  std::uint64_t calls = 0, hits = 0, first_calls = 0;
  int manifests = 0;
  for (const auto& [dir, sum] : {std::pair{d / "run2", &calls}, std::pair{d / "run1", &first_calls}}) {
    for (const auto& e : fs::directory_iterator(dir)) {
      if (!e.path().filename().string().starts_with("manifest-")) continue;
      const auto m = json::parse(read_file(e.path()));
      const auto& counts = m.at("counts");
      if (!counts.contains("network_calls")) continue;
      *sum += counts.at("network_calls").get<std::uint64_t>();
      if (dir == d / "run2") {
        ++manifests;
        hits += counts.at("cache_hits").get<std::uint64_t>();
        c.expect(counts.at("cache_bypassed") == 0, e.path().filename().string() + " bypassed the cache");
      }
    }
  }
  c.expect(first_calls > 0, "first run made no network calls");
  c.expect(calls == 0, "second run made " + std::to_string(calls) + " network calls");
  return c.verdict(std::to_string(a.size()) + " artifacts byte-identical across 3 runs; rerun: " + std::to_string(hits) +
                   " cache hits, 0 network calls over " + std::to_string(manifests) + " backend commands");
}

// --- 9 ---------------------------------------------------------------------

Report released_dataset_stats() {
  const char* path = std::getenv("PRMKIT_STATS_DATASET");
  if (!path || !*path) return {Outcome::skip, "set PRMKIT_STATS_DATASET to a 1K training-records JSONL with token counts to run"};
  std::vector<TrainingRecord> records;
  try {
    for (const auto& row : read_jsonl(path)) records.push_back(io::record_from_json(row));
  } catch (const std::exception& e) {
    return {Outcome::fail, std::string("cannot read dataset: ") + e.what()};
  }
  const auto s = stats(records);
  Checker c;
  c.expect(s.n_correct_solutions == 486, "correct solutions " + std::to_string(s.n_correct_solutions));
  c.expect(s.n_incorrect_solutions == 514, "incorrect solutions " + std::to_string(s.n_incorrect_solutions));
  c.expect(s.n_correct_steps == 7474, "correct steps " + std::to_string(s.n_correct_steps));
  c.expect(s.n_incorrect_steps == 625, "incorrect steps " + std::to_string(s.n_incorrect_steps));
  c.expect(s.unique_questions == 869, "unique questions " + std::to_string(s.unique_questions));
  c.expect(s.steps_per_prefix.avg == 9.5, "avg steps " + fmt(s.steps_per_prefix.avg));
  c.expect(s.chain_tokens.avg == 1037.0, "avg chain length " + fmt(s.chain_tokens.avg, 6));
  c.expect(s.chain_tokens.min == 207, "min chain length " + std::to_string(s.chain_tokens.min));
  c.expect(s.chain_tokens.max == 3669, "max chain length " + std::to_string(s.chain_tokens.max));
  return c.verdict("table reproduced");
}

// --- 10 --------------------------------------------------------------------

Report config_audit() {
  Checker c;
  const Config cfg;
  c.expect(cfg.verify.cot_budget_tokens == 8192, "verifier budget");
  c.expect(cfg.datagen.max_tokens == 8192, "sampling budget");
  c.expect(cfg.datagen.filter_max_tokens == 4096, "filter cap");
  c.expect(cfg.datagen.n_per_prefix == 4, "chains per prefix");
  c.expect(cfg.datagen.temperature == 0.1, "sampling temperature");
  c.expect(cfg.generator.temperature == 0.8, "small generator temperature");
  c.expect(cfg.generator.large_model_temperature == 0.4, "large generator temperature");
  c.expect(cfg.verify.parallel_temperature == 0.6, "parallel verifier temperature");
  c.expect(cfg.selection.beam_temperature == 0.6, "beam temperature");
  c.expect(cfg.selection.candidates_per_beam == 4, "M");
  c.expect(cfg.selection.max_steps == 20, "beam depth");
  c.expect(cfg.generator.step_delimiter == "\n\n", "step delimiter");
  c.expect(cfg.verify.temperature == 0.0, "single-chain verifier temperature");
  c.expect(cfg.verify.R == 1, "default R");
  c.expect(cfg.verify.trigger_phrases ==
               std::vector<std::string>{"Let me double check", "Let's verify again", "Did I miss something?"},
           "trigger phrases");
  c.expect(cfg.verify.forced_suffix == "Is the solution correct?", "forced suffix");
  auto r4 = cfg;
  r4.verify.R = 4;
  bool r4_ok = true;
  try {
    r4.validate();
  } catch (const Error&) {
    r4_ok = false;
  }
  c.expect(r4_ok, "R=4 rejected");
  auto r5 = cfg;
  r5.verify.R = 5;
  bool r5_rejected = false;
  try {
    r5.validate();
  } catch (const InvalidArgument&) {
    r5_rejected = true;
  }
  c.expect(r5_rejected, "R=5 accepted");

  // The library-level defaults agree with the config file defaults.
  const VerifyConfig vc;
  const BeamConfig bc;
  const SamplerConfig sc;
  const GeneratorConfig gc;
  c.expect(vc.cot_budget_tokens == 8192 && vc.parallel_temperature == 0.6 && vc.R == 1, "VerifyConfig defaults");
  c.expect(bc.candidates_per_beam == 4 && bc.max_steps == 20 && bc.temperature == 0.6, "BeamConfig defaults");
  c.expect(sc.n_per_prefix == 4 && sc.temperature == 0.1 && sc.max_tokens == 8192, "SamplerConfig defaults");
  c.expect(gc.temperature == 0.8 && kLargeGeneratorTemperature == 0.4, "GeneratorConfig defaults");
  c.expect(cfg.verify_config().cot_budget_tokens == vc.cot_budget_tokens, "verify_config builder");
  c.expect(cfg.beam_config().candidates_per_beam == bc.candidates_per_beam, "beam_config builder");
  c.expect(cfg.sampler_config().max_tokens == sc.max_tokens, "sampler_config builder");
  return c.verdict("shipped defaults audited");
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    std::function<Report()> run;
  };
  const std::vector<Criterion> criteria{
      {1, "scoring-formula", scoring_formula},
      {2, "selection-oracles", selection_oracles},
      {3, "beam-search-trees", beam_search_trees},
      {4, "filtering", filtering},
      {5, "parser-round-trip", parser_round_trip},
      {6, "metrics", metrics},
      {7, "budget-forcing", budget_forcing},
      {8, "determinism-and-cache", determinism_and_cache},
      {9, "released-dataset-stats", released_dataset_stats},
      {10, "config-audit", config_audit},
  };
  int failed = 0;
  for (const auto& cr : criteria) {
    Report v;
    try {
      v = cr.run();
    } catch (const std::exception& e) {
      v = {Outcome::fail, std::string("threw: ") + e.what()};
    }
    const char* label = v.outcome == Outcome::pass ? "PASS" : v.outcome == Outcome::fail ? "FAIL" : "SKIP";
    failed += v.outcome == Outcome::fail;
    std::printf("%s %2d %-24s %s\n", label, cr.id, cr.name, v.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria failed\n", failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
