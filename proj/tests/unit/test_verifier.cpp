#include <doctest.h>

#include <cmath>
#include <random>

#include "prmkit/errors.hpp"
#include "prmkit/verifier.hpp"
#include "fixtures.hpp"

using namespace prmkit;
using namespace prmkit::testing;
using nlohmann::json;

namespace {

VerifyConfig yes_no_config() {
  VerifyConfig c;
  c.yes_forms = {"yes"};
  c.no_forms = {"no"};
  return c;
}

json lp_table(double yes, double no) { return {{"yes", std::log(yes)}, {"no", std::log(no)}}; }

const StepwiseSolution kSol = solution("s1", {"1+1 = 2", "So \\boxed{2}"});

}  // namespace

TEST_SUITE("verifier") {
  TEST_CASE("think score examples") {
    {
      Verifier v(mock({{"default_completion", "Step 1 ok \\boxed{correct}"}, {"default_logprobs", lp_table(0.9, 0.1)}}),
                 yes_no_config());
      const auto s = v.think_score(kSol);
      CHECK(s.value == doctest::Approx(0.9).epsilon(1e-12));
      CHECK(s.chains_used == 1);
      CHECK(s.rounds_used == 1);
      REQUIRE(s.chains.size() == 1);
      CHECK(s.chains[0].verdicts.size() == 1);
    }
    {
      Verifier v(mock({{"default_completion", "x"}, {"default_logprobs", lp_table(0.4, 0.4)}}), yes_no_config());
      CHECK(v.think_score(kSol).value == 0.5);
    }
    {
      auto c = yes_no_config();
      c.yes_forms = {"yes", "Yes"};
      Verifier v(mock({{"default_completion", "x"},
                       {"default_logprobs", {{"yes", std::log(0.3)}, {"Yes", std::log(0.3)}, {"no", std::log(0.2)}}}}),
                 c);
      CHECK(v.think_score(kSol).value == doctest::Approx(0.75).epsilon(1e-12));
    }
  }

  TEST_CASE("scoring prompt carries the closing marker and forced suffix") {
    auto b = mock({{"default_completion", "my review"},
                   {"logprobs", {{{"pattern", "my review</think>\nIs the solution correct?"},
                                  {"match", "suffix"},
                                  {"scores", lp_table(0.7, 0.3)}}}}});
    Verifier v(b, yes_no_config());
    CHECK(v.think_score(kSol).value == doctest::Approx(0.7).epsilon(1e-12));
    CHECK(v.verification_prompt(kSol).ends_with("<think>"));
  }

  TEST_CASE("zero mass on both sides is DegenerateMass") {
    Verifier v(mock({{"default_completion", "x"}, {"default_logprobs", {{"maybe", -0.1}}}}), yes_no_config());
    CHECK_THROWS_AS(v.think_score(kSol), DegenerateMass);
  }

  TEST_CASE("yes/no swap gives the complement and form order does not matter") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> d(-30.0, 0.0);
    const std::vector<std::string> yes{"yes", " yes", "Yes"}, no{"no", " no", "No"};
    const std::vector<std::string> yes_r{"Yes", "yes", " yes"}, no_r{" no", "No", "no"};
    for (int i = 0; i < 500; ++i) {
      ContinuationLogprobs lp, swapped;
      for (std::size_t k = 0; k < 3; ++k) {
        const double a = d(rng), b = d(rng);
        lp[yes[k]] = a;
        lp[no[k]] = b;
        swapped[yes[k]] = b;
        swapped[no[k]] = a;
      }
      const double v = score_from_logprobs(lp, yes, no);
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
      CHECK(score_from_logprobs(swapped, yes, no) == 1.0 - v);
      CHECK(score_from_logprobs(lp, yes_r, no_r) == doctest::Approx(v).epsilon(1e-15));
    }
  }

  TEST_CASE("one-sided mass saturates") {
    const std::vector<std::string> yes{"yes"}, no{"no"};
    CHECK(score_from_logprobs({{"yes", -1.0}}, yes, no) == 1.0);
    CHECK(score_from_logprobs({{"no", -1.0}}, yes, no) == 0.0);
  }

  TEST_CASE("parallel score averages K chains") {
    auto c = yes_no_config();
    c.K = 4;
    // Each chain text selects its own logprob table through the transcript.
    auto b = mock({{"default_completion", {"chain-a", "chain-b", "chain-c", "chain-d"}},
                   {"logprobs",
                    {{{"pattern", "chain-a</think>"}, {"scores", {{"yes", 0.0}}}},
                     {{"pattern", "chain-b</think>"}, {"scores", lp_table(0.9, 0.1)}},
                     {{"pattern", "chain-c</think>"}, {"scores", lp_table(0.1, 0.9)}},
                     {{"pattern", "chain-d</think>"}, {"scores", lp_table(0.2, 0.8)}}}}},
                  0, 4);
    Verifier v(b, c);
    const auto s = v.parallel_score(kSol);
    CHECK(s.value == doctest::Approx(0.55).epsilon(1e-12));
    CHECK(s.chains_used == 4);
    CHECK(s.tokens_spent == 4);
  }

  TEST_CASE("parallel with K=1 or identical chains equals think score") {
    const json script{{"default_completion", "same chain"}, {"default_logprobs", lp_table(0.62, 0.38)}};
    auto c = yes_no_config();
    c.parallel_temperature = 0.0;
    const double single = Verifier(mock(script), c).think_score(kSol).value;
    c.K = 1;
    CHECK(Verifier(mock(script), c).parallel_score(kSol).value == single);
    c.K = 5;
    const auto many = Verifier(mock(script), c).parallel_score(kSol);
    CHECK(many.value == single);
    CHECK(many.tokens_spent == 5 * 2);
  }

  TEST_CASE("parallel survives partial failure and reports total failure") {
    auto c = yes_no_config();
    c.K = 2;
    auto partial = mock({{"default_completion", {"good", "bad"}},
                         {"logprobs", {{{"pattern", "good</think>"}, {"scores", lp_table(0.8, 0.2)}}}}});
    const auto s = Verifier(partial, c).parallel_score(kSol);
    CHECK(s.chains_used == 1);
    CHECK(s.value == doctest::Approx(0.8).epsilon(1e-12));
    auto none = mock({{"default_completion", "bad"}});
    CHECK_THROWS_AS(Verifier(none, c).parallel_score(kSol), AllChainsFailed);
  }

  TEST_CASE("sequential rounds append trigger phrases in order") {
    auto c = yes_no_config();
    c.R = 3;
    auto b = mock({{"default_completion", "checked"}, {"default_logprobs", lp_table(0.6, 0.4)}});
    const auto s = Verifier(b, c).sequential_score(kSol);
    CHECK(s.rounds_used == 3);
    CHECK(s.tokens_spent == 3);
    const auto& t = s.chains.at(0).raw_text;
    CHECK(t == "checked\n\nLet me double checkchecked\n\nLet's verify againchecked");
    CHECK(t.find("Did I miss something?") == std::string::npos);
  }

  TEST_CASE("R=1 matches think score") {
    const json script{{"default_completion", "a b c \\boxed{correct} \\boxed{yes}"},
                      {"default_logprobs", lp_table(0.3, 0.7)}};
    auto c = yes_no_config();
    const auto think = Verifier(mock(script), c).think_score(kSol);
    c.R = 1;
    const auto seq = Verifier(mock(script), c).sequential_score(kSol);
    CHECK(seq.value == think.value);
    CHECK(seq.chains.at(0).raw_text == think.chains.at(0).raw_text);
    CHECK(seq.tokens_spent == think.tokens_spent);
  }

  TEST_CASE("budget exhaustion stops rounds early but still scores") {
    auto c = yes_no_config();
    c.R = 4;
    c.cot_budget_tokens = 6;
    auto b = mock({{"default_completion", "w1 w2 w3 w4"}, {"default_logprobs", lp_table(0.6, 0.4)}});
    const auto s = Verifier(b, c).sequential_score(kSol);
    CHECK(s.rounds_used == 2);
    CHECK(s.tokens_spent == 6);
    CHECK(s.value == doctest::Approx(0.6).epsilon(1e-12));
    CHECK(s.chains.at(0).raw_text == "w1 w2 w3 w4\n\nLet me double checkw1 w2");
  }

  TEST_CASE("config validation") {
    auto c = yes_no_config();
    c.R = 5;
    CHECK_THROWS_AS(c.validate(), InvalidArgument);
    c = yes_no_config();
    c.K = 0;
    CHECK_THROWS_AS(c.validate(), InvalidArgument);
    c = yes_no_config();
    c.no_forms = {"yes"};
    CHECK_THROWS_AS(c.validate(), InvalidArgument);
    c = yes_no_config();
    c.cot_budget_tokens = 0;
    CHECK_THROWS_AS(c.validate(), InvalidArgument);
    CHECK_THROWS_AS(Verifier(mock({{"default_completion", "x"}}), yes_no_config()).think_score(solution("e", {})),
                    InvalidArgument);
  }

  TEST_CASE("judge outcomes") {
    auto b = mock({{"completions",
                    {{{"pattern", "Problem A"}, {"responses", "All fine. \\boxed{yes}"}},
                     {{"pattern", "Problem B"}, {"responses", "Step 2 is wrong so \\boxed{no}"}},
                     {{"pattern", "Problem C"}, {"responses", "The answer is 2."}}}}});
    Verifier v(b, yes_no_config());
    CHECK(v.judge(solution("a", {"x"}, "Problem A"), prompts::kSingleYesNo).outcome == JudgeOutcome::yes);
    CHECK(v.judge(solution("b", {"x"}, "Problem B"), prompts::kSingleYesNo).outcome == JudgeOutcome::no);
    CHECK(v.judge(solution("c", {"x"}, "Problem C"), prompts::kSingleYesNo).outcome == JudgeOutcome::invalid);
    CHECK(v.score(solution("a", {"x"}, "Problem A"), VerifyMethod::judge).value == 1.0);
    CHECK(v.score(solution("c", {"x"}, "Problem C"), VerifyMethod::judge).value == 0.0);
  }

  TEST_CASE("step score aggregation") {
    const std::vector<double> s{0.9, 0.7, 0.4};
    CHECK(aggregate_step_scores(s) == 0.4);
    CHECK(aggregate_step_scores(s, StepAggregation::min) == 0.4);
    CHECK(aggregate_step_scores(s, StepAggregation::product) == doctest::Approx(0.252).epsilon(1e-12));
    CHECK_THROWS_AS(aggregate_step_scores(std::vector<double>{}), EmptyScores);
  }

  TEST_CASE("method names round trip") {
    for (auto m : {VerifyMethod::think, VerifyMethod::parallel, VerifyMethod::sequential, VerifyMethod::judge}) {
      CHECK(parse_verify_method(to_string(m)) == m);
    }
    CHECK_FALSE(parse_verify_method("bogus"));
  }
}
