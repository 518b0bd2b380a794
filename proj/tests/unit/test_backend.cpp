#include <doctest.h>

#include <cmath>
#include <set>
#include <thread>

#include <httplib.h>

#include "prmkit/errors.hpp"
#include "prmkit/http_backend.hpp"
#include "prmkit/mock_backend.hpp"
#include "prmkit/response_cache.hpp"
#include "fixtures.hpp"

using namespace prmkit;
using namespace prmkit::testing;
using nlohmann::json;

namespace {

CompletionRequest req(std::string prompt, int n = 1, double t = 0.0, std::optional<std::int64_t> seed = 0,
                      int max_tokens = 256) {
  CompletionRequest r;
  r.model = "m";
  r.prompt = std::move(prompt);
  r.num_samples = n;
  r.temperature = t;
  r.seed = seed;
  r.max_tokens = max_tokens;
  return r;
}

const std::vector<std::string> kYesNo{"yes", "no"};

}  // namespace

TEST_SUITE("mock backend") {
  TEST_CASE("fixed response for any prompt") {
    auto b = mock({{"completions", {{{"match", "any"}, {"responses", "ok"}}}}});
    const auto r = b->complete(req("hello", 2));
    CHECK(r.texts == std::vector<std::string>{"ok", "ok"});
    CHECK(r.finish_reasons.size() == 2);
    CHECK(r.token_counts.size() == 2);
  }

  TEST_CASE("max_tokens truncates with finish=length") {
    auto b = mock({{"default_completion", "one two three four five"}});
    const auto r = b->complete(req("p", 1, 0.0, 0, 3));
    CHECK(r.texts[0] == "one two three");
    CHECK(r.finish_reasons[0] == FinishReason::length);
    CHECK(r.token_counts[0] == 3);

    auto counted = mock({{"completions", {{{"match", "any"}, {"responses", {"a b c d"}}, {"token_counts", {100}}}}}});
    const auto r2 = counted->complete(req("p", 1, 0.0, 0, 50));
    CHECK(r2.texts[0] == "a b");
    CHECK(r2.token_counts[0] == 50);
  }

  TEST_CASE("stop strings truncate and are reported") {
    auto b = mock({{"default_completion", "first step\n\nsecond"}});
    auto r = req("p");
    r.stop = std::vector<std::string>{"\n\n"};
    const auto out = b->complete(r);
    CHECK(out.texts[0] == "first step");
    CHECK(out.stop_sequence_hit[0]);
    CHECK(out.finish_reasons[0] == FinishReason::stop);
    r.stop = std::vector<std::string>{"zzz"};
    CHECK_FALSE(b->complete(r).stop_sequence_hit[0]);
  }

  TEST_CASE("pattern resolution: prefix table, longest pattern, default, miss") {
    auto b = mock({{"prefix_table", {{"exact prompt", {"from table"}}}},
                   {"completions",
                    {{{"pattern", "verify"}, {"responses", "short"}},
                     {{"pattern", "verify this"}, {"responses", "long"}},
                     {{"pattern", "gen"}, {"model", "other"}, {"responses", "other model"}}}}});
    CHECK(b->complete(req("exact prompt")).texts[0] == "from table");
    CHECK(b->complete(req("please verify this now")).texts[0] == "long");
    CHECK(b->complete(req("please verify")).texts[0] == "short");
    CHECK_THROWS_AS(b->complete(req("gen")), ScriptMiss);
  }

  TEST_CASE("seeded variants follow a fixed seed-determined order") {
    const json script{{"default_completion", {"v0", "v1", "v2", "v3"}}};
    auto a = mock(script, 5), b = mock(script, 5);
    const auto r1 = a->complete(req("p", 4, 0.8, 11));
    const auto r2 = b->complete(req("p", 4, 0.8, 11));
    CHECK(r1.texts == r2.texts);
    CHECK(std::set<std::string>(r1.texts.begin(), r1.texts.end()).size() == 4);
    const auto order = a->variant_order(4);
    for (int i = 0; i < 4; ++i) CHECK(r1.texts[i] == "v" + std::to_string(order[(11 + i) % 4]));
    CHECK(a->complete(req("p", 3, 0.0)).texts == std::vector<std::string>{"v0", "v0", "v0"});
    CHECK(a->identity() == b->identity());
    CHECK(a->identity() != mock(script, 6)->identity());
  }

  TEST_CASE("continuation scores echo the script") {
    auto b = mock({{"logprobs", {{{"pattern", "Is the solution correct?"},
                                  {"scores", {{"yes", std::log(0.9)}, {"no", std::log(0.1)}}}}}}});
    const auto s = b->score_continuations("m", "... Is the solution correct?", kYesNo);
    CHECK(s.at("yes") == doctest::Approx(std::log(0.9)).epsilon(1e-12));
    CHECK(s.at("no") == doctest::Approx(std::log(0.1)).epsilon(1e-12));
    CHECK(b->score_continuations("m", "Is the solution correct?", std::vector<std::string>{"yes"}).size() == 1);
    const auto missing = b->score_continuations("m", "Is the solution correct?", std::vector<std::string>{"Yes"});
    CHECK(std::isinf(missing.at("Yes")));
    CHECK_THROWS_AS(b->score_continuations("m", "x", std::vector<std::string>{}), InvalidArgument);
    CHECK_THROWS_AS(b->score_continuations("m", "x", std::vector<std::string>{"a", "a"}), InvalidArgument);
  }

  TEST_CASE("malformed scripts are rejected") {
    CHECK_THROWS_AS(MockScript::from_json(json::array()), InvalidArgument);
    CHECK_THROWS_AS(MockScript::from_json({{"default_logprobs", {{"yes", 0.5}}}}), InvalidArgument);
    CHECK_THROWS_AS(MockScript::from_json({{"completions", {{{"match", "fuzzy"}, {"responses", "x"}}}}}),
                    InvalidArgument);
  }

  TEST_CASE("request validation") {
    auto b = mock({{"default_completion", "x"}});
    CHECK_THROWS_AS(b->complete(req("p", 0)), InvalidArgument);
    CHECK_THROWS_AS(b->complete(req("p", 1, -1.0)), InvalidArgument);
    CHECK_THROWS_AS(b->complete(req("p", 1, 0.0, 0, 0)), InvalidArgument);
  }
}

TEST_SUITE("response cache") {
  TEST_CASE("seeded request is served from cache the second time") {
    TempDir dir;
    auto inner = mock({{"default_completion", {"a", "b"}}});
    CachedBackend cache(inner, dir.path());
    const auto r = req("p", 2, 0.8, 3);
    const auto first = cache.complete(r);
    const auto second = cache.complete(r);
    CHECK(to_json(first) == to_json(second));
    CHECK(inner->stats().network_calls == 1);
    CHECK(cache.stats().cache_hits == 1);
    CHECK(cache.stats().cache_misses == 1);

    // A fresh handle over the same directory sees the stored entry.
    auto inner2 = mock({{"default_completion", {"a", "b"}}});
    CachedBackend again(inner2, dir.path());
    CHECK(to_json(again.complete(r)) == to_json(first));
    CHECK(inner2->stats().network_calls == 0);
  }

  TEST_CASE("keys differ by any field, unseeded sampling bypasses") {
    TempDir dir;
    auto inner = mock({{"default_completion", "x"}});
    CachedBackend cache(inner, dir.path());
    CHECK(cache.key_for(req("p", 1, 0.0)) != cache.key_for(req("p", 1, 0.1)));
    CHECK(cache.key_for(req("p", 1, 0.0, std::nullopt)) != cache.key_for(req("p", 1, 0.0, 0)));
    CHECK(cache.key_for(req("p")) == cache.key_for(req("p")));
    const auto unseeded = req("p", 1, 0.8, std::nullopt);
    cache.complete(unseeded);
    cache.complete(unseeded);
    CHECK(inner->stats().network_calls == 2);
    CHECK(cache.stats().cache_bypassed == 2);
  }

  TEST_CASE("corrupt entries are misses and get replaced") {
    TempDir dir;
    auto inner = mock({{"default_completion", "x"}});
    CachedBackend cache(inner, dir.path());
    const auto r = req("p");
    write_file(cache.entry_path(cache.key_for(r)), "{not json");
    CHECK(cache.complete(r).texts[0] == "x");
    CHECK(cache.stats().corrupt_entries == 1);
    CHECK(json::parse(read_file(cache.entry_path(cache.key_for(r)))).is_object());
    cache.complete(r);
    CHECK(inner->stats().network_calls == 1);
  }

  TEST_CASE("score lookups are cached independent of candidate order") {
    TempDir dir;
    auto inner = mock({{"default_logprobs", {{"yes", -0.1}, {"no", -2.0}}}});
    CachedBackend cache(inner, dir.path());
    const std::vector<std::string> a{"yes", "no"}, b{"no", "yes"};
    const auto s1 = cache.score_continuations("m", "q", a);
    const auto s2 = cache.score_continuations("m", "q", b);
    CHECK(s1 == s2);
    CHECK(inner->stats().network_calls == 1);
  }

  TEST_CASE("concurrent identical requests reach the backend once") {
    TempDir dir;
    auto inner = mock({{"default_completion", "x"}}, 0, 8);
    CachedBackend cache(inner, dir.path());
    std::vector<std::jthread> threads;
    for (int i = 0; i < 8; ++i) threads.emplace_back([&] { cache.complete(req("same")); });
    threads.clear();
    CHECK(inner->stats().network_calls == 1);
  }
}

TEST_SUITE("http backend") {
  struct FakeServer {
    httplib::Server server;
    int port = 0;
    std::jthread thread;
    std::atomic<int> hits{0};
    std::atomic<int> failures_left{0};
    bool refuse_echo = false;
    std::string last_auth;

    FakeServer() {
      server.Post("/v1/completions", [this](const httplib::Request& rq, httplib::Response& rs) {
        ++hits;
        last_auth = rq.get_header_value("Authorization");
        if (failures_left > 0) {
          --failures_left;
          rs.status = 503;
          return;
        }
        const auto body = json::parse(rq.body);
        const std::string prompt = body.at("prompt");
        json choice;
        if (body.value("echo", false)) {
          if (refuse_echo) {
            rs.status = 400;
            rs.set_content(R"({"error":"echo unsupported"})", "application/json");
            return;
          }
          // Echo prompt tokens: the prompt as one token, then the candidate split in two.
          const std::string cand = prompt.substr(prompt.find("?") + 1);
          const std::string head = prompt.substr(0, prompt.find("?") + 1);
          const double total = cand == "yes" ? std::log(0.8) : std::log(0.2);
          const std::string c1 = cand.substr(0, 1), c2 = cand.substr(1);
          choice = {{"text", prompt + "x"},
                    {"finish_reason", "length"},
                    {"logprobs",
                     {{"tokens", {head, c1, c2, "x"}},
                      {"token_logprobs", {nullptr, total / 2, total / 2, -1.0}},
                      {"text_offset", {0, head.size(), head.size() + 1, prompt.size()}}}}};
        } else if (body.contains("logprobs") && body.at("max_tokens") == 1) {
          choice = {{"text", "yes"},
                    {"finish_reason", "length"},
                    {"logprobs",
                     {{"tokens", {"yes"}},
                      {"token_logprobs", {std::log(0.7)}},
                      {"top_logprobs", {{{"yes", std::log(0.7)}, {"no", std::log(0.3)}}}}}}};
        } else {
          json choices = json::array();
          const int n = body.value("n", 1);
          for (int i = 0; i < n; ++i) {
            choices.push_back({{"index", i}, {"text", "reply " + std::to_string(i)}, {"finish_reason", "stop"},
                               {"stop_reason", body.contains("stop") ? json("\n\n") : json(nullptr)}});
          }
          rs.set_content(json{{"choices", choices}, {"usage", {{"completion_tokens", 4 * n}}}}.dump(),
                         "application/json");
          return;
        }
        rs.set_content(json{{"choices", {choice}}}.dump(), "application/json");
      });
      port = server.bind_to_any_port("127.0.0.1");
      thread = std::jthread([this] { server.listen_after_bind(); });
      server.wait_until_ready();
    }
    ~FakeServer() { server.stop(); }

    HttpBackendOptions options() const {
      HttpBackendOptions o;
      o.base_url = "http://127.0.0.1:" + std::to_string(port) + "/v1";
      o.api_key = "secret-token";
      o.initial_backoff = std::chrono::milliseconds(1);
      o.max_backoff = std::chrono::milliseconds(2);
      o.timeout = std::chrono::seconds(5);
      return o;
    }
  };

  TEST_CASE("completions round trip with auth and usage counts") {
    FakeServer fake;
    HttpBackend b(fake.options());
    auto r = req("hello", 2);
    r.stop = std::vector<std::string>{"\n\n"};
    const auto out = b.complete(r);
    CHECK(out.texts == std::vector<std::string>{"reply 0", "reply 1"});
    CHECK(out.token_counts == std::vector<std::int64_t>{4, 4});
    CHECK(out.stop_sequence_hit[0]);
    CHECK(fake.last_auth == "Bearer secret-token");
  }

  TEST_CASE("retryable statuses are retried") {
    FakeServer fake;
    fake.failures_left = 2;
    HttpBackend b(fake.options());
    CHECK(b.complete(req("x")).texts[0] == "reply 0");
    CHECK(fake.hits == 3);
    fake.failures_left = 10;
    CHECK_THROWS_AS(b.complete(req("x")), TransportError);
  }

  TEST_CASE("echo pathway sums candidate-token logprobs") {
    FakeServer fake;
    auto o = fake.options();
    o.pathway = ScoringPathway::echo;
    HttpBackend b(o);
    const auto s = b.score_continuations("m", "Is it?", kYesNo);
    CHECK(s.at("yes") == doctest::Approx(std::log(0.8)).epsilon(1e-12));
    CHECK(s.at("no") == doctest::Approx(std::log(0.2)).epsilon(1e-12));
  }

  TEST_CASE("automatic pathway falls back to top logprobs on refusal") {
    FakeServer fake;
    fake.refuse_echo = true;
    HttpBackend b(fake.options());
    const auto s = b.score_continuations("m", "Is it?", kYesNo);
    CHECK(s.at("yes") == doctest::Approx(std::log(0.7)).epsilon(1e-12));
    CHECK(s.at("no") == doctest::Approx(std::log(0.3)).epsilon(1e-12));

    auto o = fake.options();
    o.pathway = ScoringPathway::echo;
    HttpBackend echo_only(o);
    CHECK_THROWS_AS(echo_only.score_continuations("m", "Is it?", kYesNo), BackendRefusal);
  }

  TEST_CASE("unreachable endpoint is a transport error after retries") {
    HttpBackendOptions o;
    o.base_url = "http://127.0.0.1:1/v1";
    o.max_retries = 2;
    o.initial_backoff = std::chrono::milliseconds(1);
    o.timeout = std::chrono::seconds(1);
    HttpBackend b(o);
    CHECK_THROWS_AS(b.complete(req("x")), TransportError);
    CHECK(b.stats().network_calls == 3);
  }
}
