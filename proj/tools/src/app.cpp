#include "prmkit_cli/app.hpp"

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <ostream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "prmkit/beam_search.hpp"
#include "prmkit/concurrency.hpp"
#include "prmkit/config.hpp"
#include "prmkit/datagen.hpp"
#include "prmkit/errors.hpp"
#include "prmkit/http_backend.hpp"
#include "prmkit/io.hpp"
#include "prmkit/jsonl.hpp"
#include "prmkit/metrics.hpp"
#include "prmkit/mock_backend.hpp"
#include "prmkit/report.hpp"
#include "prmkit/response_cache.hpp"
#include "prmkit/selection.hpp"
#include "prmkit/verifier.hpp"

namespace prmkit::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct Globals {
  std::optional<std::string> backend_url;
  std::optional<std::string> mock_script;
  std::optional<std::int64_t> seed;
  std::optional<std::string> config;
  std::string out = "prmkit-out";
  std::optional<int> max_in_flight;
  std::optional<std::string> cache_dir;
  bool no_cache = false;
  std::optional<std::string> run_id;
};

// Every subcommand flag; unset optionals leave the config value alone.
struct Flags {
  std::string prefixes, chains, records, solutions, problems, gold, predictions, pass_rates;
  std::vector<std::string> selections;
  std::optional<int> n_per_prefix, max_tokens, target_kept, rollouts, step, k, rounds, beams, m, max_steps, samples,
      bins;
  std::optional<double> temperature, target, tolerance, threshold;
  std::optional<std::string> mode, rule, method, strategy, invalid_policy;
  std::vector<int> n;
  bool vote = false;
};

std::string utc_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void require_file(const std::string& path, const char* flag) {
  if (path.empty()) throw UsageError(std::string(flag) + " is required");
  if (!fs::is_regular_file(path)) throw IOFailure("input not found: " + path);
}

class Context {
 public:
  Context(Config config, Globals globals, std::string command, std::ostream& out, std::ostream& err)
      : config_(std::move(config)), globals_(std::move(globals)), command_(std::move(command)), out_(out), err_(err) {
    started_at_ = utc_now();
    run_id_ = globals_.run_id.value_or(slug() + "-" + config_.hash().substr(0, 12));
  }

  const Config& config() const { return config_; }
  const fs::path out_dir() const { return globals_.out; }
  const std::string& run_id() const { return run_id_; }
  std::ostream& out() { return out_; }
  std::ostream& err() { return err_; }
  json& counts() { return counts_; }

  Backend& backend() {
    if (!backend_) backend_ = make_backend();
    return *backend_;
  }
  std::shared_ptr<Backend> backend_ptr() {
    backend();
    return backend_;
  }

  fs::path output(const std::string& name) const { return fs::path(globals_.out) / name; }

  void write_manifest() {
    json counts = counts_;
    std::string identity;
    if (backend_) {
      const auto s = backend_->stats();
      counts["requests"] = s.requests;
      counts["network_calls"] = s.network_calls;
      counts["cache_hits"] = s.cache_hits;
      counts["cache_misses"] = s.cache_misses;
      counts["cache_bypassed"] = s.cache_bypassed;
      counts["corrupt_cache_entries"] = s.corrupt_entries;
      counts["generated_tokens"] = s.generated_tokens;
      identity = backend_->identity();
    }
    json manifest{
        {"run_id", run_id_},
        {"command", command_},
        {"config_hash", config_.hash()},
        {"config", config_.to_json()},
        {"seeds", {{"run", config_.seed}, {"mock", config_.backend.mock_seed}}},
        {"backend", identity},
        {"counts", counts},
        {"started_at", started_at_},
        {"finished_at", utc_now()},
    };
    write_text_atomic(output("manifest-" + slug() + ".json"), manifest.dump(2) + "\n");
  }

  std::string backend_identity() { return backend().identity(); }

 private:
  std::string slug() const {
    std::string s = command_;
    std::replace(s.begin(), s.end(), ' ', '-');
    return s;
  }

  std::shared_ptr<Backend> make_backend() {
    const auto& b = config_.backend;
    std::shared_ptr<Backend> inner;
    if (!b.mock_script.empty()) {
      inner = std::make_shared<MockBackend>(MockScript::load(b.mock_script), b.mock_seed, b.max_in_flight);
    } else if (!b.url.empty()) {
      HttpBackendOptions opts;
      opts.base_url = b.url;
      opts.max_in_flight = b.max_in_flight;
      opts.timeout = std::chrono::seconds(b.timeout_s);
      opts.max_retries = b.max_retries;
      opts.pathway = *parse_scoring_pathway(b.scoring);
      inner = std::make_shared<HttpBackend>(opts);
    } else {
      throw UsageError("no backend configured: pass --mock-script or --backend-url");
    }
    if (globals_.no_cache || !b.cache) return inner;
    std::string dir = b.cache_dir;
    if (dir.empty()) {
      if (const char* env = std::getenv("PRMKIT_CACHE_DIR"); env && *env) dir = env;
    }
    if (dir.empty()) return inner;
    return std::make_shared<CachedBackend>(inner, dir);
  }

  Config config_;
  Globals globals_;
  std::string command_;
  std::ostream& out_;
  std::ostream& err_;
  std::string started_at_;
  std::string run_id_;
  json counts_ = json::object();
  std::shared_ptr<Backend> backend_;
};

std::vector<LabeledPrefix> load_prefixes(const Context& ctx, const std::string& path) {
  std::vector<LabeledPrefix> out;
  std::size_t line = 0;
  for (const auto& row : read_jsonl(path)) {
    ++line;
    try {
      out.push_back(io::prefix_from_json(row, ctx.config().label_mapping()));
    } catch (const InvalidArgument& e) {
      throw InvalidArgument(path + ": record " + std::to_string(line) + ": " + e.what());
    }
  }
  return out;
}

template <class T, class F>
std::vector<T> load_rows(const std::string& path, F parse) {
  std::vector<T> out;
  std::size_t line = 0;
  for (const auto& row : read_jsonl(path)) {
    ++line;
    try {
      out.push_back(parse(row));
    } catch (const InvalidArgument& e) {
      throw InvalidArgument(path + ": record " + std::to_string(line) + ": " + e.what());
    }
  }
  return out;
}

std::map<std::string, const LabeledPrefix*> index_prefixes(const std::vector<LabeledPrefix>& prefixes) {
  std::map<std::string, const LabeledPrefix*> by_id;
  for (const auto& p : prefixes) {
    if (!by_id.emplace(p.id, &p).second) throw InvalidArgument("duplicate prefix id " + p.id);
  }
  return by_id;
}

FilterDecision apply_filter(const Config& cfg, const ChainRecord& chain, const LabeledPrefix& prefix) {
  if (cfg.datagen.filter_mode == "outcome") {
    const auto correct = prefix.solution_correct();
    if (!correct) throw InvalidArgument("prefix " + prefix.id + ": outcome filtering needs answer_correct or step labels");
    return outcome_filter(chain.cot, *correct);
  }
  if (prefix.gold_step_labels.empty()) {
    throw InvalidArgument("prefix " + prefix.id + ": process filtering needs step_labels");
  }
  return process_filter(chain.cot, chain.token_count, prefix.gold_step_labels, cfg.datagen.filter_max_tokens);
}

std::vector<json> chains_to_rows(const std::vector<ChainRecord>& chains) {
  std::vector<json> rows;
  rows.reserve(chains.size());
  for (const auto& c : chains) rows.push_back(io::to_json(c));
  return rows;
}

// --- datagen ---------------------------------------------------------------

void cmd_datagen_sample(Context& ctx, const Flags& f) {
  require_file(f.prefixes, "--prefixes");
  const auto prefixes = load_prefixes(ctx, f.prefixes);
  if (prefixes.empty()) throw EmptyInput("no prefixes in " + f.prefixes);
  const auto& cfg = ctx.config();
  const auto by_id = index_prefixes(prefixes);
  const auto sampler = cfg.sampler_config();
  const auto limits = cfg.chain_limits();

  SampleResult all;
  std::int64_t kept = 0;
  int batches = 0;
  const std::size_t batch = cfg.datagen.target_kept > 0 ? static_cast<std::size_t>(cfg.datagen.batch_size)
                                                        : prefixes.size();
  for (std::size_t start = 0; start < prefixes.size(); start += batch) {
    const std::size_t len = std::min(batch, prefixes.size() - start);
    auto part = sample_chains(ctx.backend(), std::span(prefixes).subspan(start, len), sampler, limits);
    ++batches;
    if (cfg.datagen.target_kept > 0) {
      for (auto& c : part.chains) {
        c.filter = apply_filter(cfg, c, *by_id.at(c.prefix_id));
        kept += c.filter->keep;
      }
    }
    all.tokens += part.tokens;
    std::move(part.chains.begin(), part.chains.end(), std::back_inserter(all.chains));
    std::move(part.failures.begin(), part.failures.end(), std::back_inserter(all.failures));
    if (cfg.datagen.target_kept > 0 && kept >= cfg.datagen.target_kept) break;
  }

  write_jsonl_atomic(ctx.output("chains.jsonl"), chains_to_rows(all.chains));
  json failures = json::array();
  for (const auto& fl : all.failures) failures.push_back({{"prefix_id", fl.prefix_id}, {"error", fl.error}});
  ctx.counts()["prefixes"] = prefixes.size();
  ctx.counts()["batches"] = batches;
  ctx.counts()["chains"] = all.chains.size();
  ctx.counts()["failed_prefixes"] = failures;
  if (cfg.datagen.target_kept > 0) ctx.counts()["kept"] = kept;
  ctx.out() << "sampled " << all.chains.size() << " chains (" << all.failures.size() << " prefixes failed) -> "
            << ctx.output("chains.jsonl").string() << "\n";
}

void cmd_datagen_filter(Context& ctx, const Flags& f) {
  require_file(f.chains, "--chains");
  require_file(f.prefixes, "--prefixes");
  const auto prefixes = load_prefixes(ctx, f.prefixes);
  const auto by_id = index_prefixes(prefixes);
  auto chains = load_rows<ChainRecord>(f.chains, io::chain_from_json);

  std::vector<ChainRecord> kept;
  std::map<std::string, int> reasons;
  for (auto& c : chains) {
    auto it = by_id.find(c.prefix_id);
    if (it == by_id.end()) throw InvalidArgument("chain refers to unknown prefix " + c.prefix_id);
    c.filter = apply_filter(ctx.config(), c, *it->second);
    if (c.filter->keep) kept.push_back(c);
    else ++reasons[std::string(to_string(*c.filter->reason))];
  }
  write_jsonl_atomic(ctx.output("filtered.jsonl"), chains_to_rows(chains));
  write_jsonl_atomic(ctx.output("kept.jsonl"), chains_to_rows(kept));
  ctx.counts()["chains"] = chains.size();
  ctx.counts()["kept"] = kept.size();
  ctx.counts()["rejected"] = reasons;
  ctx.out() << "kept " << kept.size() << " of " << chains.size() << " chains (" << ctx.config().datagen.filter_mode
            << " filter) -> " << ctx.output("kept.jsonl").string() << "\n";
}

void cmd_datagen_balance(Context& ctx, const Flags& f) {
  require_file(f.chains, "--chains");
  require_file(f.prefixes, "--prefixes");
  const auto prefixes = load_prefixes(ctx, f.prefixes);
  const auto by_id = index_prefixes(prefixes);
  const auto chains = load_rows<ChainRecord>(f.chains, io::chain_from_json);

  std::vector<bool> correct;
  for (const auto& c : chains) {
    auto it = by_id.find(c.prefix_id);
    if (it == by_id.end()) throw InvalidArgument("chain refers to unknown prefix " + c.prefix_id);
    auto sc = it->second->solution_correct();
    if (!sc) throw InvalidArgument("prefix " + c.prefix_id + ": solution correctness unknown");
    correct.push_back(*sc);
  }
  const auto& d = ctx.config().datagen;
  const auto result = balance(correct, d.balance_target, d.balance_tolerance);
  if (result.warning) ctx.err() << "prmkit: warning: " << *result.warning << "\n";

  std::vector<json> rows;
  std::int64_t n_correct = 0;
  for (auto i : result.kept) {
    rows.push_back(io::to_json(chains[i]));
    n_correct += correct[i];
  }
  write_jsonl_atomic(ctx.output("balanced.jsonl"), rows);
  ctx.counts()["input"] = chains.size();
  ctx.counts()["kept"] = rows.size();
  ctx.counts()["kept_correct"] = n_correct;
  ctx.counts()["kept_incorrect"] = static_cast<std::int64_t>(rows.size()) - n_correct;
  ctx.out() << "balanced " << chains.size() << " -> " << rows.size() << " chains (" << n_correct
            << " correct) -> " << ctx.output("balanced.jsonl").string() << "\n";
}

void cmd_datagen_finalize(Context& ctx, const Flags& f) {
  require_file(f.chains, "--chains");
  require_file(f.prefixes, "--prefixes");
  const auto prefixes = load_prefixes(ctx, f.prefixes);
  index_prefixes(prefixes);
  const auto chains = load_rows<ChainRecord>(f.chains, io::chain_from_json);
  const auto result = finalize(chains, prefixes, resolve_template(ctx.config().datagen.prompt_template));
  for (const auto& d : result.dropped) ctx.err() << "prmkit: dropped " << d << "\n";

  std::vector<json> rows;
  for (const auto& r : result.records) rows.push_back(io::to_json(r));
  write_jsonl_atomic(ctx.output("records.jsonl"), rows);
  ctx.counts()["chains"] = chains.size();
  ctx.counts()["records"] = rows.size();
  ctx.counts()["dropped"] = result.dropped;
  ctx.out() << "finalized " << rows.size() << " records (" << result.dropped.size() << " dropped) -> "
            << ctx.output("records.jsonl").string() << "\n";
}

void cmd_datagen_stats(Context& ctx, const Flags& f) {
  require_file(f.records, "--records");
  const auto records = load_rows<TrainingRecord>(f.records, io::record_from_json);
  const json doc = io::to_json(stats(records));
  write_text_atomic(ctx.output("stats.json"), doc.dump(2) + "\n");
  ctx.counts()["records"] = records.size();
  ctx.out() << doc.dump(2) << "\n";
}

void cmd_datagen_mc_label(Context& ctx, const Flags& f) {
  require_file(f.prefixes, "--prefixes");
  const auto prefixes = load_prefixes(ctx, f.prefixes);
  if (prefixes.empty()) throw EmptyInput("no prefixes in " + f.prefixes);
  const auto& cfg = ctx.config();
  const auto generator = cfg.generator_config();
  const auto rule = *parse_success_rule(cfg.datagen.mc_success_rule);

  struct Job {
    std::size_t prefix;
    int step;
  };
  std::vector<Job> jobs;
  for (std::size_t i = 0; i < prefixes.size(); ++i) {
    if (f.step) {
      jobs.push_back({i, *f.step});
    } else {
      for (int s = 1; s <= static_cast<int>(prefixes[i].steps.size()); ++s) jobs.push_back({i, s});
    }
  }
  Backend& backend = ctx.backend();
  std::vector<McLabel> labels(jobs.size());
  parallel_for(jobs.size(), backend.max_in_flight(), [&](std::size_t j) {
    labels[j] = mc_label(backend, prefixes[jobs[j].prefix], jobs[j].step, cfg.datagen.mc_rollouts, generator, rule);
  });
  std::vector<json> rows;
  for (std::size_t j = 0; j < jobs.size(); ++j) {
    rows.push_back({{"prefix_id", prefixes[jobs[j].prefix].id},
                    {"step_index", jobs[j].step},
                    {"label", std::string(to_string(labels[j].label))},
                    {"successes", labels[j].successes},
                    {"rollouts", labels[j].rollouts}});
  }
  write_jsonl_atomic(ctx.output("silver_labels.jsonl"), rows);
  ctx.counts()["labels"] = rows.size();
  ctx.out() << "labeled " << rows.size() << " steps -> " << ctx.output("silver_labels.jsonl").string() << "\n";
}

// --- verify ----------------------------------------------------------------

std::optional<bool> gold_has_error(const json& row, const StepwiseSolution& s) {
  if (auto it = row.find("first_error_index"); it != row.end() && it->is_number_integer()) {
    return it->get<int>() >= 0;
  }
  if (s.gold_step_labels.empty()) return std::nullopt;
  return std::any_of(s.gold_step_labels.begin(), s.gold_step_labels.end(),
                     [](StepLabel l) { return l == StepLabel::incorrect; });
}

void cmd_verify_score(Context& ctx, const Flags& f) {
  require_file(f.solutions, "--solutions");
  const auto raw = read_jsonl(f.solutions);
  std::vector<StepwiseSolution> solutions;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    try {
      solutions.push_back(io::solution_from_json(raw[i]));
    } catch (const InvalidArgument& e) {
      throw InvalidArgument(f.solutions + ": record " + std::to_string(i + 1) + ": " + e.what());
    }
  }
  if (solutions.empty()) throw EmptyInput("no solutions in " + f.solutions);

  const auto& cfg = ctx.config();
  const auto method = *parse_verify_method(cfg.verify.method);
  auto verifier = std::make_shared<Verifier>(ctx.backend_ptr(), cfg.verify_config());

  std::vector<json> rows(solutions.size());
  std::vector<std::int64_t> tokens(solutions.size(), 0);
  parallel_for(solutions.size(), ctx.backend().max_in_flight(), [&](std::size_t i) {
    json row{{"id", solutions[i].id}};
    try {
      if (method == VerifyMethod::judge) {
        const auto j = verifier->judge(solutions[i], prompts::kSingleYesNo);
        row["method"] = "judge";
        row["judgment"] = std::string(to_string(j.outcome));
        row["value"] = j.outcome == JudgeOutcome::yes ? 1.0 : 0.0;
        row["tokens_spent"] = j.tokens_spent;
        row["chains"] = json::array({io::to_json(j.chain)});
        tokens[i] = j.tokens_spent;
      } else {
        const auto s = verifier->score(solutions[i], method);
        row.update(io::to_json(s));
        tokens[i] = s.tokens_spent;
      }
      row["error"] = nullptr;
    } catch (const UsageError&) {
      throw;
    } catch (const Error& e) {
      row["value"] = nullptr;
      row["error"] = e.what();
    }
    if (auto g = gold_has_error(raw[i], solutions[i])) row["gold_has_error"] = *g;
    rows[i] = std::move(row);
  });

  std::int64_t failed = 0, total_tokens = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    failed += !rows[i]["error"].is_null();
    total_tokens += tokens[i];
  }
  write_jsonl_atomic(ctx.output("scores.jsonl"), rows);
  ctx.counts()["solutions"] = rows.size();
  ctx.counts()["failed"] = failed;
  ctx.counts()["verifier_tokens"] = total_tokens;
  ctx.counts()["estimated_flops"] = estimate_flops(cfg.flops_model(), total_tokens, Role::verifier);
  ctx.out() << "scored " << rows.size() - failed << " of " << rows.size() << " solutions (" << cfg.verify.method
            << ") -> " << ctx.output("scores.jsonl").string() << "\n";
}

// --- select ----------------------------------------------------------------

std::vector<Problem> load_problems(const std::string& path) {
  auto problems = load_rows<Problem>(path, io::problem_from_json);
  if (problems.empty()) throw EmptyInput("no problems in " + path);
  return problems;
}

json selection_row(const Problem& p, const SelectionResult& r, const AnswerCanonicalizer& canon) {
  json row = io::to_json(r);
  row["problem_id"] = p.id;
  row["gold_answer"] = p.gold_answer ? json(*p.gold_answer) : json(nullptr);
  row["correct"] = p.gold_answer ? json(canon(*p.gold_answer) == r.chosen_answer) : json(nullptr);
  row["error"] = nullptr;
  return row;
}

struct BudgetTally {
  int problems = 0;
  int graded = 0;
  int correct = 0;
  double flops = 0.0;
};

json tally_metrics(const std::map<int, BudgetTally>& tallies, std::vector<CurvePoint>& curve) {
  json metrics = json::object();
  for (const auto& [budget, t] : tallies) {
    const double acc = t.graded ? static_cast<double>(t.correct) / t.graded : 0.0;
    const double flops = t.problems ? t.flops / t.problems : 0.0;
    metrics[std::to_string(budget)] = {{"accuracy", t.graded ? json(acc) : json(nullptr)},
                                       {"graded", t.graded},
                                       {"problems", t.problems},
                                       {"mean_flops", flops}};
    curve.push_back({static_cast<double>(budget), flops, acc});
  }
  return metrics;
}

void tally(std::map<int, BudgetTally>& tallies, int budget, const json& row) {
  auto& t = tallies[budget];
  ++t.problems;
  if (row.contains("flops_estimate") && row["flops_estimate"].is_number()) t.flops += row["flops_estimate"].get<double>();
  if (row.contains("gold_answer") && !row["gold_answer"].is_null()) {
    ++t.graded;
    t.correct += row.value("correct", json(false)).is_boolean() && row["correct"].get<bool>();
  }
}

void write_selection_outputs(Context& ctx, const std::string& stem, const std::vector<json>& rows,
                             const std::vector<json>& trace, const std::map<int, BudgetTally>& tallies) {
  write_jsonl_atomic(ctx.output(stem + "_selections.jsonl"), rows);
  write_jsonl_atomic(ctx.output(stem + "_trace.jsonl"), trace);
  RunReport report;
  report.run_id = ctx.run_id();
  report.command = "select " + stem;
  report.config_hash = ctx.config().hash();
  report.seeds = {ctx.config().seed};
  report.backend = ctx.backend_identity();
  report.metrics = tally_metrics(tallies, report.curve);
  report.rows = rows;
  for (auto& r : report.rows) r.erase("chosen_steps");
  const auto dir = emit_report(report, ctx.out_dir());
  double flops = 0.0;
  for (const auto& r : rows) flops += r.value("flops_estimate", 0.0);
  ctx.counts()["rows"] = rows.size();
  ctx.counts()["estimated_flops"] = flops;
  ctx.out() << "selected " << rows.size() << " rows -> " << ctx.output(stem + "_selections.jsonl").string()
            << ", report " << dir.string() << "\n";
}

void cmd_select_bon(Context& ctx, const Flags& f) {
  require_file(f.problems, "--problems");
  const auto problems = load_problems(f.problems);
  const auto& cfg = ctx.config();
  const auto generator = cfg.generator_config();
  const auto strategy = *parse_selection_strategy(cfg.selection.strategy);
  if (strategy == SelectionStrategy::beam_search) throw UsageError("use `select beam` for beam search");
  const auto method = *parse_verify_method(cfg.verify.method);
  auto verifier = std::make_shared<const Verifier>(ctx.backend_ptr(), cfg.verify_config());
  const VerifyFn verify = make_verify_fn(verifier, method);
  const auto canon = default_canonicalizer();

  std::vector<json> rows, trace;
  std::map<int, BudgetTally> tallies;
  for (int n : cfg.selection.n) {
    BestOfNOptions opts;
    opts.n = n;
    opts.strategy = strategy;
    opts.flops = cfg.flops_model();
    for (const auto& p : problems) {
      json row;
      try {
        const auto r = best_of_n(ctx.backend(), p, generator, verify, opts);
        row = selection_row(p, r, canon);
        for (const auto& t : r.trace) {
          json tr = io::to_json(t);
          tr["problem_id"] = p.id;
          tr["n"] = n;
          trace.push_back(std::move(tr));
        }
      } catch (const UsageError&) {
        throw;
      } catch (const Error& e) {
        row = {{"problem_id", p.id},
               {"gold_answer", p.gold_answer ? json(*p.gold_answer) : json(nullptr)},
               {"correct", p.gold_answer ? json(false) : json(nullptr)},
               {"error", e.what()}};
      }
      row["n"] = n;
      tally(tallies, n, row);
      rows.push_back(std::move(row));
    }
  }
  write_selection_outputs(ctx, "bon", rows, trace, tallies);
}

void cmd_select_beam(Context& ctx, const Flags& f) {
  require_file(f.problems, "--problems");
  const auto problems = load_problems(f.problems);
  const auto& cfg = ctx.config();
  const auto generator = cfg.generator_config();
  const auto beam = cfg.beam_config();
  const auto method = *parse_verify_method(cfg.verify.method);
  auto verifier = std::make_shared<const Verifier>(ctx.backend_ptr(), cfg.verify_config());
  const VerifyFn verify = make_verify_fn(verifier, method);
  const auto canon = default_canonicalizer();

  std::vector<json> rows, trace;
  std::map<int, BudgetTally> tallies;
  for (const auto& p : problems) {
    json row;
    try {
      const auto r = beam_search(ctx.backend(), p, generator, verify, beam, cfg.flops_model(), canon);
      row = selection_row(p, r.selection, canon);
      row["best_node"] = r.best.id;
      row["nodes"] = r.nodes.size() - 1;
      row["rounds"] = r.retained.size();
      for (const auto& t : r.selection.trace) {
        json tr = io::to_json(t);
        tr["problem_id"] = p.id;
        trace.push_back(std::move(tr));
      }
    } catch (const UsageError&) {
      throw;
    } catch (const Error& e) {
      row = {{"problem_id", p.id},
             {"gold_answer", p.gold_answer ? json(*p.gold_answer) : json(nullptr)},
             {"correct", p.gold_answer ? json(false) : json(nullptr)},
             {"error", e.what()}};
    }
    row["beams"] = beam.beams;
    tally(tallies, beam.beams, row);
    rows.push_back(std::move(row));
  }
  write_selection_outputs(ctx, "beam", rows, trace, tallies);
}

// --- eval ------------------------------------------------------------------

json metrics_block(std::span<const EvalItem> items, InvalidPolicy policy, std::ostream& err, const std::string& label) {
  json m;
  const auto c = confusion(items, Prediction::incorrect, policy);
  m["n"] = items.size();
  m["confusion"] = {{"tp", c.tp}, {"fp", c.fp}, {"fn", c.fn}, {"tn", c.tn}};
  m["binary_f1"] = binary_f1(items, Prediction::incorrect, policy);
  try {
    const auto s = subset_accuracy(items, policy);
    m["harmonic_subset_f1"] = harmonic_subset_f1(items, policy);
    m["accuracy_erroneous"] = s.on_erroneous;
    m["accuracy_correct"] = s.on_correct;
  } catch (const MissingSubset& e) {
    err << "prmkit: warning: " << label << ": harmonic_subset_f1 omitted: " << e.what() << "\n";
    m["harmonic_subset_f1"] = nullptr;
  }
  m["invalid_rate"] = invalid_rate(items);
  return m;
}

void cmd_eval_processbench(Context& ctx, const Flags& f) {
  require_file(f.gold, "--gold");
  require_file(f.predictions, "--predictions");
  if (!f.pass_rates.empty()) require_file(f.pass_rates, "--pass-rates");
  const auto& cfg = ctx.config();
  const auto gold = load_rows<io::ProcessBenchItem>(f.gold, io::processbench_from_json);
  if (gold.empty()) throw EmptyInput("no gold rows in " + f.gold);
  const auto pred_rows = read_jsonl(f.predictions);
  if (pred_rows.empty()) throw EmptyInput("no predictions in " + f.predictions);

  std::map<std::string, Prediction> preds;
  for (std::size_t i = 0; i < pred_rows.size(); ++i) {
    try {
      const auto& row = pred_rows[i];
      preds[row.at("id").is_string() ? row.at("id").get<std::string>() : row.at("id").dump()] =
          io::prediction_from_json(row, cfg.eval.threshold);
    } catch (const std::exception& e) {
      throw InvalidArgument(f.predictions + ": record " + std::to_string(i + 1) + ": " + e.what());
    }
  }
  std::vector<EvalItem> items;
  std::vector<json> rows;
  std::int64_t missing = 0;
  for (const auto& g : gold) {
    EvalItem item{g.solution.id, g.gold_has_error(), Prediction::invalid};
    if (auto it = preds.find(g.solution.id); it != preds.end()) item.predicted = it->second;
    else ++missing;
    rows.push_back({{"id", item.id}, {"gold_has_error", item.gold_has_error},
                    {"predicted", std::string(to_string(item.predicted))}});
    items.push_back(item);
  }
  if (missing) ctx.err() << "prmkit: warning: " << missing << " gold items have no prediction; counted invalid\n";

  const auto policy = cfg.invalid_policy();
  json metrics = metrics_block(items, policy, ctx.err(), "all");
  metrics["invalid_policy"] = cfg.eval.invalid_policy;
  metrics["primary_metric"] = cfg.eval.metric == "binary" ? "binary_f1" : "harmonic_subset_f1";

  if (!f.pass_rates.empty()) {
    std::map<std::string, double> rates;
    for (const auto& row : read_jsonl(f.pass_rates)) rates[row.at("id").get<std::string>()] = row.at("pass_rate").get<double>();
    std::vector<double> r;
    std::vector<EvalItem> rated;
    for (const auto& item : items) {
      if (auto it = rates.find(item.id); it != rates.end()) {
        r.push_back(it->second);
        rated.push_back(item);
      }
    }
    const auto bins = difficulty_bins(r, cfg.eval.difficulty_bins);
    json by_bin = json::object();
    for (int b = 0; b < cfg.eval.difficulty_bins; ++b) {
      std::vector<EvalItem> in_bin;
      for (std::size_t i = 0; i < rated.size(); ++i) {
        if (bins[i] == b) in_bin.push_back(rated[i]);
      }
      by_bin[std::to_string(b)] = in_bin.empty() ? json(nullptr)
                                                 : metrics_block(in_bin, policy, ctx.err(), "bin " + std::to_string(b));
    }
    metrics["by_difficulty_bin"] = by_bin;
  }

  RunReport report;
  report.run_id = ctx.run_id();
  report.command = "eval processbench";
  report.config_hash = cfg.hash();
  report.seeds = {cfg.seed};
  report.metrics = metrics;
  report.rows = rows;
  const auto dir = emit_report(report, ctx.out_dir());
  write_text_atomic(ctx.output("metrics.json"), metrics.dump(2) + "\n");
  ctx.counts()["items"] = items.size();
  ctx.counts()["missing_predictions"] = missing;
  ctx.out() << metrics.dump(2) << "\nreport " << dir.string() << "\n";
}

void cmd_eval_report(Context& ctx, const Flags& f) {
  if (f.selections.empty()) throw UsageError("--selections is required");
  for (const auto& s : f.selections) require_file(s, "--selections");
  std::vector<json> rows;
  std::map<int, BudgetTally> tallies;
  for (const auto& path : f.selections) {
    for (auto& row : read_jsonl(path)) {
      int budget = 1;
      if (row.contains("n")) budget = row["n"].get<int>();
      else if (row.contains("beams")) budget = row["beams"].get<int>();
      tally(tallies, budget, row);
      row.erase("chosen_steps");
      rows.push_back(std::move(row));
    }
  }
  if (rows.empty()) throw EmptyInput("no selection rows");
  RunReport report;
  report.run_id = ctx.run_id();
  report.command = "eval report";
  report.config_hash = ctx.config().hash();
  report.seeds = {ctx.config().seed};
  report.metrics = tally_metrics(tallies, report.curve);
  report.rows = rows;
  const auto dir = emit_report(report, ctx.out_dir());
  ctx.counts()["rows"] = rows.size();
  ctx.out() << "report " << dir.string() << "\n";
}

void cmd_eval_pass_rate(Context& ctx, const Flags& f) {
  require_file(f.problems, "--problems");
  const auto problems = load_problems(f.problems);
  const auto& cfg = ctx.config();
  const auto generator = cfg.generator_config();
  Backend& backend = ctx.backend();
  std::vector<double> rates(problems.size());
  parallel_for(problems.size(), backend.max_in_flight(), [&](std::size_t i) {
    rates[i] = pass_at_1(backend, problems[i], generator, cfg.eval.pass_at_1_samples);
  });
  const auto bins = difficulty_bins(rates, cfg.eval.difficulty_bins);
  std::vector<json> rows;
  for (std::size_t i = 0; i < problems.size(); ++i) {
    rows.push_back({{"id", problems[i].id}, {"pass_rate", rates[i]}, {"bin", bins[i]}});
  }
  write_jsonl_atomic(ctx.output("pass_rates.jsonl"), rows);
  ctx.counts()["problems"] = rows.size();
  ctx.out() << "pass@1 for " << rows.size() << " problems -> " << ctx.output("pass_rates.jsonl").string() << "\n";
}

// --- wiring ----------------------------------------------------------------

Config effective_config(const Globals& g, const Flags& f) {
  Config c = g.config ? Config::load(*g.config) : Config{};
  if (g.backend_url) c.backend.url = *g.backend_url;
  if (g.mock_script) c.backend.mock_script = *g.mock_script;
  if (g.seed) c.seed = *g.seed;
  if (g.max_in_flight) c.backend.max_in_flight = *g.max_in_flight;
  if (g.cache_dir) c.backend.cache_dir = *g.cache_dir;
  if (f.n_per_prefix) c.datagen.n_per_prefix = *f.n_per_prefix;
  if (f.target_kept) c.datagen.target_kept = *f.target_kept;
  if (f.mode) c.datagen.filter_mode = *f.mode;
  if (f.target) c.datagen.balance_target = *f.target;
  if (f.tolerance) c.datagen.balance_tolerance = *f.tolerance;
  if (f.rollouts) c.datagen.mc_rollouts = *f.rollouts;
  if (f.rule) c.datagen.mc_success_rule = *f.rule;
  if (f.method) c.verify.method = *f.method;
  if (f.k) c.verify.K = *f.k;
  if (f.rounds) c.verify.R = *f.rounds;
  if (!f.n.empty()) c.selection.n = f.n;
  if (f.strategy) c.selection.strategy = *f.strategy;
  if (f.beams) c.selection.beams = *f.beams;
  if (f.m) c.selection.candidates_per_beam = *f.m;
  if (f.max_steps) c.selection.max_steps = *f.max_steps;
  if (f.vote) c.selection.vote_over_terminated = true;
  if (f.invalid_policy) c.eval.invalid_policy = *f.invalid_policy;
  if (f.threshold) c.eval.threshold = *f.threshold;
  if (f.samples) c.eval.pass_at_1_samples = *f.samples;
  if (f.bins) c.eval.difficulty_bins = *f.bins;
  c.validate();
  return c;
}

using Handler = void (*)(Context&, const Flags&);

struct Command {
  CLI::App* app;
  std::string name;
  Handler handler;
};

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const UsageError*>(&e)) return kUsage;
  if (dynamic_cast<const IOFailure*>(&e) || dynamic_cast<const CacheCorrupt*>(&e)) return kIo;
  if (dynamic_cast<const BackendError*>(&e) || dynamic_cast<const DegenerateMass*>(&e) ||
      dynamic_cast<const AllChainsFailed*>(&e) || dynamic_cast<const NoCandidates*>(&e)) {
    return kBackend;
  }
  if (dynamic_cast<const fs::filesystem_error*>(&e)) return kIo;
  return kUsage;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Globals g;
  Flags f;
  // Bound to `--max-tokens`, whose meaning depends on the subcommand.
  std::optional<int> sample_max_tokens, filter_max_tokens;
  std::optional<double> sample_temperature;

  CLI::App app{"prmkit: generative process verification and test-time scaling", "prmkit"};
  app.require_subcommand(1);
  app.fallthrough();
  app.add_option("--backend-url", g.backend_url, "OpenAI-compatible base URL, e.g. http://localhost:8000/v1");
  app.add_option("--mock-script", g.mock_script, "Serve requests from a mock script instead of a live endpoint");
  app.add_option("--seed", g.seed, "Request seed (default 0)");
  app.add_option("--config", g.config, "JSON config file; flags override it");
  app.add_option("--out", g.out, "Output directory")->capture_default_str();
  app.add_option("--max-in-flight", g.max_in_flight, "Concurrent request bound (default 8)");
  app.add_option("--cache-dir", g.cache_dir, "Response cache directory (default $PRMKIT_CACHE_DIR)");
  app.add_flag("--no-cache", g.no_cache, "Disable the response cache");
  app.add_option("--run-id", g.run_id, "Report directory name (default derived from the config hash)");

  std::vector<Command> commands;

  auto* datagen = app.add_subcommand("datagen", "Build verification-chain training data");
  datagen->require_subcommand(1);
  auto* sample = datagen->add_subcommand("sample", "Sample verification chains per labeled prefix");
  sample->add_option("--prefixes", f.prefixes, "Prefix JSONL")->required();
  sample->add_option("--n", f.n_per_prefix, "Chains per prefix (default 4)");
  sample->add_option("--temperature", sample_temperature, "Sampling temperature (default 0.1)");
  sample->add_option("--max-tokens", sample_max_tokens, "Per-chain generation cap (default 8192)");
  sample->add_option("--target-kept", f.target_kept, "Stop after the batch where this many chains pass the filter");
  sample->add_option("--mode", f.mode, "Filter used with --target-kept")->check(CLI::IsMember({"process", "outcome"}));
  commands.push_back({sample, "datagen sample", cmd_datagen_sample});

  auto* filter = datagen->add_subcommand("filter", "Keep chains that agree with gold labels");
  filter->add_option("--chains", f.chains, "Chain JSONL")->required();
  filter->add_option("--prefixes", f.prefixes, "Prefix JSONL")->required();
  filter->add_option("--mode", f.mode, "process | outcome")->check(CLI::IsMember({"process", "outcome"}));
  filter->add_option("--max-tokens", filter_max_tokens, "Longest chain kept (default 4096)");
  commands.push_back({filter, "datagen filter", cmd_datagen_filter});

  auto* bal = datagen->add_subcommand("balance", "Balance kept chains by solution correctness");
  bal->add_option("--chains", f.chains, "Chain JSONL")->required();
  bal->add_option("--prefixes", f.prefixes, "Prefix JSONL")->required();
  bal->add_option("--target", f.target, "Target fraction of correct solutions (default 0.5)");
  bal->add_option("--tolerance", f.tolerance, "Allowed deviation (default 0.05)");
  commands.push_back({bal, "datagen balance", cmd_datagen_balance});

  auto* fin = datagen->add_subcommand("finalize", "Clean chains into training records");
  fin->add_option("--chains", f.chains, "Chain JSONL")->required();
  fin->add_option("--prefixes", f.prefixes, "Prefix JSONL")->required();
  commands.push_back({fin, "datagen finalize", cmd_datagen_finalize});

  auto* st = datagen->add_subcommand("stats", "Dataset statistics");
  st->add_option("--records", f.records, "Training record JSONL")->required();
  commands.push_back({st, "datagen stats", cmd_datagen_stats});

  auto* mc = datagen->add_subcommand("mc-label", "Monte Carlo silver step labels");
  mc->add_option("--prefixes", f.prefixes, "Prefix JSONL with final_answer")->required();
  mc->add_option("--rollouts", f.rollouts, "Rollouts per step (default 8)");
  mc->add_option("--rule", f.rule, "any | majority")->check(CLI::IsMember({"any", "majority"}));
  mc->add_option("--step", f.step, "Label only this 1-based step");
  commands.push_back({mc, "datagen mc-label", cmd_datagen_mc_label});

  auto* verify = app.add_subcommand("verify", "Score solutions with the verifier");
  verify->require_subcommand(1);
  auto* score = verify->add_subcommand("score", "One score per solution");
  score->add_option("--solutions", f.solutions, "Solution JSONL")->required();
  score->add_option("--method", f.method, "think | parallel | sequential | judge")
      ->check(CLI::IsMember({"think", "parallel", "sequential", "judge"}));
  score->add_option("--k", f.k, "Parallel chains (default 1)");
  score->add_option("--rounds", f.rounds, "Sequential rounds, at most 4 (default 1)");
  commands.push_back({score, "verify score", cmd_verify_score});

  auto* select = app.add_subcommand("select", "Test-time scaling over generated solutions");
  select->require_subcommand(1);
  auto* bon = select->add_subcommand("bon", "Best-of-N");
  bon->add_option("--problems", f.problems, "Problem JSONL")->required();
  bon->add_option("--n", f.n, "Comma-separated N values (default 4)")->delimiter(',');
  bon->add_option("--strategy", f.strategy, "weighted | majority | max")
      ->check(CLI::IsMember({"weighted", "majority", "max"}));
  bon->add_option("--method", f.method, "Verifier method (default think)")
      ->check(CLI::IsMember({"think", "parallel", "sequential", "judge"}));
  bon->add_option("--k", f.k, "Parallel verifier chains");
  bon->add_option("--rounds", f.rounds, "Sequential verifier rounds");
  commands.push_back({bon, "select bon", cmd_select_bon});

  auto* beam = select->add_subcommand("beam", "Verifier-guided step-level beam search");
  beam->add_option("--problems", f.problems, "Problem JSONL")->required();
  beam->add_option("--beams", f.beams, "Beams kept per round (default 4)");
  beam->add_option("--m", f.m, "Candidate steps per beam (default 4)");
  beam->add_option("--max-steps", f.max_steps, "Depth limit (default 20)");
  beam->add_option("--method", f.method, "Verifier method (default think)")
      ->check(CLI::IsMember({"think", "parallel", "sequential", "judge"}));
  beam->add_flag("--vote", f.vote, "Weighted vote over terminated beams instead of the single best");
  commands.push_back({beam, "select beam", cmd_select_beam});

  auto* eval = app.add_subcommand("eval", "Metrics and reports");
  eval->require_subcommand(1);
  auto* pb = eval->add_subcommand("processbench", "Solution-level F1 against ProcessBench-format gold");
  pb->add_option("--gold", f.gold, "ProcessBench JSONL")->required();
  pb->add_option("--predictions", f.predictions, "Prediction or score JSONL")->required();
  pb->add_option("--threshold", f.threshold, "Score threshold for rows carrying only a value (default 0.5)");
  pb->add_option("--invalid-policy", f.invalid_policy, "as_wrong | exclude")
      ->check(CLI::IsMember({"as_wrong", "exclude"}));
  pb->add_option("--pass-rates", f.pass_rates, "pass@1 JSONL for difficulty-binned metrics");
  pb->add_option("--bins", f.bins, "Difficulty bins (default 4)");
  commands.push_back({pb, "eval processbench", cmd_eval_processbench});

  auto* rep = eval->add_subcommand("report", "Accuracy and FLOPs per budget from selection outputs");
  rep->add_option("--selections", f.selections, "Selection JSONL files")->required();
  commands.push_back({rep, "eval report", cmd_eval_report});

  auto* pr = eval->add_subcommand("pass-rate", "pass@1 per problem, with difficulty bins");
  pr->add_option("--problems", f.problems, "Problem JSONL with gold answers")->required();
  pr->add_option("--samples", f.samples, "Samples per problem (default 32)");
  pr->add_option("--bins", f.bins, "Difficulty bins (default 4)");
  commands.push_back({pr, "eval pass-rate", cmd_eval_pass_rate});

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      app.exit(e, out, err);
      return kOk;
    }
    err << "prmkit: error: " << e.what() << "\n";
    return kUsage;
  }

  const Command* chosen = nullptr;
  for (const auto& c : commands) {
    if (c.app->parsed()) chosen = &c;
  }
  if (!chosen) {
    err << "prmkit: error: no command given\n";
    return kUsage;
  }

  try {
    Config cfg = effective_config(g, f);
    if (sample_max_tokens) cfg.datagen.max_tokens = *sample_max_tokens;
    if (sample_temperature) cfg.datagen.temperature = *sample_temperature;
    if (filter_max_tokens) cfg.datagen.filter_max_tokens = *filter_max_tokens;
    cfg.validate();
    Context ctx(std::move(cfg), g, chosen->name, out, err);
    chosen->handler(ctx, f);
    ctx.write_manifest();
    return kOk;
  } catch (const std::exception& e) {
    err << "prmkit: error: " << e.what() << "\n";
    return exit_code_for(e);
  }
}

}  // namespace prmkit::cli
