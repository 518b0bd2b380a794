#include "prmkit/io.hpp"

#include "prmkit/errors.hpp"

namespace prmkit::io {
namespace {

using nlohmann::json;

const json& require(const json& row, const char* field) {
  if (!row.is_object()) throw InvalidArgument("row is not a JSON object");
  auto it = row.find(field);
  if (it == row.end() || it->is_null()) throw InvalidArgument(std::string("missing field '") + field + "'");
  return *it;
}

std::string string_field(const json& row, const char* field) {
  const json& v = require(row, field);
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer()) return std::to_string(v.get<long long>());
  throw InvalidArgument(std::string("field '") + field + "' must be a string");
}

std::optional<std::string> optional_string(const json& row, const char* field) {
  auto it = row.find(field);
  if (it == row.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) throw InvalidArgument(std::string("field '") + field + "' must be a string");
  return it->get<std::string>();
}

std::optional<bool> optional_bool(const json& row, const char* field) {
  auto it = row.find(field);
  if (it == row.end() || it->is_null()) return std::nullopt;
  if (!it->is_boolean()) throw InvalidArgument(std::string("field '") + field + "' must be a boolean");
  return it->get<bool>();
}

std::vector<std::string> string_array(const json& row, const char* field) {
  const json& v = require(row, field);
  if (!v.is_array()) throw InvalidArgument(std::string("field '") + field + "' must be an array");
  std::vector<std::string> out;
  for (const auto& e : v) {
    if (!e.is_string()) throw InvalidArgument(std::string("field '") + field + "' must hold strings");
    out.push_back(e.get<std::string>());
  }
  return out;
}

StepLabel label_from_json(const json& v, const LabelMapping& mapping) {
  if (v.is_number_integer()) return mapping.map(v.get<int>());
  if (v.is_string()) {
    if (auto l = parse_step_label(v.get<std::string>())) return *l;
  }
  throw InvalidArgument("step label must be -1, 0, 1, \"correct\" or \"incorrect\"");
}

std::vector<StepLabel> labels_field(const json& row, const char* field, const LabelMapping& mapping = {}) {
  auto it = row.find(field);
  if (it == row.end() || it->is_null()) return {};
  if (!it->is_array()) throw InvalidArgument(std::string("field '") + field + "' must be an array");
  std::vector<StepLabel> out;
  for (const auto& e : *it) out.push_back(label_from_json(e, mapping));
  return out;
}

json labels_to_json(const std::vector<StepLabel>& labels) {
  json out = json::array();
  for (auto l : labels) out.push_back(std::string(to_string(l)));
  return out;
}

std::int64_t int_field(const json& row, const char* field, std::int64_t fallback) {
  auto it = row.find(field);
  if (it == row.end() || it->is_null()) return fallback;
  if (!it->is_number_integer()) throw InvalidArgument(std::string("field '") + field + "' must be an integer");
  return it->get<std::int64_t>();
}

}  // namespace

LabeledPrefix prefix_from_json(const json& row, const LabelMapping& mapping) {
  LabeledPrefix p;
  p.id = string_field(row, "id");
  p.problem = string_field(row, "problem");
  p.steps = string_array(row, "steps");
  p.gold_step_labels = labels_field(row, "step_labels", mapping);
  p.final_answer = optional_string(row, "final_answer");
  p.final_answer_correct = optional_bool(row, "answer_correct");
  p.validate();
  return p;
}

json to_json(const ChainRecord& c) {
  json row;
  row["prefix_id"] = c.prefix_id;
  row["sample"] = c.sample;
  row["cot"] = c.cot;
  row["verdicts"] = labels_to_json(c.verdicts);
  row["final_verdict"] = c.final_verdict ? json(std::string(to_string(*c.final_verdict))) : json(nullptr);
  row["status"] = std::string(to_string(c.status));
  row["token_count"] = c.token_count;
  if (c.filter) {
    row["filter_decision"] = c.filter->keep ? "keep" : "reject";
    row["reject_reason"] = c.filter->reason ? json(std::string(to_string(*c.filter->reason))) : json(nullptr);
    row["reject_detail"] = c.filter->detail;
  } else {
    row["filter_decision"] = nullptr;
    row["reject_reason"] = nullptr;
    row["reject_detail"] = nullptr;
  }
  return row;
}

ChainRecord chain_from_json(const json& row) {
  ChainRecord c;
  c.prefix_id = string_field(row, "prefix_id");
  c.sample = static_cast<int>(int_field(row, "sample", 0));
  c.cot = string_field(row, "cot");
  c.verdicts = labels_field(row, "verdicts");
  if (auto f = optional_string(row, "final_verdict")) {
    if (*f == "yes") c.final_verdict = Verdict::yes;
    else if (*f == "no") c.final_verdict = Verdict::no;
    else throw InvalidArgument("final_verdict must be yes, no or null");
  }
  if (auto s = optional_string(row, "status")) {
    auto kind = parse_chain_kind(*s);
    if (!kind) throw InvalidArgument("unknown chain status '" + *s + "'");
    c.status = *kind;
  }
  c.token_count = int_field(row, "token_count", 0);
  if (auto d = optional_string(row, "filter_decision")) {
    FilterDecision f;
    f.keep = *d == "keep";
    if (!f.keep && *d != "reject") throw InvalidArgument("filter_decision must be keep or reject");
    if (auto r = optional_string(row, "reject_reason")) f.reason = parse_reject_reason(*r);
    f.detail = optional_string(row, "reject_detail").value_or("");
    c.filter = f;
  }
  return c;
}

json to_json(const TrainingRecord& r) {
  json row;
  row["prefix_id"] = r.prefix_id;
  row["input_text"] = r.input_text;
  row["target_text"] = r.target_text;
  row["step_labels"] = labels_to_json(r.step_labels);
  row["token_count"] = r.token_count;
  if (r.problem) row["problem"] = *r.problem;
  if (r.solution_correct) row["solution_correct"] = *r.solution_correct;
  return row;
}

TrainingRecord record_from_json(const json& row) {
  TrainingRecord r;
  r.prefix_id = string_field(row, "prefix_id");
  r.input_text = optional_string(row, "input_text").value_or("");
  r.target_text = string_field(row, "target_text");
  r.step_labels = labels_field(row, "step_labels");
  r.token_count = int_field(row, "token_count", 0);
  r.problem = optional_string(row, "problem");
  r.solution_correct = optional_bool(row, "solution_correct");
  return r;
}

json to_json(const DataStats& s) {
  auto mam = [](const MinAvgMax<std::int64_t>& m) { return json{{"min", m.min}, {"avg", m.avg}, {"max", m.max}}; };
  return {
      {"records", s.n_records},
      {"correct_solutions", s.n_correct_solutions},
      {"incorrect_solutions", s.n_incorrect_solutions},
      {"correct_step_labels", s.n_correct_steps},
      {"incorrect_step_labels", s.n_incorrect_steps},
      {"unique_questions", s.unique_questions},
      {"steps_per_prefix", mam(s.steps_per_prefix)},
      {"chain_tokens", mam(s.chain_tokens)},
  };
}

StepwiseSolution solution_from_json(const json& row) {
  StepwiseSolution s;
  s.id = string_field(row, "id");
  s.problem = string_field(row, "problem");
  s.steps = string_array(row, "steps");
  s.gold_step_labels = labels_field(row, "step_labels");
  s.gold_answer = optional_string(row, "gold_answer");
  if (s.steps.empty()) throw InvalidArgument("solution " + s.id + ": no steps");
  return s;
}

Problem problem_from_json(const json& row) {
  Problem p;
  p.id = string_field(row, "id");
  p.text = row.contains("problem") ? string_field(row, "problem") : string_field(row, "text");
  p.gold_answer = optional_string(row, "gold_answer");
  if (!p.gold_answer) p.gold_answer = optional_string(row, "answer");
  return p;
}

ProcessBenchItem processbench_from_json(const json& row) {
  ProcessBenchItem item;
  item.solution.id = string_field(row, "id");
  item.solution.problem = string_field(row, "problem");
  item.solution.steps = string_array(row, "steps");
  require(row, "first_error_index");
  item.first_error_index = static_cast<int>(int_field(row, "first_error_index", -1));
  return item;
}

Prediction prediction_from_json(const json& row, double threshold) {
  if (row.contains("error") && !row["error"].is_null()) return Prediction::invalid;
  if (auto p = optional_string(row, "predicted")) {
    auto pred = parse_prediction(*p);
    if (!pred) throw InvalidArgument("unknown prediction '" + *p + "'");
    return *pred;
  }
  if (auto j = optional_string(row, "judgment")) {
    if (*j == "yes") return Prediction::correct;
    if (*j == "no") return Prediction::incorrect;
    if (*j == "invalid") return Prediction::invalid;
    throw InvalidArgument("judgment must be yes, no or invalid");
  }
  auto it = row.find("value");
  if (it != row.end() && it->is_number()) {
    return it->get<double>() >= threshold ? Prediction::correct : Prediction::incorrect;
  }
  if (it != row.end() && it->is_null()) return Prediction::invalid;
  throw InvalidArgument("prediction row needs 'predicted', 'judgment' or 'value'");
}

json to_json(const VerificationChain& c) {
  json verdicts = json::array();
  for (const auto& v : c.verdicts) verdicts.push_back(std::string(to_string(v.label)));
  return {
      {"text", c.raw_text},
      {"verdicts", verdicts},
      {"final_verdict", c.final_verdict ? json(std::string(to_string(*c.final_verdict))) : json(nullptr)},
      {"status", std::string(to_string(c.status.kind))},
      {"token_count", c.token_count},
  };
}

json to_json(const VerifierScore& s) {
  json chains = json::array();
  for (const auto& c : s.chains) chains.push_back(to_json(c));
  return {
      {"value", s.value},
      {"method", std::string(to_string(s.method))},
      {"chains_used", s.chains_used},
      {"rounds_used", s.rounds_used},
      {"tokens_spent", s.tokens_spent},
      {"chains", chains},
  };
}

json to_json(const SelectionResult& r, bool include_solution) {
  json groups = json::array();
  for (const auto& g : r.group_scores) {
    groups.push_back({{"answer", g.answer}, {"weight", g.weight}, {"count", g.count}});
  }
  json row{
      {"chosen_answer", r.chosen_answer},
      {"strategy", std::string(to_string(r.strategy))},
      {"group_scores", groups},
      {"generator_tokens", r.generator_tokens},
      {"verifier_tokens", r.verifier_tokens},
      {"tokens_spent", r.tokens_spent},
      {"flops_estimate", r.flops_estimate},
      {"dropped_samples", r.dropped_samples},
      {"drop_reasons", r.drop_reasons},
  };
  if (include_solution && r.chosen_solution) row["chosen_steps"] = r.chosen_solution->steps;
  return row;
}

json to_json(const TraceRecord& t) {
  return {
      {"kind", t.kind},
      {"node", t.node},
      {"parent", t.parent ? json(*t.parent) : json(nullptr)},
      {"depth", t.depth},
      {"prompt_hash", t.prompt_hash},
      {"score", t.score ? json(*t.score) : json(nullptr)},
      {"answer", t.answer},
      {"decision", t.decision},
  };
}

}  // namespace prmkit::io
