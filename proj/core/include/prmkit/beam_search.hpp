#pragma once

// Verifier-guided step-level beam search: N beams in total, M sampled next
// steps per active beam, every extended prefix scored by the verifier.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "prmkit/selection.hpp"

namespace prmkit {

struct BeamConfig {
  int beams = 4;
  int candidates_per_beam = 4;
  int max_steps = 20;
  double temperature = 0.6;
  std::string step_delimiter = "\n\n";
  // Weighted vote over terminated beams instead of taking the single best.
  bool vote_over_terminated = false;

  void validate() const;
};

struct BeamNode {
  std::size_t id = 0;  // creation order; 0 is the empty root
  std::optional<std::size_t> parent;
  std::vector<std::string> steps;
  double score = 0.0;
  bool terminated = false;
  int depth = 0;
};

struct BeamSearchResult {
  SelectionResult selection;
  BeamNode best;
  std::vector<BeamNode> nodes;                     // indexed by id
  std::vector<std::vector<std::size_t>> retained;  // node ids kept after each round
};

// Generator prompt for a partial solution: rendered problem, then the steps
// so far each followed by the delimiter.
std::string beam_prompt(const GeneratorConfig& generator, std::string_view problem,
                        std::span<const std::string> steps, std::string_view delimiter);

// Retention ranks (score desc, creation id asc) over new extensions plus
// previously terminated nodes. Terminated nodes keep their score and
// are never extended.
BeamSearchResult beam_search(Backend& backend, const Problem& problem, const GeneratorConfig& generator,
                             const VerifyFn& verify, const BeamConfig& config, const FlopsModel& flops = {},
                             const AnswerCanonicalizer& canonicalize = default_canonicalizer());

}  // namespace prmkit
