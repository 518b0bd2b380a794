#pragma once

// Synthetic verification chains with known structure, for filter and
// round-trip checks. The generator records what it wrote so tests never
// need to parse to know the truth.

#include <random>
#include <string>
#include <vector>

#include "oracles.hpp"

namespace prmkit::synth {

struct Chain {
  oracle::SynthChain truth;
  std::string text;
  bool has_final = false;
  bool final_yes = false;
  bool trailing = false;
};

inline const std::vector<std::string> kCorrectSpellings{"correct", "Correct", " correct ", "\\text{correct}"};
inline const std::vector<std::string> kIncorrectSpellings{"incorrect", "INCORRECT", "\\text{incorrect}"};
inline const std::vector<std::string> kFiller{
    "Let me check the arithmetic here.", "The substitution is valid.", "This follows from the previous line.",
    "Compute 3 * 4 = 12, which matches.", "We need x > 0, and that holds.", "The expression $x^{2}$ simplifies."};

// One step review per label, numbered "Step k:" on its own line. When
// misnumber is set, one heading is shifted away from its position.
inline Chain make_chain(std::mt19937_64& rng, const std::vector<bool>& labels, bool misnumber, std::int64_t tokens,
                        bool varied_spelling = true) {
  Chain c;
  c.truth.labels = labels;
  c.truth.misnumbered = misnumber && !labels.empty();
  c.truth.tokens = tokens;
  const std::size_t bad = labels.empty() ? 0 : rng() % labels.size();
  for (std::size_t i = 0; i < labels.size(); ++i) {
    int heading = static_cast<int>(i + 1);
    if (c.truth.misnumbered && i == bad) heading += 1 + static_cast<int>(rng() % 3);
    c.text += "Step " + std::to_string(heading) + ": " + kFiller[rng() % kFiller.size()] + "\n";
    const auto& forms = labels[i] ? kCorrectSpellings : kIncorrectSpellings;
    const std::string& form = varied_spelling ? forms[rng() % forms.size()] : forms[0];
    c.text += "\\boxed{" + form + "}\n\n";
  }
  if (rng() % 2 == 0) {
    c.has_final = true;
    c.final_yes = rng() % 2 == 0;
    c.text += "Is the solution correct? \\boxed{" + std::string(c.final_yes ? "yes" : "no") + "}";
  }
  if (rng() % 3 == 0) {
    c.trailing = true;
    c.text += "\nHope that helps! Let me know if you want more detail.";
  }
  return c;
}

inline std::vector<bool> random_labels(std::mt19937_64& rng, std::size_t n) {
  std::vector<bool> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = rng() % 4 != 0;
  return out;
}

// Gold labels that agree with the chain, differ in one place, or differ in length.
inline std::vector<bool> perturbed_gold(std::mt19937_64& rng, const std::vector<bool>& labels) {
  std::vector<bool> gold = labels;
  switch (rng() % 4) {
    case 0:
      if (!gold.empty()) gold[rng() % gold.size()].flip();
      break;
    case 1:
      if (rng() % 2 == 0 || gold.size() < 2) gold.push_back(rng() % 2 == 0);
      else gold.pop_back();
      break;
    default: break;
  }
  return gold;
}

}  // namespace prmkit::synth
