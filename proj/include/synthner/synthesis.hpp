#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "synthner/corpus.hpp"
#include "synthner/lm.hpp"
#include "synthner/rng.hpp"

namespace synthner {

/// Sampling knobs for synthesis.
struct GenerationConfig {
  double top_p = 0.95;
  double temperature = 1.0;
  std::size_t min_tokens = 10;
  /// Normally set from the validation slice with resolve_max_tokens().
  std::size_t max_tokens = 50;
  std::size_t samples_per_prompt = 80;

  /// Throws ValidationError unless 0 < top_p <= 1, temperature > 0, min <= max and
  /// samples_per_prompt >= 1.
  void validate() const;

  bool operator==(const GenerationConfig&) const = default;
};

/// max(50, longest document in words). Throws ValidationError on an empty corpus.
std::size_t resolve_max_tokens(const Corpus& validation);

/// Draws next words from an NGramLM: EOS removal (when suppressed), temperature, nucleus
/// cut and a categorical draw, without materializing the full vocabulary distribution.
/// Holds scratch state, so use one instance per thread.
class Sampler {
 public:
  Sampler(const NGramLM& lm, double temperature, double top_p);

  /// Kept words in nucleus order with normalized probabilities.
  std::vector<std::pair<WordId, double>> filtered(std::span<const WordId> context, bool suppress_eos);
  WordId draw(std::span<const WordId> context, bool suppress_eos, Rng& rng);

 private:
  struct Item {
    WordId id;
    double weight;
  };
  double powered(double p) const;
  double base_power_sum();
  /// Unnormalized kept weights in nucleus order; returns their sum.
  double collect(std::span<const WordId> context, bool suppress_eos);

  const NGramLM* lm_;
  double exponent_;
  double top_p_;
  double base_power_sum_ = -1.0;
  std::vector<char> in_sparse_;
  std::vector<Item> kept_;
  std::vector<Item> items_;
};

/// The distribution the sampler draws from after `history`, keyed by word.
Distribution step_distribution(const NGramLM& lm, std::span<const std::string> history,
                               const GenerationConfig& cfg, bool suppress_eos);

/// Prompt words followed by sampled words; EOS is suppressed until min_tokens words exist
/// and generation stops at EOS or max_tokens. Throws ValidationError if the prompt alone
/// exceeds max_tokens.
std::vector<std::string> generate_document(const NGramLM& lm, const Prompt& prompt,
                                           const GenerationConfig& cfg, Rng& rng);

struct SynthesisOptions {
  Language language = Language::other;
  std::string id_prefix = "syn";
  std::size_t threads = 1;
};

/// Stream seed of one (prompt, sample) pair.
std::uint64_t sample_seed(std::uint64_t seed, std::size_t prompt_index, std::size_t sample_index);
std::string synthetic_id(std::string_view prefix, std::size_t prompt_index, std::size_t sample_index);

/// samples_per_prompt documents per prompt, ordered by (prompt, sample), every label "O".
/// Each sample has its own derived stream, so the result does not depend on `threads`.
Corpus synthesize_corpus(const NGramLM& lm, std::span<const Prompt> prompts,
                         const GenerationConfig& cfg, std::uint64_t seed,
                         const SynthesisOptions& options = {});

/// Builds an all-"O" corpus from generated texts, re-tokenized on whitespace.
Corpus corpus_from_texts(std::span<const std::string> texts, std::size_t prompts,
                         std::size_t samples_per_prompt, const SynthesisOptions& options = {});

}  // namespace synthner
