#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "synthner/corpus.hpp"

namespace synthner {

/// Word -> probability; std::map keeps iteration lexicographic.
using Distribution = std::map<std::string, double>;

using WordId = std::uint32_t;

/// Absolute-discount backoff n-gram model over whitespace words.
///
/// Counts are kept for every context length 0 .. order-1 (documents are padded with
/// order-1 BOS markers and closed with EOS). The probability of w after a context is read
/// from the longest suffix of the context seen in training:
///
///   P_c(w) = (n(c,w) - D) / n(c) + (D * types(c) / n(c)) * P_c'(w)
///
/// where c' drops the oldest word of c. The empty context is the maximum-likelihood unigram,
/// which gives every vocabulary word positive mass; a model with no counts is uniform.
class NGramLM {
 public:
  static constexpr std::string_view kBos = "<s>";
  static constexpr std::string_view kEos = "</s>";

  struct Continuations {
    std::uint64_t total = 0;
    /// Sorted by word id.
    std::vector<std::pair<WordId, std::uint64_t>> next;

    bool operator==(const Continuations&) const = default;
  };

  /// Probability of w = sparse(w) + base_weight * base(w), where base is the unigram.
  struct Mixture {
    std::vector<std::pair<WordId, double>> sparse;
    double base_weight = 0.0;
  };

  NGramLM() = default;

  /// Untrained model: uniform over `words` plus EOS.
  static NGramLM uniform(std::span<const std::string> words, std::size_t order = 2,
                         double discount = 0.1);

  std::size_t order() const noexcept { return order_; }
  double discount() const noexcept { return discount_; }
  bool trained() const noexcept { return trained_; }

  /// Every symbol including BOS and EOS, sorted; a symbol's id is its index.
  const std::vector<std::string>& symbols() const noexcept { return symbols_; }
  std::optional<WordId> id_of(std::string_view word) const;
  WordId bos() const noexcept { return bos_; }
  WordId eos() const noexcept { return eos_; }
  /// Words that can be predicted (everything but BOS).
  std::size_t vocabulary_size() const noexcept { return symbols_.size() - 1; }

  /// Continuations of an exact context (ids, oldest first); nullptr when unseen.
  const Continuations* find(std::span<const WordId> context) const;
  /// Count of `next` after `context` (words, BOS allowed); 0 when unseen.
  std::uint64_t count(std::span<const std::string> context, std::string_view next) const;
  std::size_t context_count() const;

  /// The last order-1 symbols of a document prefix, left-padded with BOS. Unknown words
  /// map to an id that matches no stored context.
  std::vector<WordId> encode_context(std::span<const std::string> history) const;
  Mixture mixture(std::span<const WordId> context) const;
  double probability(std::span<const WordId> context, WordId word) const;

  /// Base (unigram or uniform) probability of each symbol; 0 for BOS.
  const std::vector<double>& base() const noexcept { return base_; }
  /// Predicted symbols by descending base probability, ties by id.
  const std::vector<WordId>& base_order() const noexcept { return base_order_; }

  nlohmann::json to_json() const;
  static NGramLM from_json(const nlohmann::json& j);

  bool operator==(const NGramLM& other) const;

 private:
  struct KeyHash {
    std::size_t operator()(const std::vector<WordId>& k) const noexcept;
  };
  using Level = std::unordered_map<std::vector<WordId>, Continuations, KeyHash>;

  friend NGramLM train_lm(const Corpus& corpus, std::size_t order, double discount);

  void init_symbols(std::vector<std::string> words);
  void finish();

  std::size_t order_ = 2;
  double discount_ = 0.1;
  bool trained_ = false;
  std::vector<std::string> symbols_;
  std::unordered_map<std::string, WordId> ids_;
  WordId bos_ = 0;
  WordId eos_ = 0;
  std::vector<Level> levels_;
  std::vector<double> base_;
  std::vector<WordId> base_order_;
};

/// Counts every n-gram of the corpus's whitespace words. Throws ValidationError when the
/// corpus is empty, order is 0, discount is outside (0,1), or a word collides with BOS/EOS.
NGramLM train_lm(const Corpus& corpus, std::size_t order = 3, double discount = 0.1);

/// Full next-word distribution after a document prefix (entries with zero mass omitted).
Distribution next_token_distribution(const NGramLM& lm, std::span<const std::string> context);

/// Per-word log-likelihood perplexity of the corpus (EOS included).
double perplexity(const NGramLM& lm, const Corpus& corpus);

}  // namespace synthner
