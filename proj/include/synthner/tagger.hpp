#pragma once

#include <cstdint>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "synthner/corpus.hpp"

namespace synthner {

inline constexpr std::string_view kFeatureTemplateVersion = "synthner-features-1";
/// Previous-label value before the first token of a sequence.
inline constexpr std::string_view kStartLabel = "<s>";

/// Features of tokens[index]: bias, word, lowercase word, shape, 1-3 character prefixes and
/// suffixes, neighbouring words (BOS/EOS sentinels at the edges) and the previous label.
std::vector<std::string> featurize(std::span<const std::string> tokens, std::size_t index,
                                   std::string_view previous_label = kStartLabel);

struct TrainingMeta {
  std::size_t epochs = 6;
  std::size_t chunk_words = 128;
  std::uint64_t seed = 0;
  /// No gradient meaning for a perceptron; the unit of remote batching.
  std::size_t batch_size = 16;

  bool operator==(const TrainingMeta&) const = default;
};

/// Linear BIO tagger: one weight per (feature, label).
class TaggerModel {
 public:
  TaggerModel() = default;
  /// Labels O, B-c and I-c for every class, kept in lexicographic order.
  explicit TaggerModel(const std::set<std::string>& classes, TrainingMeta meta = {});

  const std::vector<std::string>& labels() const noexcept { return labels_; }
  std::set<std::string> classes() const;
  const TrainingMeta& meta() const noexcept { return meta_; }
  std::string_view feature_template_version() const noexcept { return kFeatureTemplateVersion; }

  double weight(std::string_view feature, std::string_view label) const;
  void set_weight(std::string_view feature, std::string_view label, double value);
  /// Features with at least one non-zero weight.
  std::size_t feature_count() const;
  /// Every (feature, label, weight) triple with a non-zero weight.
  std::vector<std::tuple<std::string, std::string, double>> nonzero_weights() const;

  nlohmann::json to_json() const;
  static TaggerModel from_json(const nlohmann::json& j);

  bool operator==(const TaggerModel& other) const;

 private:
  friend class TaggerEngine;
  friend TaggerModel train_tagger(const Corpus&, std::size_t, std::size_t, std::uint64_t);

  std::uint32_t intern(const std::string& feature);
  std::size_t label_index(std::string_view label) const;

  std::vector<std::string> labels_;
  TrainingMeta meta_;
  std::unordered_map<std::string, std::uint32_t> feature_ids_;
  std::vector<std::string> features_;
  /// Row-major [feature][label].
  std::vector<double> weights_;
};

/// Averaged perceptron over chunks of at most `chunk_words` tokens with greedy decoding.
/// The document order is reshuffled every epoch from `seed`. Throws ValidationError for an
/// empty corpus or one without entity labels.
TaggerModel train_tagger(const Corpus& corpus, std::size_t epochs = 6, std::size_t chunk_words = 128,
                         std::uint64_t seed = 0);

/// Greedy left-to-right argmax. "I-X" is only allowed after "B-X"/"I-X"; ties go to the
/// lexicographically smaller label, and "O" carries a fixed tiny prior so an all-zero model
/// tags everything "O".
std::vector<std::string> decode(const TaggerModel& tagger, std::span<const std::string> tokens);

/// Decodes every document chunk by chunk (chunk_words from the model unless given) and
/// repairs "I-" openings at chunk seams.
Corpus annotate_corpus(const TaggerModel& tagger, const Corpus& corpus, std::size_t chunk_words = 0);

}  // namespace synthner
