#pragma once

#include <cstddef>
#include <cstdint>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace synthner {

enum class Language { sv, es, other };

std::string_view to_string(Language lang);
/// Accepts "sv", "es", "other"; throws ValidationError otherwise.
Language parse_language(std::string_view s);

inline constexpr std::string_view kOutside = "O";

/// Pre-tokenized text with one BIO label per token.
struct Document {
  std::string id;
  std::vector<std::string> tokens;
  std::vector<std::string> labels;
  Language language = Language::other;

  bool operator==(const Document&) const = default;
};

// --- BIO helpers -------------------------------------------------------------------------

/// "O", "B-<class>" or "I-<class>" with a non-empty class.
bool is_well_formed_label(std::string_view label);
/// Class part of a label; empty for "O".
std::string_view label_class(std::string_view label);
bool is_begin(std::string_view label);
bool is_inside(std::string_view label);

/// Every label well formed and no "I-X" after "O", sequence start, or a different class.
bool is_valid_bio(std::span<const std::string> labels);

struct BioRepair {
  std::size_t position;
  std::string original;
  std::string repaired;
};

/// Rewrites every illegal "I-X" opening as "B-X" in place and reports each rewrite.
/// Labels must already be well formed.
std::vector<BioRepair> repair_bio(std::vector<std::string>& labels);

/// Ordered documents with unique ids, valid BIO labels and a label set covering every class.
class Corpus {
 public:
  Corpus() = default;
  /// Infers the label set from the data. Throws ValidationError on any broken invariant.
  explicit Corpus(std::vector<Document> documents);
  /// Uses `label_set`, which must contain every class appearing in the labels.
  Corpus(std::vector<Document> documents, std::set<std::string> label_set);

  const std::vector<Document>& documents() const noexcept { return documents_; }
  const std::set<std::string>& label_set() const noexcept { return label_set_; }
  std::size_t size() const noexcept { return documents_.size(); }
  bool empty() const noexcept { return documents_.empty(); }
  const Document& operator[](std::size_t i) const { return documents_[i]; }

  /// Document with the given id; throws ValidationError if absent.
  const Document& at(std::string_view id) const;
  bool contains(std::string_view id) const;

  /// Documents with the given ids, in the order given.
  Corpus select(std::span<const std::string> ids) const;

  std::vector<std::string> ids() const;
  std::size_t token_count() const;

  bool operator==(const Corpus& other) const {
    return documents_ == other.documents_ && label_set_ == other.label_set_;
  }

 private:
  void validate() const;
  void index();

  std::vector<Document> documents_;
  std::set<std::string> label_set_;
  std::unordered_map<std::string, std::size_t> by_id_;
};

// --- folds -------------------------------------------------------------------------------

struct Fold {
  std::vector<std::string> test_ids;
  std::vector<std::string> validation_ids;
  /// In shuffled order; the validation slice follows it in the non-test ordering.
  std::vector<std::string> train_pool_ids;

  bool operator==(const Fold&) const = default;
};

struct FoldPlan {
  std::size_t k = 5;
  double val_fraction = 0.05;
  std::uint64_t seed = 0;
  std::vector<Fold> folds;

  bool operator==(const FoldPlan&) const = default;
};

/// Document-level k-fold split. Fold i tests on the i-th 1/k share of a seeded shuffle;
/// its validation slice is the last ceil(val_fraction * remainder) (at least one) documents
/// of the shuffled remainder, and the rest is the train pool.
FoldPlan split_folds(const Corpus& corpus, std::size_t k = 5, double val_fraction = 0.05,
                     std::uint64_t seed = 0);

/// Largest training fraction; the validation slice takes the rest of the non-test share.
inline constexpr double kMaxTrainingFraction = 0.95;

/// round(fraction * non-test count) documents taken as a prefix of a seeded permutation of
/// the train pool, so selections nest as the fraction grows. Fraction must be in (0, 0.95].
Corpus subset_training(const Corpus& corpus, const Fold& fold, double fraction, std::uint64_t seed);
/// Ids selected by subset_training, in selection order.
std::vector<std::string> subset_training_ids(const Fold& fold, double fraction, std::uint64_t seed);

// --- prompts & chunks --------------------------------------------------------------------

struct Prompt {
  std::string source_doc_id;
  std::vector<std::string> words;

  bool operator==(const Prompt&) const = default;
};

/// Whitespace words of a document's detokenized text.
std::vector<std::string> document_words(const Document& doc);

/// Leading `n_words` words of every document, in corpus order.
std::vector<Prompt> extract_prompts(const Corpus& corpus, std::size_t n_words = 3);

struct Chunk {
  std::span<const std::string> tokens;
  std::span<const std::string> labels;
};

/// Consecutive slices of at most `max_words` tokens; views into `doc`.
std::vector<Chunk> chunk_document(const Document& doc, std::size_t max_words = 128);

}  // namespace synthner
