#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "synthner/corpus.hpp"
#include "synthner/stats.hpp"

namespace synthner {

// --- token F1 ------------------------------------------------------------------------------

struct ClassScore {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t support = 0;
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
};

struct F1Report {
  double micro_precision = 0.0;
  double micro_recall = 0.0;
  double micro_f1 = 0.0;
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::map<std::string, ClassScore> per_class;
};

/// Precision, recall and F1 from counts; each is 0 when its denominator is 0.
ClassScore score_counts(std::size_t tp, std::size_t fp, std::size_t fn);

/// Token-level scores with the B-/I- prefix ignored. A token is a true positive for class c
/// when gold and prediction are both c; "O" is never positive. Micro scores sum counts over
/// all classes. Documents are matched by id; a missing id or a token mismatch throws
/// ValidationError naming the document.
F1Report token_f1(const Corpus& gold, const Corpus& predicted);

// --- diversity & document statistics -------------------------------------------------------

struct DocStats {
  MeanStd length;
  /// Tokens with a label other than "O", per document.
  MeanStd labels;
};

/// Population statistics; throws ValidationError on an empty corpus.
DocStats document_stats(const Corpus& corpus);

/// Unique stems over total tokens. Throws ValidationError when the corpus has no tokens.
double lexical_diversity(const Corpus& corpus, Language language);

struct DiversityReport {
  double lexical_diversity = 0.0;
  DocStats stats;
};

DiversityReport diversity_report(const Corpus& corpus, Language language);

// --- n-gram recall -------------------------------------------------------------------------

enum class NGramUnit { word, character };

/// Unit of the n-gram windows: whole tokens, or each token cut into pieces of k code points
/// (a stand-in for subword tokenizers).
struct Granularity {
  NGramUnit unit = NGramUnit::word;
  std::size_t k = 0;

  bool operator==(const Granularity&) const = default;
};

Granularity parse_granularity(std::string_view s);
std::string to_string(const Granularity& g);

/// N-grams as unit strings joined by U+001F.
using NGramSet = std::unordered_set<std::string>;

/// Unique within-document windows of n units; windows never cross documents.
NGramSet ngram_set(const Corpus& corpus, std::size_t n, Granularity granularity = {});

/// Windows of n units that share at least one position with a non-"O" token.
NGramSet sensitive_ngram_set(const Corpus& corpus, std::size_t n, Granularity granularity = {});

/// Window count before deduplication: sum over documents of max(0, len - n + 1).
std::size_t window_count(const Corpus& corpus, std::size_t n, Granularity granularity = {});

struct NGramRecallReport {
  std::size_t n = 0;
  double general_recall = 0.0;
  /// Empty when the reference has no n-gram overlapping a labeled token.
  std::optional<double> sensitive_recall;
  std::size_t reference = 0;            // |R|
  std::size_t sensitive_reference = 0;  // |R*|
  std::size_t candidate = 0;            // |S|
  std::size_t shared = 0;               // |R n S|
  std::size_t sensitive_shared = 0;     // |R* n S|
};

/// |R n S| / |R| with R from the reference and S from the candidate. Throws ValidationError
/// when |R| = 0.
NGramRecallReport ngram_recall(const Corpus& reference, const Corpus& candidate, std::size_t n,
                               Granularity granularity = {});

/// |R* n S| / |R*| where R* holds the reference n-grams overlapping labeled tokens.
/// sensitive_recall stays empty when |R*| = 0.
NGramRecallReport sensitive_ngram_recall(const Corpus& reference, const Corpus& candidate,
                                         std::size_t n, Granularity granularity = {});

/// Both parts in one report, sharing the candidate set.
NGramRecallReport ngram_privacy(const Corpus& reference, const Corpus& candidate, std::size_t n,
                                Granularity granularity = {});

// --- serialization -------------------------------------------------------------------------

nlohmann::json to_json(const F1Report& report, const std::vector<std::string>& corpus_ids);
/// Two records: "ngram_recall" and "sensitive_ngram_recall" (value null when |R*| = 0).
nlohmann::json to_json(const NGramRecallReport& report, const std::vector<std::string>& corpus_ids);
nlohmann::json to_json(const DiversityReport& report, const std::vector<std::string>& corpus_ids);

std::string format_table(const F1Report& report);
std::string format_table(const std::vector<NGramRecallReport>& reports);
std::string format_table(const DiversityReport& report);

/// "0.912 ± 0.004".
std::string format_mean_std(const MeanStd& v, int decimals = 3);

}  // namespace synthner
