#include "synthner/corpus.hpp"

#include <algorithm>
#include <cmath>

#include "synthner/error.hpp"
#include "synthner/rng.hpp"
#include "synthner/text.hpp"

namespace synthner {

std::string_view to_string(Language lang) {
  switch (lang) {
    case Language::sv:
      return "sv";
    case Language::es:
      return "es";
    case Language::other:
      return "other";
  }
  return "other";
}

Language parse_language(std::string_view s) {
  if (s == "sv") return Language::sv;
  if (s == "es") return Language::es;
  if (s == "other") return Language::other;
  throw ValidationError("unknown language '" + std::string(s) + "'");
}

bool is_well_formed_label(std::string_view label) {
  if (label == kOutside) return true;
  return label.size() > 2 && (label[0] == 'B' || label[0] == 'I') && label[1] == '-';
}

std::string_view label_class(std::string_view label) {
  if (label.size() > 2 && label[1] == '-') return label.substr(2);
  return {};
}

bool is_begin(std::string_view label) { return label.size() > 2 && label[0] == 'B' && label[1] == '-'; }
bool is_inside(std::string_view label) { return label.size() > 2 && label[0] == 'I' && label[1] == '-'; }

bool is_valid_bio(std::span<const std::string> labels) {
  std::string_view prev = kOutside;
  for (const auto& l : labels) {
    if (!is_well_formed_label(l)) return false;
    if (is_inside(l) && (prev == kOutside || label_class(prev) != label_class(l))) return false;
    prev = l;
  }
  return true;
}

std::vector<BioRepair> repair_bio(std::vector<std::string>& labels) {
  std::vector<BioRepair> repairs;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (!is_inside(labels[i])) continue;
    const bool legal = i > 0 && labels[i - 1] != kOutside &&
                       label_class(labels[i - 1]) == label_class(labels[i]);
    if (legal) continue;
    std::string fixed = "B-" + std::string(label_class(labels[i]));
    repairs.push_back({i, labels[i], fixed});
    labels[i] = std::move(fixed);
  }
  return repairs;
}

// --- Corpus ------------------------------------------------------------------------------

Corpus::Corpus(std::vector<Document> documents) : documents_(std::move(documents)) {
  for (const auto& d : documents_) {
    for (const auto& l : d.labels) {
      auto c = label_class(l);
      if (!c.empty()) label_set_.emplace(c);
    }
  }
  validate();
  index();
}

Corpus::Corpus(std::vector<Document> documents, std::set<std::string> label_set)
    : documents_(std::move(documents)), label_set_(std::move(label_set)) {
  validate();
  index();
}

void Corpus::validate() const {
  for (const auto& d : documents_) {
    if (d.labels.size() != d.tokens.size()) {
      throw ValidationError("document '" + d.id + "': " + std::to_string(d.tokens.size()) +
                            " tokens but " + std::to_string(d.labels.size()) + " labels");
    }
    if (!is_valid_bio(d.labels)) {
      throw ValidationError("document '" + d.id + "': labels are not valid BIO");
    }
    for (const auto& l : d.labels) {
      auto c = label_class(l);
      if (!c.empty() && !label_set_.contains(std::string(c))) {
        throw ValidationError("document '" + d.id + "': class '" + std::string(c) +
                              "' missing from the label set");
      }
    }
  }
}

void Corpus::index() {
  by_id_.reserve(documents_.size());
  for (std::size_t i = 0; i < documents_.size(); ++i) {
    if (!by_id_.emplace(documents_[i].id, i).second) {
      throw ValidationError("duplicate document id '" + documents_[i].id + "'");
    }
  }
}

const Document& Corpus::at(std::string_view id) const {
  auto it = by_id_.find(std::string(id));
  if (it == by_id_.end()) throw ValidationError("no document with id '" + std::string(id) + "'");
  return documents_[it->second];
}

bool Corpus::contains(std::string_view id) const { return by_id_.contains(std::string(id)); }

Corpus Corpus::select(std::span<const std::string> ids) const {
  std::vector<Document> docs;
  docs.reserve(ids.size());
  for (const auto& id : ids) docs.push_back(at(id));
  return Corpus(std::move(docs), label_set_);
}

std::vector<std::string> Corpus::ids() const {
  std::vector<std::string> out;
  out.reserve(documents_.size());
  for (const auto& d : documents_) out.push_back(d.id);
  return out;
}

std::size_t Corpus::token_count() const {
  std::size_t n = 0;
  for (const auto& d : documents_) n += d.tokens.size();
  return n;
}

// --- folds -------------------------------------------------------------------------------

namespace {

// ceil() that ignores representation error just above an integer (0.05 * 80).
std::size_t ceil_count(double x) { return static_cast<std::size_t>(std::ceil(x - 1e-9)); }

}  // namespace

FoldPlan split_folds(const Corpus& corpus, std::size_t k, double val_fraction, std::uint64_t seed) {
  if (k < 2) throw ValidationError("fold count must be at least 2");
  if (corpus.size() < k) {
    throw ValidationError("corpus has " + std::to_string(corpus.size()) +
                          " documents, fewer than k = " + std::to_string(k));
  }
  if (!(val_fraction > 0.0 && val_fraction < 1.0)) {
    throw ValidationError("validation fraction must be in (0, 1)");
  }

  std::vector<std::string> order = corpus.ids();
  Rng rng(derive_seed(seed, {hash_string("split_folds")}));
  rng.shuffle(order);

  FoldPlan plan;
  plan.k = k;
  plan.val_fraction = val_fraction;
  plan.seed = seed;
  const std::size_t n = order.size();
  for (std::size_t f = 0; f < k; ++f) {
    const std::size_t lo = f * n / k;
    const std::size_t hi = (f + 1) * n / k;
    Fold fold;
    std::vector<std::string> rest;
    rest.reserve(n - (hi - lo));
    for (std::size_t i = 0; i < n; ++i) {
      if (i >= lo && i < hi) {
        fold.test_ids.push_back(order[i]);
      } else {
        rest.push_back(order[i]);
      }
    }
    std::size_t n_val = std::max<std::size_t>(1, ceil_count(val_fraction * static_cast<double>(rest.size())));
    n_val = std::min(n_val, rest.size());
    const std::size_t n_train = rest.size() - n_val;
    fold.train_pool_ids.assign(rest.begin(), rest.begin() + static_cast<std::ptrdiff_t>(n_train));
    fold.validation_ids.assign(rest.begin() + static_cast<std::ptrdiff_t>(n_train), rest.end());
    plan.folds.push_back(std::move(fold));
  }
  return plan;
}

std::vector<std::string> subset_training_ids(const Fold& fold, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0)) throw ValidationError("training fraction must be positive");
  if (fraction > kMaxTrainingFraction + 1e-12) {
    throw ValidationError("training fraction above 0.95 would consume the validation slice");
  }
  const std::size_t non_test = fold.train_pool_ids.size() + fold.validation_ids.size();
  auto n = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(non_test)));
  n = std::clamp<std::size_t>(n, 1, fold.train_pool_ids.size());

  std::vector<std::string> pool = fold.train_pool_ids;
  Rng rng(derive_seed(seed, {hash_string("subset_training")}));
  rng.shuffle(pool);
  pool.resize(n);
  return pool;
}

Corpus subset_training(const Corpus& corpus, const Fold& fold, double fraction, std::uint64_t seed) {
  if (fold.train_pool_ids.empty()) throw ValidationError("fold has an empty train pool");
  auto ids = subset_training_ids(fold, fraction, seed);
  return corpus.select(ids);
}

// --- prompts & chunks --------------------------------------------------------------------

std::vector<std::string> document_words(const Document& doc) {
  return text::split_words(text::join(doc.tokens, " "));
}

std::vector<Prompt> extract_prompts(const Corpus& corpus, std::size_t n_words) {
  if (n_words == 0) throw ValidationError("prompt length must be at least one word");
  std::vector<Prompt> prompts;
  prompts.reserve(corpus.size());
  for (const auto& d : corpus.documents()) {
    auto words = document_words(d);
    if (words.size() > n_words) words.resize(n_words);
    prompts.push_back({d.id, std::move(words)});
  }
  return prompts;
}

std::vector<Chunk> chunk_document(const Document& doc, std::size_t max_words) {
  if (max_words == 0) throw ValidationError("chunk size must be at least one word");
  std::vector<Chunk> chunks;
  const std::span<const std::string> tokens(doc.tokens);
  const std::span<const std::string> labels(doc.labels);
  for (std::size_t start = 0; start < tokens.size(); start += max_words) {
    const std::size_t len = std::min(max_words, tokens.size() - start);
    chunks.push_back({tokens.subspan(start, len),
                      labels.size() == tokens.size() ? labels.subspan(start, len)
                                                     : std::span<const std::string>{}});
  }
  return chunks;
}

}  // namespace synthner
