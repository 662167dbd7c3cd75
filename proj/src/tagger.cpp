#include "synthner/tagger.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "synthner/error.hpp"
#include "synthner/rng.hpp"
#include "synthner/text.hpp"

namespace synthner {

namespace {

constexpr double kOutsidePrior = 1e-9;
constexpr std::uint32_t kMissing = std::numeric_limits<std::uint32_t>::max();
constexpr std::string_view kFormat = "synthner-tagger";

void static_features(std::span<const std::string> tokens, std::size_t i, std::vector<std::string>& out) {
  const std::string& w = tokens[i];
  out.emplace_back("bias");
  out.push_back("w=" + w);
  out.push_back("lw=" + text::to_lower(w));
  out.push_back("shape=" + text::word_shape(w));
  for (std::size_t n = 1; n <= 3; ++n) {
    out.push_back("p" + std::to_string(n) + "=" + text::prefix(w, n));
    out.push_back("s" + std::to_string(n) + "=" + text::suffix(w, n));
  }
  out.push_back("pw=" + (i == 0 ? std::string("<s>") : text::to_lower(tokens[i - 1])));
  out.push_back("nw=" + (i + 1 == tokens.size() ? std::string("</s>") : text::to_lower(tokens[i + 1])));
}

std::string previous_label_feature(std::string_view label) { return "pl=" + std::string(label); }

}  // namespace

std::vector<std::string> featurize(std::span<const std::string> tokens, std::size_t index,
                                   std::string_view previous_label) {
  if (index >= tokens.size()) throw ValidationError("feature index out of range");
  std::vector<std::string> out;
  static_features(tokens, index, out);
  out.push_back(previous_label_feature(previous_label));
  return out;
}

// --- TaggerModel -------------------------------------------------------------------------

TaggerModel::TaggerModel(const std::set<std::string>& classes, TrainingMeta meta) : meta_(meta) {
  labels_.emplace_back(kOutside);
  for (const auto& c : classes) {
    labels_.push_back("B-" + c);
    labels_.push_back("I-" + c);
  }
  std::sort(labels_.begin(), labels_.end());
}

std::set<std::string> TaggerModel::classes() const {
  std::set<std::string> out;
  for (const auto& l : labels_) {
    auto c = label_class(l);
    if (!c.empty()) out.emplace(c);
  }
  return out;
}

std::size_t TaggerModel::label_index(std::string_view label) const {
  auto it = std::lower_bound(labels_.begin(), labels_.end(), label);
  if (it == labels_.end() || *it != label) {
    throw ValidationError("label '" + std::string(label) + "' is not in the tagger's label set");
  }
  return static_cast<std::size_t>(it - labels_.begin());
}

std::uint32_t TaggerModel::intern(const std::string& feature) {
  auto [it, inserted] = feature_ids_.emplace(feature, static_cast<std::uint32_t>(features_.size()));
  if (inserted) {
    features_.push_back(feature);
    weights_.resize(weights_.size() + labels_.size(), 0.0);
  }
  return it->second;
}

double TaggerModel::weight(std::string_view feature, std::string_view label) const {
  auto it = feature_ids_.find(std::string(feature));
  if (it == feature_ids_.end()) return 0.0;
  return weights_[it->second * labels_.size() + label_index(label)];
}

void TaggerModel::set_weight(std::string_view feature, std::string_view label, double value) {
  const std::size_t l = label_index(label);
  const std::uint32_t f = intern(std::string(feature));
  weights_[f * labels_.size() + l] = value;
}

std::size_t TaggerModel::feature_count() const {
  std::size_t n = 0;
  const std::size_t L = labels_.size();
  for (std::size_t f = 0; f < features_.size(); ++f) {
    for (std::size_t l = 0; l < L; ++l) {
      if (weights_[f * L + l] != 0.0) {
        ++n;
        break;
      }
    }
  }
  return n;
}

std::vector<std::tuple<std::string, std::string, double>> TaggerModel::nonzero_weights() const {
  std::vector<std::tuple<std::string, std::string, double>> out;
  const std::size_t L = labels_.size();
  for (std::size_t f = 0; f < features_.size(); ++f) {
    for (std::size_t l = 0; l < L; ++l) {
      if (weights_[f * L + l] != 0.0) out.emplace_back(features_[f], labels_[l], weights_[f * L + l]);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

nlohmann::json TaggerModel::to_json() const {
  nlohmann::json j;
  j["format"] = kFormat;
  j["feature_template_version"] = kFeatureTemplateVersion;
  j["labels"] = labels_;
  j["training_meta"] = {{"epochs", meta_.epochs},
                        {"chunk_words", meta_.chunk_words},
                        {"seed", meta_.seed},
                        {"batch_size", meta_.batch_size}};
  nlohmann::json weights = nlohmann::json::object();
  for (const auto& [f, l, w] : nonzero_weights()) weights[f][l] = w;
  j["weights"] = std::move(weights);
  return j;
}

TaggerModel TaggerModel::from_json(const nlohmann::json& j) {
  try {
    if (j.at("format").get<std::string>() != kFormat) throw ValidationError("not a tagger model file");
    if (j.at("feature_template_version").get<std::string>() != kFeatureTemplateVersion) {
      throw ValidationError("tagger was trained with a different feature template");
    }
    TaggerModel m;
    m.labels_ = j.at("labels").get<std::vector<std::string>>();
    if (!std::is_sorted(m.labels_.begin(), m.labels_.end()) ||
        std::find(m.labels_.begin(), m.labels_.end(), kOutside) == m.labels_.end()) {
      throw ValidationError("tagger label list must be sorted and contain O");
    }
    for (const auto& l : m.labels_) {
      if (!is_well_formed_label(l)) throw ValidationError("malformed tagger label '" + l + "'");
      if (is_inside(l) && !std::binary_search(m.labels_.begin(), m.labels_.end(),
                                              "B-" + std::string(label_class(l)))) {
        throw ValidationError("label set has " + l + " without its B- label");
      }
    }
    const auto& meta = j.at("training_meta");
    m.meta_.epochs = meta.at("epochs").get<std::size_t>();
    m.meta_.chunk_words = meta.at("chunk_words").get<std::size_t>();
    m.meta_.seed = meta.at("seed").get<std::uint64_t>();
    m.meta_.batch_size = meta.value("batch_size", std::size_t{16});
    for (const auto& [feature, row] : j.at("weights").items()) {
      for (const auto& [label, w] : row.items()) {
        const double v = w.get<double>();
        if (!std::isfinite(v)) throw ValidationError("non-finite weight");
        m.set_weight(feature, label, v);
      }
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed tagger model: ") + e.what());
  }
}

bool TaggerModel::operator==(const TaggerModel& other) const {
  return labels_ == other.labels_ && meta_ == other.meta_ && nonzero_weights() == other.nonzero_weights();
}

// --- decoding ----------------------------------------------------------------------------

class TaggerEngine {
 public:
  explicit TaggerEngine(const TaggerModel& m) : model_(m), L_(m.labels_.size()) {
    outside_ = m.label_index(kOutside);
    previous_ids_.resize(L_ + 1, kMissing);
    for (std::size_t l = 0; l <= L_; ++l) {
      const std::string f = previous_label_feature(l == L_ ? kStartLabel : std::string_view(m.labels_[l]));
      if (auto it = m.feature_ids_.find(f); it != m.feature_ids_.end()) previous_ids_[l] = it->second;
    }
    // allowed_[prev * L + cur]; prev == L is the sequence start.
    allowed_.assign((L_ + 1) * L_, 1);
    for (std::size_t p = 0; p <= L_; ++p) {
      for (std::size_t c = 0; c < L_; ++c) {
        const auto& cur = m.labels_[c];
        if (!is_inside(cur)) continue;
        const bool ok = p < L_ && m.labels_[p] != kOutside && label_class(m.labels_[p]) == label_class(cur);
        allowed_[p * L_ + c] = ok ? 1 : 0;
      }
    }
  }

  std::size_t labels() const { return L_; }

  /// Known static feature ids per token.
  std::vector<std::vector<std::uint32_t>> encode(std::span<const std::string> tokens) const {
    std::vector<std::vector<std::uint32_t>> out(tokens.size());
    std::vector<std::string> feats;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      feats.clear();
      static_features(tokens, i, feats);
      for (const auto& f : feats) {
        if (auto it = model_.feature_ids_.find(f); it != model_.feature_ids_.end()) out[i].push_back(it->second);
      }
    }
    return out;
  }

  void set_previous_ids(std::vector<std::uint32_t> ids) { previous_ids_ = std::move(ids); }

  /// Best allowed label at one position.
  std::size_t step(const std::vector<std::uint32_t>& feats, std::size_t prev, const double* weights,
                   std::vector<double>& scores) const {
    scores.assign(L_, 0.0);
    for (std::uint32_t f : feats) {
      const double* row = weights + static_cast<std::size_t>(f) * L_;
      for (std::size_t l = 0; l < L_; ++l) scores[l] += row[l];
    }
    if (previous_ids_[prev] != kMissing) {
      const double* row = weights + static_cast<std::size_t>(previous_ids_[prev]) * L_;
      for (std::size_t l = 0; l < L_; ++l) scores[l] += row[l];
    }
    scores[outside_] += kOutsidePrior;
    std::size_t best = L_;
    for (std::size_t l = 0; l < L_; ++l) {
      if (!allowed_[prev * L_ + l]) continue;
      if (best == L_ || scores[l] > scores[best]) best = l;
    }
    return best;
  }

  std::vector<std::size_t> run(const std::vector<std::vector<std::uint32_t>>& feats, const double* weights) const {
    std::vector<std::size_t> out(feats.size());
    std::vector<double> scores;
    std::size_t prev = L_;
    for (std::size_t i = 0; i < feats.size(); ++i) {
      out[i] = step(feats[i], prev, weights, scores);
      prev = out[i];
    }
    return out;
  }

  std::uint32_t previous_id(std::size_t prev) const { return previous_ids_[prev]; }
  const double* weights() const { return model_.weights_.data(); }

 private:
  const TaggerModel& model_;
  std::size_t L_;
  std::size_t outside_ = 0;
  std::vector<std::uint32_t> previous_ids_;
  std::vector<char> allowed_;
};

std::vector<std::string> decode(const TaggerModel& tagger, std::span<const std::string> tokens) {
  if (tagger.labels().empty()) throw ValidationError("tagger has no labels");
  TaggerEngine engine(tagger);
  std::vector<std::string> out;
  for (std::size_t l : engine.run(engine.encode(tokens), engine.weights())) out.push_back(tagger.labels()[l]);
  return out;
}

Corpus annotate_corpus(const TaggerModel& tagger, const Corpus& corpus, std::size_t chunk_words) {
  if (tagger.labels().empty()) throw ValidationError("tagger has no labels");
  if (chunk_words == 0) chunk_words = tagger.meta().chunk_words;
  TaggerEngine engine(tagger);
  std::vector<Document> docs;
  docs.reserve(corpus.size());
  for (const auto& d : corpus.documents()) {
    Document out{d.id, d.tokens, {}, d.language};
    out.labels.reserve(d.tokens.size());
    for (const auto& chunk : chunk_document(d, chunk_words)) {
      for (std::size_t l : engine.run(engine.encode(chunk.tokens), engine.weights())) {
        out.labels.push_back(tagger.labels()[l]);
      }
    }
    repair_bio(out.labels);
    docs.push_back(std::move(out));
  }
  return Corpus(std::move(docs), tagger.classes());
}

// --- training ----------------------------------------------------------------------------

TaggerModel train_tagger(const Corpus& corpus, std::size_t epochs, std::size_t chunk_words, std::uint64_t seed) {
  if (corpus.empty()) throw ValidationError("cannot train a tagger on an empty corpus");
  if (epochs == 0) throw ValidationError("epochs must be at least 1");
  if (chunk_words == 0) throw ValidationError("chunk size must be at least one word");
  bool any_entity = false;
  for (const auto& d : corpus.documents()) {
    for (const auto& l : d.labels) any_entity = any_entity || l != kOutside;
  }
  if (!any_entity) throw ValidationError("corpus has only O labels; no entity class to learn");

  TaggerModel model(corpus.label_set(), TrainingMeta{epochs, chunk_words, seed, 16});
  const std::size_t L = model.labels_.size();
  for (std::size_t l = 0; l <= L; ++l) {
    model.intern(previous_label_feature(l == L ? kStartLabel : std::string_view(model.labels_[l])));
  }

  struct Sequence {
    std::vector<std::vector<std::uint32_t>> feats;
    std::vector<std::size_t> gold;
  };
  std::vector<std::vector<Sequence>> doc_chunks;
  std::vector<std::string> scratch;
  for (const auto& d : corpus.documents()) {
    std::vector<Sequence> seqs;
    for (const auto& chunk : chunk_document(d, chunk_words)) {
      Sequence s;
      for (std::size_t i = 0; i < chunk.tokens.size(); ++i) {
        scratch.clear();
        static_features(chunk.tokens, i, scratch);
        std::vector<std::uint32_t> ids;
        ids.reserve(scratch.size());
        for (const auto& f : scratch) ids.push_back(model.intern(f));
        s.feats.push_back(std::move(ids));
        s.gold.push_back(model.label_index(chunk.labels[i]));
      }
      seqs.push_back(std::move(s));
    }
    doc_chunks.push_back(std::move(seqs));
  }

  TaggerEngine engine(model);
  std::vector<double>& w = model.weights_;
  std::vector<double> totals(w.size(), 0.0);
  double c = 1.0;
  auto update = [&](std::uint32_t f, std::size_t label, double delta) {
    const std::size_t k = static_cast<std::size_t>(f) * L + label;
    w[k] += delta;
    totals[k] += c * delta;
  };

  std::vector<std::size_t> order(doc_chunks.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::vector<double> scores;
  for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
    Rng rng(derive_seed(seed, {hash_string("tagger-epoch"), epoch}));
    rng.shuffle(order);
    for (std::size_t di : order) {
      for (const auto& seq : doc_chunks[di]) {
        std::size_t prev = L;
        for (std::size_t i = 0; i < seq.feats.size(); ++i) {
          const std::size_t pred = engine.step(seq.feats[i], prev, w.data(), scores);
          const std::size_t gold = seq.gold[i];
          if (pred != gold) {
            for (std::uint32_t f : seq.feats[i]) {
              update(f, gold, 1.0);
              update(f, pred, -1.0);
            }
            update(engine.previous_id(prev), gold, 1.0);
            update(engine.previous_id(prev), pred, -1.0);
          }
          prev = pred;
          c += 1.0;
        }
      }
    }
  }
  for (std::size_t k = 0; k < w.size(); ++k) w[k] -= totals[k] / c;
  return model;
}

}  // namespace synthner
