#include "synthner/lm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "synthner/error.hpp"

namespace synthner {

namespace {

constexpr WordId kUnknown = std::numeric_limits<WordId>::max();
constexpr std::string_view kFormat = "synthner-ngram-lm";

}  // namespace

std::size_t NGramLM::KeyHash::operator()(const std::vector<WordId>& k) const noexcept {
  std::uint64_t h = 0xCBF29CE484222325ULL ^ k.size();
  for (WordId w : k) {
    h ^= w;
    h *= 0x100000001B3ULL;
    h ^= h >> 29;
  }
  return static_cast<std::size_t>(h);
}

void NGramLM::init_symbols(std::vector<std::string> words) {
  std::set<std::string> all(words.begin(), words.end());
  all.emplace(kBos);
  all.emplace(kEos);
  symbols_.assign(all.begin(), all.end());
  ids_.clear();
  for (std::size_t i = 0; i < symbols_.size(); ++i) ids_.emplace(symbols_[i], static_cast<WordId>(i));
  bos_ = ids_.at(std::string(kBos));
  eos_ = ids_.at(std::string(kEos));
}

void NGramLM::finish() {
  base_.assign(symbols_.size(), 0.0);
  const Continuations* uni = trained_ ? find({}) : nullptr;
  if (uni) {
    for (auto [w, c] : uni->next) base_[w] = static_cast<double>(c) / static_cast<double>(uni->total);
  } else {
    const double p = 1.0 / static_cast<double>(vocabulary_size());
    for (std::size_t i = 0; i < symbols_.size(); ++i) {
      if (i != bos_) base_[i] = p;
    }
  }
  base_order_.clear();
  for (std::size_t i = 0; i < symbols_.size(); ++i) {
    if (base_[i] > 0.0) base_order_.push_back(static_cast<WordId>(i));
  }
  std::stable_sort(base_order_.begin(), base_order_.end(),
                   [&](WordId a, WordId b) { return base_[a] > base_[b]; });
}

NGramLM NGramLM::uniform(std::span<const std::string> words, std::size_t order, double discount) {
  NGramLM lm;
  lm.order_ = std::max<std::size_t>(order, 1);
  lm.discount_ = discount;
  lm.trained_ = false;
  std::vector<std::string> vocab;
  for (const auto& w : words) {
    if (w != kBos && w != kEos) vocab.push_back(w);
  }
  lm.init_symbols(std::move(vocab));
  lm.levels_.resize(lm.order_);
  lm.finish();
  return lm;
}

std::optional<WordId> NGramLM::id_of(std::string_view word) const {
  auto it = ids_.find(std::string(word));
  if (it == ids_.end()) return std::nullopt;
  return it->second;
}

const NGramLM::Continuations* NGramLM::find(std::span<const WordId> context) const {
  if (context.size() >= levels_.size()) return nullptr;
  const auto& level = levels_[context.size()];
  auto it = level.find(std::vector<WordId>(context.begin(), context.end()));
  return it == level.end() ? nullptr : &it->second;
}

std::uint64_t NGramLM::count(std::span<const std::string> context, std::string_view next) const {
  std::vector<WordId> ids;
  for (const auto& w : context) {
    auto id = id_of(w);
    if (!id) return 0;
    ids.push_back(*id);
  }
  auto nid = id_of(next);
  const Continuations* c = find(ids);
  if (!c || !nid) return 0;
  auto it = std::lower_bound(c->next.begin(), c->next.end(), std::make_pair(*nid, std::uint64_t{0}));
  return (it != c->next.end() && it->first == *nid) ? it->second : 0;
}

std::size_t NGramLM::context_count() const {
  std::size_t n = 0;
  for (const auto& l : levels_) n += l.size();
  return n;
}

std::vector<WordId> NGramLM::encode_context(std::span<const std::string> history) const {
  const std::size_t n = order_ - 1;
  std::vector<WordId> out(n, bos_);
  const std::size_t take = std::min(n, history.size());
  for (std::size_t i = 0; i < take; ++i) {
    auto id = id_of(history[history.size() - take + i]);
    out[n - take + i] = id ? *id : kUnknown;
  }
  return out;
}

NGramLM::Mixture NGramLM::mixture(std::span<const WordId> context) const {
  Mixture mix;
  if (!trained_) {
    mix.base_weight = 1.0;
    return mix;
  }
  if (context.size() > order_ - 1) context = context.last(order_ - 1);
  std::size_t m = context.size();
  while (m > 0 && find(context.last(m)) == nullptr) --m;

  double weight = 1.0;
  for (; m > 0; --m) {
    const Continuations* c = find(context.last(m));
    const double total = static_cast<double>(c->total);
    for (auto [w, n] : c->next) {
      mix.sparse.emplace_back(w, weight * (static_cast<double>(n) - discount_) / total);
    }
    weight *= discount_ * static_cast<double>(c->next.size()) / total;
  }
  mix.base_weight = weight;

  // Merge entries of the same word contributed by different levels.
  std::stable_sort(mix.sparse.begin(), mix.sparse.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });
  std::size_t out = 0;
  for (std::size_t i = 0; i < mix.sparse.size(); ++i) {
    if (out > 0 && mix.sparse[out - 1].first == mix.sparse[i].first) {
      mix.sparse[out - 1].second += mix.sparse[i].second;
    } else {
      mix.sparse[out++] = mix.sparse[i];
    }
  }
  mix.sparse.resize(out);
  return mix;
}

double NGramLM::probability(std::span<const WordId> context, WordId word) const {
  const Mixture mix = mixture(context);
  double p = mix.base_weight * base_[word];
  for (auto [w, q] : mix.sparse) {
    if (w == word) p += q;
  }
  return p;
}

nlohmann::json NGramLM::to_json() const {
  nlohmann::json j;
  j["format"] = kFormat;
  j["version"] = 1;
  j["order"] = order_;
  j["discount"] = discount_;
  j["trained"] = trained_;
  nlohmann::json vocab = nlohmann::json::array();
  for (std::size_t i = 0; i < symbols_.size(); ++i) {
    if (i != bos_ && i != eos_) vocab.push_back(symbols_[i]);
  }
  j["vocabulary"] = std::move(vocab);

  nlohmann::json counts = nlohmann::json::array();
  for (const auto& level : levels_) {
    std::vector<const std::pair<const std::vector<WordId>, Continuations>*> entries;
    for (const auto& e : level) entries.push_back(&e);
    std::sort(entries.begin(), entries.end(), [](auto* a, auto* b) { return a->first < b->first; });
    for (const auto* e : entries) {
      nlohmann::json ctx = nlohmann::json::array();
      for (WordId w : e->first) ctx.push_back(symbols_[w]);
      nlohmann::json next = nlohmann::json::array();
      for (auto [w, c] : e->second.next) next.push_back({symbols_[w], c});
      counts.push_back({{"context", std::move(ctx)}, {"next", std::move(next)}});
    }
  }
  j["counts"] = std::move(counts);
  return j;
}

NGramLM NGramLM::from_json(const nlohmann::json& j) {
  try {
    if (j.at("format").get<std::string>() != kFormat) throw ValidationError("not a language model file");
    NGramLM lm;
    lm.order_ = j.at("order").get<std::size_t>();
    lm.discount_ = j.at("discount").get<double>();
    lm.trained_ = j.at("trained").get<bool>();
    if (lm.order_ == 0) throw ValidationError("model order must be positive");
    lm.init_symbols(j.at("vocabulary").get<std::vector<std::string>>());
    lm.levels_.resize(lm.order_);
    for (const auto& e : j.at("counts")) {
      std::vector<WordId> ctx;
      for (const auto& w : e.at("context")) {
        auto id = lm.id_of(w.get<std::string>());
        if (!id) throw ValidationError("context word outside the vocabulary");
        ctx.push_back(*id);
      }
      if (ctx.size() >= lm.order_) throw ValidationError("context longer than order - 1");
      Continuations cont;
      for (const auto& n : e.at("next")) {
        auto id = lm.id_of(n.at(0).get<std::string>());
        const auto c = n.at(1).get<std::uint64_t>();
        if (!id || c == 0) throw ValidationError("bad continuation entry");
        cont.next.emplace_back(*id, c);
        cont.total += c;
      }
      if (cont.next.empty()) throw ValidationError("context without continuations");
      std::sort(cont.next.begin(), cont.next.end());
      const std::size_t level = ctx.size();
      lm.levels_[level].emplace(std::move(ctx), std::move(cont));
    }
    lm.finish();
    return lm;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed language model: ") + e.what());
  }
}

bool NGramLM::operator==(const NGramLM& other) const {
  return order_ == other.order_ && discount_ == other.discount_ && trained_ == other.trained_ &&
         symbols_ == other.symbols_ && levels_ == other.levels_;
}

NGramLM train_lm(const Corpus& corpus, std::size_t order, double discount) {
  if (corpus.empty()) throw ValidationError("cannot train a language model on an empty corpus");
  if (order == 0) throw ValidationError("model order must be at least 1");
  if (!(discount > 0.0 && discount < 1.0)) throw ValidationError("discount must be in (0, 1)");

  std::vector<std::vector<std::string>> streams;
  std::vector<std::string> vocab;
  for (const auto& d : corpus.documents()) {
    auto words = document_words(d);
    for (const auto& w : words) {
      if (w == NGramLM::kBos || w == NGramLM::kEos) {
        throw ValidationError("document '" + d.id + "' contains reserved word '" + w + "'");
      }
    }
    vocab.insert(vocab.end(), words.begin(), words.end());
    streams.push_back(std::move(words));
  }

  NGramLM lm;
  lm.order_ = order;
  lm.discount_ = discount;
  lm.trained_ = true;
  lm.init_symbols(std::move(vocab));

  using Raw = std::unordered_map<std::vector<WordId>, std::unordered_map<WordId, std::uint64_t>,
                                 NGramLM::KeyHash>;
  std::vector<Raw> raw(order);
  std::vector<WordId> seq;
  for (const auto& words : streams) {
    seq.assign(order - 1, lm.bos_);
    for (const auto& w : words) seq.push_back(lm.ids_.at(w));
    seq.push_back(lm.eos_);
    for (std::size_t i = order - 1; i < seq.size(); ++i) {
      for (std::size_t m = 0; m < order; ++m) {
        std::vector<WordId> ctx(seq.begin() + static_cast<std::ptrdiff_t>(i - m),
                                seq.begin() + static_cast<std::ptrdiff_t>(i));
        ++raw[m][std::move(ctx)][seq[i]];
      }
    }
  }

  lm.levels_.resize(order);
  for (std::size_t m = 0; m < order; ++m) {
    for (auto& [ctx, nexts] : raw[m]) {
      NGramLM::Continuations c;
      c.next.assign(nexts.begin(), nexts.end());
      std::sort(c.next.begin(), c.next.end());
      for (auto [w, n] : c.next) c.total += n;
      lm.levels_[m].emplace(ctx, std::move(c));
    }
  }
  lm.finish();
  return lm;
}

Distribution next_token_distribution(const NGramLM& lm, std::span<const std::string> context) {
  const auto ctx = lm.encode_context(context);
  const auto mix = lm.mixture(ctx);
  std::vector<double> p(lm.symbols().size(), 0.0);
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = mix.base_weight * lm.base()[i];
  for (auto [w, q] : mix.sparse) p[w] += q;
  Distribution out;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] > 0.0) out.emplace(lm.symbols()[i], p[i]);
  }
  return out;
}

double perplexity(const NGramLM& lm, const Corpus& corpus) {
  double log_sum = 0.0;
  std::size_t n = 0;
  for (const auto& d : corpus.documents()) {
    auto words = document_words(d);
    words.emplace_back(NGramLM::kEos);
    for (std::size_t i = 0; i < words.size(); ++i) {
      auto id = lm.id_of(words[i]);
      if (!id || *id == lm.bos()) continue;
      const auto ctx = lm.encode_context(std::span<const std::string>(words).first(i));
      log_sum += std::log(lm.probability(ctx, *id));
      ++n;
    }
  }
  if (n == 0) throw ValidationError("no in-vocabulary words to score");
  return std::exp(-log_sum / static_cast<double>(n));
}

}  // namespace synthner
