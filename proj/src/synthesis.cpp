#include "synthner/synthesis.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include "synthner/error.hpp"
#include "synthner/text.hpp"

namespace synthner {

void GenerationConfig::validate() const {
  if (!(top_p > 0.0 && top_p <= 1.0)) throw ValidationError("top_p must be in (0, 1]");
  if (!(temperature > 0.0)) throw ValidationError("temperature must be positive");
  if (min_tokens > max_tokens) throw ValidationError("min_tokens exceeds max_tokens");
  if (samples_per_prompt == 0) throw ValidationError("samples_per_prompt must be at least 1");
}

std::size_t resolve_max_tokens(const Corpus& validation) {
  if (validation.empty()) throw ValidationError("validation corpus is empty");
  std::size_t longest = 0;
  for (const auto& d : validation.documents()) longest = std::max(longest, document_words(d).size());
  return std::max<std::size_t>(50, longest);
}

// --- Sampler -----------------------------------------------------------------------------

Sampler::Sampler(const NGramLM& lm, double temperature, double top_p)
    : lm_(&lm), exponent_(1.0 / temperature), top_p_(top_p), in_sparse_(lm.symbols().size(), 0) {
  if (!(temperature > 0.0)) throw ValidationError("temperature must be positive");
  if (!(top_p > 0.0 && top_p <= 1.0)) throw ValidationError("top_p must be in (0, 1]");
}

double Sampler::powered(double p) const {
  if (exponent_ == 1.0) return p;
  return p > 0.0 ? std::pow(p, exponent_) : 0.0;
}

double Sampler::base_power_sum() {
  if (base_power_sum_ < 0.0) {
    double s = 0.0;
    for (WordId w : lm_->base_order()) s += powered(lm_->base()[w]);
    base_power_sum_ = s;
  }
  return base_power_sum_;
}

double Sampler::collect(std::span<const WordId> context, bool suppress_eos) {
  const auto& base = lm_->base();
  const WordId eos = lm_->eos();
  NGramLM::Mixture mix = lm_->mixture(context);

  if (suppress_eos) {
    double rest = mix.base_weight * (1.0 - base[eos]);
    for (auto [w, p] : mix.sparse) {
      if (w != eos) rest += p;
    }
    if (!(rest > 0.0)) {
      // Only EOS is reachable from this context: fall back to the unigram floor.
      mix.sparse.clear();
      mix.base_weight = 1.0;
      if (!(1.0 - base[eos] > 0.0)) throw Error("language model can only produce EOS");
    }
  }
  const double lambda = mix.base_weight;

  items_.clear();
  kept_.clear();
  double z = 0.0;
  double sparse_base_power = 0.0;
  for (auto [w, p] : mix.sparse) {
    in_sparse_[w] = 1;
    sparse_base_power += powered(base[w]);
    if (suppress_eos && w == eos) continue;
    const double q = powered(p + lambda * base[w]);
    if (q > 0.0) items_.push_back({w, q});
    z += q;
  }
  if (lambda > 0.0) {
    double rest = base_power_sum() - sparse_base_power;
    if (suppress_eos && !in_sparse_[eos]) rest -= powered(base[eos]);
    z += powered(lambda) * std::max(0.0, rest);
  }

  std::sort(items_.begin(), items_.end(), [](const Item& a, const Item& b) {
    return a.weight != b.weight ? a.weight > b.weight : a.id < b.id;
  });

  // Merge the explicit entries with the base-ordered remainder of the vocabulary.
  const auto& order = lm_->base_order();
  std::size_t i = 0;
  std::size_t j = 0;
  double kept_mass = 0.0;
  const bool keep_all = top_p_ >= 1.0;
  auto next_base = [&]() {
    while (j < order.size() && (in_sparse_[order[j]] || (suppress_eos && order[j] == eos))) ++j;
  };
  next_base();
  while (true) {
    const bool have_item = i < items_.size();
    const bool have_base = lambda > 0.0 && j < order.size();
    if (!have_item && !have_base) break;
    Item pick;
    if (have_base) {
      const Item b{order[j], powered(lambda * base[order[j]])};
      const bool take_item = have_item && (items_[i].weight > b.weight ||
                                           (items_[i].weight == b.weight && items_[i].id < b.id));
      if (take_item) {
        pick = items_[i++];
      } else {
        pick = b;
        ++j;
        next_base();
      }
    } else {
      pick = items_[i++];
    }
    if (pick.weight <= 0.0) break;
    kept_.push_back(pick);
    kept_mass += pick.weight;
    if (!keep_all && kept_mass / z >= top_p_ - 1e-12) break;
  }

  for (auto [w, p] : mix.sparse) in_sparse_[w] = 0;
  return kept_mass;
}

std::vector<std::pair<WordId, double>> Sampler::filtered(std::span<const WordId> context,
                                                         bool suppress_eos) {
  const double mass = collect(context, suppress_eos);
  std::vector<std::pair<WordId, double>> out;
  out.reserve(kept_.size());
  for (const auto& k : kept_) out.emplace_back(k.id, k.weight / mass);
  return out;
}

WordId Sampler::draw(std::span<const WordId> context, bool suppress_eos, Rng& rng) {
  const double mass = collect(context, suppress_eos);
  double r = rng.uniform() * mass;
  for (const auto& k : kept_) {
    if (r < k.weight) return k.id;
    r -= k.weight;
  }
  return kept_.back().id;
}

Distribution step_distribution(const NGramLM& lm, std::span<const std::string> history,
                               const GenerationConfig& cfg, bool suppress_eos) {
  Sampler sampler(lm, cfg.temperature, cfg.top_p);
  Distribution out;
  for (auto [w, p] : sampler.filtered(lm.encode_context(history), suppress_eos)) {
    out.emplace(lm.symbols()[w], p);
  }
  return out;
}

// --- generation --------------------------------------------------------------------------

namespace {

std::vector<std::string> generate_with(const NGramLM& lm, Sampler& sampler, const Prompt& prompt,
                                       const GenerationConfig& cfg, Rng& rng) {
  if (prompt.words.size() > cfg.max_tokens) {
    throw ValidationError("prompt from '" + prompt.source_doc_id + "' is longer than max_tokens");
  }
  std::vector<std::string> words = prompt.words;
  while (words.size() < cfg.max_tokens) {
    const bool suppress = words.size() < cfg.min_tokens;
    const WordId id = sampler.draw(lm.encode_context(words), suppress, rng);
    if (id == lm.eos()) break;
    words.push_back(lm.symbols()[id]);
  }
  return words;
}

std::string padded(std::size_t v, std::size_t width) {
  std::string s = std::to_string(v);
  return std::string(width > s.size() ? width - s.size() : 0, '0') + s;
}

}  // namespace

std::vector<std::string> generate_document(const NGramLM& lm, const Prompt& prompt,
                                           const GenerationConfig& cfg, Rng& rng) {
  cfg.validate();
  Sampler sampler(lm, cfg.temperature, cfg.top_p);
  return generate_with(lm, sampler, prompt, cfg, rng);
}

std::uint64_t sample_seed(std::uint64_t seed, std::size_t prompt_index, std::size_t sample_index) {
  return derive_seed(seed, {hash_string("sample"), prompt_index, sample_index});
}

std::string synthetic_id(std::string_view prefix, std::size_t prompt_index, std::size_t sample_index) {
  return std::string(prefix) + "-p" + padded(prompt_index, 5) + "-s" + padded(sample_index, 4);
}

Corpus synthesize_corpus(const NGramLM& lm, std::span<const Prompt> prompts,
                         const GenerationConfig& cfg, std::uint64_t seed,
                         const SynthesisOptions& options) {
  cfg.validate();
  if (prompts.empty()) throw ValidationError("no prompts to synthesize from");
  const std::size_t total = prompts.size() * cfg.samples_per_prompt;
  std::vector<Document> docs(total);

  auto work = [&](std::size_t begin, std::size_t end) {
    Sampler sampler(lm, cfg.temperature, cfg.top_p);
    for (std::size_t k = begin; k < end; ++k) {
      const std::size_t p = k / cfg.samples_per_prompt;
      const std::size_t s = k % cfg.samples_per_prompt;
      Rng rng(sample_seed(seed, p, s));
      Document& d = docs[k];
      d.id = synthetic_id(options.id_prefix, p, s);
      d.language = options.language;
      d.tokens = generate_with(lm, sampler, prompts[p], cfg, rng);
      d.labels.assign(d.tokens.size(), std::string(kOutside));
    }
  };

  const std::size_t threads = std::clamp<std::size_t>(options.threads, 1, total);
  if (threads == 1) {
    work(0, total);
  } else {
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(threads);
    for (std::size_t t = 0; t < threads; ++t) {
      pool.emplace_back([&, t] {
        try {
          work(t * total / threads, (t + 1) * total / threads);
        } catch (...) {
          errors[t] = std::current_exception();
        }
      });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }
  return Corpus(std::move(docs));
}

Corpus corpus_from_texts(std::span<const std::string> texts, std::size_t prompts,
                         std::size_t samples_per_prompt, const SynthesisOptions& options) {
  if (texts.size() != prompts * samples_per_prompt) {
    throw ValidationError("expected " + std::to_string(prompts * samples_per_prompt) + " texts, got " +
                          std::to_string(texts.size()));
  }
  std::vector<Document> docs;
  docs.reserve(texts.size());
  for (std::size_t k = 0; k < texts.size(); ++k) {
    Document d;
    d.id = synthetic_id(options.id_prefix, k / samples_per_prompt, k % samples_per_prompt);
    d.language = options.language;
    d.tokens = text::split_words(texts[k]);
    d.labels.assign(d.tokens.size(), std::string(kOutside));
    docs.push_back(std::move(d));
  }
  return Corpus(std::move(docs));
}

}  // namespace synthner
