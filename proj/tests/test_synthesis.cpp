#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "synthner/error.hpp"
#include "synthner/sampling.hpp"
#include "synthner/synthesis.hpp"
#include "synthner/template_corpus.hpp"
#include "synthner/text.hpp"

using namespace synthner;
using oracle::make_doc;

namespace {

Corpus docs_of_lengths(std::initializer_list<std::size_t> lengths) {
  std::vector<Document> docs;
  std::size_t i = 0;
  for (auto n : lengths) {
    std::string text;
    for (std::size_t k = 0; k < n; ++k) text += (k ? " w" : "w") + std::to_string(k);
    docs.push_back(make_doc("d" + std::to_string(i++), text));
  }
  return Corpus(docs);
}

// Generic-ops route to the per-step distribution: drop EOS, temperature, nucleus.
Distribution composed(const NGramLM& lm, std::span<const std::string> history, const GenerationConfig& cfg,
                      bool suppress_eos) {
  Distribution d = next_token_distribution(lm, history);
  if (suppress_eos) d = without(d, NGramLM::kEos);
  return nucleus_filter(apply_temperature(d, cfg.temperature), cfg.top_p);
}

}  // namespace

TEST_CASE("resolve_max_tokens") {
  CHECK(resolve_max_tokens(docs_of_lengths({30, 12})) == 50);
  CHECK(resolve_max_tokens(docs_of_lengths({120, 3})) == 120);
  CHECK(resolve_max_tokens(docs_of_lengths({50})) == 50);
  CHECK_THROWS_AS(resolve_max_tokens(Corpus()), ValidationError);
}

TEST_CASE("GenerationConfig validation") {
  GenerationConfig c;
  CHECK_NOTHROW(c.validate());
  c.top_p = 0.0;
  CHECK_THROWS_AS(c.validate(), ValidationError);
  c = {};
  c.temperature = 0.0;
  CHECK_THROWS_AS(c.validate(), ValidationError);
  c = {};
  c.min_tokens = 60;
  CHECK_THROWS_AS(c.validate(), ValidationError);
}

TEST_CASE("generated documents respect the length window and keep the prompt") {
  const Corpus c = make_template_corpus(sepr_like_spec(300), 4);
  const NGramLM lm = train_lm(c, 3);
  GenerationConfig cfg;
  cfg.max_tokens = resolve_max_tokens(c);
  const auto prompts = extract_prompts(c);
  for (std::size_t i = 0; i < 300; ++i) {
    Rng rng(i);
    const auto& p = prompts[i % prompts.size()];
    const auto out = generate_document(lm, p, cfg, rng);
    REQUIRE(out.size() >= cfg.min_tokens);
    REQUIRE(out.size() <= cfg.max_tokens);
    REQUIRE(std::equal(p.words.begin(), p.words.end(), out.begin()));
  }
  Prompt longp{"x", std::vector<std::string>(60, "w")};
  Rng rng(1);
  CHECK_THROWS_AS(generate_document(lm, longp, cfg, rng), ValidationError);
}

TEST_CASE("a forced chain generates the same text for every seed") {
  const std::string text = "a b c d e f g h i j k l";
  const Corpus c({make_doc("x", text)});
  const NGramLM lm = train_lm(c, 3, 0.01);
  GenerationConfig cfg;
  const Prompt p{"x", {"a", "b", "c"}};
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    Rng rng(seed);
    CHECK(text::join(generate_document(lm, p, cfg, rng), " ") == text);
  }
}

TEST_CASE("fast sampler matches the generic operations") {
  const Corpus c = make_template_corpus(sepr_like_spec(300), 6);
  const NGramLM lm = train_lm(c, 3);
  for (double t : {0.5, 1.0, 1.7}) {
    for (double p : {0.5, 0.95, 1.0}) {
      GenerationConfig cfg;
      cfg.temperature = t;
      cfg.top_p = p;
      for (std::size_t i = 0; i < 40; ++i) {
        const auto words = document_words(c[i]);
        const std::vector<std::string> hist(words.begin(), words.begin() + std::min<std::size_t>(i % 6, words.size()));
        for (bool suppress : {false, true}) {
          const auto fast = step_distribution(lm, hist, cfg, suppress);
          const auto slow = composed(lm, hist, cfg, suppress);
          REQUIRE(fast.size() == slow.size());
          for (const auto& [w, q] : slow) REQUIRE(std::abs(fast.at(w) - q) <= 1e-9);
        }
      }
    }
  }
}

TEST_CASE("empirical step frequencies match the filtered distribution") {
  const Corpus c = make_template_corpus(sepr_like_spec(300), 7);
  const NGramLM lm = train_lm(c, 3);
  GenerationConfig cfg;
  cfg.max_tokens = 50;
  const Prompt p = extract_prompts(c)[0];
  const auto expected = step_distribution(lm, p.words, cfg, true);
  std::map<std::string, double> seen;
  const int runs = 10000;
  for (int i = 0; i < runs; ++i) {
    Rng rng(sample_seed(99, 0, i));
    seen[generate_document(lm, p, cfg, rng)[p.words.size()]] += 1.0 / runs;
  }
  double l1 = 0;
  for (const auto& [w, q] : expected) l1 += std::abs(seen[w] - q);
  for (const auto& [w, f] : seen) {
    if (!expected.contains(w)) l1 += f;
  }
  CHECK(l1 <= 0.05);
}

TEST_CASE("synthesize_corpus") {
  const Corpus c = make_template_corpus(sepr_like_spec(400), 3);
  const NGramLM lm = train_lm(c, 3);
  std::vector<Document> first20(c.documents().begin(), c.documents().begin() + 20);
  const auto prompts = extract_prompts(Corpus(first20));
  GenerationConfig cfg;
  cfg.max_tokens = resolve_max_tokens(c);

  const Corpus s = synthesize_corpus(lm, prompts, cfg, 5);
  CHECK(s.size() == 1600);
  CHECK(s[0].id == synthetic_id("syn", 0, 0));
  CHECK(s[81].id == synthetic_id("syn", 1, 1));
  for (const auto& d : s.documents()) {
    for (const auto& l : d.labels) REQUIRE(l == "O");
  }

  SynthesisOptions par;
  par.threads = 4;
  CHECK(synthesize_corpus(lm, prompts, cfg, 5, par) == s);

  cfg.samples_per_prompt = 1;
  CHECK(synthesize_corpus(lm, prompts, cfg, 8) == synthesize_corpus(lm, prompts, cfg, 8));
  CHECK_THROWS_AS(synthesize_corpus(lm, {}, cfg, 8), ValidationError);
}

TEST_CASE("a 5% validation slice with 80 samples per prompt gives a 4x corpus") {
  const Corpus c = make_template_corpus(sepr_like_spec(400), 3);
  const auto plan = split_folds(c, 5, 0.05, 1);
  const auto& f = plan.folds[0];
  const std::size_t non_test = c.size() - f.test_ids.size();
  CHECK(80 * f.validation_ids.size() == 4 * non_test);
}

TEST_CASE("corpus_from_texts re-tokenizes on whitespace") {
  const std::vector<std::string> texts = {"a  b\tc", "d e", "f", "g h"};
  const Corpus c = corpus_from_texts(texts, 2, 2);
  REQUIRE(c.size() == 4);
  CHECK(c[0].tokens == std::vector<std::string>{"a", "b", "c"});
  CHECK(c[3].id == synthetic_id("syn", 1, 1));
  CHECK_THROWS_AS(corpus_from_texts(texts, 3, 2), ValidationError);
}
