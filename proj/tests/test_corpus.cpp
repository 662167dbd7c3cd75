#include <doctest.h>

#include <algorithm>
#include <random>
#include <set>

#include "oracles.hpp"
#include "synthner/corpus.hpp"
#include "synthner/error.hpp"
#include "synthner/template_corpus.hpp"

using namespace synthner;
using oracle::make_doc;

namespace {

Corpus numbered(std::size_t n) {
  std::vector<Document> docs;
  for (std::size_t i = 0; i < n; ++i) docs.push_back(make_doc("doc" + std::to_string(i), "a b c"));
  return Corpus(std::move(docs));
}

std::set<std::string> as_set(const std::vector<std::string>& v) { return {v.begin(), v.end()}; }

}  // namespace

TEST_CASE("BIO helpers") {
  CHECK(is_well_formed_label("O"));
  CHECK(is_well_formed_label("B-NAME"));
  CHECK_FALSE(is_well_formed_label("B-"));
  CHECK_FALSE(is_well_formed_label("X-NAME"));
  CHECK(label_class("I-DATE") == "DATE");
  CHECK(label_class("O").empty());

  const std::vector<std::string> ok = {"B-N", "I-N", "O", "B-D"};
  const std::vector<std::string> bad_start = {"I-N"};
  const std::vector<std::string> bad_switch = {"B-N", "I-D"};
  CHECK(is_valid_bio(ok));
  CHECK_FALSE(is_valid_bio(bad_start));
  CHECK_FALSE(is_valid_bio(bad_switch));

  std::vector<std::string> labels = {"O", "I-N", "I-N", "B-D", "I-N"};
  const auto repairs = repair_bio(labels);
  CHECK(labels == std::vector<std::string>{"O", "B-N", "I-N", "B-D", "B-N"});
  REQUIRE(repairs.size() == 2);
  CHECK(repairs[0].position == 1);
  CHECK(repairs[1].original == "I-N");
}

TEST_CASE("Corpus enforces its invariants") {
  CHECK_THROWS_AS(Corpus({make_doc("a", "x"), make_doc("a", "y")}), ValidationError);
  Document mismatch = make_doc("a", "x y");
  mismatch.labels.pop_back();
  CHECK_THROWS_AS(Corpus({mismatch}), ValidationError);
  CHECK_THROWS_AS(Corpus({make_doc("a", "x", {"I-N"})}), ValidationError);
  CHECK_THROWS_AS(Corpus({make_doc("a", "x", {"B-N"})}, {"DATE"}), ValidationError);

  const Corpus c({make_doc("a", "Ana 1999", {"B-NAME", "B-DATE"})});
  CHECK(c.label_set() == std::set<std::string>{"DATE", "NAME"});
  CHECK(c.at("a").tokens.size() == 2);
  CHECK_THROWS_AS(c.at("zz"), ValidationError);
}

TEST_CASE("split_folds arithmetic") {
  SUBCASE("100 docs, k=5") {
    const auto plan = split_folds(numbered(100), 5, 0.05, 3);
    REQUIRE(plan.folds.size() == 5);
    for (const auto& f : plan.folds) {
      CHECK(f.test_ids.size() == 20);
      CHECK(f.validation_ids.size() == 4);
      CHECK(f.train_pool_ids.size() == 76);
    }
  }
  SUBCASE("k=2 on two documents") {
    const auto plan = split_folds(numbered(2), 2, 0.05, 3);
    for (const auto& f : plan.folds) {
      CHECK(f.test_ids.size() == 1);
      CHECK(f.validation_ids.size() == 1);
      CHECK(f.train_pool_ids.empty());
    }
  }
  SUBCASE("determinism and seed sensitivity") {
    const Corpus c = numbered(50);
    CHECK(split_folds(c, 5, 0.05, 9) == split_folds(c, 5, 0.05, 9));
    CHECK_FALSE(split_folds(c, 5, 0.05, 9) == split_folds(c, 5, 0.05, 10));
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(split_folds(numbered(3), 5), ValidationError);
    CHECK_THROWS_AS(split_folds(numbered(3), 1), ValidationError);
  }
}

TEST_CASE("split_folds set algebra") {
  for (std::size_t n : {5, 17, 100, 233}) {
    const Corpus c = numbered(n);
    const auto all = as_set(c.ids());
    const auto plan = split_folds(c, 5, 0.05, n);
    std::multiset<std::string> tested;
    for (const auto& f : plan.folds) {
      const auto t = as_set(f.test_ids), v = as_set(f.validation_ids), p = as_set(f.train_pool_ids);
      CHECK(t.size() + v.size() + p.size() == n);
      std::set<std::string> u = t;
      u.insert(v.begin(), v.end());
      u.insert(p.begin(), p.end());
      CHECK(u == all);
      const std::size_t rest = n - t.size();
      const auto expected_val = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(0.05 * rest - 1e-9)));
      CHECK(v.size() == expected_val);
      tested.insert(f.test_ids.begin(), f.test_ids.end());
    }
    CHECK(tested.size() == n);
    CHECK(as_set({tested.begin(), tested.end()}) == all);
  }
}

TEST_CASE("subset_training") {
  const Corpus c = numbered(100);
  const auto plan = split_folds(c, 5, 0.05, 1);
  const Fold& f = plan.folds[2];

  const auto full = subset_training_ids(f, 0.95, 4);
  CHECK(full.size() == 76);
  CHECK(as_set(full) == as_set(f.train_pool_ids));

  const auto five = subset_training_ids(f, 0.05, 4);
  const auto quarter = subset_training_ids(f, 0.25, 4);
  CHECK(five.size() == 4);
  CHECK(quarter.size() == 20);
  CHECK(std::equal(five.begin(), five.end(), quarter.begin()));

  CHECK(subset_training_ids(f, 0.95, 4) == full);
  CHECK_THROWS_AS(subset_training_ids(f, 0.96, 4), ValidationError);
  CHECK_THROWS_AS(subset_training_ids(f, 0.0, 4), ValidationError);

  const Corpus sub = subset_training(c, f, 0.25, 4);
  CHECK(sub.ids() == quarter);
  const auto val = as_set(f.validation_ids);
  for (const auto& id : sub.ids()) CHECK_FALSE(val.contains(id));
}

TEST_CASE("subset_training nests across fractions") {
  const Corpus c = numbered(237);
  const auto plan = split_folds(c, 5, 0.05, 8);
  const std::vector<double> fr = {0.05, 0.10, 0.25, 0.50, 0.95};
  for (const auto& f : plan.folds) {
    for (std::size_t i = 0; i + 1 < fr.size(); ++i) {
      const auto a = as_set(subset_training_ids(f, fr[i], 12));
      const auto b = as_set(subset_training_ids(f, fr[i + 1], 12));
      CHECK(std::includes(b.begin(), b.end(), a.begin(), a.end()));
    }
  }
}

TEST_CASE("extract_prompts") {
  const Corpus c({make_doc("a", "Pat vårdas för feber"), make_doc("b", "två ord")});
  const auto p = extract_prompts(c);
  REQUIRE(p.size() == 2);
  CHECK(p[0].words == std::vector<std::string>{"Pat", "vårdas", "för"});
  CHECK(p[0].source_doc_id == "a");
  CHECK(p[1].words.size() == 2);

  const Corpus twenty = numbered(20);
  const auto ps = extract_prompts(twenty);
  REQUIRE(ps.size() == 20);
  for (std::size_t i = 0; i < 20; ++i) CHECK(ps[i].source_doc_id == twenty[i].id);
  CHECK_THROWS_AS(extract_prompts(twenty, 0), ValidationError);
}

TEST_CASE("chunk_document") {
  Document d;
  d.id = "x";
  for (int i = 0; i < 300; ++i) {
    d.tokens.push_back("t" + std::to_string(i));
    d.labels.push_back("O");
  }
  auto chunks = chunk_document(d, 128);
  REQUIRE(chunks.size() == 3);
  CHECK(chunks[0].tokens.size() == 128);
  CHECK(chunks[1].tokens.size() == 128);
  CHECK(chunks[2].tokens.size() == 44);

  d.tokens.resize(128);
  d.labels.resize(128);
  chunks = chunk_document(d, 128);
  REQUIRE(chunks.size() == 1);
  CHECK(std::equal(chunks[0].tokens.begin(), chunks[0].tokens.end(), d.tokens.begin(), d.tokens.end()));

  d.tokens.clear();
  d.labels.clear();
  CHECK(chunk_document(d, 128).empty());
}

TEST_CASE("chunk_document flattens back to the document") {
  std::mt19937_64 rng(5);
  const Corpus c = oracle::random_corpus(rng, 1000, 300);
  for (std::size_t max_words : {std::size_t{1}, std::size_t{2}, std::size_t{128}, std::size_t{1000000}}) {
    for (const auto& d : c.documents()) {
      std::vector<std::string> toks, labs;
      const auto chunks = chunk_document(d, max_words);
      for (std::size_t i = 0; i < chunks.size(); ++i) {
        CHECK(chunks[i].tokens.size() <= max_words);
        if (i + 1 < chunks.size()) CHECK(chunks[i].tokens.size() == max_words);
        toks.insert(toks.end(), chunks[i].tokens.begin(), chunks[i].tokens.end());
        labs.insert(labs.end(), chunks[i].labels.begin(), chunks[i].labels.end());
      }
      REQUIRE(toks == d.tokens);
      REQUIRE(labs == d.labels);
    }
  }
}

TEST_CASE("template corpus: single template") {
  TemplateSpec spec;
  spec.documents = 1;
  spec.classes = {{"NAME", 1.0, {"Ana"}}, {"DATE", 1.0, {"1999-01-02"}}};
  spec.templates = {"Patienten <NAME> inkom <DATE>"};
  spec.phrase_probability = 0.0;
  spec.min_sentences = spec.max_sentences = 1;
  const Corpus c = make_template_corpus(spec, 1);
  REQUIRE(c.size() == 1);
  CHECK(c[0].tokens == std::vector<std::string>{"Patienten", "Ana", "inkom", "1999-01-02"});
  CHECK(c[0].labels == std::vector<std::string>{"O", "B-NAME", "O", "B-DATE"});

  spec.classes[0].lexicon = {"Ana Berg"};
  const Corpus multi = make_template_corpus(spec, 1);
  CHECK(multi[0].labels == std::vector<std::string>{"O", "B-NAME", "I-NAME", "O", "B-DATE"});

  spec.classes[1].lexicon.clear();
  CHECK_THROWS_AS(make_template_corpus(spec, 1), ValidationError);
}

TEST_CASE("template corpus: determinism and presets") {
  CHECK(make_template_corpus(sepr_like_spec(500), 3) == make_template_corpus(sepr_like_spec(500), 3));
  CHECK(sepr_like_spec().classes.size() == 9);
  CHECK(meddocan_like_spec().classes.size() == 19);
  const Corpus es = make_template_corpus(meddocan_like_spec(200), 1);
  CHECK(es.label_set().size() == 19);
  CHECK(es[0].language == Language::es);
  for (const auto& d : es.documents()) CHECK(is_valid_bio(d.labels));
}

TEST_CASE("template corpus: class frequencies follow the weights") {
  TemplateSpec spec;
  spec.documents = 5000;
  spec.classes = {{"A", 0.5, {"a1", "a2"}}, {"B", 0.3, {"b1"}}, {"C", 0.2, {"c1", "c2", "c3"}}};
  spec.templates = {"x <*> y", "<*> z <*>"};
  spec.phrase_probability = 0.0;
  const Corpus c = make_template_corpus(spec, 11);
  std::map<std::string, double> count;
  double total = 0;
  for (const auto& d : c.documents()) {
    for (const auto& l : d.labels) {
      if (is_begin(l)) {
        count[std::string(label_class(l))] += 1;
        total += 1;
      }
    }
  }
  CHECK(count["A"] / total == doctest::Approx(0.5).epsilon(0.05));
  CHECK(count["B"] / total == doctest::Approx(0.3).epsilon(0.05));
  CHECK(count["C"] / total == doctest::Approx(0.2).epsilon(0.05));
}
