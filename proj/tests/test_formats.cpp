#include <doctest.h>

#include <random>

#include "oracles.hpp"
#include "synthner/error.hpp"
#include "synthner/formats.hpp"

using namespace synthner;

TEST_CASE("parse_conll basics") {
  const auto p = parse_conll("Ana\tB-NAME\n1999\tB-DATE");
  REQUIRE(p.corpus.size() == 1);
  CHECK(p.corpus[0].tokens.size() == 2);
  CHECK(p.corpus.label_set() == std::set<std::string>{"DATE", "NAME"});
  CHECK(p.warnings.empty());

  const auto empty = parse_conll("");
  CHECK(empty.corpus.empty());
  CHECK(empty.corpus.label_set().empty());
}

TEST_CASE("parse_conll repairs an I- opening with a warning") {
  const auto p = parse_conll("x\tI-NAME");
  REQUIRE(p.corpus.size() == 1);
  CHECK(p.corpus[0].labels == std::vector<std::string>{"B-NAME"});
  REQUIRE(p.warnings.size() == 1);
  CHECK(p.warnings[0].line == 1);
  CHECK(p.warnings[0].original == "I-NAME");
  CHECK(p.warnings[0].repaired == "B-NAME");
}

TEST_CASE("parse_conll document boundaries") {
  const auto p = parse_conll("-DOCSTART- O\na\tO\n\nb\tO\n-DOCSTART-\tO\nc\tB-X\n\n\nd\tO\n");
  REQUIRE(p.corpus.size() == 3);
  CHECK(p.corpus[0].tokens == std::vector<std::string>{"a", "b"});  // single blank = sentence break
  CHECK(p.corpus[1].tokens == std::vector<std::string>{"c"});
  CHECK(p.corpus[2].tokens == std::vector<std::string>{"d"});
}

TEST_CASE("parse_conll rejects malformed lines with the line number") {
  try {
    parse_conll("a\tO\nb\tO\textra\n");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
  }
  CHECK_THROWS_AS(parse_conll("lonely\n"), ParseError);
  CHECK_THROWS_AS(parse_conll("a\tQ-X\n"), ParseError);
}

TEST_CASE("write_conll round trips") {
  CHECK(write_conll(Corpus()).empty());

  const Corpus one({oracle::make_doc("n1", "Ana Berg kom", {"B-NAME", "I-NAME", "O"})});
  CHECK(parse_conll(write_conll(one)).corpus == one);

  std::mt19937_64 rng(21);
  const Corpus c = oracle::random_corpus(rng, 100, 40, 50);
  const std::string once = write_conll(c);
  const Corpus back = parse_conll(once).corpus;
  CHECK(back == c);
  CHECK(write_conll(back) == once);
}

TEST_CASE("JSONL") {
  const auto c = read_jsonl(R"({"id":"r1","tokens":["Ana","kom"],"labels":["B-NAME","O"],"language":"sv"})");
  REQUIRE(c.size() == 1);
  CHECK(c[0].id == "r1");
  CHECK(c[0].language == Language::sv);

  try {
    read_jsonl(R"({"id":"bad-7","tokens":["a","b","c"],"labels":["O","O"],"language":"es"})");
    FAIL("expected a validation error");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("bad-7") != std::string::npos);
  }

  std::mt19937_64 rng(4);
  std::vector<Document> docs = oracle::random_corpus(rng, 60, 30).documents();
  for (std::size_t i = 0; i < docs.size(); ++i) docs[i].language = static_cast<Language>(i % 3);
  const Corpus mixed(docs);
  CHECK(read_jsonl(write_jsonl(mixed)) == mixed);
  CHECK(parse_conll(write_conll(mixed)).corpus == mixed);
}

TEST_CASE("fold plan JSON") {
  std::mt19937_64 rng(2);
  const auto plan = split_folds(oracle::random_corpus(rng, 40, 5), 4, 0.05, 77);
  CHECK(plan_from_json(nlohmann::json::parse(to_json(plan).dump())) == plan);
}
