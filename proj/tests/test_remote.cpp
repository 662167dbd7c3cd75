#include <doctest.h>

#include "oracles.hpp"
#include "synthner/error.hpp"
#include "synthner/remote.hpp"
#include "synthner/stub_server.hpp"
#include "synthner/synthesis.hpp"
#include "synthner/text.hpp"

using namespace synthner;
using oracle::make_doc;

namespace {

RetryPolicy fast_retry() {
  RetryPolicy r;
  r.base_delay = std::chrono::milliseconds(5);
  return r;
}

std::vector<Prompt> two_prompts() {
  return {Prompt{"a", {"Patienten", "har", "feber"}}, Prompt{"b", {"Ana", "bor", "i"}}};
}

}  // namespace

TEST_CASE("Endpoint::parse") {
  const auto e = Endpoint::parse("http://127.0.0.1:9000/models");
  CHECK(e.host == "127.0.0.1");
  CHECK(e.port == 9000);
  CHECK(e.prefix == "/models");
  CHECK(Endpoint::parse(e.url()) == e);
  CHECK(Endpoint::parse("http://example.org").port == 80);
  CHECK_THROWS_AS(Endpoint::parse("https://example.org"), ValidationError);
  CHECK_THROWS_AS(Endpoint::parse("http://"), ValidationError);
}

TEST_CASE("remote generation") {
  StubServer stub;
  stub.start();
  RemoteClient client(stub.endpoint(), fast_retry());
  const auto prompts = two_prompts();
  GenerationConfig cfg;
  cfg.max_tokens = 50;

  SUBCASE("texts come back in (prompt, sample) order") {
    const auto texts = generate_remote(client, prompts, cfg, {});
    REQUIRE(texts.size() == 160);
    for (std::size_t k = 0; k < texts.size(); ++k) {
      const auto words = text::split_words(texts[k]);
      const auto& p = prompts[k / 80].words;
      REQUIRE(std::equal(p.begin(), p.end(), words.begin()));
      REQUIRE(words.size() >= cfg.min_tokens);
    }
    CHECK(stub.requests("/v1/generate") == 1);
  }

  SUBCASE("persistent 500 exhausts the retry budget") {
    StubBehavior b;
    b.fail_first = -1;
    stub.set_behavior(b);
    CHECK_THROWS_AS(generate_remote(client, prompts, cfg, {}), RemoteUnavailable);
    CHECK(stub.requests("/v1/generate") == 3);
  }

  SUBCASE("a transient 500 is retried") {
    StubBehavior b;
    b.fail_first = 2;
    stub.set_behavior(b);
    CHECK(generate_remote(client, prompts, cfg, {}).size() == 160);
    CHECK(stub.requests("/v1/generate") == 3);
  }

  SUBCASE("too-short texts name the sample") {
    StubBehavior b;
    b.generate = StubBehavior::Generate::short_texts;
    stub.set_behavior(b);
    try {
      generate_remote(client, prompts, cfg, {});
      FAIL("expected ResponseValidationError");
    } catch (const ResponseValidationError& e) {
      CHECK(e.item() == synthetic_id("syn", 0, 0));
    }
  }

  SUBCASE("missing texts are a protocol error") {
    StubBehavior b;
    b.generate = StubBehavior::Generate::missing_text;
    stub.set_behavior(b);
    CHECK_THROWS_AS(generate_remote(client, prompts, cfg, {}), RemoteProtocolError);
  }

  SUBCASE("a non-JSON body is a protocol error") {
    StubBehavior b;
    b.malformed = true;
    stub.set_behavior(b);
    CHECK_THROWS_AS(generate_remote(client, prompts, cfg, {}), RemoteProtocolError);
  }
  stub.stop();
}

TEST_CASE("unreachable service") {
  Endpoint e = Endpoint::parse("http://127.0.0.1:1");
  e.timeout = std::chrono::milliseconds(200);
  RemoteClient client(e, fast_retry());
  CHECK_THROWS_AS(client.post("/v1/generate", nlohmann::json::object()), RemoteUnavailable);
  CHECK(client.requests() == 3);
}

TEST_CASE("remote annotation") {
  StubServer stub;
  stub.start();
  RemoteClient client(stub.endpoint(), fast_retry());
  const Corpus c({make_doc("d1", "Ana bor i Lund"), make_doc("d2", "x y z")});

  SUBCASE("all O") {
    const Corpus out = annotate_remote(client, c);
    CHECK(out[0].tokens == c[0].tokens);
    CHECK(out[0].labels == std::vector<std::string>(4, "O"));
  }

  SUBCASE("capitalized tokens") {
    StubBehavior b;
    b.annotate = StubBehavior::Annotate::capitalized;
    stub.set_behavior(b);
    const Corpus out = annotate_remote(client, c, 16, 128, {"NAME"});
    CHECK(out[0].labels == std::vector<std::string>{"B-NAME", "O", "O", "B-NAME"});
    CHECK(out.label_set() == std::set<std::string>{"NAME"});
  }

  SUBCASE("label count mismatch names the document") {
    StubBehavior b;
    b.annotate = StubBehavior::Annotate::short_labels;
    stub.set_behavior(b);
    try {
      annotate_remote(client, Corpus({make_doc("three", "a b c")}));
      FAIL("expected ResponseValidationError");
    } catch (const ResponseValidationError& e) {
      CHECK(e.item() == "three");
    }
  }

  SUBCASE("unknown labels are rejected") {
    StubBehavior b;
    b.annotate = StubBehavior::Annotate::unknown_label;
    stub.set_behavior(b);
    CHECK_THROWS_AS(annotate_remote(client, c), ResponseValidationError);
  }

  SUBCASE("labels outside the class set are rejected") {
    StubBehavior b;
    b.annotate = StubBehavior::Annotate::capitalized;
    stub.set_behavior(b);
    CHECK_THROWS_AS(annotate_remote(client, c, 16, 128, {"DATE"}), ResponseValidationError);
  }

  SUBCASE("batching") {
    std::vector<Document> docs;
    for (int i = 0; i < 1000; ++i) docs.push_back(make_doc("d" + std::to_string(i), "a b c"));
    const Corpus big(docs);
    const Corpus out = annotate_remote(client, big, 16);
    CHECK(out.size() == 1000);
    CHECK(stub.requests("/v1/annotate") == 63);
  }

  SUBCASE("long documents are chunked and reassembled") {
    std::string t;
    for (int i = 0; i < 300; ++i) t += "Tok ";
    StubBehavior b;
    b.annotate = StubBehavior::Annotate::capitalized;
    stub.set_behavior(b);
    const Corpus out = annotate_remote(client, Corpus({make_doc("long", t)}), 16, 128);
    CHECK(out[0].labels.size() == 300);
    CHECK(is_valid_bio(out[0].labels));
  }
  stub.stop();
}

TEST_CASE("adapt and train return model ids") {
  StubServer stub;
  stub.start();
  RemoteClient client(stub.endpoint(), fast_retry());
  const Corpus c({make_doc("d1", "Ana bor i Lund", {"B-NAME", "O", "O", "O"})});
  const auto a = adapt_remote(client, c, {});
  const auto t = train_remote(client, c, {});
  CHECK(a.rfind("adapted-", 0) == 0);
  CHECK(t.rfind("ner-", 0) == 0);
  CHECK(adapt_remote(client, c, {}) == a);
  stub.stop();
}

TEST_CASE("remote training configs") {
  RemoteTrainingConfig t;
  CHECK(t.to_json()["r"] == 8);
  CHECK(t.to_json()["alpha"] == 32);
  t.dropout = 1.5;
  CHECK_THROWS_AS(t.validate(), ValidationError);
  RemoteNerConfig n;
  CHECK(n.weight_decay == doctest::Approx(1e-5));
  CHECK_NOTHROW(n.validate());
}
