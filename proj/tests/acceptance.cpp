// Acceptance suite: one PASS/FAIL line per criterion; exit status is the number of failures.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>

#include <unistd.h>

#include "oracles.hpp"
#include "synthner/error.hpp"
#include "synthner/lm.hpp"
#include "synthner/metrics.hpp"
#include "synthner/pipeline.hpp"
#include "synthner/remote.hpp"
#include "synthner/sampling.hpp"
#include "synthner/stub_server.hpp"
#include "synthner/synthesis.hpp"
#include "synthner/tagger.hpp"
#include "synthner/template_corpus.hpp"
#include "synthner/text.hpp"

using namespace synthner;
namespace fs = std::filesystem;

namespace {

struct Check {
  bool ok = true;
  std::ostringstream why;

  void expect(bool cond, const std::string& what) {
    if (!cond && ok) why << what;
    ok = ok && cond;
  }
};

int failures = 0;

void criterion(int id, const std::string& name, double budget_s, const std::function<void(Check&)>& body) {
  Check c;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    body(c);
  } catch (const std::exception& e) {
    c.expect(false, std::string("exception: ") + e.what());
  }
  const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (budget_s > 0) c.expect(s < budget_s, "runtime " + std::to_string(s) + " s over budget");
  std::printf("%s %d %s (%.1f s)%s%s\n", c.ok ? "PASS" : "FAIL", id, name.c_str(), s, c.ok ? "" : ": ",
              c.ok ? "" : c.why.str().c_str());
  std::fflush(stdout);
  failures += c.ok ? 0 : 1;
}

// --- 1 -----------------------------------------------------------------------------------

void ngram_oracle(Check& c) {
  std::mt19937_64 rng(1001);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = std::vector<std::size_t>{3, 5, 10}[trial % 3];
    // at most 200 tokens per corpus
    const std::size_t docs = 1 + rng() % 4;
    const Corpus ref = oracle::random_corpus(rng, docs, 200 / docs, 5, "r");
    const Corpus cand = oracle::random_corpus(rng, docs, 200 / docs, 5, "c");
    const auto R = oracle::ngrams(ref, n), Rs = oracle::ngrams(ref, n, true), S = oracle::ngrams(cand, n);
    if (R.empty()) {
      bool threw = false;
      try {
        ngram_recall(ref, cand, n);
      } catch (const ValidationError&) {
        threw = true;
      }
      c.expect(threw, "empty reference accepted");
      continue;
    }
    const auto g = ngram_recall(ref, cand, n);
    const auto s = sensitive_ngram_recall(ref, cand, n);
    c.expect(g.general_recall == double(oracle::shared(R, S)) / double(R.size()), "general recall mismatch");
    if (Rs.empty()) {
      c.expect(!s.sensitive_recall.has_value(), "sensitive recall defined with empty R*");
    } else {
      c.expect(s.sensitive_recall.has_value() &&
                   *s.sensitive_recall == double(oracle::shared(Rs, S)) / double(Rs.size()),
               "sensitive recall mismatch");
    }
  }
}

// --- 2 -----------------------------------------------------------------------------------

void f1_oracle(Check& c) {
  std::mt19937_64 rng(2002);
  for (int trial = 0; trial < 1000; ++trial) {
    const Corpus gold = oracle::random_corpus(rng, 1 + rng() % 5, 60);
    std::vector<Document> pd = gold.documents();
    for (auto& d : pd) d.labels = oracle::random_bio(rng, d.tokens.size(), {"NAME", "DATE", "LOC"});
    const Corpus pred(pd, gold.label_set());
    const auto r = token_f1(gold, pred);
    std::size_t tp = 0, fp = 0, fn = 0;
    for (const auto& [cls, m] : oracle::confusion(gold, pred)) {
      tp += m.tp;
      fp += m.fp;
      fn += m.fn;
      const auto& pc = r.per_class.at(cls);
      c.expect(pc.tp == m.tp && pc.fp == m.fp && pc.fn == m.fn, "per-class counts differ for " + cls);
    }
    c.expect(r.tp == tp && r.fp == fp && r.fn == fn, "micro counts differ");
    const double p = tp + fp ? double(tp) / double(tp + fp) : 0.0;
    const double rc = tp + fn ? double(tp) / double(tp + fn) : 0.0;
    const double f = p + rc > 0 ? 2 * p * rc / (p + rc) : 0.0;
    c.expect(std::abs(r.micro_f1 - f) <= 1e-12, "micro F1 not re-derivable from counts");
  }
}

// --- 4 -----------------------------------------------------------------------------------

Distribution random_dist(std::mt19937_64& rng) {
  Distribution d;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const std::size_t n = 1 + rng() % 30;
  for (std::size_t i = 0; i < n; ++i) d["w" + std::to_string(rng() % 40)] = rng() % 4 == 0 ? 0.25 : u(rng);
  double s = 0;
  for (const auto& [_, p] : d) s += p;
  for (auto& [_, p] : d) p /= s;
  return d;
}

void sampling(Check& c) {
  std::mt19937_64 rng(4004);
  std::uniform_real_distribution<double> u(0.01, 1.0);
  for (int i = 0; i < 10000; ++i) {
    const auto d = random_dist(rng);
    const double top_p = u(rng);
    // the nucleus: every kept word outweighs (or ties and precedes) every dropped word,
    // and dropping the lightest kept word falls short of top_p
    const auto f = nucleus_filter(d, top_p);
    std::vector<std::pair<std::string, double>> v(d.begin(), d.end());
    std::sort(v.begin(), v.end(), [](const auto& a, const auto& b) {
      return a.second != b.second ? a.second > b.second : a.first < b.first;
    });
    double cum = 0;
    std::size_t need = 0;
    while (need < v.size() && cum < top_p - 1e-12) cum += v[need++].second;
    bool same = f.size() == need;
    for (std::size_t k = 0; same && k < need; ++k) same = f.contains(v[k].first);
    c.expect(same, "nucleus differs from the top-p prefix");

    const auto t1 = apply_temperature(d, 1.0);
    for (const auto& [w, p] : d) c.expect(std::abs(t1.at(w) - p) <= 1e-12, "t=1 is not the identity");
  }

  // empirical frequencies of the generator's sampler against the composed filtered distribution
  const Corpus corpus = make_template_corpus(sepr_like_spec(300), 4);
  const NGramLM lm = train_lm(corpus, 3, 0.1);
  GenerationConfig cfg;
  cfg.temperature = 0.8;
  cfg.top_p = 0.95;
  const std::vector<std::string> history = {"Patienten"};
  const auto target = nucleus_filter(apply_temperature(next_token_distribution(lm, history), 0.8), 0.95);
  c.expect(step_distribution(lm, history, cfg, false).size() == target.size(), "step distribution support differs");

  Sampler sampler(lm, cfg.temperature, cfg.top_p);
  const auto ctx = lm.encode_context(history);
  Rng r(44);
  const int draws = 100000;
  std::map<std::string, int> counts;
  for (int i = 0; i < draws; ++i) counts[lm.symbols()[sampler.draw(ctx, false, r)]]++;
  double l1 = 0;
  for (const auto& [w, p] : target) l1 += std::abs(counts[w] / double(draws) - p);
  for (const auto& [w, n] : counts) {
    c.expect(target.contains(w), "sampled out-of-nucleus word " + w);
  }
  c.expect(l1 <= 0.05, "L1 " + std::to_string(l1));
}

// --- 3, 5, 6 ---------------------------------------------------------------------------

struct Desk {
  std::vector<RunResult> da, ma;
  RunResult mult1;
  const RunResult& base() const { return da.back(); }  // da = ma = 0.95, mult 4.0
};

Desk run_desk_grid() {
  ExperimentConfig base;
  base.seed = 7;
  base.template_documents = 2000;
  base.folds = 5;
  const Corpus corpus = load_experiment_corpus(base);

  std::vector<ExperimentConfig> cells = ablation_grid(base, {parse_axis("da_fraction=0,0.05,0.25,0.5,0.95")});
  for (const auto& c : ablation_grid(base, {parse_axis("ma_fraction=0.05,0.25,0.5")})) cells.push_back(c);
  for (const auto& c : ablation_grid(base, {parse_axis("synth_multiplier=1")})) cells.push_back(c);
  const auto runs = run_grid(cells, corpus);

  Desk d;
  d.da.assign(runs.begin(), runs.begin() + 5);
  d.ma.assign(runs.begin() + 5, runs.begin() + 8);
  d.ma.push_back(d.base());
  d.mult1 = runs[8];
  return d;
}

double mean_of(const RunResult& r, const std::string& k) { return r.aggregates.at(k).mean; }

void structural(Check& c, const Desk& d) {
  const auto& run = d.base();
  c.expect(run.complete(), "run incomplete");
  c.expect(TrainingMeta{}.epochs == 6, "tagger epochs default");
  for (const auto& f : run.folds) {
    const auto& g = f.manifest.at("generation");
    const auto& a = f.manifest.at("annotation");
    c.expect(g.at("prompt_words") == 3 && g.at("prompts_are_leading_words") == true, "prompts are not the first 3 words");
    c.expect(g.at("min_tokens") == 10, "min_tokens");
    c.expect(g.at("min_synthetic_words").get<std::size_t>() >= 10, "synthetic text shorter than 10 words");
    const std::size_t longest = g.at("longest_validation_words");
    c.expect(g.at("max_tokens") == std::max<std::size_t>(50, longest), "max_tokens rule");
    c.expect(g.at("max_synthetic_words").get<std::size_t>() <= g.at("max_tokens").get<std::size_t>(), "text over max_tokens");
    c.expect(g.at("samples_per_prompt") == 80, "samples_per_prompt");
    c.expect(a.at("max_chunk_words").get<std::size_t>() <= 128 && a.at("chunk_words") == 128, "chunks over 128 words");
    c.expect(a.at("epochs") == 6, "annotation epochs");
  }
}

void utility(Check& c, const Desk& d) {
  const auto& run = d.base();
  c.expect(run.complete(), "run incomplete");
  const double gold = mean_of(run, "gold_f1"), synth = mean_of(run, "synthetic_f1");
  std::printf("  gold F1 %.3f, synthetic F1 %.3f, delta %.3f\n", gold, synth, gold - synth);
  c.expect(gold >= 0.90, "gold F1 below 0.90");
  c.expect(gold - synth <= 0.10, "synthetic F1 more than 0.10 below gold");
}

void trends(Check& c, const Desk& d) {
  for (const auto* group : {&d.da, &d.ma}) {
    for (const auto& r : *group) c.expect(r.complete(), "incomplete cell " + r.config.coordinate);
  }
  c.expect(d.mult1.complete(), "incomplete mult=1 cell");
  if (!c.ok) return;

  std::printf("  ma:");
  for (const auto& r : d.ma) std::printf(" %.3f", mean_of(r, "synthetic_f1"));
  std::printf("\n  da:");
  for (const auto& r : d.da) std::printf(" %.3f", mean_of(r, "synthetic_f1"));
  std::printf("\n");

  for (std::size_t i = 1; i < d.ma.size(); ++i) {
    c.expect(mean_of(d.ma[i], "synthetic_f1") >= mean_of(d.ma[i - 1], "synthetic_f1"), "F1 decreases with ma_fraction");
  }
  for (std::size_t i = 1; i < d.da.size(); ++i) {
    c.expect(mean_of(d.da[0], "synthetic_f1") < mean_of(d.da[i], "synthetic_f1"), "da=0 is not the worst cell");
  }
  const double r5_lo = mean_of(d.da[1], "recall_5"), r5_hi = mean_of(d.da[4], "recall_5");
  std::printf("  5-gram recall da=0.05 %.3f, da=0.95 %.3f\n", r5_lo, r5_hi);
  c.expect(r5_hi < r5_lo, "5-gram recall does not decrease from da=0.05 to da=0.95");

  const auto m1 = d.mult1.aggregates.at("synthetic_f1"), m4 = d.base().aggregates.at("synthetic_f1");
  const double pooled = std::sqrt((m1.std * m1.std + m4.std * m4.std) / 2);
  std::printf("  mult 1.0 %.4f±%.4f, mult 4.0 %.4f±%.4f, pooled std %.4f\n", m1.mean, m1.std, m4.mean, m4.std, pooled);
  c.expect(std::abs(m1.mean - m4.mean) <= pooled, "mult=1.0 not within one pooled std of mult=4.0");
}

// --- 7 -----------------------------------------------------------------------------------

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

void determinism(Check& c, const std::string& cli) {
  const fs::path root = fs::temp_directory_path() / ("synthner-acceptance-" + std::to_string(::getpid()));
  fs::remove_all(root);
  for (const char* name : {"a", "b"}) {
    const std::string cmd = "\"" + cli + "\" grid --axis da_fraction=0.05,0.95 --axis synth_multiplier=1,4" +
                            " --seed 11 --folds 2 --set template.documents=300 --report-format json -o \"" +
                            (root / name).string() + "\" > /dev/null";
    c.expect(std::system(cmd.c_str()) == 0, std::string("grid run ") + name + " failed");
  }
  for (const char* file : {"results.json", "manifest.json", "report.json"}) {
    const auto a = slurp(root / "a" / file), b = slurp(root / "b" / file);
    c.expect(!a.empty(), std::string(file) + " missing");
    c.expect(a == b, std::string(file) + " differs between runs");
  }
  fs::remove_all(root);
}

// --- 8 -----------------------------------------------------------------------------------

template <class E, class F>
bool throws(F&& f) {
  try {
    f();
  } catch (const E&) {
    return true;
  } catch (...) {
    return false;
  }
  return false;
}

void remote(Check& c) {
  StubServer stub;
  stub.start();
  RetryPolicy retry;
  retry.base_delay = std::chrono::milliseconds(10);
  RemoteClient client(stub.endpoint(), retry);

  const std::vector<Prompt> prompts = {{"a", {"Patienten", "har", "feber"}}, {"b", {"Ana", "bor", "i"}}};
  GenerationConfig gen;
  gen.max_tokens = 50;
  const auto texts = generate_remote(client, prompts, gen, {});
  c.expect(texts.size() == 160, "generate cardinality");
  for (std::size_t k = 0; k < texts.size(); ++k) {
    const auto w = text::split_words(texts[k]);
    const auto& p = prompts[k / 80].words;
    c.expect(w.size() >= p.size() && std::equal(p.begin(), p.end(), w.begin()), "generate ordering");
  }

  std::vector<Document> docs;
  for (int i = 0; i < 40; ++i) docs.push_back(oracle::make_doc("d" + std::to_string(i), "Ana bor i Lund nu"));
  std::string long_text;
  for (int i = 0; i < 300; ++i) long_text += i % 7 ? "ord " : "Ord ";
  docs.push_back(oracle::make_doc("long", long_text));
  const Corpus corpus(docs);
  StubBehavior b;
  b.annotate = StubBehavior::Annotate::capitalized;
  stub.set_behavior(b);
  const Corpus annotated = annotate_remote(client, corpus, 16, 128, {"NAME"});
  c.expect(annotated.ids() == corpus.ids(), "annotate ordering");
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    c.expect(annotated[i].labels.size() == corpus[i].tokens.size() && is_valid_bio(annotated[i].labels),
             "annotate cardinality");
  }
  c.expect(annotated[0].labels == std::vector<std::string>{"B-NAME", "O", "O", "B-NAME", "O"}, "annotate content");

  b = {};
  b.generate = StubBehavior::Generate::short_texts;
  stub.set_behavior(b);
  c.expect(throws<ResponseValidationError>([&] { generate_remote(client, prompts, gen, {}); }), "short texts accepted");
  b.generate = StubBehavior::Generate::missing_text;
  stub.set_behavior(b);
  c.expect(throws<RemoteProtocolError>([&] { generate_remote(client, prompts, gen, {}); }), "missing text accepted");
  b = {};
  b.malformed = true;
  stub.set_behavior(b);
  c.expect(throws<RemoteProtocolError>([&] { annotate_remote(client, corpus); }), "malformed body accepted");
  b = {};
  b.annotate = StubBehavior::Annotate::short_labels;
  stub.set_behavior(b);
  c.expect(throws<ResponseValidationError>([&] { annotate_remote(client, corpus); }), "short labels accepted");
  b.annotate = StubBehavior::Annotate::unknown_label;
  stub.set_behavior(b);
  c.expect(throws<ResponseValidationError>([&] { annotate_remote(client, corpus); }), "unknown label accepted");

  b = {};
  b.fail_first = -1;
  stub.set_behavior(b);
  const std::size_t before = stub.requests("/v1/generate");
  c.expect(throws<RemoteUnavailable>([&] { generate_remote(client, prompts, gen, {}); }), "persistent 5xx not fatal");
  c.expect(stub.requests("/v1/generate") - before == 3, "retry budget is not 3 attempts");
  stub.stop();
}

}  // namespace

int main(int argc, char** argv) {
  const std::string cli = argc > 1 ? argv[1] : "synthner";

  criterion(1, "n-gram recall matches brute-force enumeration", 30, ngram_oracle);
  criterion(2, "token F1 matches brute-force confusion counts", 0, f1_oracle);
  // The ablation grid (9 cells x 5 folds) feeds criteria 3, 5 and 6. Its da = ma = 0.95,
  // mult = 4.0 cell is the end-to-end run; the whole grid has to fit the single-run budget.
  Desk desk;
  double desk_seconds = 0;
  criterion(3, "structural constants in an end-to-end run", 0, [&](Check& c) {
    const auto t0 = std::chrono::steady_clock::now();
    desk = run_desk_grid();
    desk_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    structural(c, desk);
  });
  criterion(4, "nucleus/temperature sampling correctness", 60, sampling);
  criterion(5, "desk-scale utility (gold >= 0.90, delta <= 0.10)", 0, [&](Check& c) {
    utility(c, desk);
    c.expect(desk_seconds < 600, "grid took " + std::to_string(desk_seconds) + " s");
  });
  criterion(6, "trend directions over the ablation grid", 0, [&](Check& c) { trends(c, desk); });
  criterion(7, "grid reruns are byte-identical", 0, [&](Check& c) { determinism(c, cli); });
  criterion(8, "remote protocol conformance against the stub server", 30, remote);
  return failures;
}
