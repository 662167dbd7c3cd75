#include <doctest.h>

#include <cmath>

#include "synthner/error.hpp"
#include "synthner/pipeline.hpp"
#include "synthner/stats.hpp"

using namespace synthner;

namespace {

ExperimentConfig small_config() {
  ExperimentConfig c;
  c.template_documents = 300;
  c.folds = 2;
  c.seed = 5;
  c.metrics.n_values = {3, 5};
  return c;
}

}  // namespace

TEST_CASE("config text round trip") {
  ExperimentConfig c;
  c.seed = 99;
  c.da_fraction = 0.25;
  c.generator.order = 4;
  c.generation.top_p = 0.9;
  c.metrics.n_values = {3, 7};
  c.metrics.language = Language::es;
  c.metrics.granularity = parse_granularity("char-3");
  CHECK(parse_config(write_config(c)) == c);
  CHECK(config_from_json(nlohmann::json::parse(to_json(c).dump())) == c);
  CHECK(config_keys().size() > 20);
}

TEST_CASE("config parsing") {
  const auto c = parse_config("# comment\nseed = 3\n\nda_fraction = 0.5  # trailing\ngeneration.max_tokens = auto\n");
  CHECK(c.seed == 3);
  CHECK(c.da_fraction == 0.5);
  CHECK(c.generation.max_tokens == 0);

  try {
    parse_config("seed = 1\nnot_a_key = 2\n");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
  }
  CHECK_THROWS_AS(parse_config("seed 1\n"), ParseError);
  CHECK_THROWS_AS(parse_config("folds = many\n"), ParseError);

  ExperimentConfig bad;
  bad.da_fraction = 0.99;
  CHECK_THROWS_AS(bad.validate(), ValidationError);
  bad = {};
  bad.generator.backend = Backend::remote;
  CHECK_THROWS_AS(bad.validate(), ValidationError);
}

TEST_CASE("ablation grid") {
  const ExperimentConfig base;
  const auto da = ablation_grid(base, {parse_axis("da_fraction")});
  REQUIRE(da.size() == 5);
  CHECK(da[0].da_fraction == 0.0);
  CHECK(da[4].da_fraction == 0.95);
  CHECK(da[1].coordinate == "da_fraction=0.05");
  for (const auto& c : da) {
    CHECK(c.ma_fraction == base.ma_fraction);
    CHECK(c.seed == base.seed);
  }

  const auto mult = ablation_grid(base, {parse_axis("synth_multiplier")});
  REQUIRE(mult.size() == 3);
  CHECK(mult[0].synth_multiplier == 0.05);
  CHECK(mult[2].synth_multiplier == 4.0);

  const auto two = ablation_grid(base, {parse_axis("ma_fraction=0.05,0.95"), parse_axis("generator_capacity=small,large")});
  REQUIRE(two.size() == 4);
  CHECK(two[0].generator.order == 2);
  CHECK(two[1].generator.order == 4);
  CHECK(two[1].ma_fraction == 0.05);
  CHECK(two[2].ma_fraction == 0.95);

  const auto none = ablation_grid(base, {});
  REQUIRE(none.size() == 1);
  CHECK(none[0] == base);

  CHECK_THROWS_AS(parse_axis("temperature"), ValidationError);
  CHECK_THROWS_AS(ablation_grid(base, {parse_axis("da_fraction"), parse_axis("da_fraction")}), ValidationError);
}

TEST_CASE("samples per prompt") {
  // prompts come from the 5% validation slice: 4x the non-test size needs 80 per prompt
  CHECK(derive_samples_per_prompt(4.0, 1520, 76) == 80);
  CHECK(derive_samples_per_prompt(1.0, 1520, 76) == 20);
  CHECK(derive_samples_per_prompt(0.001, 100, 50) == 1);
  CHECK_THROWS_AS(derive_samples_per_prompt(4.0, 100, 0), ValidationError);
}

TEST_CASE("fold seeds") {
  ExperimentConfig a, b;
  b.coordinate = "da_fraction=0.05";
  const auto sa = fold_seeds(a, 1), sb = fold_seeds(b, 1);
  CHECK(sa.split == sb.split);
  CHECK(sa.ma_subset == sb.ma_subset);
  CHECK(sa.gold_tagger == sb.gold_tagger);
  CHECK(sa.generation != sb.generation);
  CHECK(fold_seeds(a, 0).ma_subset != sa.ma_subset);
}

TEST_CASE("aggregate") {
  FoldResult f1, f2;
  f1.ok = f2.ok = true;
  f1.synthetic_f1.micro_f1 = 0.8;
  f2.synthetic_f1.micro_f1 = 0.6;
  const auto agg = aggregate({f1, f2});
  CHECK(agg.at("synthetic_f1").mean == doctest::Approx(0.7));
  CHECK(agg.at("synthetic_f1").std == doctest::Approx(0.1));
  f2.ok = false;
  CHECK(aggregate({f1, f2}).empty());
}

TEST_CASE("small experiment end to end") {
  const auto cfg = small_config();
  const Corpus corpus = load_experiment_corpus(cfg);
  const RunResult run = run_experiment(cfg, corpus);
  REQUIRE(run.complete());
  REQUIRE(run.folds.size() == 2);

  // aggregates are the population mean/std of the fold scalars
  for (const auto& [key, ms] : run.aggregates) {
    std::vector<double> xs;
    for (const auto& f : run.folds) xs.push_back(fold_scalars(f).at(key));
    const double mean = (xs[0] + xs[1]) / 2;
    CHECK(std::abs(ms.mean - mean) < 1e-12);
    CHECK(std::abs(ms.std - std::abs(xs[0] - xs[1]) / 2) < 1e-12);
  }
  for (const auto& f : run.folds) {
    const auto& m = f.manifest;
    CHECK(m["leakage"]["gold_training_disjoint_test"] == true);
    CHECK(m["leakage"]["da_training_disjoint_validation"] == true);
    const std::size_t non_test = m["sizes"]["non_test"], prompts = m["generation"]["prompts"];
    CHECK(m["generation"]["samples_per_prompt"] == derive_samples_per_prompt(4.0, non_test, prompts));
    CHECK(m["generation"]["prompts_are_leading_words"] == true);
    CHECK(f.delta == doctest::Approx(f.gold_f1.micro_f1 - f.synthetic_f1.micro_f1));
    CHECK(f.privacy.size() == 2);
  }

  SUBCASE("deterministic") {
    const RunResult again = run_experiment(cfg, corpus);
    CHECK(results_json({again}).dump() == results_json({run}).dump());
    CHECK(manifests_json({again}).dump() == manifests_json({run}).dump());
  }

  SUBCASE("json round trip") {
    const auto back = results_from_json(nlohmann::json::parse(results_json({run}).dump()));
    REQUIRE(back.size() == 1);
    CHECK(back[0].config == run.config);
    CHECK(back[0].aggregates.size() == run.aggregates.size());
    for (const auto& [k, v] : run.aggregates) {
      CHECK(back[0].aggregates.at(k).mean == v.mean);
      CHECK(back[0].aggregates.at(k).std == v.std);
    }
  }

  SUBCASE("reports") {
    const auto table = emit_report({run}, ReportFormat::table);
    CHECK(table.find("gold") != std::string::npos);
    CHECK(table.find("5-gram recall") != std::string::npos);
    const auto csv = emit_report({run}, ReportFormat::csv);
    CHECK(csv.rfind("setting,complete,folds", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 2);
    CHECK(emit_report({run}, ReportFormat::json).find("synthner-results") != std::string::npos);
    CHECK_THROWS_AS(parse_report_format("xml"), ValidationError);
  }
}

TEST_CASE("an unreachable service gives a partial run") {
  auto cfg = small_config();
  cfg.generator.backend = Backend::remote;
  cfg.generator.endpoint = "http://127.0.0.1:1";
  const RunResult run = run_experiment(cfg);
  CHECK_FALSE(run.complete());
  CHECK(run.aggregates.empty());
  for (const auto& f : run.folds) {
    CHECK_FALSE(f.ok);
    CHECK(f.failed_stage == "adapt");
  }
  CHECK(emit_report({run}, ReportFormat::table).find("partial (0/2 folds)") != std::string::npos);
}
