#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "synthner/error.hpp"
#include "synthner/sampling.hpp"

using namespace synthner;

namespace {

double total(const Distribution& d) {
  double s = 0;
  for (const auto& [_, p] : d) s += p;
  return s;
}

Distribution random_dist(std::mt19937_64& rng) {
  Distribution d;
  const std::size_t n = 1 + rng() % 30;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double s = 0;
  for (std::size_t i = 0; i < n; ++i) {
    // coarse values produce ties often
    const double w = rng() % 4 == 0 ? 0.25 : u(rng);
    d["w" + std::to_string(rng() % 40)] = w;
  }
  for (auto& [_, p] : d) s += p;
  for (auto& [_, p] : d) p /= s;
  return d;
}

// Smallest mass-sorted prefix reaching top_p, computed independently.
std::set<std::string> nucleus_oracle(const Distribution& d, double top_p) {
  std::vector<std::pair<std::string, double>> v(d.begin(), d.end());
  std::stable_sort(v.begin(), v.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  std::set<std::string> kept;
  double cum = 0;
  for (const auto& [w, p] : v) {
    kept.insert(w);
    cum += p;
    if (cum >= top_p - 1e-12) break;
  }
  return kept;
}

}  // namespace

TEST_CASE("apply_temperature") {
  const Distribution d = {{"a", 0.8}, {"b", 0.2}};
  const auto same = apply_temperature(d, 1.0);
  CHECK(same.at("a") == doctest::Approx(0.8).epsilon(1e-12));
  CHECK(same.at("b") == doctest::Approx(0.2).epsilon(1e-12));

  const double z = std::sqrt(0.8) + std::sqrt(0.2);
  const auto hot = apply_temperature(d, 2.0);
  CHECK(hot.at("a") == doctest::Approx(std::sqrt(0.8) / z).epsilon(1e-12));
  CHECK(hot.at("b") == doctest::Approx(std::sqrt(0.2) / z).epsilon(1e-12));

  const auto cold = apply_temperature(d, 1e-3);
  CHECK(cold.at("a") == doctest::Approx(1.0).epsilon(1e-12));

  CHECK_THROWS_AS(apply_temperature(d, 0.0), ValidationError);
  CHECK_THROWS_AS(apply_temperature(d, -1.0), ValidationError);
}

TEST_CASE("temperature 1 is the identity on random distributions") {
  std::mt19937_64 rng(8);
  for (int i = 0; i < 2000; ++i) {
    const auto d = random_dist(rng);
    const auto t = apply_temperature(d, 1.0);
    REQUIRE(t.size() == d.size());
    for (const auto& [w, p] : d) REQUIRE(std::abs(t.at(w) - p) <= 1e-12);
  }
}

TEST_CASE("nucleus_filter") {
  const Distribution d = {{"a", 0.5}, {"b", 0.3}, {"c", 0.2}};
  const auto all = nucleus_filter(d, 1.0);
  CHECK(all.size() == 3);
  CHECK(all.at("c") == doctest::Approx(0.2));

  const auto kept = nucleus_filter(d, 0.7);
  REQUIRE(kept.size() == 2);
  CHECK(kept.at("a") == doctest::Approx(0.625).epsilon(1e-12));
  CHECK(kept.at("b") == doctest::Approx(0.375).epsilon(1e-12));

  // ties go to the lexicographically smaller word
  const Distribution tie = {{"b", 0.25}, {"a", 0.25}, {"c", 0.5}};
  const auto t = nucleus_filter(tie, 0.6);
  CHECK(t.size() == 2);
  CHECK(t.contains("a"));
  CHECK(t.contains("c"));
}

TEST_CASE("nucleus_filter never leaves the top-p prefix") {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> u(0.01, 1.0);
  for (int i = 0; i < 10000; ++i) {
    const auto d = random_dist(rng);
    const double p = i % 10 == 0 ? 1.0 : u(rng);
    const auto f = nucleus_filter(d, p);
    std::set<std::string> keys;
    for (const auto& [w, _] : f) keys.insert(w);
    REQUIRE(!keys.empty());
    REQUIRE(keys == nucleus_oracle(d, p));
    REQUIRE(std::abs(total(f) - 1.0) <= 1e-9);
  }
}

TEST_CASE("without and sample") {
  const Distribution d = {{"a", 0.5}, {"</s>", 0.5}};
  const auto w = without(d, "</s>");
  REQUIRE(w.size() == 1);
  CHECK(w.at("a") == doctest::Approx(1.0));
  CHECK(without(Distribution{{"x", 1.0}}, "x").empty());

  Rng rng(1);
  const Distribution q = {{"a", 0.7}, {"b", 0.2}, {"c", 0.1}};
  std::map<std::string, int> n;
  for (int i = 0; i < 100000; ++i) n[sample(q, rng)]++;
  double l1 = 0;
  for (const auto& [k, p] : q) l1 += std::abs(n[k] / 100000.0 - p);
  CHECK(l1 < 0.02);
}
