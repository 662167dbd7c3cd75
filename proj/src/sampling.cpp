#include "synthner/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "synthner/error.hpp"

namespace synthner {

namespace {

Distribution normalized(Distribution d) {
  double z = 0.0;
  for (const auto& [w, p] : d) z += p;
  if (z <= 0.0) return {};
  for (auto& [w, p] : d) p /= z;
  return d;
}

}  // namespace

std::vector<std::pair<std::string, double>> sorted_by_mass(const Distribution& dist) {
  std::vector<std::pair<std::string, double>> v(dist.begin(), dist.end());
  // std::map iteration is already word-ascending, so a stable sort keeps the tie order.
  std::stable_sort(v.begin(), v.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  return v;
}

Distribution apply_temperature(const Distribution& dist, double t) {
  if (!(t > 0.0)) throw ValidationError("temperature must be positive");
  if (t == 1.0) return normalized(dist);
  double max_log = -std::numeric_limits<double>::infinity();
  for (const auto& [w, p] : dist) {
    if (p > 0.0) max_log = std::max(max_log, std::log(p));
  }
  Distribution out;
  for (const auto& [w, p] : dist) {
    out.emplace(w, p > 0.0 ? std::exp((std::log(p) - max_log) / t) : 0.0);
  }
  return normalized(std::move(out));
}

Distribution nucleus_filter(const Distribution& dist, double top_p) {
  if (!(top_p > 0.0 && top_p <= 1.0)) throw ValidationError("top_p must be in (0, 1]");
  if (top_p >= 1.0) return normalized(dist);
  Distribution kept;
  double cum = 0.0;
  for (const auto& [w, p] : sorted_by_mass(dist)) {
    if (p <= 0.0) break;
    kept.emplace(w, p);
    cum += p;
    if (cum >= top_p - 1e-12) break;
  }
  return normalized(std::move(kept));
}

Distribution without(const Distribution& dist, std::string_view word) {
  Distribution out = dist;
  if (auto it = out.find(std::string(word)); it != out.end()) out.erase(it);
  return normalized(std::move(out));
}

std::string sample(const Distribution& dist, Rng& rng) {
  if (dist.empty()) throw ValidationError("cannot sample from an empty distribution");
  const auto sorted = sorted_by_mass(dist);
  double r = rng.uniform();
  for (const auto& [w, p] : sorted) {
    if (r < p) return w;
    r -= p;
  }
  return sorted.back().first;
}

}  // namespace synthner
