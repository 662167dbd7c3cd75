#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "synthner/lm.hpp"
#include "synthner/rng.hpp"

namespace synthner {

/// Entries by descending probability, ties broken by ascending word.
std::vector<std::pair<std::string, double>> sorted_by_mass(const Distribution& dist);

/// p_i' proportional to p_i^(1/t). Computed in log space, so small t approaches argmax
/// without underflow. Throws ValidationError for t <= 0.
Distribution apply_temperature(const Distribution& dist, double t);

/// Keeps the shortest prefix of sorted_by_mass(dist) whose mass reaches top_p and
/// renormalizes it. top_p = 1 returns the distribution unchanged.
Distribution nucleus_filter(const Distribution& dist, double top_p);

/// Removes `word` and renormalizes; empty when it held all the mass.
Distribution without(const Distribution& dist, std::string_view word);

/// Categorical draw over a normalized distribution, walking sorted_by_mass order.
std::string sample(const Distribution& dist, Rng& rng);

}  // namespace synthner
