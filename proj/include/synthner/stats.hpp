#pragma once

#include <cmath>
#include <span>

namespace synthner {

/// Mean with population standard deviation.
struct MeanStd {
  double mean = 0.0;
  double std = 0.0;

  bool operator==(const MeanStd&) const = default;
};

inline MeanStd mean_std(std::span<const double> xs) {
  if (xs.empty()) return {};
  double sum = 0.0;
  for (double x : xs) sum += x;
  const double mean = sum / static_cast<double>(xs.size());
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / static_cast<double>(xs.size()))};
}

}  // namespace synthner
