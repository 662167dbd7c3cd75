#pragma once

#include <string>
#include <vector>

namespace synthner {

/// Aligned plain-text table: first column left-aligned, the rest right-aligned,
/// widths counted in code points.
std::string render_table(const std::vector<std::string>& header,
                         const std::vector<std::vector<std::string>>& rows);

/// Fixed-point number with `decimals` digits.
std::string fixed(double v, int decimals = 3);

}  // namespace synthner
