#pragma once

#include <string>
#include <string_view>

#include "synthner/corpus.hpp"

namespace synthner {

/// Identifies the shipped suffix tables; diversity values are only comparable within one version.
inline constexpr std::string_view kStemmerVersion = "snowball-lite-1";

/// Lowercases, then strips suffixes with a simplified Snowball rule table for Swedish or
/// Spanish, repeating until the word stops changing (so stem(stem(w)) == stem(w)).
/// Language::other only lowercases.
std::string stem(std::string_view token, Language language);

}  // namespace synthner
