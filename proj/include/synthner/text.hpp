#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace synthner::text {

/// Splits on ASCII whitespace; empty fields are dropped.
std::vector<std::string> split_words(std::string_view s);

std::string join(std::span<const std::string> parts, std::string_view sep);

/// UTF-8 code points of `s`. Invalid bytes decode as U+FFFD, one per byte.
std::u32string decode_utf8(std::string_view s);
std::string encode_utf8(std::u32string_view s);

bool is_upper(char32_t c);
bool is_lower(char32_t c);
bool is_digit(char32_t c);

/// Lowercases ASCII and the Latin-1 / Latin Extended-A letters used by Swedish and Spanish.
char32_t to_lower(char32_t c);
std::string to_lower(std::string_view s);

/// Word shape: upper -> X, lower -> x, digit -> d, anything else kept; runs of the same
/// shape character are cut at four ("Stockholm" -> "Xxxxx", "2019-03-12" -> "dddd-dd-dd").
std::string word_shape(std::string_view word);

/// First / last `n` code points (the whole word when shorter).
std::string prefix(std::string_view word, std::size_t n);
std::string suffix(std::string_view word, std::size_t n);

}  // namespace synthner::text
