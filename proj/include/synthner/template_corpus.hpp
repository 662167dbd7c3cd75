#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "synthner/corpus.hpp"

namespace synthner {

struct EntityClass {
  std::string name;
  /// Relative frequency used when a template has a wildcard slot "<*>".
  double weight = 1.0;
  /// Surface forms; entries with spaces become multi-token entities (B- then I-).
  std::vector<std::string> lexicon;
};

/// Parameters of the deterministic template corpus.
///
/// Templates are whitespace-separated sentences in which "<CLASS>" is filled from that
/// class's lexicon and "<*>" from a class drawn by weight. Documents are a random number
/// of sentences, each a template or, with `phrase_probability`, a slot-free carrier phrase.
/// Lexicon entries are drawn with Zipf skew so rare forms show up only in larger samples.
struct TemplateSpec {
  std::size_t documents = 500;
  Language language = Language::sv;
  std::vector<EntityClass> classes;
  std::vector<std::string> templates;
  std::vector<std::string> phrases;
  std::size_t min_sentences = 2;
  std::size_t max_sentences = 6;
  double phrase_probability = 0.35;
  double lexicon_skew = 1.0;
  std::string id_prefix = "tpl";
};

/// Swedish clinical-note-like inventory with 9 classes (SEPR PHI shape).
TemplateSpec sepr_like_spec(std::size_t documents = 500);
/// Spanish clinical-case-like inventory with 19 classes (MEDDOCAN shape).
TemplateSpec meddocan_like_spec(std::size_t documents = 500);
/// "sepr" or "meddocan".
TemplateSpec template_preset(const std::string& name, std::size_t documents);

/// Throws ValidationError for an unknown slot class or an empty lexicon of a used class.
Corpus make_template_corpus(const TemplateSpec& spec, std::uint64_t seed);

}  // namespace synthner
