#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "synthner/corpus.hpp"

namespace synthner {

/// A label rewritten while reading (an "I-X" that opened an entity).
struct ParseWarning {
  std::size_t line;
  std::string document_id;
  std::string original;
  std::string repaired;
};

struct ConllParse {
  Corpus corpus;
  std::vector<ParseWarning> warnings;
};

/// Reads "token<TAB>label" lines. "-DOCSTART-\tO" (optionally followed by "\t<id>\t<language>")
/// or two consecutive blank lines start a new document; a single blank line separates
/// sentences inside a document. Documents without an explicit id are named "doc-<index>".
ConllParse parse_conll(std::string_view text);
std::string write_conll(const Corpus& corpus);

/// One {"id", "tokens", "labels", "language"} object per line.
Corpus read_jsonl(std::string_view text);
std::string write_jsonl(const Corpus& corpus);

enum class CorpusFormat { conll, jsonl };

CorpusFormat parse_corpus_format(std::string_view s);
/// Format implied by a file extension (.jsonl / .json -> jsonl, anything else -> conll).
CorpusFormat format_from_path(const std::filesystem::path& path);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view contents);

/// Loads a corpus file; CoNLL repair warnings are appended to `warnings` when given.
Corpus load_corpus(const std::filesystem::path& path, CorpusFormat format,
                   std::vector<ParseWarning>* warnings = nullptr);
void save_corpus(const std::filesystem::path& path, const Corpus& corpus, CorpusFormat format);

nlohmann::ordered_json to_json(const FoldPlan& plan);
FoldPlan plan_from_json(const nlohmann::json& j);

}  // namespace synthner
