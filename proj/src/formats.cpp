#include "synthner/formats.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "synthner/error.hpp"

namespace synthner {

namespace {

constexpr std::string_view kDocStart = "-DOCSTART-";

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    start = end + 1;
  }
  return lines;
}

std::vector<std::string_view> split_on(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    std::size_t end = line.find(sep, start);
    if (end == std::string_view::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, end - start));
    start = end + 1;
  }
  return out;
}

bool is_blank(std::string_view line) {
  return line.find_first_not_of(" \t") == std::string_view::npos;
}

struct PendingDoc {
  Document doc;
  std::vector<std::size_t> lines;
  bool explicit_start = false;
};

}  // namespace

ConllParse parse_conll(std::string_view text) {
  std::vector<Document> docs;
  std::vector<ParseWarning> warnings;
  PendingDoc cur;
  bool open = false;

  auto flush = [&] {
    if (open && (cur.explicit_start || !cur.doc.tokens.empty())) {
      if (cur.doc.id.empty()) cur.doc.id = "doc-" + std::to_string(docs.size());
      for (auto& r : repair_bio(cur.doc.labels)) {
        warnings.push_back({cur.lines[r.position], cur.doc.id, r.original, r.repaired});
      }
      docs.push_back(std::move(cur.doc));
    }
    cur = PendingDoc{};
    open = false;
  };

  const auto lines = split_lines(text);
  std::size_t blank_run = 0;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::size_t lineno = i + 1;
    std::string_view line = lines[i];
    if (is_blank(line)) {
      if (++blank_run == 2) flush();
      continue;
    }
    blank_run = 0;

    if (line.starts_with(kDocStart)) {
      auto fields = split_on(line, '\t');
      if (fields.size() == 1) fields = split_on(line, ' ');
      if (fields.size() != 2 && fields.size() != 4) {
        throw ParseError(lineno, "document sentinel needs 2 or 4 tab-separated fields");
      }
      if (fields[1] != kOutside) throw ParseError(lineno, "document sentinel label must be O");
      flush();
      open = true;
      cur.explicit_start = true;
      if (fields.size() == 4) {
        if (fields[2].empty()) throw ParseError(lineno, "empty document id");
        cur.doc.id = std::string(fields[2]);
        try {
          cur.doc.language = parse_language(fields[3]);
        } catch (const ValidationError& e) {
          throw ParseError(lineno, e.what());
        }
      }
      continue;
    }

    auto fields = split_on(line, '\t');
    if (fields.size() != 2) {
      throw ParseError(lineno, "expected token<TAB>label, found " + std::to_string(fields.size()) +
                                   " column(s)");
    }
    if (fields[0].empty()) throw ParseError(lineno, "empty token");
    if (!is_well_formed_label(fields[1])) {
      throw ParseError(lineno, "malformed label '" + std::string(fields[1]) + "'");
    }
    open = true;
    cur.doc.tokens.emplace_back(fields[0]);
    cur.doc.labels.emplace_back(fields[1]);
    cur.lines.push_back(lineno);
  }
  flush();
  return {Corpus(std::move(docs)), std::move(warnings)};
}

std::string write_conll(const Corpus& corpus) {
  std::string out;
  for (const auto& d : corpus.documents()) {
    if (d.id.find_first_of("\t\n\r") != std::string::npos) {
      throw ValidationError("document id '" + d.id + "' cannot be written to CoNLL");
    }
    out += kDocStart;
    out += "\tO\t";
    out += d.id;
    out += '\t';
    out += to_string(d.language);
    out += '\n';
    for (std::size_t i = 0; i < d.tokens.size(); ++i) {
      const auto& t = d.tokens[i];
      if (t.empty() || t.find_first_of("\t\n\r") != std::string::npos || t.starts_with(kDocStart)) {
        throw ValidationError("document '" + d.id + "': token " + std::to_string(i) +
                              " cannot be written to CoNLL");
      }
      out += t;
      out += '\t';
      out += d.labels[i];
      out += '\n';
    }
  }
  return out;
}

Corpus read_jsonl(std::string_view text) {
  std::vector<Document> docs;
  const auto lines = split_lines(text);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (is_blank(lines[i])) continue;
    const std::size_t lineno = i + 1;
    nlohmann::json rec;
    try {
      rec = nlohmann::json::parse(lines[i]);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(lineno, std::string("invalid JSON: ") + e.what());
    }
    Document d;
    try {
      d.id = rec.at("id").get<std::string>();
      d.tokens = rec.at("tokens").get<std::vector<std::string>>();
      d.labels = rec.at("labels").get<std::vector<std::string>>();
      if (rec.contains("language")) d.language = parse_language(rec.at("language").get<std::string>());
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(lineno, std::string("bad record: ") + e.what());
    } catch (const ValidationError& e) {
      throw ParseError(lineno, e.what());
    }
    if (d.tokens.size() != d.labels.size()) {
      throw ParseError(lineno, "record '" + d.id + "' has " + std::to_string(d.tokens.size()) +
                                   " tokens but " + std::to_string(d.labels.size()) + " labels");
    }
    docs.push_back(std::move(d));
  }
  return Corpus(std::move(docs));
}

std::string write_jsonl(const Corpus& corpus) {
  std::string out;
  for (const auto& d : corpus.documents()) {
    nlohmann::ordered_json rec;
    rec["id"] = d.id;
    rec["tokens"] = d.tokens;
    rec["labels"] = d.labels;
    rec["language"] = std::string(to_string(d.language));
    out += rec.dump();
    out += '\n';
  }
  return out;
}

CorpusFormat parse_corpus_format(std::string_view s) {
  if (s == "conll") return CorpusFormat::conll;
  if (s == "jsonl") return CorpusFormat::jsonl;
  throw ValidationError("unknown corpus format '" + std::string(s) + "'");
}

CorpusFormat format_from_path(const std::filesystem::path& path) {
  const auto ext = path.extension().string();
  return (ext == ".jsonl" || ext == ".json") ? CorpusFormat::jsonl : CorpusFormat::conll;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view contents) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ValidationError("cannot write '" + path.string() + "'");
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
}

Corpus load_corpus(const std::filesystem::path& path, CorpusFormat format,
                   std::vector<ParseWarning>* warnings) {
  const std::string text = read_file(path);
  if (format == CorpusFormat::jsonl) return read_jsonl(text);
  auto parsed = parse_conll(text);
  if (warnings) warnings->insert(warnings->end(), parsed.warnings.begin(), parsed.warnings.end());
  return std::move(parsed.corpus);
}

void save_corpus(const std::filesystem::path& path, const Corpus& corpus, CorpusFormat format) {
  write_file(path, format == CorpusFormat::jsonl ? write_jsonl(corpus) : write_conll(corpus));
}

}  // namespace synthner

namespace synthner {

nlohmann::ordered_json to_json(const FoldPlan& plan) {
  nlohmann::ordered_json folds = nlohmann::ordered_json::array();
  for (const auto& f : plan.folds) {
    folds.push_back({{"test_ids", f.test_ids},
                     {"validation_ids", f.validation_ids},
                     {"train_pool_ids", f.train_pool_ids}});
  }
  return {{"format", "synthner-fold-plan"},
          {"k", plan.k},
          {"val_fraction", plan.val_fraction},
          {"seed", plan.seed},
          {"folds", folds}};
}

FoldPlan plan_from_json(const nlohmann::json& j) {
  try {
    if (j.value("format", "") != "synthner-fold-plan") throw ValidationError("not a fold plan");
    FoldPlan plan;
    plan.k = j.at("k");
    plan.val_fraction = j.at("val_fraction");
    plan.seed = j.at("seed");
    for (const auto& f : j.at("folds")) {
      plan.folds.push_back({f.at("test_ids").get<std::vector<std::string>>(),
                            f.at("validation_ids").get<std::vector<std::string>>(),
                            f.at("train_pool_ids").get<std::vector<std::string>>()});
    }
    if (plan.folds.size() != plan.k) throw ValidationError("fold plan lists " + std::to_string(plan.folds.size()) + " folds, k = " + std::to_string(plan.k));
    return plan;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed fold plan: ") + e.what());
  }
}

}  // namespace synthner
