#include "synthner/metrics.hpp"

#include <algorithm>
#include <unordered_map>

#include "synthner/error.hpp"
#include "synthner/stemmer.hpp"
#include "synthner/table.hpp"
#include "synthner/text.hpp"

namespace synthner {

// --- token F1 ------------------------------------------------------------------------------

ClassScore score_counts(std::size_t tp, std::size_t fp, std::size_t fn) {
  ClassScore s;
  s.tp = tp;
  s.fp = fp;
  s.fn = fn;
  s.support = tp + fn;
  s.precision = tp + fp ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
  s.recall = tp + fn ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
  s.f1 = s.precision + s.recall > 0.0 ? 2.0 * s.precision * s.recall / (s.precision + s.recall) : 0.0;
  return s;
}

F1Report token_f1(const Corpus& gold, const Corpus& predicted) {
  if (gold.size() != predicted.size()) {
    throw ValidationError("gold has " + std::to_string(gold.size()) + " documents, prediction has " +
                          std::to_string(predicted.size()));
  }
  struct Counts {
    std::size_t tp = 0, fp = 0, fn = 0;
  };
  std::map<std::string, Counts> counts;
  for (const auto& c : gold.label_set()) counts[c];
  for (const auto& c : predicted.label_set()) counts[c];

  for (const auto& g : gold.documents()) {
    if (!predicted.contains(g.id)) throw ValidationError("document '" + g.id + "' missing from prediction");
    const Document& p = predicted.at(g.id);
    if (p.tokens != g.tokens) throw ValidationError("document '" + g.id + "': token sequences differ");
    for (std::size_t i = 0; i < g.tokens.size(); ++i) {
      const std::string gc(label_class(g.labels[i]));
      const std::string pc(label_class(p.labels[i]));
      if (!gc.empty() && gc == pc) {
        ++counts[gc].tp;
        continue;
      }
      if (!pc.empty()) ++counts[pc].fp;
      if (!gc.empty()) ++counts[gc].fn;
    }
  }

  F1Report r;
  for (const auto& [cls, c] : counts) {
    r.per_class[cls] = score_counts(c.tp, c.fp, c.fn);
    r.tp += c.tp;
    r.fp += c.fp;
    r.fn += c.fn;
  }
  const ClassScore micro = score_counts(r.tp, r.fp, r.fn);
  r.micro_precision = micro.precision;
  r.micro_recall = micro.recall;
  r.micro_f1 = micro.f1;
  return r;
}

// --- diversity -----------------------------------------------------------------------------

DocStats document_stats(const Corpus& corpus) {
  if (corpus.empty()) throw ValidationError("document statistics of an empty corpus");
  std::vector<double> lengths;
  std::vector<double> labeled;
  for (const auto& d : corpus.documents()) {
    lengths.push_back(static_cast<double>(d.tokens.size()));
    labeled.push_back(static_cast<double>(
        std::count_if(d.labels.begin(), d.labels.end(), [](const auto& l) { return l != kOutside; })));
  }
  return {mean_std(lengths), mean_std(labeled)};
}

double lexical_diversity(const Corpus& corpus, Language language) {
  std::unordered_set<std::string> stems;
  std::unordered_map<std::string, std::string> cache;
  std::size_t total = 0;
  for (const auto& d : corpus.documents()) {
    for (const auto& t : d.tokens) {
      auto it = cache.find(t);
      if (it == cache.end()) it = cache.emplace(t, stem(t, language)).first;
      stems.insert(it->second);
      ++total;
    }
  }
  if (total == 0) throw ValidationError("lexical diversity of a corpus without tokens");
  return static_cast<double>(stems.size()) / static_cast<double>(total);
}

DiversityReport diversity_report(const Corpus& corpus, Language language) {
  return {lexical_diversity(corpus, language), document_stats(corpus)};
}

// --- n-grams -------------------------------------------------------------------------------

Granularity parse_granularity(std::string_view s) {
  if (s == "word") return {};
  if (s.starts_with("char-")) {
    const std::string k(s.substr(5));
    std::size_t pos = 0;
    std::size_t v = 0;
    try {
      v = std::stoul(k, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos == k.size() && v > 0) return {NGramUnit::character, v};
  }
  throw ValidationError("granularity must be 'word' or 'char-<k>'");
}

std::string to_string(const Granularity& g) {
  return g.unit == NGramUnit::word ? "word" : "char-" + std::to_string(g.k);
}

namespace {

constexpr char kJoin = '\x1f';

struct Unit {
  std::string text;
  std::size_t token;
};

std::vector<Unit> units_of(const Document& d, const Granularity& g) {
  std::vector<Unit> out;
  for (std::size_t i = 0; i < d.tokens.size(); ++i) {
    if (g.unit == NGramUnit::word) {
      out.push_back({d.tokens[i], i});
      continue;
    }
    const std::u32string cps = text::decode_utf8(d.tokens[i]);
    for (std::size_t s = 0; s < cps.size(); s += g.k) {
      out.push_back({text::encode_utf8(cps.substr(s, g.k)), i});
    }
  }
  return out;
}

template <typename Keep>
NGramSet windows(const Corpus& corpus, std::size_t n, const Granularity& g, Keep keep) {
  if (n == 0) throw ValidationError("n-gram size must be at least 1");
  if (g.unit == NGramUnit::character && g.k == 0) throw ValidationError("character unit needs k >= 1");
  NGramSet out;
  for (const auto& d : corpus.documents()) {
    const auto units = units_of(d, g);
    if (units.size() < n) continue;
    for (std::size_t i = 0; i + n <= units.size(); ++i) {
      if (!keep(d, units, i)) continue;
      std::string key = units[i].text;
      for (std::size_t k = 1; k < n; ++k) {
        key += kJoin;
        key += units[i + k].text;
      }
      out.insert(std::move(key));
    }
  }
  return out;
}

std::size_t intersection_size(const NGramSet& a, const NGramSet& b) {
  const NGramSet& small = a.size() <= b.size() ? a : b;
  const NGramSet& large = a.size() <= b.size() ? b : a;
  std::size_t n = 0;
  for (const auto& x : small) n += large.contains(x) ? 1 : 0;
  return n;
}

}  // namespace

NGramSet ngram_set(const Corpus& corpus, std::size_t n, Granularity granularity) {
  return windows(corpus, n, granularity, [](const auto&, const auto&, std::size_t) { return true; });
}

NGramSet sensitive_ngram_set(const Corpus& corpus, std::size_t n, Granularity granularity) {
  return windows(corpus, n, granularity, [n](const Document& d, const std::vector<Unit>& units, std::size_t i) {
    for (std::size_t k = 0; k < n; ++k) {
      if (d.labels[units[i + k].token] != kOutside) return true;
    }
    return false;
  });
}

std::size_t window_count(const Corpus& corpus, std::size_t n, Granularity granularity) {
  std::size_t total = 0;
  for (const auto& d : corpus.documents()) {
    const std::size_t len = units_of(d, granularity).size();
    if (len >= n) total += len - n + 1;
  }
  return total;
}

NGramRecallReport ngram_recall(const Corpus& reference, const Corpus& candidate, std::size_t n,
                               Granularity granularity) {
  const NGramSet R = ngram_set(reference, n, granularity);
  if (R.empty()) throw ValidationError("reference has no " + std::to_string(n) + "-grams; recall undefined");
  const NGramSet S = ngram_set(candidate, n, granularity);
  NGramRecallReport r;
  r.n = n;
  r.reference = R.size();
  r.candidate = S.size();
  r.shared = intersection_size(R, S);
  r.general_recall = static_cast<double>(r.shared) / static_cast<double>(r.reference);
  return r;
}

NGramRecallReport sensitive_ngram_recall(const Corpus& reference, const Corpus& candidate,
                                         std::size_t n, Granularity granularity) {
  const NGramSet Rs = sensitive_ngram_set(reference, n, granularity);
  const NGramSet S = ngram_set(candidate, n, granularity);
  NGramRecallReport r;
  r.n = n;
  r.sensitive_reference = Rs.size();
  r.candidate = S.size();
  r.sensitive_shared = intersection_size(Rs, S);
  if (!Rs.empty()) r.sensitive_recall = static_cast<double>(r.sensitive_shared) / static_cast<double>(Rs.size());
  return r;
}

NGramRecallReport ngram_privacy(const Corpus& reference, const Corpus& candidate, std::size_t n,
                                Granularity granularity) {
  const NGramSet R = ngram_set(reference, n, granularity);
  if (R.empty()) throw ValidationError("reference has no " + std::to_string(n) + "-grams; recall undefined");
  const NGramSet Rs = sensitive_ngram_set(reference, n, granularity);
  const NGramSet S = ngram_set(candidate, n, granularity);
  NGramRecallReport r;
  r.n = n;
  r.reference = R.size();
  r.sensitive_reference = Rs.size();
  r.candidate = S.size();
  r.shared = intersection_size(R, S);
  r.sensitive_shared = intersection_size(Rs, S);
  r.general_recall = static_cast<double>(r.shared) / static_cast<double>(r.reference);
  if (!Rs.empty()) r.sensitive_recall = static_cast<double>(r.sensitive_shared) / static_cast<double>(Rs.size());
  return r;
}

// --- serialization -------------------------------------------------------------------------

nlohmann::json to_json(const F1Report& report, const std::vector<std::string>& corpus_ids) {
  nlohmann::json per_class = nlohmann::json::object();
  for (const auto& [cls, s] : report.per_class) {
    per_class[cls] = {{"precision", s.precision}, {"recall", s.recall}, {"f1", s.f1}, {"support", s.support}};
  }
  return {{"metric", "token_f1"},
          {"value", report.micro_f1},
          {"precision", report.micro_precision},
          {"recall", report.micro_recall},
          {"counts", {{"tp", report.tp}, {"fp", report.fp}, {"fn", report.fn}}},
          {"per_class", per_class},
          {"corpus_ids", corpus_ids}};
}

nlohmann::json to_json(const NGramRecallReport& r, const std::vector<std::string>& corpus_ids) {
  nlohmann::json general = {{"metric", "ngram_recall"},
                            {"n", r.n},
                            {"value", r.general_recall},
                            {"counts", {{"R", r.reference}, {"S", r.candidate}, {"R_and_S", r.shared}}},
                            {"corpus_ids", corpus_ids}};
  nlohmann::json sensitive = {
      {"metric", "sensitive_ngram_recall"},
      {"n", r.n},
      {"value", r.sensitive_recall ? nlohmann::json(*r.sensitive_recall) : nlohmann::json(nullptr)},
      {"counts", {{"R_star", r.sensitive_reference}, {"S", r.candidate}, {"R_star_and_S", r.sensitive_shared}}},
      {"corpus_ids", corpus_ids}};
  if (!r.sensitive_recall) sensitive["note"] = "no sensitive n-grams";
  return nlohmann::json::array({general, sensitive});
}

nlohmann::json to_json(const DiversityReport& r, const std::vector<std::string>& corpus_ids) {
  return {{"metric", "lexical_diversity"},
          {"value", r.lexical_diversity},
          {"stemmer", kStemmerVersion},
          {"mean_length", {{"mean", r.stats.length.mean}, {"std", r.stats.length.std}}},
          {"mean_labels", {{"mean", r.stats.labels.mean}, {"std", r.stats.labels.std}}},
          {"corpus_ids", corpus_ids}};
}

std::string format_mean_std(const MeanStd& v, int decimals) {
  return fixed(v.mean, decimals) + " ± " + fixed(v.std, decimals);
}

std::string format_table(const F1Report& report) {
  std::vector<std::vector<std::string>> rows;
  for (const auto& [cls, s] : report.per_class) {
    rows.push_back({cls, fixed(s.precision), fixed(s.recall), fixed(s.f1), std::to_string(s.support)});
  }
  rows.push_back({"micro", fixed(report.micro_precision), fixed(report.micro_recall), fixed(report.micro_f1),
                  std::to_string(report.tp + report.fn)});
  return render_table({"class", "precision", "recall", "f1", "support"}, rows);
}

std::string format_table(const std::vector<NGramRecallReport>& reports) {
  std::vector<std::vector<std::string>> rows;
  for (const auto& r : reports) {
    rows.push_back({std::to_string(r.n), fixed(r.general_recall),
                    r.sensitive_recall ? fixed(*r.sensitive_recall) : "n/a", std::to_string(r.reference),
                    std::to_string(r.sensitive_reference), std::to_string(r.candidate)});
  }
  return render_table({"n", "all n-grams", "sensitive n-grams", "|R|", "|R*|", "|S|"}, rows);
}

std::string format_table(const DiversityReport& r) {
  return render_table({"lexical diversity", "length", "labels"},
                      {{fixed(r.lexical_diversity), format_mean_std(r.stats.length),
                        format_mean_std(r.stats.labels)}});
}

}  // namespace synthner
