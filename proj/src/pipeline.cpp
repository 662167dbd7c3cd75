#include "synthner/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <ctime>
#include <functional>
#include <set>
#include <thread>

#include "synthner/digest.hpp"
#include "synthner/error.hpp"
#include "synthner/lm.hpp"
#include "synthner/rng.hpp"
#include "synthner/stemmer.hpp"
#include "synthner/table.hpp"
#include "synthner/tagger.hpp"
#include "synthner/template_corpus.hpp"
#include "synthner/text.hpp"

namespace synthner {

namespace {

using ojson = nlohmann::ordered_json;

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value, std::string_view expected) {
  throw ValidationError("config key '" + std::string(key) + "': '" + std::string(value) + "' is not " +
                        std::string(expected));
}

double to_double(std::string_view key, std::string_view v) {
  const std::string s(v);
  std::size_t pos = 0;
  double x = 0.0;
  try {
    x = std::stod(s, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos == 0 || pos != s.size() || !std::isfinite(x)) bad_value(key, v, "a number");
  return x;
}

std::uint64_t to_u64(std::string_view key, std::string_view v) {
  const std::string s(v);
  std::size_t pos = 0;
  unsigned long long x = 0;
  try {
    if (!s.empty() && s[0] != '-') x = std::stoull(s, &pos, 10);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos == 0 || pos != s.size()) bad_value(key, v, "a non-negative integer");
  return x;
}

std::size_t to_size(std::string_view key, std::string_view v) { return static_cast<std::size_t>(to_u64(key, v)); }

bool to_bool(std::string_view key, std::string_view v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  bad_value(key, v, "a boolean");
}

Backend to_backend(std::string_view key, std::string_view v) {
  if (v == "native") return Backend::native;
  if (v == "remote") return Backend::remote;
  bad_value(key, v, "'native' or 'remote'");
}

std::string_view backend_name(Backend b) { return b == Backend::native ? "native" : "remote"; }

std::string number(double x) { return nlohmann::json(x).dump(); }

std::string join_sizes(const std::vector<std::size_t>& xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) out += (i ? "," : "") + std::to_string(xs[i]);
  return out;
}

std::vector<std::string> split_list(std::string_view s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    const auto comma = s.find(',', start);
    const auto end = comma == std::string_view::npos ? s.size() : comma;
    out.push_back(trim(s.substr(start, end - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

// Key table: one getter and one setter per dotted key.
struct KeyDef {
  const char* key;
  std::function<std::string(const ExperimentConfig&)> get;
  std::function<void(ExperimentConfig&, std::string_view)> set;
};

const std::vector<KeyDef>& key_table() {
  static const std::vector<KeyDef> table = [] {
    std::vector<KeyDef> t;
    auto add = [&t](const char* key, auto get, auto set) { t.push_back({key, get, set}); };
#define SIZE_KEY(name, field)                                                      \
  add(name, [](const ExperimentConfig& c) { return std::to_string(c.field); },    \
      [](ExperimentConfig& c, std::string_view v) { c.field = to_size(name, v); })
#define DOUBLE_KEY(name, field)                                                    \
  add(name, [](const ExperimentConfig& c) { return number(c.field); },            \
      [](ExperimentConfig& c, std::string_view v) { c.field = to_double(name, v); })
#define STRING_KEY(name, field)                                                    \
  add(name, [](const ExperimentConfig& c) { return c.field; },                    \
      [](ExperimentConfig& c, std::string_view v) { c.field = std::string(v); })

    STRING_KEY("corpus_path", corpus_path);
    add("corpus_format",
        [](const ExperimentConfig& c) {
          if (!c.corpus_format) return std::string("auto");
          return std::string(*c.corpus_format == CorpusFormat::conll ? "conll" : "jsonl");
        },
        [](ExperimentConfig& c, std::string_view v) {
          if (v == "auto") {
            c.corpus_format.reset();
          } else {
            c.corpus_format = parse_corpus_format(v);
          }
        });
    STRING_KEY("template.preset", template_preset);
    SIZE_KEY("template.documents", template_documents);
    add("seed", [](const ExperimentConfig& c) { return std::to_string(c.seed); },
        [](ExperimentConfig& c, std::string_view v) { c.seed = to_u64("seed", v); });
    SIZE_KEY("folds", folds);
    DOUBLE_KEY("val_fraction", val_fraction);
    DOUBLE_KEY("da_fraction", da_fraction);
    DOUBLE_KEY("ma_fraction", ma_fraction);
    DOUBLE_KEY("synth_multiplier", synth_multiplier);
    SIZE_KEY("prompt_words", prompt_words);

    add("generator.backend", [](const ExperimentConfig& c) { return std::string(backend_name(c.generator.backend)); },
        [](ExperimentConfig& c, std::string_view v) { c.generator.backend = to_backend("generator.backend", v); });
    SIZE_KEY("generator.order", generator.order);
    DOUBLE_KEY("generator.discount", generator.discount);
    STRING_KEY("generator.endpoint", generator.endpoint);
    SIZE_KEY("generator.training.r", generator.training.lora_rank);
    SIZE_KEY("generator.training.alpha", generator.training.lora_alpha);
    DOUBLE_KEY("generator.training.dropout", generator.training.dropout);
    DOUBLE_KEY("generator.training.weight_decay", generator.training.weight_decay);
    DOUBLE_KEY("generator.training.learning_rate", generator.training.learning_rate);
    SIZE_KEY("generator.training.batch_size", generator.training.batch_size);
    SIZE_KEY("generator.training.epochs", generator.training.epochs);

    add("annotator.backend", [](const ExperimentConfig& c) { return std::string(backend_name(c.annotator.backend)); },
        [](ExperimentConfig& c, std::string_view v) { c.annotator.backend = to_backend("annotator.backend", v); });
    SIZE_KEY("annotator.epochs", annotator.epochs);
    SIZE_KEY("annotator.chunk_words", annotator.chunk_words);
    STRING_KEY("annotator.endpoint", annotator.endpoint);
    SIZE_KEY("annotator.batch_size", annotator.batch_size);
    DOUBLE_KEY("annotator.training.weight_decay", annotator.training.weight_decay);
    DOUBLE_KEY("annotator.training.learning_rate", annotator.training.learning_rate);
    SIZE_KEY("annotator.training.batch_size", annotator.training.batch_size);
    SIZE_KEY("annotator.training.epochs", annotator.training.epochs);

    DOUBLE_KEY("generation.top_p", generation.top_p);
    DOUBLE_KEY("generation.temperature", generation.temperature);
    SIZE_KEY("generation.min_tokens", generation.min_tokens);
    add("generation.max_tokens",
        [](const ExperimentConfig& c) {
          return c.generation.max_tokens == 0 ? std::string("auto") : std::to_string(c.generation.max_tokens);
        },
        [](ExperimentConfig& c, std::string_view v) {
          c.generation.max_tokens = v == "auto" ? 0 : to_size("generation.max_tokens", v);
        });

    add("metrics.n_values", [](const ExperimentConfig& c) { return join_sizes(c.metrics.n_values); },
        [](ExperimentConfig& c, std::string_view v) {
          std::vector<std::size_t> ns;
          for (const auto& item : split_list(v)) ns.push_back(to_size("metrics.n_values", item));
          std::sort(ns.begin(), ns.end());
          ns.erase(std::unique(ns.begin(), ns.end()), ns.end());
          c.metrics.n_values = std::move(ns);
        });
    add("metrics.language",
        [](const ExperimentConfig& c) {
          return c.metrics.language ? std::string(to_string(*c.metrics.language)) : std::string("auto");
        },
        [](ExperimentConfig& c, std::string_view v) {
          if (v == "auto") {
            c.metrics.language.reset();
          } else {
            c.metrics.language = parse_language(v);
          }
        });
    add("metrics.granularity", [](const ExperimentConfig& c) { return to_string(c.metrics.granularity); },
        [](ExperimentConfig& c, std::string_view v) { c.metrics.granularity = parse_granularity(v); });

    SIZE_KEY("threads", threads);
    add("timestamps", [](const ExperimentConfig& c) { return std::string(c.timestamps ? "true" : "false"); },
        [](ExperimentConfig& c, std::string_view v) { c.timestamps = to_bool("timestamps", v); });
    STRING_KEY("coordinate", coordinate);
#undef SIZE_KEY
#undef DOUBLE_KEY
#undef STRING_KEY
    return t;
  }();
  return table;
}

}  // namespace

// --- config --------------------------------------------------------------------------------

void ExperimentConfig::validate() const {
  if (corpus_path.empty() && template_documents == 0) throw ValidationError("template.documents must be positive");
  if (folds < 2) throw ValidationError("folds must be at least 2");
  if (!(val_fraction > 0.0 && val_fraction < 1.0)) throw ValidationError("val_fraction must be in (0, 1)");
  if (!(da_fraction >= 0.0 && da_fraction <= kMaxTrainingFraction)) {
    throw ValidationError("da_fraction must be in [0, 0.95]");
  }
  if (!(ma_fraction > 0.0 && ma_fraction <= kMaxTrainingFraction)) {
    throw ValidationError("ma_fraction must be in (0, 0.95]");
  }
  if (!(synth_multiplier > 0.0)) throw ValidationError("synth_multiplier must be positive");
  if (prompt_words == 0) throw ValidationError("prompt_words must be at least 1");
  if (generator.backend == Backend::native) {
    if (generator.order == 0) throw ValidationError("generator.order must be at least 1");
    if (!(generator.discount > 0.0 && generator.discount < 1.0)) {
      throw ValidationError("generator.discount must be in (0, 1)");
    }
  } else {
    if (generator.endpoint.empty()) throw ValidationError("remote generator needs generator.endpoint");
    generator.training.validate();
  }
  if (annotator.epochs == 0) throw ValidationError("annotator.epochs must be at least 1");
  if (annotator.chunk_words == 0) throw ValidationError("annotator.chunk_words must be at least 1");
  if (annotator.backend == Backend::remote) {
    if (annotator.endpoint.empty()) throw ValidationError("remote annotator needs annotator.endpoint");
    if (annotator.batch_size == 0) throw ValidationError("annotator.batch_size must be at least 1");
    annotator.training.validate();
  }
  GenerationConfig g = generation;
  if (g.max_tokens == 0) g.max_tokens = std::max<std::size_t>(g.min_tokens, 1);
  g.samples_per_prompt = 1;
  g.validate();
  if (metrics.n_values.empty()) throw ValidationError("metrics.n_values must not be empty");
  for (auto n : metrics.n_values) {
    if (n == 0) throw ValidationError("metrics.n_values entries must be at least 1");
  }
  if (threads == 0) throw ValidationError("threads must be at least 1");
}

void apply_setting(ExperimentConfig& cfg, std::string_view key, std::string_view value) {
  const std::string v = trim(value);
  for (const auto& def : key_table()) {
    if (key == def.key) {
      def.set(cfg, v);
      return;
    }
  }
  throw ValidationError("unknown config key '" + std::string(key) + "'");
}

ExperimentConfig parse_config(std::string_view text, ExperimentConfig base) {
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start < text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string line(text.substr(start, end - start));
    start = end + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError(line_no, "expected 'key = value'");
    try {
      apply_setting(base, trim(std::string_view(line).substr(0, eq)), std::string_view(line).substr(eq + 1));
    } catch (const ParseError&) {
      throw;
    } catch (const ValidationError& e) {
      throw ParseError(line_no, e.what());
    }
  }
  return base;
}

std::string write_config(const ExperimentConfig& cfg) {
  std::string out;
  for (const auto& def : key_table()) out += std::string(def.key) + " = " + def.get(cfg) + "\n";
  return out;
}

std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const auto& def : key_table()) keys.emplace_back(def.key);
  return keys;
}

nlohmann::ordered_json to_json(const ExperimentConfig& cfg) {
  ojson j = ojson::object();
  for (const auto& def : key_table()) j[def.key] = def.get(cfg);
  return j;
}

ExperimentConfig config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ValidationError("config JSON must be an object");
  ExperimentConfig cfg;
  for (const auto& [k, v] : j.items()) {
    if (!v.is_string()) throw ValidationError("config JSON value of '" + k + "' must be a string");
    apply_setting(cfg, k, v.get<std::string>());
  }
  return cfg;
}

Corpus load_experiment_corpus(const ExperimentConfig& cfg) {
  if (cfg.corpus_path.empty()) {
    return make_template_corpus(template_preset(cfg.template_preset, cfg.template_documents), cfg.seed);
  }
  const auto format = cfg.corpus_format ? *cfg.corpus_format : format_from_path(cfg.corpus_path);
  return load_corpus(cfg.corpus_path, format);
}

// --- fold machinery ------------------------------------------------------------------------

FoldSeeds fold_seeds(const ExperimentConfig& cfg, std::size_t fold) {
  const std::uint64_t cell = hash_string(cfg.coordinate);
  FoldSeeds s;
  s.split = derive_seed(cfg.seed, {hash_string("split")});
  s.ma_subset = derive_seed(cfg.seed, {hash_string("ma-subset"), fold});
  s.da_subset = derive_seed(cfg.seed, {hash_string("da-subset"), fold});
  s.gold_tagger = derive_seed(cfg.seed, {hash_string("gold-tagger"), fold});
  s.generation = derive_seed(cfg.seed, {hash_string("generation"), cell, fold});
  s.synthetic_subsample = derive_seed(cfg.seed, {hash_string("synthetic-subsample"), cell, fold});
  s.synthetic_tagger = derive_seed(cfg.seed, {hash_string("synthetic-tagger"), cell, fold});
  return s;
}

std::size_t derive_samples_per_prompt(double multiplier, std::size_t non_test, std::size_t prompts) {
  if (prompts == 0) throw ValidationError("no prompts to derive samples_per_prompt from");
  const auto spp = std::llround(multiplier * static_cast<double>(non_test) / static_cast<double>(prompts));
  return static_cast<std::size_t>(std::max<long long>(1, spp));
}

namespace {

/// Multipliers below one subsample the corpus generated at this size.
constexpr double kFullSynthesisMultiplier = 4.0;

std::string ids_digest(const std::vector<std::string>& ids) {
  std::string s;
  for (const auto& id : ids) s += id + "\n";
  return sha256_hex(s);
}

bool disjoint(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  const std::set<std::string> sa(a.begin(), a.end());
  return std::none_of(b.begin(), b.end(), [&](const auto& x) { return sa.contains(x); });
}

bool has_entities(const Corpus& c) {
  for (const auto& d : c.documents()) {
    for (const auto& l : d.labels) {
      if (l != kOutside) return true;
    }
  }
  return false;
}

std::string now_utc() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// Tagger behind either backend: a local model or a remote model id.
struct Tagger {
  std::optional<TaggerModel> local;
  std::string remote_id;
};

}  // namespace

FoldResult run_fold(const ExperimentConfig& cfg, const Corpus& corpus, const FoldPlan& plan, std::size_t f) {
  FoldResult r;
  r.fold = f;
  std::string stage = "setup";
  ojson& m = r.manifest;
  m["fold"] = f;
  try {
    if (f >= plan.folds.size()) throw ValidationError("fold index out of range");
    const Fold& fold = plan.folds[f];
    const FoldSeeds seeds = fold_seeds(cfg, f);
    m["seeds"] = {{"split", seeds.split},           {"ma_subset", seeds.ma_subset},
                  {"da_subset", seeds.da_subset},   {"gold_tagger", seeds.gold_tagger},
                  {"generation", seeds.generation}, {"synthetic_subsample", seeds.synthetic_subsample},
                  {"synthetic_tagger", seeds.synthetic_tagger}};

    std::optional<RemoteClient> gen_client;
    std::optional<RemoteClient> ann_client;
    if (cfg.generator.backend == Backend::remote) gen_client.emplace(Endpoint::parse(cfg.generator.endpoint));
    if (cfg.annotator.backend == Backend::remote) ann_client.emplace(Endpoint::parse(cfg.annotator.endpoint));

    const Corpus test = corpus.select(fold.test_ids);
    const Corpus validation = corpus.select(fold.validation_ids);
    const std::size_t non_test = corpus.size() - test.size();

    stage = "subset";
    const auto ma_ids = subset_training_ids(fold, cfg.ma_fraction, seeds.ma_subset);
    const Corpus gold_training = corpus.select(ma_ids);
    std::vector<std::string> da_ids;
    if (cfg.da_fraction > 0.0) da_ids = subset_training_ids(fold, cfg.da_fraction, seeds.da_subset);
    // Without adaptation there is no adaptation corpus; privacy is then measured against
    // the largest training subset instead.
    const auto reference_ids =
        da_ids.empty() ? subset_training_ids(fold, kMaxTrainingFraction, seeds.da_subset) : da_ids;
    const Corpus reference = corpus.select(reference_ids);

    m["sizes"] = {{"corpus", corpus.size()},
                  {"test", fold.test_ids.size()},
                  {"validation", fold.validation_ids.size()},
                  {"train_pool", fold.train_pool_ids.size()},
                  {"non_test", non_test},
                  {"gold_training", ma_ids.size()},
                  {"da_training", da_ids.size()}};
    m["leakage"] = {{"gold_training_disjoint_test", disjoint(ma_ids, fold.test_ids)},
                    {"gold_training_disjoint_validation", disjoint(ma_ids, fold.validation_ids)},
                    {"da_training_disjoint_test", disjoint(da_ids, fold.test_ids)},
                    {"da_training_disjoint_validation", disjoint(da_ids, fold.validation_ids)}};

    stage = "gold_tagger";
    Tagger gold;
    if (ann_client) {
      gold.remote_id = train_remote(*ann_client, gold_training, cfg.annotator.training);
    } else {
      gold.local = train_tagger(gold_training, cfg.annotator.epochs, cfg.annotator.chunk_words, seeds.gold_tagger);
    }

    stage = "prompts";
    const auto prompts = extract_prompts(validation, cfg.prompt_words);
    GenerationConfig gen = cfg.generation;
    std::size_t longest_validation = 0;
    for (const auto& d : validation.documents()) longest_validation = std::max(longest_validation, document_words(d).size());
    if (gen.max_tokens == 0) gen.max_tokens = resolve_max_tokens(validation);
    const std::size_t target_docs = static_cast<std::size_t>(
        std::max<long long>(1, std::llround(cfg.synth_multiplier * static_cast<double>(non_test))));
    const double gen_multiplier = cfg.synth_multiplier < 1.0 ? kFullSynthesisMultiplier : cfg.synth_multiplier;
    gen.samples_per_prompt = derive_samples_per_prompt(gen_multiplier, non_test, prompts.size());
    gen.validate();
    bool prompts_are_leading_words = prompts.size() == validation.size();
    for (std::size_t i = 0; prompts_are_leading_words && i < prompts.size(); ++i) {
      const auto words = document_words(validation[i]);
      const std::size_t n = std::min(cfg.prompt_words, words.size());
      prompts_are_leading_words = prompts[i].words == std::vector<std::string>(words.begin(), words.begin() + n);
    }

    stage = "adapt";
    std::optional<NGramLM> lm;
    std::string generator_id;
    if (gen_client) {
      if (!da_ids.empty()) generator_id = adapt_remote(*gen_client, corpus.select(da_ids), cfg.generator.training);
    } else if (!da_ids.empty()) {
      lm = train_lm(corpus.select(da_ids), cfg.generator.order, cfg.generator.discount);
    } else {
      std::set<std::string> vocab;
      for (const auto& p : prompts) vocab.insert(p.words.begin(), p.words.end());
      const std::vector<std::string> words(vocab.begin(), vocab.end());
      lm = NGramLM::uniform(words, std::max<std::size_t>(cfg.generator.order, 1), cfg.generator.discount);
    }

    stage = "synthesize";
    const Language language = corpus.empty() ? Language::other : corpus[0].language;
    SynthesisOptions options{language, "syn", 1};
    Corpus synthetic;
    if (gen_client) {
      const auto texts = generate_remote(*gen_client, prompts, gen, cfg.generator.training, generator_id, "syn");
      synthetic = corpus_from_texts(texts, prompts.size(), gen.samples_per_prompt, options);
    } else {
      synthetic = synthesize_corpus(*lm, prompts, gen, seeds.generation, options);
    }
    const std::size_t generated = synthetic.size();
    if (cfg.synth_multiplier < 1.0 && target_docs < synthetic.size()) {
      std::vector<std::size_t> order(synthetic.size());
      for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
      Rng rng(seeds.synthetic_subsample);
      rng.shuffle(order);
      order.resize(target_docs);
      std::sort(order.begin(), order.end());
      std::vector<std::string> keep;
      for (auto i : order) keep.push_back(synthetic[i].id);
      synthetic = synthetic.select(keep);
    }
    std::size_t min_words = SIZE_MAX, max_words = 0;
    for (const auto& d : synthetic.documents()) {
      min_words = std::min(min_words, d.tokens.size());
      max_words = std::max(max_words, d.tokens.size());
    }

    stage = "annotate";
    Corpus annotated;
    if (ann_client) {
      annotated = annotate_remote(*ann_client, synthetic, cfg.annotator.batch_size, cfg.annotator.chunk_words,
                                  corpus.label_set(), gold.remote_id);
    } else {
      annotated = annotate_corpus(*gold.local, synthetic, cfg.annotator.chunk_words);
    }
    std::size_t max_chunk = 0;
    for (const auto& d : annotated.documents()) {
      for (const auto& c : chunk_document(d, cfg.annotator.chunk_words)) max_chunk = std::max(max_chunk, c.tokens.size());
    }

    stage = "synthetic_tagger";
    Tagger synth;
    bool synthetic_has_entities = has_entities(annotated);
    if (ann_client) {
      synth.remote_id = train_remote(*ann_client, annotated, cfg.annotator.training);
    } else if (synthetic_has_entities) {
      synth.local = train_tagger(annotated, cfg.annotator.epochs, cfg.annotator.chunk_words, seeds.synthetic_tagger);
    } else {
      // Nothing to learn from: the untrained model tags everything "O".
      TrainingMeta meta{cfg.annotator.epochs, cfg.annotator.chunk_words, seeds.synthetic_tagger, 16};
      synth.local = TaggerModel(corpus.label_set(), meta);
    }

    stage = "evaluate";
    auto predict = [&](const Tagger& t) {
      if (ann_client) {
        return annotate_remote(*ann_client, test, cfg.annotator.batch_size, cfg.annotator.chunk_words,
                               corpus.label_set(), t.remote_id);
      }
      return annotate_corpus(*t.local, test, cfg.annotator.chunk_words);
    };
    r.gold_f1 = token_f1(test, predict(gold));
    r.synthetic_f1 = token_f1(test, predict(synth));
    r.delta = r.gold_f1.micro_f1 - r.synthetic_f1.micro_f1;

    stage = "diversity";
    const Language stem_language = cfg.metrics.language ? *cfg.metrics.language : language;
    r.gold_diversity = diversity_report(gold_training, stem_language);
    r.synthetic_diversity = diversity_report(annotated, stem_language);

    stage = "privacy";
    for (auto n : cfg.metrics.n_values) r.privacy.push_back(ngram_privacy(reference, synthetic, n, cfg.metrics.granularity));

    m["generation"] = {{"prompts", prompts.size()},
                       {"prompt_words", cfg.prompt_words},
                       {"prompts_are_leading_words", prompts_are_leading_words},
                       {"longest_validation_words", longest_validation},
                       {"min_tokens", gen.min_tokens},
                       {"max_tokens", gen.max_tokens},
                       {"top_p", gen.top_p},
                       {"temperature", gen.temperature},
                       {"samples_per_prompt", gen.samples_per_prompt},
                       {"generated", generated},
                       {"synthetic", synthetic.size()},
                       {"target_synthetic", target_docs},
                       {"min_synthetic_words", synthetic.empty() ? 0 : min_words},
                       {"max_synthetic_words", max_words}};
    m["annotation"] = {{"epochs", cfg.annotator.epochs},
                       {"chunk_words", cfg.annotator.chunk_words},
                       {"max_chunk_words", max_chunk},
                       {"synthetic_has_entities", synthetic_has_entities}};
    ojson digests = {{"test_ids", ids_digest(fold.test_ids)},
                     {"validation_ids", ids_digest(fold.validation_ids)},
                     {"gold_training_ids", ids_digest(ma_ids)},
                     {"da_training_ids", ids_digest(da_ids)},
                     {"synthetic_corpus", sha256_hex(write_jsonl(synthetic))},
                     {"annotated_corpus", sha256_hex(write_jsonl(annotated))}};
    if (lm) digests["generator"] = sha256_hex(lm->to_json().dump());
    if (gold.local) digests["gold_tagger"] = sha256_hex(gold.local->to_json().dump());
    if (synth.local) digests["synthetic_tagger"] = sha256_hex(synth.local->to_json().dump());
    m["digests"] = digests;
    if (gen_client || ann_client) {
      m["remote_models"] = {{"generator", generator_id}, {"gold_tagger", gold.remote_id}, {"synthetic_tagger", synth.remote_id}};
    }
    r.ok = true;
  } catch (const std::exception& e) {
    r.ok = false;
    r.failed_stage = stage;
    r.error = e.what();
    m["failed_stage"] = stage;
    m["error"] = r.error;
  }
  m["ok"] = r.ok;
  return r;
}

std::map<std::string, double> fold_scalars(const FoldResult& fold) {
  std::map<std::string, double> s;
  if (!fold.ok) return s;
  s["gold_f1"] = fold.gold_f1.micro_f1;
  s["gold_precision"] = fold.gold_f1.micro_precision;
  s["gold_recall"] = fold.gold_f1.micro_recall;
  s["synthetic_f1"] = fold.synthetic_f1.micro_f1;
  s["synthetic_precision"] = fold.synthetic_f1.micro_precision;
  s["synthetic_recall"] = fold.synthetic_f1.micro_recall;
  s["delta"] = fold.delta;
  s["gold_lexical_diversity"] = fold.gold_diversity.lexical_diversity;
  s["gold_mean_length"] = fold.gold_diversity.stats.length.mean;
  s["gold_mean_labels"] = fold.gold_diversity.stats.labels.mean;
  s["synthetic_lexical_diversity"] = fold.synthetic_diversity.lexical_diversity;
  s["synthetic_mean_length"] = fold.synthetic_diversity.stats.length.mean;
  s["synthetic_mean_labels"] = fold.synthetic_diversity.stats.labels.mean;
  for (const auto& p : fold.privacy) {
    s["recall_" + std::to_string(p.n)] = p.general_recall;
    if (p.sensitive_recall) s["sensitive_recall_" + std::to_string(p.n)] = *p.sensitive_recall;
  }
  return s;
}

std::map<std::string, MeanStd> aggregate(const std::vector<FoldResult>& folds) {
  std::map<std::string, MeanStd> out;
  if (folds.empty() || std::any_of(folds.begin(), folds.end(), [](const auto& f) { return !f.ok; })) return out;
  std::map<std::string, std::vector<double>> values;
  for (const auto& f : folds) {
    for (const auto& [k, v] : fold_scalars(f)) values[k].push_back(v);
  }
  for (const auto& [k, v] : values) {
    if (v.size() == folds.size()) out[k] = mean_std(v);
  }
  return out;
}

bool RunResult::complete() const {
  return !folds.empty() && std::all_of(folds.begin(), folds.end(), [](const auto& f) { return f.ok; });
}

RunResult run_experiment(const ExperimentConfig& cfg, const Corpus& corpus) {
  cfg.validate();
  RunResult run;
  run.config = cfg;
  const std::string started = cfg.timestamps ? now_utc() : std::string();
  const FoldPlan plan = split_folds(corpus, cfg.folds, cfg.val_fraction, fold_seeds(cfg, 0).split);

  run.folds.resize(cfg.folds);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t f; (f = next.fetch_add(1)) < cfg.folds;) run.folds[f] = run_fold(cfg, corpus, plan, f);
  };
  const std::size_t threads = std::min(cfg.threads, cfg.folds);
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  run.aggregates = aggregate(run.folds);

  ojson& m = run.manifest;
  m["tool"] = "synthner";
  m["config"] = to_json(cfg);
  m["seed"] = cfg.seed;
  m["corpus_digest"] = sha256_hex(write_jsonl(corpus));
  m["corpus_documents"] = corpus.size();
  m["stemmer"] = kStemmerVersion;
  m["feature_template"] = kFeatureTemplateVersion;
  m["split_seed"] = plan.seed;
  ojson folds = ojson::array();
  for (const auto& f : run.folds) folds.push_back(f.manifest);
  m["folds"] = folds;
  m["complete"] = run.complete();
  if (cfg.timestamps) m["timestamps"] = {{"started", started}, {"finished", now_utc()}};
  return run;
}

RunResult run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  return run_experiment(cfg, load_experiment_corpus(cfg));
}

// --- grids ---------------------------------------------------------------------------------

namespace {

const std::vector<std::string> kAxes = {"da_fraction", "ma_fraction", "synth_multiplier", "generator_capacity"};

void set_axis(ExperimentConfig& cfg, const std::string& axis, double v) {
  if (axis == "da_fraction") {
    cfg.da_fraction = v;
  } else if (axis == "ma_fraction") {
    cfg.ma_fraction = v;
  } else if (axis == "synth_multiplier") {
    cfg.synth_multiplier = v;
  } else if (axis == "generator_capacity") {
    if (v < 1 || v != std::floor(v)) throw ValidationError("generator_capacity values are n-gram orders");
    cfg.generator.order = static_cast<std::size_t>(v);
  } else {
    throw ValidationError("unknown grid axis '" + axis + "'");
  }
}

}  // namespace

std::vector<double> default_axis_values(std::string_view name) {
  if (name == "da_fraction") return {0.0, 0.05, 0.25, 0.50, 0.95};
  if (name == "ma_fraction") return {0.05, 0.25, 0.50, 0.95};
  if (name == "synth_multiplier") return {0.05, 1.0, 4.0};
  if (name == "generator_capacity") return {2, 4};
  throw ValidationError("unknown grid axis '" + std::string(name) + "'");
}

Axis parse_axis(std::string_view spec) {
  const auto eq = spec.find('=');
  Axis a;
  a.name = trim(spec.substr(0, eq));
  if (std::find(kAxes.begin(), kAxes.end(), a.name) == kAxes.end()) {
    throw ValidationError("unknown grid axis '" + a.name + "'");
  }
  if (eq == std::string_view::npos) {
    a.values = default_axis_values(a.name);
    return a;
  }
  for (const auto& item : split_list(spec.substr(eq + 1))) {
    if (a.name == "generator_capacity" && item == "small") {
      a.values.push_back(2);
    } else if (a.name == "generator_capacity" && item == "large") {
      a.values.push_back(4);
    } else {
      a.values.push_back(to_double(a.name, item));
    }
  }
  if (a.values.empty()) throw ValidationError("grid axis '" + a.name + "' has no values");
  return a;
}

std::vector<ExperimentConfig> ablation_grid(const ExperimentConfig& base, const std::vector<Axis>& axes) {
  std::set<std::string> seen;
  for (const auto& a : axes) {
    if (std::find(kAxes.begin(), kAxes.end(), a.name) == kAxes.end()) {
      throw ValidationError("unknown grid axis '" + a.name + "'");
    }
    if (!seen.insert(a.name).second) throw ValidationError("grid axis '" + a.name + "' given twice");
    if (a.values.empty()) throw ValidationError("grid axis '" + a.name + "' has no values");
  }
  std::vector<ExperimentConfig> out{base};
  for (const auto& a : axes) {
    std::vector<ExperimentConfig> next;
    for (const auto& c : out) {
      for (double v : a.values) {
        ExperimentConfig x = c;
        set_axis(x, a.name, v);
        const std::string label = a.name + "=" + (a.name == "generator_capacity" ? std::to_string(x.generator.order) : number(v));
        x.coordinate = x.coordinate.empty() ? label : x.coordinate + "," + label;
        x.validate();
        next.push_back(std::move(x));
      }
    }
    out = std::move(next);
  }
  return out;
}

std::vector<RunResult> run_grid(const std::vector<ExperimentConfig>& configs, const Corpus& corpus) {
  std::vector<RunResult> out;
  out.reserve(configs.size());
  for (const auto& c : configs) out.push_back(run_experiment(c, corpus));
  return out;
}

// --- serialization -------------------------------------------------------------------------

namespace {

ojson f1_json(const F1Report& r) {
  ojson per = ojson::object();
  for (const auto& [cls, s] : r.per_class) {
    per[cls] = {{"precision", s.precision}, {"recall", s.recall}, {"f1", s.f1}, {"support", s.support},
                {"tp", s.tp},               {"fp", s.fp},         {"fn", s.fn}};
  }
  return {{"precision", r.micro_precision}, {"recall", r.micro_recall}, {"f1", r.micro_f1}, {"tp", r.tp},
          {"fp", r.fp},                     {"fn", r.fn},               {"per_class", per}};
}

F1Report f1_from(const nlohmann::json& j) {
  F1Report r;
  r.micro_precision = j.at("precision");
  r.micro_recall = j.at("recall");
  r.micro_f1 = j.at("f1");
  r.tp = j.at("tp");
  r.fp = j.at("fp");
  r.fn = j.at("fn");
  for (const auto& [cls, s] : j.at("per_class").items()) {
    ClassScore c;
    c.precision = s.at("precision");
    c.recall = s.at("recall");
    c.f1 = s.at("f1");
    c.support = s.at("support");
    c.tp = s.at("tp");
    c.fp = s.at("fp");
    c.fn = s.at("fn");
    r.per_class[cls] = c;
  }
  return r;
}

ojson mean_std_json(const MeanStd& m) { return {{"mean", m.mean}, {"std", m.std}}; }
MeanStd mean_std_from(const nlohmann::json& j) { return {j.at("mean").get<double>(), j.at("std").get<double>()}; }

ojson diversity_json(const DiversityReport& d) {
  return {{"lexical_diversity", d.lexical_diversity},
          {"length", mean_std_json(d.stats.length)},
          {"labels", mean_std_json(d.stats.labels)}};
}

DiversityReport diversity_from(const nlohmann::json& j) {
  return {j.at("lexical_diversity").get<double>(), {mean_std_from(j.at("length")), mean_std_from(j.at("labels"))}};
}

ojson recall_json(const NGramRecallReport& r) {
  return {{"n", r.n},
          {"general_recall", r.general_recall},
          {"sensitive_recall", r.sensitive_recall ? ojson(*r.sensitive_recall) : ojson(nullptr)},
          {"R", r.reference},
          {"R_star", r.sensitive_reference},
          {"S", r.candidate},
          {"R_and_S", r.shared},
          {"R_star_and_S", r.sensitive_shared}};
}

NGramRecallReport recall_from(const nlohmann::json& j) {
  NGramRecallReport r;
  r.n = j.at("n");
  r.general_recall = j.at("general_recall");
  if (!j.at("sensitive_recall").is_null()) r.sensitive_recall = j.at("sensitive_recall").get<double>();
  r.reference = j.at("R");
  r.sensitive_reference = j.at("R_star");
  r.candidate = j.at("S");
  r.shared = j.at("R_and_S");
  r.sensitive_shared = j.at("R_star_and_S");
  return r;
}

}  // namespace

nlohmann::ordered_json to_json(const RunResult& run) {
  ojson folds = ojson::array();
  for (const auto& f : run.folds) {
    ojson jf = {{"fold", f.fold}, {"ok", f.ok}};
    if (!f.ok) {
      jf["failed_stage"] = f.failed_stage;
      jf["error"] = f.error;
    } else {
      jf["gold_f1"] = f1_json(f.gold_f1);
      jf["synthetic_f1"] = f1_json(f.synthetic_f1);
      jf["delta"] = f.delta;
      jf["gold_diversity"] = diversity_json(f.gold_diversity);
      jf["synthetic_diversity"] = diversity_json(f.synthetic_diversity);
      ojson p = ojson::array();
      for (const auto& r : f.privacy) p.push_back(recall_json(r));
      jf["privacy"] = p;
    }
    folds.push_back(jf);
  }
  ojson agg = ojson::object();
  for (const auto& [k, v] : run.aggregates) agg[k] = mean_std_json(v);
  return {{"coordinate", run.config.coordinate},
          {"complete", run.complete()},
          {"config", to_json(run.config)},
          {"folds", folds},
          {"aggregates", agg}};
}

RunResult run_from_json(const nlohmann::json& j) {
  try {
    RunResult run;
    run.config = config_from_json(j.at("config"));
    for (const auto& jf : j.at("folds")) {
      FoldResult f;
      f.fold = jf.at("fold");
      f.ok = jf.at("ok");
      if (!f.ok) {
        f.failed_stage = jf.value("failed_stage", "");
        f.error = jf.value("error", "");
      } else {
        f.gold_f1 = f1_from(jf.at("gold_f1"));
        f.synthetic_f1 = f1_from(jf.at("synthetic_f1"));
        f.delta = jf.at("delta");
        f.gold_diversity = diversity_from(jf.at("gold_diversity"));
        f.synthetic_diversity = diversity_from(jf.at("synthetic_diversity"));
        for (const auto& p : jf.at("privacy")) f.privacy.push_back(recall_from(p));
      }
      run.folds.push_back(std::move(f));
    }
    for (const auto& [k, v] : j.at("aggregates").items()) run.aggregates[k] = mean_std_from(v);
    return run;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed run result: ") + e.what());
  }
}

nlohmann::ordered_json results_json(const std::vector<RunResult>& runs) {
  ojson arr = ojson::array();
  for (const auto& r : runs) arr.push_back(to_json(r));
  return {{"format", "synthner-results"}, {"runs", arr}};
}

std::vector<RunResult> results_from_json(const nlohmann::json& j) {
  if (!j.is_object() || j.value("format", "") != "synthner-results" || !j.contains("runs")) {
    throw ValidationError("not a synthner results file");
  }
  std::vector<RunResult> out;
  for (const auto& r : j.at("runs")) out.push_back(run_from_json(r));
  return out;
}

nlohmann::ordered_json manifests_json(const std::vector<RunResult>& runs) {
  ojson arr = ojson::array();
  for (const auto& r : runs) {
    ojson m = r.manifest;
    m["coordinate"] = r.config.coordinate;
    arr.push_back(m);
  }
  return {{"format", "synthner-manifest"}, {"runs", arr}};
}

ReportFormat parse_report_format(std::string_view s) {
  if (s == "json") return ReportFormat::json;
  if (s == "csv") return ReportFormat::csv;
  if (s == "table") return ReportFormat::table;
  throw ValidationError("report format must be json, csv or table");
}

std::string emit_report(const std::vector<RunResult>& runs, ReportFormat format) {
  if (format == ReportFormat::json) return results_json(runs).dump(2) + "\n";

  auto setting = [](const RunResult& r) { return r.config.coordinate.empty() ? std::string("run") : r.config.coordinate; };

  if (format == ReportFormat::csv) {
    std::set<std::string> keys;
    for (const auto& r : runs) {
      for (const auto& [k, _] : r.aggregates) keys.insert(k);
    }
    auto csv_field = [](const std::string& s) {
      if (s.find_first_of(",\"\n") == std::string::npos) return s;
      std::string q = "\"";
      for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
      return q + "\"";
    };
    std::string out = "setting,complete,folds";
    for (const auto& k : keys) out += "," + k + "_mean," + k + "_std";
    out += "\n";
    for (const auto& r : runs) {
      out += csv_field(setting(r)) + "," + (r.complete() ? "true" : "false") + "," + std::to_string(r.folds.size());
      for (const auto& k : keys) {
        const auto it = r.aggregates.find(k);
        if (it == r.aggregates.end()) {
          out += ",,";
          continue;
        }
        char buf[64];
        std::snprintf(buf, sizeof buf, ",%.17g,%.17g", it->second.mean, it->second.std);
        out += buf;
      }
      out += "\n";
    }
    return out;
  }

  std::set<std::size_t> ns;
  for (const auto& r : runs) ns.insert(r.config.metrics.n_values.begin(), r.config.metrics.n_values.end());
  std::vector<std::string> header = {"setting", "F1", "Δ", "lexical diversity", "length", "labels"};
  for (auto n : ns) header.push_back(std::to_string(n) + "-gram recall");
  for (auto n : ns) header.push_back(std::to_string(n) + "-gram sensitive");

  auto cell = [](const RunResult& r, const std::string& key) {
    const auto it = r.aggregates.find(key);
    return it == r.aggregates.end() ? std::string("n/a") : format_mean_std(it->second);
  };
  std::vector<std::vector<std::string>> rows;
  for (const auto& r : runs) {
    if (!r.complete()) {
      std::size_t ok = std::count_if(r.folds.begin(), r.folds.end(), [](const auto& f) { return f.ok; });
      std::vector<std::string> row(header.size(), "");
      row[0] = setting(r);
      row[1] = "partial (" + std::to_string(ok) + "/" + std::to_string(r.folds.size()) + " folds)";
      rows.push_back(row);
      continue;
    }
    std::vector<std::string> row = {setting(r), cell(r, "synthetic_f1"), cell(r, "delta"),
                                    cell(r, "synthetic_lexical_diversity"), cell(r, "synthetic_mean_length"),
                                    cell(r, "synthetic_mean_labels")};
    for (auto n : ns) row.push_back(cell(r, "recall_" + std::to_string(n)));
    for (auto n : ns) row.push_back(cell(r, "sensitive_recall_" + std::to_string(n)));
    rows.push_back(row);
  }
  // Gold baselines: one per distinct gold training budget.
  std::set<double> gold_done;
  bool several = false;
  for (const auto& r : runs) several |= r.config.ma_fraction != runs.front().config.ma_fraction;
  for (const auto& r : runs) {
    if (!r.complete() || !gold_done.insert(r.config.ma_fraction).second) continue;
    std::vector<std::string> row = {several ? "gold (ma_fraction=" + number(r.config.ma_fraction) + ")" : "gold",
                                    cell(r, "gold_f1"), "",
                                    cell(r, "gold_lexical_diversity"), cell(r, "gold_mean_length"),
                                    cell(r, "gold_mean_labels")};
    row.resize(header.size(), "");
    rows.push_back(row);
  }
  return render_table(header, rows);
}

}  // namespace synthner
