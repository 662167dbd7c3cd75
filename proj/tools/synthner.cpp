// synthner command-line driver.
//
// Exit codes: 0 success, 1 validation error, 2 remote-service failure, 3 partial run.

#include <filesystem>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "synthner/error.hpp"
#include "synthner/formats.hpp"
#include "synthner/lm.hpp"
#include "synthner/metrics.hpp"
#include "synthner/pipeline.hpp"
#include "synthner/remote.hpp"
#include "synthner/synthesis.hpp"
#include "synthner/tagger.hpp"
#include "synthner/template_corpus.hpp"

namespace fs = std::filesystem;
using namespace synthner;

namespace {

constexpr int kExitValidation = 1;
constexpr int kExitRemote = 2;
constexpr int kExitPartial = 3;

struct CorpusArg {
  std::string path;
  std::string format = "auto";

  Corpus load() const {
    const auto f = format == "auto" ? format_from_path(path) : parse_corpus_format(format);
    std::vector<ParseWarning> warnings;
    Corpus c = load_corpus(path, f, &warnings);
    for (const auto& w : warnings) {
      std::cerr << "warning: " << path << ":" << w.line << ": document '" << w.document_id << "': "
                << w.original << " repaired to " << w.repaired << "\n";
    }
    return c;
  }
};

void save(const std::string& path, const std::string& format, const Corpus& corpus) {
  const auto f = format == "auto" ? format_from_path(path) : parse_corpus_format(format);
  save_corpus(path, corpus, f);
}

void emit(const std::string& out, const std::string& text) {
  if (out.empty() || out == "-") {
    std::cout << text;
  } else {
    write_file(out, text);
  }
}

nlohmann::json read_json(const std::string& path) {
  try {
    return nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(path + ": " + e.what());
  }
}

RetryPolicy retry_policy(int attempts, int base_delay_ms) {
  RetryPolicy r;
  r.attempts = attempts;
  r.base_delay = std::chrono::milliseconds(base_delay_ms);
  return r;
}

void add_remote_training(CLI::App* cmd, RemoteTrainingConfig& t) {
  cmd->add_option("--lora-r", t.lora_rank, "LoRA rank forwarded to the service")->capture_default_str();
  cmd->add_option("--lora-alpha", t.lora_alpha)->capture_default_str();
  cmd->add_option("--dropout", t.dropout)->capture_default_str();
  cmd->add_option("--weight-decay", t.weight_decay)->capture_default_str();
  cmd->add_option("--learning-rate", t.learning_rate)->capture_default_str();
  cmd->add_option("--batch-size", t.batch_size)->capture_default_str();
  cmd->add_option("--train-epochs", t.epochs)->capture_default_str();
}

// Settings shared by run and grid.
struct ExperimentArgs {
  std::string config_file;
  std::vector<std::string> sets;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> corpus;
  std::optional<std::size_t> folds;
  std::optional<std::size_t> threads;
  std::string out_dir = "synthner-out";
  std::string report_format = "table";

  void add(CLI::App* cmd) {
    cmd->add_option("-c,--config", config_file, "key = value config file");
    cmd->add_option("--set", sets, "override a config key (key=value); repeatable");
    cmd->add_option("--seed", seed, "overrides seed");
    cmd->add_option("--corpus", corpus, "overrides corpus_path");
    cmd->add_option("--folds", folds, "overrides folds");
    cmd->add_option("--threads", threads, "overrides threads");
    cmd->add_option("-o,--out", out_dir, "output directory")->capture_default_str();
    cmd->add_option("--report-format", report_format, "json, csv or table")->capture_default_str();
  }

  ExperimentConfig config() const {
    ExperimentConfig cfg;
    if (!config_file.empty()) cfg = parse_config(read_file(config_file));
    if (seed) cfg.seed = *seed;
    if (corpus) cfg.corpus_path = *corpus;
    if (folds) cfg.folds = *folds;
    if (threads) cfg.threads = *threads;
    for (const auto& s : sets) {
      const auto eq = s.find('=');
      if (eq == std::string::npos) throw ValidationError("--set expects key=value, got '" + s + "'");
      apply_setting(cfg, s.substr(0, eq), s.substr(eq + 1));
    }
    cfg.validate();
    return cfg;
  }
};

int write_results(const std::vector<RunResult>& runs, const ExperimentArgs& args) {
  const fs::path dir = args.out_dir;
  write_file(dir / "results.json", results_json(runs).dump(2) + "\n");
  write_file(dir / "manifest.json", manifests_json(runs).dump(2) + "\n");
  const auto format = parse_report_format(args.report_format);
  const std::string report = emit_report(runs, format);
  const char* ext = format == ReportFormat::json ? "report.json" : format == ReportFormat::csv ? "report.csv" : "report.txt";
  write_file(dir / ext, report);
  std::cout << report;
  bool partial = false;
  for (const auto& r : runs) {
    for (const auto& f : r.folds) {
      if (!f.ok) {
        std::cerr << "fold " << f.fold << (r.config.coordinate.empty() ? "" : " of " + r.config.coordinate)
                  << " failed at " << f.failed_stage << ": " << f.error << "\n";
        partial = true;
      }
    }
  }
  return partial ? kExitPartial : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Synthetic PII corpus pipeline: generate, machine-annotate, train and evaluate."};
  app.require_subcommand(1);
  int exit_code = 0;

  // split
  auto* split = app.add_subcommand("split", "Split a corpus into k folds and write the fold plan");
  CorpusArg split_in;
  std::size_t split_k = 5;
  double split_val = 0.05;
  std::uint64_t split_seed = 0;
  std::string split_out;
  split->add_option("corpus", split_in.path)->required();
  split->add_option("--format", split_in.format, "conll, jsonl or auto")->capture_default_str();
  split->add_option("-k,--folds", split_k)->capture_default_str();
  split->add_option("--val-fraction", split_val)->capture_default_str();
  split->add_option("--seed", split_seed)->capture_default_str();
  split->add_option("-o,--out", split_out, "fold plan JSON (default stdout)");
  split->callback([&] {
    const auto plan = split_folds(split_in.load(), split_k, split_val, split_seed);
    emit(split_out, to_json(plan).dump(2) + "\n");
  });

  // template
  auto* tpl = app.add_subcommand("template", "Write the desk-scale template corpus");
  std::string tpl_preset = "sepr", tpl_out, tpl_format = "auto";
  std::size_t tpl_docs = 2000;
  std::uint64_t tpl_seed = 0;
  tpl->add_option("--preset", tpl_preset, "sepr (9 classes, Swedish) or meddocan (19 classes, Spanish)")
      ->capture_default_str();
  tpl->add_option("-n,--documents", tpl_docs)->capture_default_str();
  tpl->add_option("--seed", tpl_seed)->capture_default_str();
  tpl->add_option("-o,--out", tpl_out)->required();
  tpl->add_option("--format", tpl_format)->capture_default_str();
  tpl->callback([&] { save(tpl_out, tpl_format, make_template_corpus(template_preset(tpl_preset, tpl_docs), tpl_seed)); });

  // adapt
  auto* adapt = app.add_subcommand("adapt", "Train the n-gram generator, or adapt a remote one");
  CorpusArg adapt_in;
  std::size_t adapt_order = 3;
  double adapt_discount = 0.1;
  std::string adapt_out, adapt_endpoint;
  RemoteTrainingConfig adapt_training;
  int adapt_attempts = 3, adapt_delay = 200;
  adapt->add_option("corpus", adapt_in.path)->required();
  adapt->add_option("--format", adapt_in.format)->capture_default_str();
  adapt->add_option("--order", adapt_order)->capture_default_str();
  adapt->add_option("--discount", adapt_discount)->capture_default_str();
  adapt->add_option("-o,--out", adapt_out, "model JSON (native)");
  adapt->add_option("--endpoint", adapt_endpoint, "remote generator service URL");
  adapt->add_option("--attempts", adapt_attempts)->capture_default_str();
  adapt->add_option("--retry-delay-ms", adapt_delay)->capture_default_str();
  add_remote_training(adapt, adapt_training);
  adapt->callback([&] {
    const Corpus c = adapt_in.load();
    if (!adapt_endpoint.empty()) {
      RemoteClient client(Endpoint::parse(adapt_endpoint), retry_policy(adapt_attempts, adapt_delay));
      std::cout << adapt_remote(client, c, adapt_training) << "\n";
      return;
    }
    if (adapt_out.empty()) throw ValidationError("adapt needs --out for a native model");
    write_file(adapt_out, train_lm(c, adapt_order, adapt_discount).to_json().dump() + "\n");
  });

  // synth
  auto* synth = app.add_subcommand("synth", "Generate a synthetic corpus from prompts of a corpus");
  CorpusArg synth_prompts;
  std::string synth_model, synth_out, synth_out_format = "auto", synth_endpoint, synth_model_id;
  std::string synth_language = "auto";
  GenerationConfig synth_cfg;
  synth_cfg.max_tokens = 0;
  std::size_t synth_prompt_words = 3, synth_threads = 1;
  std::uint64_t synth_seed = 0;
  RemoteTrainingConfig synth_training;
  int synth_attempts = 3, synth_delay = 200;
  synth->add_option("prompts", synth_prompts.path, "corpus whose documents supply the prompts")->required();
  synth->add_option("--format", synth_prompts.format)->capture_default_str();
  synth->add_option("-m,--model", synth_model, "n-gram model JSON from `adapt`");
  synth->add_option("--endpoint", synth_endpoint, "remote generator service URL");
  synth->add_option("--model-id", synth_model_id, "remote model id from `adapt --endpoint`");
  synth->add_option("-o,--out", synth_out)->required();
  synth->add_option("--out-format", synth_out_format)->capture_default_str();
  synth->add_option("--top-p", synth_cfg.top_p)->capture_default_str();
  synth->add_option("--temperature", synth_cfg.temperature)->capture_default_str();
  synth->add_option("--min-tokens", synth_cfg.min_tokens)->capture_default_str();
  synth->add_option("--max-tokens", synth_cfg.max_tokens, "0: max(50, longest prompt-source document)")
      ->capture_default_str();
  synth->add_option("--samples-per-prompt", synth_cfg.samples_per_prompt)->capture_default_str();
  synth->add_option("--prompt-words", synth_prompt_words)->capture_default_str();
  synth->add_option("--language", synth_language, "language tag of the output (auto: from the prompts)")
      ->capture_default_str();
  synth->add_option("--seed", synth_seed)->capture_default_str();
  synth->add_option("--threads", synth_threads)->capture_default_str();
  synth->add_option("--attempts", synth_attempts)->capture_default_str();
  synth->add_option("--retry-delay-ms", synth_delay)->capture_default_str();
  add_remote_training(synth, synth_training);
  synth->callback([&] {
    const Corpus source = synth_prompts.load();
    const auto prompts = extract_prompts(source, synth_prompt_words);
    GenerationConfig cfg = synth_cfg;
    if (cfg.max_tokens == 0) cfg.max_tokens = resolve_max_tokens(source);
    SynthesisOptions options;
    options.language = synth_language != "auto" ? parse_language(synth_language)
                       : source.empty()         ? Language::other
                                                : source[0].language;
    options.threads = synth_threads;
    Corpus out;
    if (!synth_endpoint.empty()) {
      RemoteClient client(Endpoint::parse(synth_endpoint), retry_policy(synth_attempts, synth_delay));
      const auto texts = generate_remote(client, prompts, cfg, synth_training, synth_model_id, options.id_prefix);
      out = corpus_from_texts(texts, prompts.size(), cfg.samples_per_prompt, options);
    } else {
      if (synth_model.empty()) throw ValidationError("synth needs --model or --endpoint");
      out = synthesize_corpus(NGramLM::from_json(read_json(synth_model)), prompts, cfg, synth_seed, options);
    }
    save(synth_out, synth_out_format, out);
  });

  // train-ner
  auto* train = app.add_subcommand("train-ner", "Train the BIO tagger, or a remote NER model");
  CorpusArg train_in;
  std::size_t train_epochs = 6, train_chunk = 128;
  std::uint64_t train_seed = 0;
  std::string train_out, train_endpoint;
  RemoteNerConfig train_remote_cfg;
  int train_attempts = 3, train_delay = 200;
  train->add_option("corpus", train_in.path)->required();
  train->add_option("--format", train_in.format)->capture_default_str();
  train->add_option("--epochs", train_epochs)->capture_default_str();
  train->add_option("--chunk-words", train_chunk)->capture_default_str();
  train->add_option("--seed", train_seed)->capture_default_str();
  train->add_option("-o,--out", train_out, "tagger JSON (native)");
  train->add_option("--endpoint", train_endpoint, "remote annotator service URL");
  train->add_option("--weight-decay", train_remote_cfg.weight_decay)->capture_default_str();
  train->add_option("--learning-rate", train_remote_cfg.learning_rate)->capture_default_str();
  train->add_option("--batch-size", train_remote_cfg.batch_size)->capture_default_str();
  train->add_option("--attempts", train_attempts)->capture_default_str();
  train->add_option("--retry-delay-ms", train_delay)->capture_default_str();
  train->callback([&] {
    const Corpus c = train_in.load();
    if (!train_endpoint.empty()) {
      RemoteClient client(Endpoint::parse(train_endpoint), retry_policy(train_attempts, train_delay));
      RemoteNerConfig t = train_remote_cfg;
      t.epochs = train_epochs;
      std::cout << train_remote(client, c, t) << "\n";
      return;
    }
    if (train_out.empty()) throw ValidationError("train-ner needs --out for a native model");
    write_file(train_out, train_tagger(c, train_epochs, train_chunk, train_seed).to_json().dump() + "\n");
  });

  // annotate
  auto* ann = app.add_subcommand("annotate", "Machine-annotate a corpus");
  CorpusArg ann_in;
  std::string ann_model, ann_out, ann_out_format = "auto", ann_endpoint, ann_model_id;
  std::size_t ann_chunk = 0, ann_batch = 16;
  int ann_attempts = 3, ann_delay = 200;
  ann->add_option("corpus", ann_in.path)->required();
  ann->add_option("--format", ann_in.format)->capture_default_str();
  ann->add_option("-m,--model", ann_model, "tagger JSON from `train-ner`");
  ann->add_option("--endpoint", ann_endpoint, "remote annotator service URL");
  ann->add_option("--model-id", ann_model_id);
  ann->add_option("--chunk-words", ann_chunk, "0: the model's training chunk size (128 remotely)")
      ->capture_default_str();
  ann->add_option("--batch-size", ann_batch, "chunks per remote request")->capture_default_str();
  ann->add_option("-o,--out", ann_out)->required();
  ann->add_option("--out-format", ann_out_format)->capture_default_str();
  ann->add_option("--attempts", ann_attempts)->capture_default_str();
  ann->add_option("--retry-delay-ms", ann_delay)->capture_default_str();
  ann->callback([&] {
    const Corpus c = ann_in.load();
    Corpus out;
    if (!ann_endpoint.empty()) {
      RemoteClient client(Endpoint::parse(ann_endpoint), retry_policy(ann_attempts, ann_delay));
      out = annotate_remote(client, c, ann_batch, ann_chunk ? ann_chunk : 128, {}, ann_model_id);
    } else {
      if (ann_model.empty()) throw ValidationError("annotate needs --model or --endpoint");
      out = annotate_corpus(TaggerModel::from_json(read_json(ann_model)), c, ann_chunk);
    }
    save(ann_out, ann_out_format, out);
  });

  // eval
  auto* eval = app.add_subcommand("eval", "Token-level F1 of predictions against gold labels");
  CorpusArg eval_gold, eval_pred;
  bool eval_json = false;
  eval->add_option("gold", eval_gold.path)->required();
  eval->add_option("predicted", eval_pred.path)->required();
  eval->add_flag("--json", eval_json);
  eval->callback([&] {
    const auto r = token_f1(eval_gold.load(), eval_pred.load());
    std::cout << (eval_json ? to_json(r, {eval_gold.path, eval_pred.path}).dump(2) + "\n" : format_table(r));
  });

  // diversity
  auto* div = app.add_subcommand("diversity", "Lexical diversity and document statistics");
  CorpusArg div_in;
  std::string div_language = "auto";
  bool div_json = false;
  div->add_option("corpus", div_in.path)->required();
  div->add_option("--format", div_in.format)->capture_default_str();
  div->add_option("--language", div_language, "sv, es, other or auto")->capture_default_str();
  div->add_flag("--json", div_json);
  div->callback([&] {
    const Corpus c = div_in.load();
    const Language lang = div_language != "auto" ? parse_language(div_language)
                          : c.empty()            ? Language::other
                                                 : c[0].language;
    const auto r = diversity_report(c, lang);
    std::cout << (div_json ? to_json(r, {div_in.path}).dump(2) + "\n" : format_table(r));
  });

  // privacy
  auto* priv = app.add_subcommand("privacy", "General and sensitive n-gram recall of a reference in a candidate");
  CorpusArg priv_ref, priv_cand;
  std::vector<std::size_t> priv_n{3, 5, 10};
  std::string priv_gran = "word";
  bool priv_json = false;
  priv->add_option("reference", priv_ref.path)->required();
  priv->add_option("candidate", priv_cand.path)->required();
  priv->add_option("-n", priv_n, "n-gram sizes")->delimiter(',')->capture_default_str();
  priv->add_option("--granularity", priv_gran, "word or char-<k>")->capture_default_str();
  priv->add_flag("--json", priv_json);
  priv->callback([&] {
    const Corpus ref = priv_ref.load();
    const Corpus cand = priv_cand.load();
    const auto g = parse_granularity(priv_gran);
    std::vector<NGramRecallReport> reports;
    nlohmann::json all = nlohmann::json::array();
    for (auto n : priv_n) {
      reports.push_back(ngram_privacy(ref, cand, n, g));
      for (auto& rec : to_json(reports.back(), {priv_ref.path, priv_cand.path})) all.push_back(rec);
    }
    std::cout << (priv_json ? all.dump(2) + "\n" : format_table(reports));
  });

  // run
  auto* run = app.add_subcommand("run", "Run one k-fold experiment");
  ExperimentArgs run_args;
  run_args.add(run);
  run->callback([&] {
    const auto cfg = run_args.config();
    exit_code = write_results({run_experiment(cfg)}, run_args);
  });

  // grid
  auto* grid = app.add_subcommand("grid", "Run an ablation grid");
  ExperimentArgs grid_args;
  std::vector<std::string> axes;
  bool grid_dry = false;
  grid_args.add(grid);
  grid->add_option("-a,--axis", axes,
                   "da_fraction, ma_fraction, synth_multiplier or generator_capacity, optionally =v1,v2,...")
      ->required();
  grid->add_flag("--dry-run", grid_dry, "print the grid configurations and exit");
  grid->callback([&] {
    const auto base = grid_args.config();
    std::vector<Axis> parsed;
    for (const auto& a : axes) parsed.push_back(parse_axis(a));
    const auto configs = ablation_grid(base, parsed);
    if (grid_dry) {
      for (const auto& c : configs) std::cout << c.coordinate << "\n";
      return;
    }
    exit_code = write_results(run_grid(configs, load_experiment_corpus(base)), grid_args);
  });

  // report
  auto* rep = app.add_subcommand("report", "Render results.json files as json, csv or a table");
  std::vector<std::string> rep_in;
  std::string rep_format = "table", rep_out;
  rep->add_option("results", rep_in)->required();
  rep->add_option("-f,--format", rep_format)->capture_default_str();
  rep->add_option("-o,--out", rep_out);
  rep->callback([&] {
    std::vector<RunResult> runs;
    for (const auto& p : rep_in) {
      for (auto& r : results_from_json(read_json(p))) runs.push_back(std::move(r));
    }
    emit(rep_out, emit_report(runs, parse_report_format(rep_format)));
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kExitValidation;
  } catch (const RemoteError& e) {
    std::cerr << "remote error: " << e.what() << "\n";
    return kExitRemote;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  }
  return exit_code;
}
