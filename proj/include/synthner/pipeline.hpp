#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "synthner/corpus.hpp"
#include "synthner/formats.hpp"
#include "synthner/metrics.hpp"
#include "synthner/remote.hpp"
#include "synthner/synthesis.hpp"

namespace synthner {

enum class Backend { native, remote };

struct GeneratorConfig {
  Backend backend = Backend::native;
  /// Native n-gram order; the capacity axis maps "small"/"large" to 2/4.
  std::size_t order = 3;
  double discount = 0.1;
  std::string endpoint;
  RemoteTrainingConfig training;

  bool operator==(const GeneratorConfig&) const = default;
};

struct AnnotatorConfig {
  Backend backend = Backend::native;
  std::size_t epochs = 6;
  std::size_t chunk_words = 128;
  std::string endpoint;
  RemoteNerConfig training;
  /// Chunks per remote annotate request.
  std::size_t batch_size = 16;

  bool operator==(const AnnotatorConfig&) const = default;
};

struct MetricsConfig {
  std::vector<std::size_t> n_values{3, 5, 10};
  /// Stemming language; unset means the language of the corpus's first document.
  std::optional<Language> language;
  Granularity granularity;

  bool operator==(const MetricsConfig&) const = default;
};

/// Everything a run depends on. Keys of the config file and of --set are the dotted field
/// paths listed by config_keys().
struct ExperimentConfig {
  /// Empty: use the built-in template corpus below.
  std::string corpus_path;
  std::optional<CorpusFormat> corpus_format;
  std::string template_preset = "sepr";
  std::size_t template_documents = 2000;

  std::uint64_t seed = 0;
  std::size_t folds = 5;
  double val_fraction = 0.05;
  double da_fraction = 0.95;
  double ma_fraction = 0.95;
  double synth_multiplier = 4.0;
  std::size_t prompt_words = 3;

  GeneratorConfig generator;
  AnnotatorConfig annotator;
  /// max_tokens 0 means "resolve from the validation slice"; samples_per_prompt is derived.
  GenerationConfig generation{0.95, 1.0, 10, 0, 80};
  MetricsConfig metrics;

  std::size_t threads = 1;
  /// Record wall-clock times in the manifest (breaks byte-identical reruns).
  bool timestamps = false;
  /// Grid coordinate, e.g. "da_fraction=0.05"; empty for a single run.
  std::string coordinate;

  void validate() const;
  bool operator==(const ExperimentConfig&) const = default;
};

/// Sets one dotted key from its text value; throws ValidationError on an unknown key or bad value.
void apply_setting(ExperimentConfig& cfg, std::string_view key, std::string_view value);
/// "key = value" lines; '#' starts a comment. Later lines override earlier ones.
ExperimentConfig parse_config(std::string_view text, ExperimentConfig base = {});
/// Every key, in a stable order, with its current value; parse_config(write_config(c)) == c.
std::string write_config(const ExperimentConfig& cfg);
std::vector<std::string> config_keys();

nlohmann::ordered_json to_json(const ExperimentConfig& cfg);
ExperimentConfig config_from_json(const nlohmann::json& j);

/// The corpus a config names: the file at corpus_path, or the template corpus.
Corpus load_experiment_corpus(const ExperimentConfig& cfg);

// --- runs ----------------------------------------------------------------------------------

/// Seeds used by one fold. Subsets and the gold tagger ignore the grid coordinate so every
/// cell of a grid shares folds, nested subsets and gold models; generation does not.
struct FoldSeeds {
  std::uint64_t split = 0;
  std::uint64_t ma_subset = 0;
  std::uint64_t da_subset = 0;
  std::uint64_t gold_tagger = 0;
  std::uint64_t generation = 0;
  std::uint64_t synthetic_subsample = 0;
  std::uint64_t synthetic_tagger = 0;
};

FoldSeeds fold_seeds(const ExperimentConfig& cfg, std::size_t fold);

/// samples_per_prompt = round(multiplier * non-test / prompts), at least 1.
std::size_t derive_samples_per_prompt(double multiplier, std::size_t non_test, std::size_t prompts);

struct FoldResult {
  std::size_t fold = 0;
  bool ok = false;
  /// Stage that failed and its message, when !ok.
  std::string failed_stage;
  std::string error;

  F1Report gold_f1;
  F1Report synthetic_f1;
  /// gold micro F1 minus synthetic micro F1.
  double delta = 0.0;
  DiversityReport gold_diversity;
  DiversityReport synthetic_diversity;
  std::vector<NGramRecallReport> privacy;

  /// Structural facts of the fold (sizes, derived lengths, seeds, digests, leakage checks).
  nlohmann::ordered_json manifest;
};

/// Named scalars of a completed fold, e.g. "synthetic_f1", "recall_5".
std::map<std::string, double> fold_scalars(const FoldResult& fold);

struct RunResult {
  ExperimentConfig config;
  std::vector<FoldResult> folds;
  /// Empty unless every fold completed.
  std::map<std::string, MeanStd> aggregates;
  nlohmann::ordered_json manifest;

  bool complete() const;
};

/// Mean and population std of every scalar across folds; empty if any fold failed.
std::map<std::string, MeanStd> aggregate(const std::vector<FoldResult>& folds);

/// Runs the whole generate/annotate/train/evaluate chain for one fold. Stage errors are
/// caught and reported in the result rather than thrown.
FoldResult run_fold(const ExperimentConfig& cfg, const Corpus& corpus, const FoldPlan& plan, std::size_t fold);

RunResult run_experiment(const ExperimentConfig& cfg, const Corpus& corpus);
RunResult run_experiment(const ExperimentConfig& cfg);

// --- grids ---------------------------------------------------------------------------------

/// One ablation axis: da_fraction, ma_fraction, synth_multiplier or generator_capacity.
struct Axis {
  std::string name;
  std::vector<double> values;
};

/// Values used when an axis is given without values.
std::vector<double> default_axis_values(std::string_view name);
/// "name" or "name=v1,v2,..."; capacity accepts "small"/"large" for orders 2/4.
Axis parse_axis(std::string_view spec);

/// Cartesian product over the axes in the given order, last axis fastest; every other field
/// is copied from `base`. Each config's coordinate labels its cell.
std::vector<ExperimentConfig> ablation_grid(const ExperimentConfig& base, const std::vector<Axis>& axes);

std::vector<RunResult> run_grid(const std::vector<ExperimentConfig>& configs, const Corpus& corpus);

// --- serialization & reports ---------------------------------------------------------------

nlohmann::ordered_json to_json(const RunResult& run);
RunResult run_from_json(const nlohmann::json& j);
/// {"runs": [...]} for grids; a single run serializes the same way with one element.
nlohmann::ordered_json results_json(const std::vector<RunResult>& runs);
std::vector<RunResult> results_from_json(const nlohmann::json& j);
nlohmann::ordered_json manifests_json(const std::vector<RunResult>& runs);

enum class ReportFormat { json, csv, table };
ReportFormat parse_report_format(std::string_view s);

/// One row per grid cell plus one gold-baseline row per distinct ma_fraction. Table cells are
/// "mean ± std" with 3 decimals; CSV keeps full precision.
std::string emit_report(const std::vector<RunResult>& runs, ReportFormat format);

}  // namespace synthner
