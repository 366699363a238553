#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "icd9group/embed.hpp"
#include "icd9group/eval.hpp"
#include "icd9group/net.hpp"

namespace icd9group {

enum class RunMode { Hybrid, Word2VecOnly, PretrainedOnly, Tfidf };

std::string to_string(RunMode mode);
RunMode parse_mode(const std::string& name);

/// Everything one end-to-end run needs. Loaded from a JSON config file with
/// CLI flag overrides; the output directory alone may also be overridden by
/// the ICD9GROUP_OUTPUT_DIR environment variable.
struct RunConfig {
  std::string notes_csv;
  std::string diagnoses_csv;
  std::string pretrained_embeddings;  // required for hybrid / pretrained_only
  std::string grouping_table;         // optional JSON override
  std::string stopwords;              // optional newline list override
  std::string output_dir = "runs/out";

  std::set<std::string> category_filter = {"Physician"};
  int min_words = 15;

  RunMode mode = RunMode::Hybrid;
  std::uint64_t seed = 1;
  double threshold = 0.5;
  long tfidf_top_k = 1000;

  SkipgramConfig skipgram;
  TrainConfig train;

  static RunConfig from_file(const std::string& path);
  static RunConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

struct RunArtifacts {
  std::string output_dir;
  std::string checkpoint_path;
  std::string report_json_path;
  std::string report_text_path;
  std::string run_log_path;
  EvalReport report;
};

/// Runs ingest -> labeling -> preprocessing -> features (per mode) ->
/// scaling -> training -> held-out evaluation, writing all artifacts into
/// config.output_dir. Deterministic given the config seed: a repeated run
/// produces byte-identical report files. Module errors are rethrown with
/// the failing stage name.
RunArtifacts run_pipeline(const RunConfig& config);

/// Validation split by admission id: deterministic shuffle of distinct
/// hadm_ids, first ceil(fraction * H) go to validation. Returns per-entry
/// is_validation flags aligned with corpus order.
std::vector<bool> admission_split(const std::vector<long>& hadm_ids, double validation_fraction,
                                  std::uint64_t split_seed);

/// Published reference metrics bundled for comparison output: one column of
/// reported results per mode, plus the reported structured-data baseline.
struct ReferenceMetrics {
  std::string name;
  std::vector<std::pair<std::string, double>> values;  // metric name -> value
};

const std::vector<ReferenceMetrics>& reported_reference_columns();
const ReferenceMetrics& reported_structured_baseline();

/// Builds the side-by-side comparison table from completed run directories.
/// Refuses (DataError) when runs disagree on cohort hash or split seed.
struct ComparisonTable {
  std::vector<std::string> columns;                 // mode names + reference
  std::vector<std::string> rows;                    // metric names
  std::vector<std::vector<double>> values;          // [row][column]
  std::string text;                                 // rendered table
  nlohmann::json json;
};

ComparisonTable compare_baselines(const std::vector<std::string>& run_dirs, bool with_reference = true);

/// Re-evaluates a completed run directory: rebuilds the validation features
/// from the snapshot config and the persisted embedding/tfidf models,
/// verifies content hashes against the checkpoint, and rewrites the report
/// files (into `out_dir`, defaulting to the run directory itself).
RunArtifacts evaluate_run(const std::string& run_dir, const std::string& out_dir = "");

/// Scores new notes with a completed run's model: applies the error and
/// min-word filters, vectorizes with the persisted feature models, and
/// writes one CSV row per kept note (ROW_ID followed by 20 score columns).
void predict_notes(const std::string& run_dir, const std::string& notes_csv,
                   const std::string& out_csv);

}  // namespace icd9group
