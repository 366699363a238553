#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace icd9group {

/// Desk-scale corpus generator emitting NOTEEVENTS/DIAGNOSES_ICD-compatible
/// CSVs. Each admission is assigned a group set; its notes contain signal
/// keywords only from those groups plus shared filler vocabulary, so the
/// grouping signal is recoverable from text alone.
struct SyntheticConfig {
  long n_notes = 2000;
  long n_admissions = 500;
  int n_groups = 20;  // 1..20; groups used are 1..n_groups

  /// Per-group inclusion probability. When empty, every group uses 0.15.
  /// Ignored when exclusive_groups is set.
  std::vector<double> group_probs;

  /// When true each admission gets exactly one group, sampled proportionally
  /// to group_probs (uniform when empty). Used for clustered corpora.
  bool exclusive_groups = false;

  /// Signal keyword lists per group. When empty, keywords_per_group tokens
  /// per group are generated ("gXXsignalYY"). Lists must be disjoint.
  std::vector<std::vector<std::string>> keywords;
  int keywords_per_group = 8;

  /// Shared filler vocabulary. When empty, filler_vocab_size tokens are
  /// generated ("fillerNNNN").
  std::vector<std::string> filler;
  int filler_vocab_size = 400;

  int note_len_min = 20;  // whitespace words per note; must be >= 15
  int note_len_max = 60;
  double signal_density = 0.35;  // probability a token is a group keyword

  std::string category = "Physician";

  // Fault-injection knobs for filter tests; all default off.
  double error_fraction = 0.0;      // notes emitted with ISERROR=1
  double short_fraction = 0.0;      // notes emitted with < 15 words
  double no_diagnosis_fraction = 0.0;  // admissions with zero diagnosis rows
};

struct SyntheticOutput {
  std::string notes_csv;
  std::string diagnoses_csv;
  long error_notes = 0;
  long short_notes = 0;
  long no_diagnosis_admissions = 0;
  std::vector<std::vector<std::string>> keywords;  // resolved per-group lists
  std::vector<std::string> filler;                 // resolved filler vocabulary
};

/// Validates the config (disjoint keyword lists, note_len_min >= 15,
/// consistent sizes) and writes the two CSVs. Deterministic: the same config
/// and seed produce byte-identical files.
SyntheticOutput generate_synthetic(const SyntheticConfig& config, std::uint64_t seed,
                                   const std::string& notes_path,
                                   const std::string& diagnoses_path);

/// Representative undotted ICD9 code for a group id (1..20), used when
/// emitting synthetic diagnosis rows.
std::string representative_code(int group_id);

/// Parses the SyntheticConfig fields from a JSON object (missing fields keep
/// their defaults).
SyntheticConfig synthetic_config_from_json(const nlohmann::json& j);

/// Writes a complete synthetic dataset into `out_dir`: notes.csv,
/// diagnoses.csv, a deterministic stand-in pretrained embedding file
/// covering the generated vocabulary (when with_pretrained), and a
/// synth_meta.json manifest.
SyntheticOutput synth_dataset(const SyntheticConfig& config, std::uint64_t seed,
                              const std::string& out_dir, bool with_pretrained = true,
                              int pretrained_dim = 200);

}  // namespace icd9group
