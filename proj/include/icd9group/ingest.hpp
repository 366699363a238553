#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "icd9group/icd9.hpp"

namespace icd9group {

/// One physician note row from a NOTEEVENTS-style CSV.
struct Note {
  long row_id = 0;
  long subject_id = 0;
  long hadm_id = 0;
  std::string category;
  std::string description;  // note sub-type, kept for stats when the column exists
  bool is_error = false;
  std::string text;
};

/// One row from a DIAGNOSES_ICD-style CSV.
struct DiagnosisRecord {
  long subject_id = 0;
  long hadm_id = 0;
  std::string icd9_code;  // undotted MIMIC form, e.g. "4280", "V3000"
};

/// Filter bookkeeping produced by build_cohort. Counts conserve:
/// input = kept + error_removed + short_removed + no_diagnosis_removed.
struct CohortCounts {
  long input_notes = 0;
  long kept = 0;
  long error_removed = 0;
  long short_removed = 0;
  long no_diagnosis_removed = 0;
};

struct CorpusEntry {
  Note note;
  LabelVector labels;
};

/// Notes joined to 20-dimensional binary group labels, plus provenance.
struct LabeledCorpus {
  std::vector<CorpusEntry> entries;  // order-stable by row_id
  std::string source;
  CohortCounts counts;
  long unique_icd9_codes = 0;                    // distinct codes over kept admissions
  std::map<std::string, long> category_counts;   // note sub-type tally (description when present)
  int min_words = 15;
};

struct CorpusStats {
  long note_count = 0;
  long unique_word_count = 0;  // case-folded whitespace tokens
  long max_note_words = 0;
  long min_note_words = 0;
  double mean_note_words = 0.0;
  long unique_disease_count = 0;
  int group_count = kGroupCount;
};

/// Loads notes whose CATEGORY (whitespace-trimmed) is in `category_filter`;
/// an empty filter keeps every category. ISERROR parses empty/0 as false and
/// 1 as true. Throws DataError for a missing file, missing required column,
/// or an unparseable row (reported with its record number).
std::vector<Note> load_notes(const std::string& path, const std::set<std::string>& category_filter);

/// Loads diagnosis rows; rows with a blank ICD9_CODE are skipped and counted
/// into *blank_skipped when provided.
std::vector<DiagnosisRecord> load_diagnoses(const std::string& path, long* blank_skipped = nullptr);

/// Applies the cohort filters and joins notes to admission-level labels:
/// error-flagged notes removed, notes under `min_words` whitespace words
/// removed, notes whose (subject_id, hadm_id) has no diagnosis rows dropped
/// and counted. Each kept note receives the union of group labels of all
/// diagnoses sharing its admission. Throws DataError when nothing survives.
LabeledCorpus build_cohort(const std::vector<Note>& notes,
                           const std::vector<DiagnosisRecord>& diagnoses,
                           const GroupingTable& grouping, int min_words = 15);

/// Word counts are computed on whitespace-separated raw tokens; unique words
/// are case-folded. Throws DataError on an empty corpus.
CorpusStats corpus_stats(const LabeledCorpus& corpus);

/// Number of whitespace-separated words in raw text.
long count_words(const std::string& text);

/// Serializes a cohort as CSV (ROW_ID,SUBJECT_ID,HADM_ID,CATEGORY,TEXT,LABELS
/// with LABELS as a 20-char bitstring) plus a JSON sidecar with provenance.
void save_cohort(const LabeledCorpus& corpus, const std::string& csv_path,
                 const std::string& meta_path);

/// Stable content fingerprint of a cohort (row ids, admissions, text, labels).
std::string cohort_hash(const LabeledCorpus& corpus);

}  // namespace icd9group
