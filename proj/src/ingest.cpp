#include "icd9group/ingest.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <limits>
#include <unordered_map>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "icd9group/csv.hpp"
#include "icd9group/errors.hpp"
#include "icd9group/rng.hpp"

namespace icd9group {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

long parse_long(const std::string& field, const char* what, long record, const std::string& path) {
  try {
    std::size_t pos = 0;
    long v = std::stol(field, &pos);
    if (pos != field.size()) throw std::invalid_argument(field);
    return v;
  } catch (const std::exception&) {
    throw DataError(std::string("unparseable ") + what + " '" + field + "' at record " +
                    std::to_string(record) + " in " + path);
  }
}

bool parse_iserror(const std::string& field, long record, const std::string& path) {
  std::string t = trim(field);
  if (t.empty() || t == "0") return false;
  if (t == "1") return true;
  throw DataError("unparseable ISERROR '" + field + "' at record " + std::to_string(record) +
                  " in " + path);
}

std::uint64_t pair_key(long subject_id, long hadm_id) {
  return (static_cast<std::uint64_t>(subject_id) << 32) ^ static_cast<std::uint64_t>(hadm_id & 0xffffffffL);
}

}  // namespace

long count_words(const std::string& text) {
  long n = 0;
  bool in_word = false;
  for (unsigned char c : text) {
    if (std::isspace(c)) {
      in_word = false;
    } else if (!in_word) {
      in_word = true;
      ++n;
    }
  }
  return n;
}

std::vector<Note> load_notes(const std::string& path, const std::set<std::string>& category_filter) {
  CsvReader reader(path);
  const int c_row = reader.require_column("ROW_ID");
  const int c_subj = reader.require_column("SUBJECT_ID");
  const int c_hadm = reader.require_column("HADM_ID");
  const int c_cat = reader.require_column("CATEGORY");
  const int c_err = reader.require_column("ISERROR");
  const int c_text = reader.require_column("TEXT");
  const int c_desc = reader.column("DESCRIPTION");  // optional

  std::vector<Note> notes;
  std::vector<std::string> fields;
  while (reader.next(fields)) {
    const long rec = reader.record_number();
    std::string category = trim(fields[c_cat]);
    if (!category_filter.empty() && !category_filter.count(category)) continue;
    Note n;
    n.row_id = parse_long(fields[c_row], "ROW_ID", rec, path);
    n.subject_id = parse_long(fields[c_subj], "SUBJECT_ID", rec, path);
    n.hadm_id = parse_long(fields[c_hadm], "HADM_ID", rec, path);
    n.category = std::move(category);
    if (c_desc >= 0) n.description = trim(fields[c_desc]);
    n.is_error = parse_iserror(fields[c_err], rec, path);
    n.text = fields[c_text];
    notes.push_back(std::move(n));
  }
  return notes;
}

std::vector<DiagnosisRecord> load_diagnoses(const std::string& path, long* blank_skipped) {
  CsvReader reader(path);
  const int c_subj = reader.require_column("SUBJECT_ID");
  const int c_hadm = reader.require_column("HADM_ID");
  const int c_code = reader.require_column("ICD9_CODE");

  std::vector<DiagnosisRecord> records;
  std::vector<std::string> fields;
  long skipped = 0;
  while (reader.next(fields)) {
    const long rec = reader.record_number();
    std::string code = trim(fields[c_code]);
    if (code.empty()) {
      ++skipped;
      continue;
    }
    DiagnosisRecord r;
    r.subject_id = parse_long(fields[c_subj], "SUBJECT_ID", rec, path);
    r.hadm_id = parse_long(fields[c_hadm], "HADM_ID", rec, path);
    r.icd9_code = std::move(code);
    records.push_back(std::move(r));
  }
  if (blank_skipped) *blank_skipped = skipped;
  return records;
}

LabeledCorpus build_cohort(const std::vector<Note>& notes,
                           const std::vector<DiagnosisRecord>& diagnoses,
                           const GroupingTable& grouping, int min_words) {
  // Admission -> group set, plus distinct codes per admission for stats.
  std::unordered_map<std::uint64_t, std::set<int>> admission_groups;
  std::unordered_map<std::uint64_t, std::set<std::string>> admission_codes;
  for (const auto& d : diagnoses) {
    const auto key = pair_key(d.subject_id, d.hadm_id);
    admission_groups[key].insert(parse_and_group(d.icd9_code, grouping));
    admission_codes[key].insert(d.icd9_code);
  }

  LabeledCorpus corpus;
  corpus.min_words = min_words;
  corpus.counts.input_notes = static_cast<long>(notes.size());
  std::unordered_set<std::uint64_t> kept_admissions;
  for (const auto& n : notes) {
    if (n.is_error) {
      ++corpus.counts.error_removed;
      continue;
    }
    if (count_words(n.text) < min_words) {
      ++corpus.counts.short_removed;
      continue;
    }
    const auto key = pair_key(n.subject_id, n.hadm_id);
    auto it = admission_groups.find(key);
    if (it == admission_groups.end()) {
      ++corpus.counts.no_diagnosis_removed;
      continue;
    }
    CorpusEntry entry;
    entry.note = n;
    entry.labels = binarize(it->second);
    corpus.entries.push_back(std::move(entry));
    kept_admissions.insert(key);
    ++corpus.counts.kept;
    const std::string& subtype = n.description.empty() ? n.category : n.description;
    ++corpus.category_counts[subtype];
  }
  if (corpus.entries.empty()) {
    throw DataError("cohort is empty after filtering (" + std::to_string(notes.size()) + " input notes)");
  }
  std::sort(corpus.entries.begin(), corpus.entries.end(),
            [](const CorpusEntry& a, const CorpusEntry& b) { return a.note.row_id < b.note.row_id; });

  std::set<std::string> codes;
  for (const auto key : kept_admissions) {
    const auto& adm = admission_codes[key];
    codes.insert(adm.begin(), adm.end());
  }
  corpus.unique_icd9_codes = static_cast<long>(codes.size());
  return corpus;
}

CorpusStats corpus_stats(const LabeledCorpus& corpus) {
  if (corpus.entries.empty()) throw DataError("corpus_stats on empty corpus");
  CorpusStats s;
  s.note_count = static_cast<long>(corpus.entries.size());
  s.unique_disease_count = corpus.unique_icd9_codes;

  std::unordered_set<std::string> unique_words;
  long total_words = 0;
  s.min_note_words = std::numeric_limits<long>::max();
  std::string word;
  for (const auto& e : corpus.entries) {
    long words_in_note = 0;
    word.clear();
    auto flush = [&] {
      if (!word.empty()) {
        ++words_in_note;
        unique_words.insert(word);
        word.clear();
      }
    };
    for (unsigned char c : e.note.text) {
      if (std::isspace(c)) {
        flush();
      } else {
        word.push_back(static_cast<char>(std::tolower(c)));
      }
    }
    flush();
    total_words += words_in_note;
    s.max_note_words = std::max(s.max_note_words, words_in_note);
    s.min_note_words = std::min(s.min_note_words, words_in_note);
  }
  s.unique_word_count = static_cast<long>(unique_words.size());
  s.mean_note_words = static_cast<double>(total_words) / static_cast<double>(s.note_count);
  return s;
}

namespace {

std::string labels_bitstring(const LabelVector& labels) {
  std::string bits(kGroupCount, '0');
  for (int g = 0; g < kGroupCount; ++g) {
    if (labels[g]) bits[g] = '1';
  }
  return bits;
}

}  // namespace

void save_cohort(const LabeledCorpus& corpus, const std::string& csv_path, const std::string& meta_path) {
  std::ofstream out(csv_path, std::ios::binary);
  if (!out) throw DataError("cannot write cohort CSV: " + csv_path);
  out << "ROW_ID,SUBJECT_ID,HADM_ID,CATEGORY,TEXT,LABELS\n";
  for (const auto& e : corpus.entries) {
    csv_write_row(out, {std::to_string(e.note.row_id), std::to_string(e.note.subject_id),
                        std::to_string(e.note.hadm_id), e.note.category, e.note.text,
                        labels_bitstring(e.labels)});
  }

  nlohmann::json meta;
  meta["source"] = corpus.source;
  meta["counts"] = {{"input_notes", corpus.counts.input_notes},
                    {"kept", corpus.counts.kept},
                    {"error_removed", corpus.counts.error_removed},
                    {"short_removed", corpus.counts.short_removed},
                    {"no_diagnosis_removed", corpus.counts.no_diagnosis_removed}};
  meta["min_words"] = corpus.min_words;
  meta["unique_icd9_codes"] = corpus.unique_icd9_codes;
  meta["note_types"] = corpus.category_counts;
  meta["cohort_hash"] = cohort_hash(corpus);
  std::ofstream mout(meta_path, std::ios::binary);
  if (!mout) throw DataError("cannot write cohort metadata: " + meta_path);
  mout << meta.dump(2) << '\n';
}

std::string cohort_hash(const LabeledCorpus& corpus) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](const void* data, std::size_t len) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
      h ^= p[i];
      h *= 0x100000001b3ULL;
    }
  };
  for (const auto& e : corpus.entries) {
    mix(&e.note.row_id, sizeof(e.note.row_id));
    mix(&e.note.subject_id, sizeof(e.note.subject_id));
    mix(&e.note.hadm_id, sizeof(e.note.hadm_id));
    mix(e.note.text.data(), e.note.text.size());
    mix(e.labels.data(), e.labels.size());
  }
  return hash_hex(h);
}

}  // namespace icd9group
