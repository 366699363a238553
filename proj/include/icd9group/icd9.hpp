#pragma once

#include <array>
#include <cstdint>
#include <set>
#include <string>
#include <vector>

namespace icd9group {

constexpr int kGroupCount = 20;

/// 20-dimensional binary target, one entry per disease group.
using LabelVector = std::array<std::uint8_t, kGroupCount>;

enum class Icd9Kind { Numeric, V, E };

/// A parsed ICD9 code in the undotted MIMIC form, e.g. "4280" or "V3000".
struct Icd9Code {
  std::string raw;
  Icd9Kind kind;
  int numeric_prefix;  // first three digits for numeric codes, digits after V/E otherwise
};

/// Parses a raw code string; throws DataError on malformed input
/// (empty, non-digit prefix, prefix out of 1..999 for numeric codes).
Icd9Code parse_icd9(const std::string& code);

/// One grouping rule: a numeric 3-digit-prefix range, or the V/E bucket.
struct GroupRule {
  int group_id;  // 1..20
  std::string label;
  Icd9Kind kind;
  int lo = 0;  // inclusive prefix range, numeric rules only
  int hi = 0;
};

/// The 20-group split of the ICD9 code space. Immutable after construction.
class GroupingTable {
public:
  /// The standard 20-group split (17 numeric chapters + ill-defined +
  /// injury/poisoning ranges, V codes, E codes).
  static GroupingTable standard();

  /// Loads an override table from a JSON file (same schema as save()).
  /// Validates disjointness, 001-999 coverage, and the 1..20 id set.
  static GroupingTable load(const std::string& path);

  explicit GroupingTable(std::vector<GroupRule> rules);

  void save(const std::string& path) const;

  const std::vector<GroupRule>& rules() const { return rules_; }
  const std::string& group_label(int group_id) const;

  /// Maps a parsed code to its group id (1..20).
  int group_of(const Icd9Code& code) const;

private:
  void validate() const;

  std::vector<GroupRule> rules_;
};

/// Parses `code` and maps it to a group id in 1..20.
int parse_and_group(const std::string& code, const GroupingTable& table);

/// Binary label vector with position g-1 set for every g in `groups`.
LabelVector binarize(const std::set<int>& groups);

struct LabeledCorpus;  // ingest.hpp

/// Per-group prevalence fractions over a labeled corpus, as a 20-row table.
struct GroupPrevalence {
  int group_id;
  std::string label;
  long positives;
  double fraction;
};

std::vector<GroupPrevalence> label_distribution(const LabeledCorpus& corpus,
                                                const GroupingTable& table);

/// Writes the distribution as a 20-row CSV (group_id,label,positives,fraction).
void write_label_distribution(const std::vector<GroupPrevalence>& dist, const std::string& path);

}  // namespace icd9group
