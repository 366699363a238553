#include "icd9group/icd9.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>

#include <nlohmann/json.hpp>

#include "icd9group/csv.hpp"
#include "icd9group/errors.hpp"
#include "icd9group/ingest.hpp"

namespace icd9group {

namespace {

bool all_digits(std::string_view s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isdigit(c); });
}

}  // namespace

Icd9Code parse_icd9(const std::string& code) {
  if (code.empty()) throw DataError("empty ICD9 code");
  if (code[0] == 'V' || code[0] == 'v' || code[0] == 'E' || code[0] == 'e') {
    std::string_view digits(code);
    digits.remove_prefix(1);
    if (!all_digits(digits)) {
      throw DataError("malformed ICD9 code: " + code);
    }
    Icd9Kind kind = (code[0] == 'V' || code[0] == 'v') ? Icd9Kind::V : Icd9Kind::E;
    return {code, kind, std::stoi(std::string(digits))};
  }
  // Numeric codes: the first three characters are the chapter prefix.
  if (code.size() < 3 || !all_digits(std::string_view(code).substr(0, 3))) {
    throw DataError("malformed ICD9 code: " + code);
  }
  if (!all_digits(code)) {
    throw DataError("malformed ICD9 code: " + code);
  }
  int prefix = std::stoi(code.substr(0, 3));
  if (prefix < 1 || prefix > 999) {
    throw DataError("ICD9 numeric prefix out of range 001-999: " + code);
  }
  return {code, Icd9Kind::Numeric, prefix};
}

GroupingTable GroupingTable::standard() {
  std::vector<GroupRule> rules = {
      {1, "infectious and parasitic", Icd9Kind::Numeric, 1, 139},
      {2, "neoplasms", Icd9Kind::Numeric, 140, 239},
      {3, "endocrine, nutritional, metabolic, immunity", Icd9Kind::Numeric, 240, 279},
      {4, "blood and blood-forming organs", Icd9Kind::Numeric, 280, 289},
      {5, "mental disorders", Icd9Kind::Numeric, 290, 319},
      {6, "nervous system", Icd9Kind::Numeric, 320, 359},
      {7, "sense organs", Icd9Kind::Numeric, 360, 389},
      {8, "circulatory system", Icd9Kind::Numeric, 390, 459},
      {9, "respiratory system", Icd9Kind::Numeric, 460, 519},
      {10, "digestive system", Icd9Kind::Numeric, 520, 579},
      {11, "genitourinary system", Icd9Kind::Numeric, 580, 629},
      {12, "pregnancy and childbirth", Icd9Kind::Numeric, 630, 679},
      {13, "skin and subcutaneous tissue", Icd9Kind::Numeric, 680, 709},
      {14, "musculoskeletal system", Icd9Kind::Numeric, 710, 739},
      {15, "congenital anomalies", Icd9Kind::Numeric, 740, 759},
      {16, "perinatal conditions", Icd9Kind::Numeric, 760, 779},
      {17, "ill-defined conditions", Icd9Kind::Numeric, 780, 799},
      {18, "injury and poisoning", Icd9Kind::Numeric, 800, 999},
      {19, "supplementary V codes", Icd9Kind::V},
      {20, "external causes E codes", Icd9Kind::E},
  };
  return GroupingTable(std::move(rules));
}

GroupingTable::GroupingTable(std::vector<GroupRule> rules) : rules_(std::move(rules)) { validate(); }

void GroupingTable::validate() const {
  if (rules_.size() != kGroupCount) {
    throw DataError("grouping table must have exactly 20 rules, got " + std::to_string(rules_.size()));
  }
  std::array<bool, kGroupCount + 1> seen{};
  std::array<int, 1000> cover{};
  int v_rules = 0, e_rules = 0;
  for (const auto& r : rules_) {
    if (r.group_id < 1 || r.group_id > kGroupCount || seen[r.group_id]) {
      throw DataError("grouping table ids must be 1..20, each used once");
    }
    seen[r.group_id] = true;
    switch (r.kind) {
      case Icd9Kind::Numeric:
        if (r.lo < 1 || r.hi > 999 || r.lo > r.hi) {
          throw DataError("bad numeric range in grouping rule for group " + std::to_string(r.group_id));
        }
        for (int p = r.lo; p <= r.hi; ++p) ++cover[p];
        break;
      case Icd9Kind::V: ++v_rules; break;
      case Icd9Kind::E: ++e_rules; break;
    }
  }
  if (v_rules != 1 || e_rules != 1) {
    throw DataError("grouping table needs exactly one V rule and one E rule");
  }
  for (int p = 1; p <= 999; ++p) {
    if (cover[p] != 1) {
      throw DataError("numeric ranges must cover 001-999 exactly once; prefix " +
                      std::to_string(p) + " covered " + std::to_string(cover[p]) + " times");
    }
  }
}

const std::string& GroupingTable::group_label(int group_id) const {
  for (const auto& r : rules_) {
    if (r.group_id == group_id) return r.label;
  }
  throw DataError("unknown group id " + std::to_string(group_id));
}

int GroupingTable::group_of(const Icd9Code& code) const {
  for (const auto& r : rules_) {
    switch (r.kind) {
      case Icd9Kind::Numeric:
        if (code.kind == Icd9Kind::Numeric && code.numeric_prefix >= r.lo && code.numeric_prefix <= r.hi)
          return r.group_id;
        break;
      case Icd9Kind::V:
        if (code.kind == Icd9Kind::V) return r.group_id;
        break;
      case Icd9Kind::E:
        if (code.kind == Icd9Kind::E) return r.group_id;
        break;
    }
  }
  throw DataError("ICD9 code not covered by grouping table: " + code.raw);
}

GroupingTable GroupingTable::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open grouping table: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("bad grouping table JSON in " + path + ": " + e.what());
  }
  std::vector<GroupRule> rules;
  for (const auto& item : j.at("groups")) {
    GroupRule r;
    r.group_id = item.at("group").get<int>();
    r.label = item.at("label").get<std::string>();
    std::string kind = item.at("kind").get<std::string>();
    if (kind == "range") {
      r.kind = Icd9Kind::Numeric;
      r.lo = item.at("lo").get<int>();
      r.hi = item.at("hi").get<int>();
    } else if (kind == "V") {
      r.kind = Icd9Kind::V;
    } else if (kind == "E") {
      r.kind = Icd9Kind::E;
    } else {
      throw DataError("unknown grouping rule kind '" + kind + "' in " + path);
    }
    rules.push_back(std::move(r));
  }
  return GroupingTable(std::move(rules));
}

void GroupingTable::save(const std::string& path) const {
  nlohmann::json groups = nlohmann::json::array();
  for (const auto& r : rules_) {
    nlohmann::json item;
    item["group"] = r.group_id;
    item["label"] = r.label;
    switch (r.kind) {
      case Icd9Kind::Numeric:
        item["kind"] = "range";
        item["lo"] = r.lo;
        item["hi"] = r.hi;
        break;
      case Icd9Kind::V: item["kind"] = "V"; break;
      case Icd9Kind::E: item["kind"] = "E"; break;
    }
    groups.push_back(std::move(item));
  }
  nlohmann::json j;
  j["groups"] = std::move(groups);
  std::ofstream out(path);
  if (!out) throw DataError("cannot write grouping table: " + path);
  out << j.dump(2) << '\n';
}

int parse_and_group(const std::string& code, const GroupingTable& table) {
  return table.group_of(parse_icd9(code));
}

LabelVector binarize(const std::set<int>& groups) {
  LabelVector v{};
  for (int g : groups) {
    if (g < 1 || g > kGroupCount) throw DataError("group id out of range 1..20: " + std::to_string(g));
    v[g - 1] = 1;
  }
  return v;
}

std::vector<GroupPrevalence> label_distribution(const LabeledCorpus& corpus, const GroupingTable& table) {
  if (corpus.entries.empty()) throw DataError("label_distribution on empty corpus");
  std::array<long, kGroupCount> counts{};
  for (const auto& e : corpus.entries) {
    for (int g = 0; g < kGroupCount; ++g) counts[g] += e.labels[g];
  }
  std::vector<GroupPrevalence> dist;
  dist.reserve(kGroupCount);
  const double n = static_cast<double>(corpus.entries.size());
  for (int g = 1; g <= kGroupCount; ++g) {
    dist.push_back({g, table.group_label(g), counts[g - 1], counts[g - 1] / n});
  }
  return dist;
}

void write_label_distribution(const std::vector<GroupPrevalence>& dist, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write label distribution: " + path);
  out << "group_id,label,positives,fraction\n";
  char buf[64];
  for (const auto& d : dist) {
    std::snprintf(buf, sizeof(buf), "%.17g", d.fraction);
    out << d.group_id << ',' << csv_escape(d.label) << ',' << d.positives << ',' << buf << '\n';
  }
}

}  // namespace icd9group
