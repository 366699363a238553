#include "icd9group/synthetic.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <unordered_set>

#include "icd9group/csv.hpp"
#include "icd9group/embed.hpp"
#include "icd9group/errors.hpp"
#include "icd9group/rng.hpp"

namespace icd9group {

namespace {

constexpr int kMinWords = 15;

std::string token_name(const char* prefix, int a, int b) {
  char buf[48];
  if (b >= 0) {
    std::snprintf(buf, sizeof(buf), "g%02d%s%02d", a, prefix, b);
  } else {
    std::snprintf(buf, sizeof(buf), "%s%04d", prefix, a);
  }
  return buf;
}

void validate(const SyntheticConfig& c) {
  if (c.n_notes < 1 || c.n_admissions < 1) throw DataError("synthetic config needs n_notes, n_admissions >= 1");
  if (c.n_groups < 1 || c.n_groups > 20) throw DataError("synthetic n_groups must be in 1..20");
  if (c.note_len_min < kMinWords) {
    throw DataError("synthetic note length range below the 15-word cohort filter");
  }
  if (c.note_len_max < c.note_len_min) throw DataError("synthetic note_len_max < note_len_min");
  if (!c.group_probs.empty() && static_cast<int>(c.group_probs.size()) != c.n_groups) {
    throw DataError("group_probs size must equal n_groups");
  }
  if (!c.keywords.empty()) {
    if (static_cast<int>(c.keywords.size()) != c.n_groups) {
      throw DataError("keywords must provide one list per group");
    }
    std::unordered_set<std::string> seen;
    for (const auto& list : c.keywords) {
      if (list.empty()) throw DataError("every group needs at least one keyword");
      for (const auto& kw : list) {
        if (!seen.insert(kw).second) throw DataError("keyword lists overlap on '" + kw + "'");
      }
    }
  }
}

}  // namespace

std::string representative_code(int group_id) {
  static const char* kCodes[21] = {"",     "0038", "1400", "2500", "2850", "2960", "3320",
                                   "3660", "4280", "4860", "5310", "5800", "6350", "6800",
                                   "7100", "7450", "7650", "7800", "8080", "V300", "E8780"};
  if (group_id < 1 || group_id > 20) throw DataError("group id out of range 1..20");
  return kCodes[group_id];
}

SyntheticOutput generate_synthetic(const SyntheticConfig& config, std::uint64_t seed,
                                   const std::string& notes_path, const std::string& diagnoses_path) {
  validate(config);
  SyntheticOutput out;
  out.notes_csv = notes_path;
  out.diagnoses_csv = diagnoses_path;

  // Resolve vocabularies.
  out.keywords = config.keywords;
  if (out.keywords.empty()) {
    for (int g = 1; g <= config.n_groups; ++g) {
      std::vector<std::string> list;
      for (int k = 0; k < config.keywords_per_group; ++k) list.push_back(token_name("signal", g, k));
      out.keywords.push_back(std::move(list));
    }
  }
  out.filler = config.filler;
  if (out.filler.empty()) {
    for (int i = 0; i < config.filler_vocab_size; ++i) out.filler.push_back(token_name("filler", i, -1));
  }

  std::vector<double> probs = config.group_probs;
  if (probs.empty()) probs.assign(config.n_groups, 0.15);

  Rng rng(derive_seed(seed, "synthetic"));

  // Assign groups per admission.
  std::vector<std::vector<int>> admission_groups(config.n_admissions);
  std::vector<bool> admission_has_dx(config.n_admissions, true);
  for (long a = 0; a < config.n_admissions; ++a) {
    auto& groups = admission_groups[a];
    if (config.exclusive_groups) {
      double total = 0;
      for (double p : probs) total += p;
      double r = rng.uniform_real() * total;
      int chosen = config.n_groups;
      for (int g = 1; g <= config.n_groups; ++g) {
        r -= probs[g - 1];
        if (r < 0) {
          chosen = g;
          break;
        }
      }
      groups.push_back(chosen);
    } else {
      for (int g = 1; g <= config.n_groups; ++g) {
        if (rng.uniform_real() < probs[g - 1]) groups.push_back(g);
      }
      if (groups.empty()) groups.push_back(static_cast<int>(rng.uniform_int(1, config.n_groups)));
    }
    if (config.no_diagnosis_fraction > 0 && rng.uniform_real() < config.no_diagnosis_fraction) {
      admission_has_dx[a] = false;
      ++out.no_diagnosis_admissions;
    }
  }

  std::ofstream notes(notes_path, std::ios::binary);
  if (!notes) throw DataError("cannot write synthetic notes CSV: " + notes_path);
  notes << "ROW_ID,SUBJECT_ID,HADM_ID,CATEGORY,DESCRIPTION,ISERROR,TEXT\n";

  std::string text;
  for (long i = 0; i < config.n_notes; ++i) {
    const long adm = static_cast<long>(rng.uniform_int(0, config.n_admissions - 1));
    const auto& groups = admission_groups[adm];
    bool is_error = config.error_fraction > 0 && rng.uniform_real() < config.error_fraction;
    bool is_short = config.short_fraction > 0 && rng.uniform_real() < config.short_fraction;
    if (is_error) ++out.error_notes;
    if (is_short) ++out.short_notes;

    int len = is_short ? static_cast<int>(rng.uniform_int(3, kMinWords - 1))
                       : static_cast<int>(rng.uniform_int(config.note_len_min, config.note_len_max));
    text.clear();
    for (int w = 0; w < len; ++w) {
      if (w) text.push_back(' ');
      if (rng.uniform_real() < config.signal_density) {
        const int g = groups[rng.uniform_int(0, groups.size() - 1)];
        const auto& list = out.keywords[g - 1];
        text += list[rng.uniform_int(0, list.size() - 1)];
      } else {
        text += out.filler[rng.uniform_int(0, out.filler.size() - 1)];
      }
    }
    csv_write_row(notes, {std::to_string(i + 1), std::to_string(1000 + adm), std::to_string(5000 + adm),
                          config.category, "Synthetic Progress Note", is_error ? "1" : "",
                          text});
  }

  std::ofstream dx(diagnoses_path, std::ios::binary);
  if (!dx) throw DataError("cannot write synthetic diagnoses CSV: " + diagnoses_path);
  dx << "SUBJECT_ID,HADM_ID,ICD9_CODE\n";
  for (long a = 0; a < config.n_admissions; ++a) {
    if (!admission_has_dx[a]) continue;
    for (int g : admission_groups[a]) {
      csv_write_row(dx, {std::to_string(1000 + a), std::to_string(5000 + a), representative_code(g)});
    }
  }
  return out;
}

SyntheticConfig synthetic_config_from_json(const nlohmann::json& j) {
  SyntheticConfig c;
  c.n_notes = j.value("n_notes", c.n_notes);
  c.n_admissions = j.value("n_admissions", c.n_admissions);
  c.n_groups = j.value("n_groups", c.n_groups);
  if (j.contains("group_probs")) c.group_probs = j.at("group_probs").get<std::vector<double>>();
  c.exclusive_groups = j.value("exclusive_groups", c.exclusive_groups);
  if (j.contains("keywords")) {
    c.keywords = j.at("keywords").get<std::vector<std::vector<std::string>>>();
  }
  c.keywords_per_group = j.value("keywords_per_group", c.keywords_per_group);
  if (j.contains("filler")) c.filler = j.at("filler").get<std::vector<std::string>>();
  c.filler_vocab_size = j.value("filler_vocab_size", c.filler_vocab_size);
  c.note_len_min = j.value("note_len_min", c.note_len_min);
  c.note_len_max = j.value("note_len_max", c.note_len_max);
  c.signal_density = j.value("signal_density", c.signal_density);
  c.category = j.value("category", c.category);
  c.error_fraction = j.value("error_fraction", c.error_fraction);
  c.short_fraction = j.value("short_fraction", c.short_fraction);
  c.no_diagnosis_fraction = j.value("no_diagnosis_fraction", c.no_diagnosis_fraction);
  return c;
}

SyntheticOutput synth_dataset(const SyntheticConfig& config, std::uint64_t seed,
                              const std::string& out_dir, bool with_pretrained, int pretrained_dim) {
  std::filesystem::create_directories(out_dir);
  const auto path = [&](const char* name) {
    return (std::filesystem::path(out_dir) / name).string();
  };
  SyntheticOutput out = generate_synthetic(config, seed, path("notes.csv"), path("diagnoses.csv"));

  nlohmann::json meta;
  meta["seed"] = seed;
  meta["n_notes"] = config.n_notes;
  meta["n_admissions"] = config.n_admissions;
  meta["n_groups"] = config.n_groups;
  meta["keywords"] = out.keywords;
  meta["error_notes"] = out.error_notes;
  meta["short_notes"] = out.short_notes;
  meta["no_diagnosis_admissions"] = out.no_diagnosis_admissions;

  if (with_pretrained) {
    // Covers every token the generator can emit.
    std::vector<std::string> vocab;
    for (const auto& list : out.keywords) vocab.insert(vocab.end(), list.begin(), list.end());
    vocab.insert(vocab.end(), out.filler.begin(), out.filler.end());
    EmbeddingTable table =
        seeded_pretrained_table(vocab, pretrained_dim, derive_seed(seed, "stand-in-pretrained"));
    save_embeddings(table, path("pretrained.txt"));
    meta["pretrained"] = "pretrained.txt";
    meta["pretrained_dim"] = pretrained_dim;
  }
  std::ofstream mout(path("synth_meta.json"), std::ios::binary);
  if (!mout) throw DataError("cannot write synth_meta.json in " + out_dir);
  mout << meta.dump(2) << '\n';
  return out;
}

}  // namespace icd9group
