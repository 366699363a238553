// icd9group command-line interface.
//
// Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric failure.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "icd9group/errors.hpp"
#include "icd9group/icd9.hpp"
#include "icd9group/ingest.hpp"
#include "icd9group/pipeline.hpp"
#include "icd9group/rng.hpp"
#include "icd9group/synthetic.hpp"

namespace fs = std::filesystem;
using namespace icd9group;

namespace {

struct CommonOpts {
  std::string config_path;
  std::string mode;
  std::string output_dir;
  std::uint64_t seed = 0;
  bool has_seed = false;
};

RunConfig resolve_config(const CommonOpts& opts) {
  RunConfig config = opts.config_path.empty() ? RunConfig() : RunConfig::from_file(opts.config_path);
  if (!opts.mode.empty()) config.mode = parse_mode(opts.mode);
  if (opts.has_seed) config.seed = opts.seed;
  if (!opts.output_dir.empty()) config.output_dir = opts.output_dir;
  // The environment may override the output directory only.
  if (const char* env = std::getenv("ICD9GROUP_OUTPUT_DIR")) config.output_dir = env;
  return config;
}

void add_common(CLI::App* cmd, CommonOpts& opts, bool with_mode = true) {
  cmd->add_option("--config", opts.config_path, "JSON run configuration file");
  if (with_mode) {
    cmd->add_option("--mode", opts.mode, "hybrid | word2vec_only | pretrained_only | tfidf");
  }
  cmd->add_option("--out", opts.output_dir, "output directory");
  auto* seed = cmd->add_option("--seed", opts.seed, "top-level run seed");
  seed->each([&opts](const std::string&) { opts.has_seed = true; });
}

LabeledCorpus ingest_corpus(const RunConfig& config, long* blank_codes = nullptr) {
  auto notes = load_notes(config.notes_csv, config.category_filter);
  auto diagnoses = load_diagnoses(config.diagnoses_csv, blank_codes);
  GroupingTable grouping = config.grouping_table.empty() ? GroupingTable::standard()
                                                         : GroupingTable::load(config.grouping_table);
  auto corpus = build_cohort(notes, diagnoses, grouping, config.min_words);
  corpus.source = config.notes_csv + " + " + config.diagnoses_csv;
  return corpus;
}

int run_ingest(const CommonOpts& opts) {
  RunConfig config = resolve_config(opts);
  long blank_codes = 0;
  LabeledCorpus corpus = ingest_corpus(config, &blank_codes);
  fs::create_directories(config.output_dir);
  const fs::path out(config.output_dir);
  save_cohort(corpus, (out / "cohort.csv").string(), (out / "cohort_meta.json").string());

  nlohmann::json run_log;
  run_log["counts"] = {{"input_notes", corpus.counts.input_notes},
                       {"kept", corpus.counts.kept},
                       {"error_removed", corpus.counts.error_removed},
                       {"short_removed", corpus.counts.short_removed},
                       {"no_diagnosis_removed", corpus.counts.no_diagnosis_removed},
                       {"blank_icd9_codes_skipped", blank_codes}};
  std::ofstream log((out / "run_log.json").string(), std::ios::binary);
  log << run_log.dump(2) << '\n';
  std::cout << "kept " << corpus.counts.kept << " of " << corpus.counts.input_notes
            << " notes -> " << (out / "cohort.csv").string() << '\n';
  return 0;
}

int run_stats(const CommonOpts& opts) {
  RunConfig config = resolve_config(opts);
  LabeledCorpus corpus = ingest_corpus(config);
  CorpusStats stats = corpus_stats(corpus);
  GroupingTable grouping = config.grouping_table.empty() ? GroupingTable::standard()
                                                         : GroupingTable::load(config.grouping_table);
  auto dist = label_distribution(corpus, grouping);

  fs::create_directories(config.output_dir);
  const fs::path out(config.output_dir);
  write_label_distribution(dist, (out / "label_distribution.csv").string());

  nlohmann::json j;
  j["note_count"] = stats.note_count;
  j["unique_word_count"] = stats.unique_word_count;
  j["max_note_words"] = stats.max_note_words;
  j["min_note_words"] = stats.min_note_words;
  j["mean_note_words"] = stats.mean_note_words;
  j["unique_disease_count"] = stats.unique_disease_count;
  j["group_count"] = stats.group_count;
  j["note_types"] = corpus.category_counts;
  std::ofstream sout((out / "corpus_stats.json").string(), std::ios::binary);
  sout << j.dump(2) << '\n';

  std::cout << "Physician Notes        " << stats.note_count << '\n'
            << "Unique Words           " << stats.unique_word_count << '\n'
            << "Words in longest Note  " << stats.max_note_words << '\n'
            << "Words in shortest Note " << stats.min_note_words << '\n'
            << "Average words per note " << stats.mean_note_words << '\n'
            << "Unique Diseases        " << stats.unique_disease_count << '\n'
            << "Disease Groups         " << stats.group_count << '\n';
  return 0;
}

int run_train_embeddings(const CommonOpts& opts, const std::string& out_file) {
  RunConfig config = resolve_config(opts);
  LabeledCorpus corpus = ingest_corpus(config);
  const std::set<std::string> stoplist =
      config.stopwords.empty() ? default_stopwords() : load_stopwords(config.stopwords);
  std::vector<TokenSequence> tokens;
  tokens.reserve(corpus.entries.size());
  for (const auto& e : corpus.entries) tokens.push_back(preprocess_note(e.note.text, stoplist));

  SkipgramConfig sg = config.skipgram;
  sg.seed = derive_seed(config.seed, "skipgram");
  SkipgramResult result = train_skipgram(tokens, sg);

  std::string path = out_file;
  if (path.empty()) {
    fs::create_directories(config.output_dir);
    path = (fs::path(config.output_dir) / "trained_embeddings.txt").string();
  }
  save_embeddings(result.table, path);
  std::cout << "trained " << result.table.size() << " vectors over " << result.total_pairs
            << " pairs -> " << path << '\n';
  return 0;
}

int run_train(const CommonOpts& opts) {
  RunConfig config = resolve_config(opts);
  RunArtifacts artifacts = run_pipeline(config);
  std::ifstream report(artifacts.report_text_path);
  std::cout << report.rdbuf();
  std::cout << "artifacts in " << artifacts.output_dir << '\n';
  return 0;
}

int run_evaluate(const std::string& run_dir, const std::string& out_dir) {
  RunArtifacts artifacts = evaluate_run(run_dir, out_dir);
  std::ifstream report(artifacts.report_text_path);
  std::cout << report.rdbuf();
  return 0;
}

int run_predict(const std::string& run_dir, const std::string& notes_csv, std::string out_csv) {
  if (out_csv.empty()) out_csv = (fs::path(run_dir) / "scores.csv").string();
  predict_notes(run_dir, notes_csv, out_csv);
  std::cout << "scores written to " << out_csv << '\n';
  return 0;
}

int run_compare(const std::vector<std::string>& run_dirs, const std::string& out_dir,
                bool no_reference) {
  ComparisonTable table = compare_baselines(run_dirs, !no_reference);
  std::cout << table.text;
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    std::ofstream text((fs::path(out_dir) / "compare.txt").string(), std::ios::binary);
    text << table.text;
    std::ofstream json((fs::path(out_dir) / "compare.json").string(), std::ios::binary);
    json << table.json.dump(2) << '\n';
  }
  return 0;
}

int run_synth(const CommonOpts& opts, bool no_pretrained) {
  nlohmann::json synth_json = nlohmann::json::object();
  if (!opts.config_path.empty()) {
    std::ifstream in(opts.config_path);
    if (!in) throw DataError("cannot open config file: " + opts.config_path);
    nlohmann::json j;
    in >> j;
    synth_json = j.value("synthetic", nlohmann::json::object());
  }
  SyntheticConfig config = synthetic_config_from_json(synth_json);
  const std::uint64_t seed = opts.has_seed ? opts.seed : 7;
  std::string out_dir = opts.output_dir.empty() ? "synth" : opts.output_dir;
  if (const char* env = std::getenv("ICD9GROUP_OUTPUT_DIR")) out_dir = env;
  SyntheticOutput out = synth_dataset(config, seed, out_dir, !no_pretrained);
  std::cout << "wrote " << out.notes_csv << " and " << out.diagnoses_csv << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ICD9 disease-group prediction from physician notes"};
  app.require_subcommand(1);

  CommonOpts ingest_opts, stats_opts, embed_opts, train_opts, synth_opts;
  std::string embeddings_out;
  std::string eval_run_dir, eval_out;
  std::string predict_run_dir, predict_notes_csv, predict_out;
  std::vector<std::string> compare_dirs;
  std::string compare_out;
  bool compare_no_reference = false;
  bool synth_no_pretrained = false;

  auto* c_ingest = app.add_subcommand("ingest", "build and save the labeled cohort");
  add_common(c_ingest, ingest_opts, false);

  auto* c_stats = app.add_subcommand("stats", "corpus statistics and label distribution");
  add_common(c_stats, stats_opts, false);

  auto* c_embed = app.add_subcommand("train-embeddings", "train skipgram embeddings on the cohort");
  add_common(c_embed, embed_opts, false);
  c_embed->add_option("--embeddings-out", embeddings_out, "output word2vec text file");

  auto* c_train = app.add_subcommand("train", "run the full pipeline and evaluate");
  add_common(c_train, train_opts);

  auto* c_eval = app.add_subcommand("evaluate", "re-evaluate a completed run directory");
  c_eval->add_option("--run-dir", eval_run_dir, "completed run directory")->required();
  c_eval->add_option("--out", eval_out, "directory for the rewritten report");

  auto* c_predict = app.add_subcommand("predict", "score new notes with a trained model");
  c_predict->add_option("--run-dir", predict_run_dir, "completed run directory")->required();
  c_predict->add_option("--notes", predict_notes_csv, "NOTEEVENTS-style CSV to score")->required();
  c_predict->add_option("--scores-out", predict_out, "output scores CSV");

  auto* c_compare = app.add_subcommand("compare", "side-by-side metrics for completed runs");
  c_compare->add_option("--runs", compare_dirs, "two or more run directories")->required();
  c_compare->add_option("--out", compare_out, "directory for compare.txt / compare.json");
  c_compare->add_flag("--no-reference", compare_no_reference, "omit the reported reference columns");

  auto* c_synth = app.add_subcommand("synth", "generate a synthetic desk-scale dataset");
  add_common(c_synth, synth_opts, false);
  c_synth->add_flag("--no-pretrained", synth_no_pretrained, "skip the stand-in pretrained table");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (c_ingest->parsed()) return run_ingest(ingest_opts);
    if (c_stats->parsed()) return run_stats(stats_opts);
    if (c_embed->parsed()) return run_train_embeddings(embed_opts, embeddings_out);
    if (c_train->parsed()) return run_train(train_opts);
    if (c_eval->parsed()) return run_evaluate(eval_run_dir, eval_out);
    if (c_predict->parsed()) return run_predict(predict_run_dir, predict_notes_csv, predict_out);
    if (c_compare->parsed()) return run_compare(compare_dirs, compare_out, compare_no_reference);
    if (c_synth->parsed()) return run_synth(synth_opts, synth_no_pretrained);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << '\n';
    return 3;
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 1;
}
