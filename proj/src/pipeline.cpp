#include "icd9group/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include "icd9group/baseline.hpp"
#include "icd9group/errors.hpp"
#include "icd9group/icd9.hpp"
#include "icd9group/ingest.hpp"
#include "icd9group/rng.hpp"

namespace icd9group {

namespace fs = std::filesystem;

std::string to_string(RunMode mode) {
  switch (mode) {
    case RunMode::Hybrid: return "hybrid";
    case RunMode::Word2VecOnly: return "word2vec_only";
    case RunMode::PretrainedOnly: return "pretrained_only";
    case RunMode::Tfidf: return "tfidf";
  }
  throw UsageError("unknown run mode");
}

RunMode parse_mode(const std::string& name) {
  if (name == "hybrid") return RunMode::Hybrid;
  if (name == "word2vec_only") return RunMode::Word2VecOnly;
  if (name == "pretrained_only") return RunMode::PretrainedOnly;
  if (name == "tfidf") return RunMode::Tfidf;
  throw UsageError("unknown mode '" + name +
                   "' (expected hybrid, word2vec_only, pretrained_only, or tfidf)");
}

RunConfig RunConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open config file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("bad config JSON in " + path + ": " + e.what());
  }
  return from_json(j);
}

RunConfig RunConfig::from_json(const nlohmann::json& j) {
  RunConfig c;
  try {
    const auto& paths = j.value("paths", nlohmann::json::object());
    c.notes_csv = paths.value("notes_csv", c.notes_csv);
    c.diagnoses_csv = paths.value("diagnoses_csv", c.diagnoses_csv);
    c.pretrained_embeddings = paths.value("pretrained_embeddings", c.pretrained_embeddings);
    c.grouping_table = paths.value("grouping_table", c.grouping_table);
    c.stopwords = paths.value("stopwords", c.stopwords);
    c.output_dir = paths.value("output_dir", c.output_dir);

    const auto& cohort = j.value("cohort", nlohmann::json::object());
    if (cohort.contains("category_filter")) {
      c.category_filter.clear();
      for (const auto& cat : cohort.at("category_filter")) {
        c.category_filter.insert(cat.get<std::string>());
      }
    }
    c.min_words = cohort.value("min_words", c.min_words);

    if (j.contains("mode")) c.mode = parse_mode(j.at("mode").get<std::string>());
    c.seed = j.value("seed", c.seed);
    c.threshold = j.value("threshold", c.threshold);
    c.tfidf_top_k = j.value("tfidf_top_k", c.tfidf_top_k);

    const auto& sg = j.value("skipgram", nlohmann::json::object());
    c.skipgram.dimension = sg.value("dimension", c.skipgram.dimension);
    c.skipgram.initial_learning_rate = sg.value("initial_learning_rate", c.skipgram.initial_learning_rate);
    c.skipgram.window = sg.value("window", c.skipgram.window);
    c.skipgram.negatives = sg.value("negatives", c.skipgram.negatives);
    c.skipgram.epochs = sg.value("epochs", c.skipgram.epochs);
    c.skipgram.min_count = sg.value("min_count", c.skipgram.min_count);
    c.skipgram.subsample_threshold = sg.value("subsample_threshold", c.skipgram.subsample_threshold);
    c.skipgram.workers = sg.value("workers", c.skipgram.workers);

    const auto& tr = j.value("train", nlohmann::json::object());
    c.train.learning_rate = tr.value("learning_rate", c.train.learning_rate);
    c.train.epochs = tr.value("epochs", c.train.epochs);
    c.train.batch_size = tr.value("batch_size", c.train.batch_size);
    c.train.dropout_rate = tr.value("dropout_rate", c.train.dropout_rate);
    c.train.validation_fraction = tr.value("validation_fraction", c.train.validation_fraction);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("bad config value: ") + e.what());
  }
  return c;
}

nlohmann::json RunConfig::to_json() const {
  nlohmann::json j;
  j["paths"] = {{"notes_csv", notes_csv},
                {"diagnoses_csv", diagnoses_csv},
                {"pretrained_embeddings", pretrained_embeddings},
                {"grouping_table", grouping_table},
                {"stopwords", stopwords},
                {"output_dir", output_dir}};
  j["cohort"] = {{"category_filter", category_filter}, {"min_words", min_words}};
  j["mode"] = to_string(mode);
  j["seed"] = seed;
  j["threshold"] = threshold;
  j["tfidf_top_k"] = tfidf_top_k;
  j["skipgram"] = {{"dimension", skipgram.dimension},
                   {"initial_learning_rate", skipgram.initial_learning_rate},
                   {"window", skipgram.window},
                   {"negatives", skipgram.negatives},
                   {"epochs", skipgram.epochs},
                   {"min_count", skipgram.min_count},
                   {"subsample_threshold", skipgram.subsample_threshold},
                   {"workers", skipgram.workers}};
  j["train"] = {{"learning_rate", train.learning_rate},
                {"epochs", train.epochs},
                {"batch_size", train.batch_size},
                {"dropout_rate", train.dropout_rate},
                {"validation_fraction", train.validation_fraction}};
  return j;
}

std::vector<bool> admission_split(const std::vector<long>& hadm_ids, double validation_fraction,
                                  std::uint64_t split_seed) {
  if (hadm_ids.empty()) throw DataError("admission_split on empty corpus");
  std::vector<long> distinct;
  std::unordered_map<long, bool> seen;
  for (long id : hadm_ids) {
    if (seen.emplace(id, true).second) distinct.push_back(id);
  }
  Rng rng(split_seed);
  for (std::size_t i = distinct.size() - 1; i > 0; --i) {
    const std::size_t j = static_cast<std::size_t>(rng.uniform_int(0, i));
    std::swap(distinct[i], distinct[j]);
  }
  const auto n_val = static_cast<std::size_t>(
      std::ceil(validation_fraction * static_cast<double>(distinct.size())));
  std::unordered_map<long, bool> is_val;
  for (std::size_t i = 0; i < distinct.size(); ++i) is_val[distinct[i]] = i < n_val;
  std::vector<bool> flags;
  flags.reserve(hadm_ids.size());
  for (long id : hadm_ids) flags.push_back(is_val[id]);
  return flags;
}

namespace {

template <typename Fn>
auto stage(const char* name, Fn&& fn) {
  try {
    return fn();
  } catch (const NumericError& e) {
    throw NumericError(std::string("[") + name + "] " + e.what());
  } catch (const Error& e) {
    throw DataError(std::string("[") + name + "] " + e.what());
  }
}

Eigen::MatrixXd select_rows(const Eigen::MatrixXd& m, const std::vector<bool>& flags, bool keep) {
  long count = 0;
  for (bool f : flags) count += (f == keep) ? 1 : 0;
  Eigen::MatrixXd out(count, m.cols());
  long r = 0;
  for (long i = 0; i < m.rows(); ++i) {
    if (flags[i] == keep) out.row(r++) = m.row(i);
  }
  return out;
}

Eigen::MatrixXi select_rows(const Eigen::MatrixXi& m, const std::vector<bool>& flags, bool keep) {
  long count = 0;
  for (bool f : flags) count += (f == keep) ? 1 : 0;
  Eigen::MatrixXi out(count, m.cols());
  long r = 0;
  for (long i = 0; i < m.rows(); ++i) {
    if (flags[i] == keep) out.row(r++) = m.row(i);
  }
  return out;
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  out << content;
}

nlohmann::json report_to_json(const EvalReport& report) {
  nlohmann::json j;
  j["metrics"] = {{"AUROC", report.auroc},     {"AUPRC", report.auprc},
                  {"Accuracy", report.accuracy}, {"Precision", report.precision},
                  {"Recall", report.recall},   {"F-Score", report.f_score},
                  {"MCC", report.mcc}};
  j["threshold"] = report.threshold;
  nlohmann::json groups = nlohmann::json::array();
  for (const auto& g : report.per_group) {
    groups.push_back({{"group_id", g.group_id},
                      {"label", g.label},
                      {"positives", g.positives},
                      {"predicted_positives", g.predicted_positives},
                      {"true_positives", g.true_positives},
                      {"prevalence", g.prevalence},
                      {"precision", g.precision},
                      {"recall", g.recall},
                      {"f1", g.f1}});
  }
  j["per_group"] = std::move(groups);
  return j;
}

std::string render_benchmark_text(const EvalReport& report) {
  // Side-by-side with the reported structured-data baseline, mirroring the
  // published comparison layout.
  const auto& ref = reported_structured_baseline();
  std::ostringstream out;
  char buf[160];
  std::snprintf(buf, sizeof(buf), "%-12s  %18s  %22s\n", "Parameter", "This run (text)",
                "Reported (structured)");
  out << buf;
  out << std::string(58, '-') << '\n';
  for (const auto& name : metric_row_order()) {
    std::string ref_text = "*";
    for (const auto& [k, v] : ref.values) {
      if (k == name) {
        char tmp[32];
        std::snprintf(tmp, sizeof(tmp), "%.2f", v);
        ref_text = tmp;
      }
    }
    std::snprintf(buf, sizeof(buf), "%-12s  %18.2f  %22s\n", name.c_str(),
                  metric_by_name(report, name), ref_text.c_str());
    out << buf;
  }
  out << "* not reported\n";
  return out.str();
}

}  // namespace

const std::vector<ReferenceMetrics>& reported_reference_columns() {
  static const std::vector<ReferenceMetrics> columns = {
      {"reported:hybrid",
       {{"AUROC", 0.89}, {"AUPRC", 0.85}, {"Accuracy", 0.79}, {"Precision", 0.82},
        {"Recall", 0.79}, {"F-Score", 0.79}, {"MCC", 0.58}}},
      {"reported:tfidf",
       {{"AUROC", 0.87}, {"AUPRC", 0.81}, {"Accuracy", 0.78}, {"Precision", 0.80},
        {"Recall", 0.78}, {"F-Score", 0.78}, {"MCC", 0.53}}},
      {"reported:word2vec_only",
       {{"AUROC", 0.88}, {"AUPRC", 0.84}, {"Accuracy", 0.79}, {"Precision", 0.82},
        {"Recall", 0.79}, {"F-Score", 0.79}, {"MCC", 0.57}}},
      {"reported:pretrained_only",
       {{"AUROC", 0.88}, {"AUPRC", 0.82}, {"Accuracy", 0.79}, {"Precision", 0.80},
        {"Recall", 0.78}, {"F-Score", 0.79}, {"MCC", 0.56}}},
  };
  return columns;
}

const ReferenceMetrics& reported_structured_baseline() {
  static const ReferenceMetrics ref = {"reported:structured-data",
                                       {{"AUROC", 0.77}, {"AUPRC", 0.60}}};
  return ref;
}

RunArtifacts run_pipeline(const RunConfig& config) {
  // --- ingest ---------------------------------------------------------
  auto notes = stage("ingest", [&] { return load_notes(config.notes_csv, config.category_filter); });
  long blank_codes = 0;
  auto diagnoses =
      stage("ingest", [&] { return load_diagnoses(config.diagnoses_csv, &blank_codes); });

  // --- icd9 labeling --------------------------------------------------
  GroupingTable grouping = stage("icd9", [&] {
    return config.grouping_table.empty() ? GroupingTable::standard()
                                         : GroupingTable::load(config.grouping_table);
  });
  LabeledCorpus corpus = stage("icd9", [&] {
    auto c = build_cohort(notes, diagnoses, grouping, config.min_words);
    c.source = config.notes_csv + " + " + config.diagnoses_csv;
    return c;
  });

  // --- text ------------------------------------------------------------
  const std::set<std::string> stoplist = stage("text", [&] {
    return config.stopwords.empty() ? default_stopwords() : load_stopwords(config.stopwords);
  });
  std::vector<TokenSequence> tokens = stage("text", [&] {
    std::vector<TokenSequence> out;
    out.reserve(corpus.entries.size());
    for (const auto& e : corpus.entries) out.push_back(preprocess_note(e.note.text, stoplist));
    return out;
  });

  // --- split by admission ----------------------------------------------
  std::vector<long> hadm_ids;
  hadm_ids.reserve(corpus.entries.size());
  for (const auto& e : corpus.entries) hadm_ids.push_back(e.note.hadm_id);
  const std::uint64_t split_seed = derive_seed(config.seed, "split");
  const std::vector<bool> is_val =
      admission_split(hadm_ids, config.train.validation_fraction, split_seed);

  Eigen::MatrixXi targets(static_cast<long>(corpus.entries.size()), kGroupCount);
  for (std::size_t i = 0; i < corpus.entries.size(); ++i) {
    for (int g = 0; g < kGroupCount; ++g) targets(static_cast<long>(i), g) = corpus.entries[i].labels[g];
  }

  fs::create_directories(config.output_dir);
  auto out_path = [&](const char* name) { return (fs::path(config.output_dir) / name).string(); };

  // --- features per mode ------------------------------------------------
  nlohmann::json embedding_hashes = nlohmann::json::object();
  nlohmann::json feature_log = nlohmann::json::object();
  Eigen::MatrixXd channel1, channel2;
  TfidfModel tfidf;
  const bool needs_trained =
      config.mode == RunMode::Hybrid || config.mode == RunMode::Word2VecOnly;
  const bool needs_pretrained =
      config.mode == RunMode::Hybrid || config.mode == RunMode::PretrainedOnly;

  EmbeddingTable trained_table, pretrained_table;
  if (needs_trained) {
    SkipgramConfig sg = config.skipgram;
    sg.seed = derive_seed(config.seed, "skipgram");
    SkipgramResult result = stage("train-embeddings", [&] { return train_skipgram(tokens, sg); });
    trained_table = std::move(result.table);
    stage("train-embeddings",
          [&] { save_embeddings(trained_table, out_path("trained_embeddings.txt")); return 0; });
    feature_log["skipgram_vocabulary"] = trained_table.size();
    feature_log["skipgram_pairs"] = result.total_pairs;
    feature_log["skipgram_epoch_loss"] = result.epoch_mean_loss;
    embedding_hashes["trained"] = trained_table.content_hash();
  }
  if (needs_pretrained) {
    pretrained_table = stage("embed", [&] {
      return load_pretrained(config.pretrained_embeddings, config.skipgram.dimension);
    });
    embedding_hashes["pretrained"] = pretrained_table.content_hash();
  }

  switch (config.mode) {
    case RunMode::Hybrid: {
      double oov1 = 0, oov2 = 0;
      channel1 = stage("embed", [&] { return vectorize_corpus(tokens, trained_table, &oov1); });
      channel2 = stage("embed", [&] { return vectorize_corpus(tokens, pretrained_table, &oov2); });
      feature_log["mean_oov_trained"] = oov1;
      feature_log["mean_oov_pretrained"] = oov2;
      break;
    }
    case RunMode::Word2VecOnly: {
      double oov = 0;
      channel1 = stage("embed", [&] { return vectorize_corpus(tokens, trained_table, &oov); });
      feature_log["mean_oov_trained"] = oov;
      break;
    }
    case RunMode::PretrainedOnly: {
      double oov = 0;
      channel1 = stage("embed", [&] { return vectorize_corpus(tokens, pretrained_table, &oov); });
      feature_log["mean_oov_pretrained"] = oov;
      break;
    }
    case RunMode::Tfidf: {
      // Feature selection sees only training documents.
      std::vector<TokenSequence> train_tokens;
      for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (!is_val[i]) train_tokens.push_back(tokens[i]);
      }
      tfidf = stage("baseline", [&] { return TfidfModel::fit(train_tokens, config.tfidf_top_k); });
      stage("baseline", [&] { tfidf.save(out_path("tfidf_model.txt")); return 0; });
      channel1 = stage("baseline", [&] { return tfidf.transform_corpus(tokens); });
      feature_log["tfidf_features"] = tfidf.feature_count();
      break;
    }
  }

  // --- scale ------------------------------------------------------------
  const bool hybrid = config.mode == RunMode::Hybrid;
  Features train_x, val_x;
  std::vector<Scaler> scalers;
  {
    const Eigen::MatrixXd train1 = select_rows(channel1, is_val, false);
    Scaler s1 = stage("scale", [&] { return Scaler::fit(train1); });
    train_x.x1 = s1.apply(train1);
    val_x.x1 = s1.apply(select_rows(channel1, is_val, true));
    scalers.push_back(std::move(s1));
    if (hybrid) {
      const Eigen::MatrixXd train2 = select_rows(channel2, is_val, false);
      Scaler s2 = stage("scale", [&] { return Scaler::fit(train2); });
      train_x.x2 = s2.apply(train2);
      val_x.x2 = s2.apply(select_rows(channel2, is_val, true));
      scalers.push_back(std::move(s2));
    }
  }
  const Eigen::MatrixXi train_y = select_rows(targets, is_val, false);
  const Eigen::MatrixXi val_y = select_rows(targets, is_val, true);
  if (train_y.rows() == 0 || val_y.rows() == 0) {
    throw DataError("[scale] split produced an empty train or validation set");
  }

  // --- train -------------------------------------------------------------
  TrainConfig tc = config.train;
  tc.seed = derive_seed(config.seed, "train");
  TrainResult trained = stage("train", [&] { return train_model(train_x, train_y, val_x, val_y, tc); });
  trained.params.scalers = scalers;

  // --- evaluate ------------------------------------------------------------
  std::vector<std::string> group_labels;
  for (int g = 1; g <= kGroupCount; ++g) group_labels.push_back(grouping.group_label(g));
  const Eigen::MatrixXd scores =
      stage("evaluate", [&] { return predict_scores(trained.params, val_x); });
  EvalReport report =
      stage("evaluate", [&] { return evaluate(scores, val_y, config.threshold, group_labels); });

  // --- artifacts -----------------------------------------------------------
  RunArtifacts artifacts;
  artifacts.output_dir = config.output_dir;
  artifacts.report = report;

  nlohmann::json snapshot = config.to_json();
  snapshot["input_hashes"] = {{"notes_csv", hash_hex(hash_file(config.notes_csv))},
                              {"diagnoses_csv", hash_hex(hash_file(config.diagnoses_csv))}};
  if (needs_pretrained) {
    snapshot["input_hashes"]["pretrained_embeddings"] =
        hash_hex(hash_file(config.pretrained_embeddings));
  }
  snapshot["split_seed"] = split_seed;
  snapshot["cohort_hash"] = cohort_hash(corpus);
  write_text_file(out_path("config.json"), snapshot.dump(2) + "\n");

  nlohmann::json meta;
  meta["mode"] = to_string(config.mode);
  meta["seed"] = config.seed;
  meta["split_seed"] = split_seed;
  meta["cohort_hash"] = cohort_hash(corpus);
  meta["threshold"] = config.threshold;
  meta["input_width"] = trained.params.input_width();
  if (!embedding_hashes.empty()) meta["embedding_hashes"] = embedding_hashes;
  if (config.mode == RunMode::Tfidf) meta["tfidf_features"] = tfidf.feature_count();
  artifacts.checkpoint_path = out_path("checkpoint.bin");
  stage("train", [&] {
    save_checkpoint(trained.params, meta, artifacts.checkpoint_path);
    return 0;
  });

  nlohmann::json run_log;
  run_log["counts"] = {{"input_notes", corpus.counts.input_notes},
                       {"kept", corpus.counts.kept},
                       {"error_removed", corpus.counts.error_removed},
                       {"short_removed", corpus.counts.short_removed},
                       {"no_diagnosis_removed", corpus.counts.no_diagnosis_removed},
                       {"blank_icd9_codes_skipped", blank_codes}};
  run_log["unique_icd9_codes"] = corpus.unique_icd9_codes;
  run_log["train_rows"] = train_y.rows();
  run_log["validation_rows"] = val_y.rows();
  run_log["features"] = feature_log;
  nlohmann::json history = nlohmann::json::array();
  for (const auto& h : trained.history) {
    history.push_back({{"train_loss", h.train_loss}, {"val_loss", h.val_loss}});
  }
  run_log["epochs"] = std::move(history);
  artifacts.run_log_path = out_path("run_log.json");
  write_text_file(artifacts.run_log_path, run_log.dump(2) + "\n");

  nlohmann::json report_json = report_to_json(report);
  report_json["mode"] = to_string(config.mode);
  report_json["seed"] = config.seed;
  report_json["split_seed"] = split_seed;
  report_json["cohort_hash"] = cohort_hash(corpus);
  artifacts.report_json_path = out_path("report.json");
  write_text_file(artifacts.report_json_path, report_json.dump(2) + "\n");

  std::string text = "Mode: " + to_string(config.mode) + "\n\n" + render_report_text(report) + "\n" +
                     render_benchmark_text(report);
  artifacts.report_text_path = out_path("report.txt");
  write_text_file(artifacts.report_text_path, text);

  return artifacts;
}

namespace {

struct SavedRun {
  RunConfig config;
  Checkpoint checkpoint;
  std::string run_dir;
};

SavedRun open_run(const std::string& run_dir) {
  SavedRun run;
  run.run_dir = run_dir;
  run.config = RunConfig::from_file((fs::path(run_dir) / "config.json").string());
  run.checkpoint = load_checkpoint((fs::path(run_dir) / "checkpoint.bin").string());
  return run;
}

void verify_hash(const nlohmann::json& meta, const char* key, const std::string& actual,
                 const std::string& what) {
  if (!meta.contains("embedding_hashes")) return;
  const auto& hashes = meta.at("embedding_hashes");
  if (!hashes.contains(key)) return;
  if (hashes.at(key).get<std::string>() != actual) {
    throw DataError(what + " does not match the table hash recorded in the checkpoint");
  }
}

/// Rebuilds the model's input features for arbitrary documents using the
/// models persisted in the run directory (never retraining anything).
Features build_saved_features(const SavedRun& run, const std::vector<TokenSequence>& tokens) {
  Features x;
  const RunMode mode = run.config.mode;
  const auto& meta = run.checkpoint.meta;
  if (mode == RunMode::Tfidf) {
    TfidfModel tfidf = TfidfModel::load((fs::path(run.run_dir) / "tfidf_model.txt").string());
    x.x1 = tfidf.transform_corpus(tokens);
  } else {
    EmbeddingTable trained, pretrained;
    if (mode == RunMode::Hybrid || mode == RunMode::Word2VecOnly) {
      trained = load_pretrained((fs::path(run.run_dir) / "trained_embeddings.txt").string(),
                                run.config.skipgram.dimension);
      verify_hash(meta, "trained", trained.content_hash(), "trained embedding file");
    }
    if (mode == RunMode::Hybrid || mode == RunMode::PretrainedOnly) {
      pretrained = load_pretrained(run.config.pretrained_embeddings, run.config.skipgram.dimension);
      verify_hash(meta, "pretrained", pretrained.content_hash(), "pretrained embedding file");
    }
    if (mode == RunMode::Hybrid) {
      x.x1 = vectorize_corpus(tokens, trained);
      x.x2 = vectorize_corpus(tokens, pretrained);
    } else if (mode == RunMode::Word2VecOnly) {
      x.x1 = vectorize_corpus(tokens, trained);
    } else {
      x.x1 = vectorize_corpus(tokens, pretrained);
    }
  }
  const auto& scalers = run.checkpoint.params.scalers;
  if (scalers.empty()) throw DataError("checkpoint is missing scalers");
  x.x1 = scalers[0].apply(x.x1);
  if (x.x2.rows() > 0) {
    if (scalers.size() < 2) throw DataError("hybrid checkpoint is missing the second scaler");
    x.x2 = scalers[1].apply(x.x2);
  }
  return x;
}

}  // namespace

RunArtifacts evaluate_run(const std::string& run_dir, const std::string& out_dir) {
  SavedRun run = stage("evaluate", [&] { return open_run(run_dir); });
  const RunConfig& config = run.config;

  auto notes = stage("ingest", [&] { return load_notes(config.notes_csv, config.category_filter); });
  auto diagnoses = stage("ingest", [&] { return load_diagnoses(config.diagnoses_csv); });
  GroupingTable grouping = stage("icd9", [&] {
    return config.grouping_table.empty() ? GroupingTable::standard()
                                         : GroupingTable::load(config.grouping_table);
  });
  LabeledCorpus corpus =
      stage("icd9", [&] { return build_cohort(notes, diagnoses, grouping, config.min_words); });
  if (run.checkpoint.meta.contains("cohort_hash") &&
      run.checkpoint.meta.at("cohort_hash").get<std::string>() != cohort_hash(corpus)) {
    throw DataError("[evaluate] rebuilt cohort does not match the checkpoint's cohort hash");
  }

  const std::set<std::string> stoplist = stage("text", [&] {
    return config.stopwords.empty() ? default_stopwords() : load_stopwords(config.stopwords);
  });
  std::vector<TokenSequence> tokens;
  tokens.reserve(corpus.entries.size());
  for (const auto& e : corpus.entries) tokens.push_back(preprocess_note(e.note.text, stoplist));

  std::vector<long> hadm_ids;
  for (const auto& e : corpus.entries) hadm_ids.push_back(e.note.hadm_id);
  const std::uint64_t split_seed = derive_seed(config.seed, "split");
  const std::vector<bool> is_val =
      admission_split(hadm_ids, config.train.validation_fraction, split_seed);

  std::vector<TokenSequence> val_tokens;
  std::vector<const CorpusEntry*> val_entries;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (is_val[i]) {
      val_tokens.push_back(tokens[i]);
      val_entries.push_back(&corpus.entries[i]);
    }
  }
  if (val_tokens.empty()) throw DataError("[evaluate] validation split is empty");

  Features val_x = stage("embed", [&] { return build_saved_features(run, val_tokens); });
  Eigen::MatrixXi val_y(static_cast<long>(val_entries.size()), kGroupCount);
  for (std::size_t i = 0; i < val_entries.size(); ++i) {
    for (int g = 0; g < kGroupCount; ++g) val_y(static_cast<long>(i), g) = val_entries[i]->labels[g];
  }

  std::vector<std::string> group_labels;
  for (int g = 1; g <= kGroupCount; ++g) group_labels.push_back(grouping.group_label(g));
  const Eigen::MatrixXd scores =
      stage("evaluate", [&] { return predict_scores(run.checkpoint.params, val_x); });
  EvalReport report =
      stage("evaluate", [&] { return evaluate(scores, val_y, config.threshold, group_labels); });

  RunArtifacts artifacts;
  artifacts.output_dir = out_dir.empty() ? run_dir : out_dir;
  fs::create_directories(artifacts.output_dir);
  artifacts.report = report;
  artifacts.checkpoint_path = (fs::path(run_dir) / "checkpoint.bin").string();

  nlohmann::json report_json = report_to_json(report);
  report_json["mode"] = to_string(config.mode);
  report_json["seed"] = config.seed;
  report_json["split_seed"] = split_seed;
  report_json["cohort_hash"] = cohort_hash(corpus);
  artifacts.report_json_path = (fs::path(artifacts.output_dir) / "report.json").string();
  write_text_file(artifacts.report_json_path, report_json.dump(2) + "\n");
  std::string text = "Mode: " + to_string(config.mode) + "\n\n" + render_report_text(report) + "\n" +
                     render_benchmark_text(report);
  artifacts.report_text_path = (fs::path(artifacts.output_dir) / "report.txt").string();
  write_text_file(artifacts.report_text_path, text);
  return artifacts;
}

void predict_notes(const std::string& run_dir, const std::string& notes_csv,
                   const std::string& out_csv) {
  SavedRun run = stage("predict", [&] { return open_run(run_dir); });
  const RunConfig& config = run.config;

  auto notes = stage("ingest", [&] { return load_notes(notes_csv, config.category_filter); });
  const std::set<std::string> stoplist = stage("text", [&] {
    return config.stopwords.empty() ? default_stopwords() : load_stopwords(config.stopwords);
  });

  std::vector<const Note*> kept;
  std::vector<TokenSequence> tokens;
  for (const auto& n : notes) {
    if (n.is_error || count_words(n.text) < config.min_words) continue;
    kept.push_back(&n);
    tokens.push_back(preprocess_note(n.text, stoplist));
  }
  if (kept.empty()) throw DataError("[predict] no notes survive the cohort filters");

  Features x = stage("embed", [&] { return build_saved_features(run, tokens); });
  const Eigen::MatrixXd scores =
      stage("predict", [&] { return predict_scores(run.checkpoint.params, x); });

  std::ofstream out(out_csv, std::ios::binary);
  if (!out) throw DataError("[predict] cannot write " + out_csv);
  out << "ROW_ID";
  for (int g = 1; g <= kGroupCount; ++g) out << ",group_" << g;
  out << '\n';
  char buf[40];
  for (long i = 0; i < scores.rows(); ++i) {
    out << kept[static_cast<std::size_t>(i)]->row_id;
    for (int g = 0; g < kGroupCount; ++g) {
      std::snprintf(buf, sizeof(buf), ",%.17g", scores(i, g));
      out << buf;
    }
    out << '\n';
  }
}

ComparisonTable compare_baselines(const std::vector<std::string>& run_dirs, bool with_reference) {
  if (run_dirs.size() < 2) throw UsageError("compare needs at least two completed runs");

  struct Run {
    std::string mode;
    std::string cohort_hash;
    std::uint64_t split_seed;
    nlohmann::json metrics;
  };
  std::vector<Run> runs;
  for (const auto& dir : run_dirs) {
    const std::string path = (fs::path(dir) / "report.json").string();
    std::ifstream in(path);
    if (!in) throw DataError("missing report.json in run directory: " + dir);
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      throw DataError("bad report.json in " + dir + ": " + e.what());
    }
    runs.push_back({j.at("mode").get<std::string>(), j.at("cohort_hash").get<std::string>(),
                    j.at("split_seed").get<std::uint64_t>(), j.at("metrics")});
  }
  for (std::size_t i = 1; i < runs.size(); ++i) {
    if (runs[i].cohort_hash != runs[0].cohort_hash) {
      throw DataError("refusing to compare runs over different cohorts (" + run_dirs[0] + " vs " +
                      run_dirs[i] + ")");
    }
    if (runs[i].split_seed != runs[0].split_seed) {
      throw DataError("refusing to compare runs with different split seeds (" + run_dirs[0] +
                      " vs " + run_dirs[i] + ")");
    }
  }

  ComparisonTable table;
  table.rows = metric_row_order();
  for (const auto& r : runs) table.columns.push_back(r.mode);
  if (with_reference) {
    for (const auto& ref : reported_reference_columns()) table.columns.push_back(ref.name);
  }
  table.values.assign(table.rows.size(), std::vector<double>(table.columns.size(), 0.0));
  for (std::size_t row = 0; row < table.rows.size(); ++row) {
    std::size_t col = 0;
    for (const auto& r : runs) {
      table.values[row][col++] = r.metrics.at(table.rows[row]).get<double>();
    }
    if (with_reference) {
      for (const auto& ref : reported_reference_columns()) {
        double v = 0;
        for (const auto& [k, value] : ref.values) {
          if (k == table.rows[row]) v = value;
        }
        table.values[row][col++] = v;
      }
    }
  }

  std::ostringstream text;
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%-12s", "Parameter");
  text << buf;
  for (const auto& col : table.columns) {
    std::snprintf(buf, sizeof(buf), "  %24s", col.c_str());
    text << buf;
  }
  text << '\n';
  for (std::size_t row = 0; row < table.rows.size(); ++row) {
    std::snprintf(buf, sizeof(buf), "%-12s", table.rows[row].c_str());
    text << buf;
    for (std::size_t col = 0; col < table.columns.size(); ++col) {
      std::snprintf(buf, sizeof(buf), "  %24.2f", table.values[row][col]);
      text << buf;
    }
    text << '\n';
  }
  table.text = text.str();

  table.json["columns"] = table.columns;
  table.json["rows"] = table.rows;
  table.json["values"] = table.values;
  table.json["cohort_hash"] = runs[0].cohort_hash;
  table.json["split_seed"] = runs[0].split_seed;
  return table;
}

}  // namespace icd9group
