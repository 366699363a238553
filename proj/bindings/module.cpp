// Python bindings for the icd9group core.

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <nlohmann/json.hpp>

#include "icd9group/baseline.hpp"
#include "icd9group/embed.hpp"
#include "icd9group/errors.hpp"
#include "icd9group/eval.hpp"
#include "icd9group/icd9.hpp"
#include "icd9group/ingest.hpp"
#include "icd9group/net.hpp"
#include "icd9group/pipeline.hpp"
#include "icd9group/synthetic.hpp"
#include "icd9group/text.hpp"

namespace py = pybind11;
using namespace icd9group;

namespace {

nlohmann::json to_nlohmann(const py::handle& obj) {
  const auto dumped = py::cast<std::string>(py::module_::import("json").attr("dumps")(obj));
  return nlohmann::json::parse(dumped);
}

py::object to_python(const nlohmann::json& j) {
  return py::module_::import("json").attr("loads")(j.dump());
}

py::dict report_dict(const EvalReport& r) {
  py::dict d;
  d["auroc"] = r.auroc;
  d["auprc"] = r.auprc;
  d["accuracy"] = r.accuracy;
  d["precision"] = r.precision;
  d["recall"] = r.recall;
  d["f_score"] = r.f_score;
  d["mcc"] = r.mcc;
  d["threshold"] = r.threshold;
  py::list groups;
  for (const auto& g : r.per_group) {
    py::dict gd;
    gd["group_id"] = g.group_id;
    gd["label"] = g.label;
    gd["positives"] = g.positives;
    gd["prevalence"] = g.prevalence;
    gd["precision"] = g.precision;
    gd["recall"] = g.recall;
    gd["f1"] = g.f1;
    groups.append(gd);
  }
  d["per_group"] = groups;
  return d;
}

Features make_features(const Eigen::MatrixXd& x1, const std::optional<Eigen::MatrixXd>& x2) {
  Features f;
  f.x1 = x1;
  if (x2) f.x2 = *x2;
  return f;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "ICD9 disease-group prediction from physician notes: hybrid "
            "document embeddings, a fused feed-forward classifier, and the "
            "evaluation toolkit.";

  py::register_exception<UsageError>(m, "UsageError");
  py::register_exception<DataError>(m, "DataError");
  py::register_exception<NumericError>(m, "NumericError");

  // --- text ----------------------------------------------------------------
  m.def(
      "preprocess_note",
      [](const std::string& text, const std::optional<std::set<std::string>>& stopwords) {
        return preprocess_note(text, stopwords ? *stopwords : default_stopwords());
      },
      py::arg("text"), py::arg("stopwords") = py::none(),
      "Lowercase alphanumeric tokens with stopword and length-1 filtering.");
  m.def("default_stopwords", [] { return default_stopwords(); });

  // --- icd9 ------------------------------------------------------------------
  m.def(
      "parse_and_group",
      [](const std::string& code) { return parse_and_group(code, GroupingTable::standard()); },
      py::arg("code"), "Maps an undotted ICD9 code to its group id in 1..20.");
  m.def("binarize", [](const std::set<int>& groups) {
    LabelVector v = binarize(groups);
    return std::vector<int>(v.begin(), v.end());
  });
  m.def("group_labels", [] {
    std::vector<std::string> labels;
    const GroupingTable table = GroupingTable::standard();
    for (int g = 1; g <= kGroupCount; ++g) labels.push_back(table.group_label(g));
    return labels;
  });

  // --- embeddings -------------------------------------------------------------
  py::class_<EmbeddingTable>(m, "EmbeddingTable")
      .def_property_readonly("dimension", &EmbeddingTable::dimension)
      .def("__len__", &EmbeddingTable::size)
      .def("__contains__",
           [](const EmbeddingTable& t, const std::string& token) { return t.index_of(token) >= 0; })
      .def("tokens", &EmbeddingTable::tokens)
      .def(
          "vector",
          [](const EmbeddingTable& t, const std::string& token) -> Eigen::VectorXd {
            long idx = t.index_of(token);
            if (idx < 0) throw DataError("token not in table: " + token);
            return t.vector_at(idx);
          },
          py::arg("token"))
      .def("matrix", [](const EmbeddingTable& t) -> RowMatrixXd { return t.vectors(); })
      .def("without", &EmbeddingTable::without, py::arg("excluded"))
      .def("content_hash", &EmbeddingTable::content_hash);

  m.def("load_embeddings", &load_pretrained, py::arg("path"), py::arg("expected_dim") = 200);
  m.def("save_embeddings", &save_embeddings, py::arg("table"), py::arg("path"));
  m.def("seeded_pretrained_table", &seeded_pretrained_table, py::arg("tokens"), py::arg("dimension"),
        py::arg("seed"));

  m.def(
      "train_skipgram",
      [](const std::vector<TokenSequence>& corpus, int dimension, double learning_rate, int window,
         int negatives, int epochs, long min_count, double subsample_threshold, int workers,
         std::uint64_t seed) {
        SkipgramConfig config;
        config.dimension = dimension;
        config.initial_learning_rate = learning_rate;
        config.window = window;
        config.negatives = negatives;
        config.epochs = epochs;
        config.min_count = min_count;
        config.subsample_threshold = subsample_threshold;
        config.workers = workers;
        config.seed = seed;
        SkipgramResult r = train_skipgram(corpus, config);
        return py::make_tuple(std::move(r.table), r.epoch_mean_loss);
      },
      py::arg("corpus"), py::arg("dimension") = 200, py::arg("learning_rate") = 0.025,
      py::arg("window") = 5, py::arg("negatives") = 5, py::arg("epochs") = 5,
      py::arg("min_count") = 5, py::arg("subsample_threshold") = 1e-3, py::arg("workers") = 1,
      py::arg("seed") = 1,
      "Skipgram with negative sampling; returns (table, per-epoch mean loss).");

  m.def(
      "embed_document",
      [](const TokenSequence& tokens, const EmbeddingTable& table) {
        DocumentVector dv = embed_document(tokens, table);
        return py::make_tuple(dv.vector, dv.oov_fraction);
      },
      py::arg("tokens"), py::arg("table"));
  m.def(
      "vectorize_corpus",
      [](const std::vector<TokenSequence>& corpus, const EmbeddingTable& table) {
        return vectorize_corpus(corpus, table);
      },
      py::arg("corpus"), py::arg("table"));

  // --- tfidf baseline ----------------------------------------------------------
  py::class_<TfidfModel>(m, "TfidfModel")
      .def_static("fit", &TfidfModel::fit, py::arg("corpus"), py::arg("top_k") = 1000,
                  py::arg("max_ngram") = 3)
      .def_property_readonly("feature_count", &TfidfModel::feature_count)
      .def("feature",
           [](const TfidfModel& t, long i) { return py::make_tuple(t.feature_at(i), t.idf_at(i)); })
      .def("transform", &TfidfModel::transform, py::arg("tokens"))
      .def("transform_corpus", &TfidfModel::transform_corpus, py::arg("corpus"))
      .def("save", &TfidfModel::save, py::arg("path"))
      .def_static("load", &TfidfModel::load, py::arg("path"));

  // --- network -------------------------------------------------------------------
  py::class_<Scaler>(m, "Scaler")
      .def_static("fit", &Scaler::fit, py::arg("train"))
      .def("apply", &Scaler::apply, py::arg("matrix"));

  py::class_<ModelParams>(m, "ModelParams")
      .def_property_readonly("hybrid", [](const ModelParams& p) { return p.hybrid; })
      .def_property_readonly("input_width", &ModelParams::input_width)
      .def(
          "predict",
          [](const ModelParams& p, const Eigen::MatrixXd& x1,
             const std::optional<Eigen::MatrixXd>& x2) {
            return predict_scores(p, make_features(x1, x2));
          },
          py::arg("x1"), py::arg("x2") = py::none())
      .def(
          "save",
          [](const ModelParams& p, const std::string& path, const py::object& meta) {
            save_checkpoint(p, meta.is_none() ? nlohmann::json::object() : to_nlohmann(meta), path);
          },
          py::arg("path"), py::arg("meta") = py::none())
      .def_static("load", [](const std::string& path) {
        Checkpoint c = load_checkpoint(path);
        return py::make_tuple(std::move(c.params), to_python(c.meta));
      });

  m.def(
      "train_model",
      [](const Eigen::MatrixXd& train_x1, const Eigen::MatrixXi& train_y,
         const std::optional<Eigen::MatrixXd>& train_x2, const std::optional<Eigen::MatrixXd>& val_x1,
         const std::optional<Eigen::MatrixXd>& val_x2, const std::optional<Eigen::MatrixXi>& val_y,
         double learning_rate, int epochs, int batch_size, double dropout_rate, std::uint64_t seed) {
        TrainConfig config;
        config.learning_rate = learning_rate;
        config.epochs = epochs;
        config.batch_size = batch_size;
        config.dropout_rate = dropout_rate;
        config.seed = seed;
        Features train = make_features(train_x1, train_x2);
        Features val;
        if (val_x1) val = make_features(*val_x1, val_x2);
        Eigen::MatrixXi vy = val_y ? *val_y : Eigen::MatrixXi();
        TrainResult r = train_model(train, train_y, val, vy, config);
        py::list history;
        for (const auto& h : r.history) {
          py::dict e;
          e["train_loss"] = h.train_loss;
          e["val_loss"] = h.val_loss;
          history.append(e);
        }
        return py::make_tuple(std::move(r.params), history);
      },
      py::arg("train_x1"), py::arg("train_y"), py::arg("train_x2") = py::none(),
      py::arg("val_x1") = py::none(), py::arg("val_x2") = py::none(), py::arg("val_y") = py::none(),
      py::arg("learning_rate") = 0.01, py::arg("epochs") = 50, py::arg("batch_size") = 32,
      py::arg("dropout_rate") = 0.2, py::arg("seed") = 1,
      "Seeded SGD training of the fused feed-forward classifier.");

  m.def(
      "gradient_check",
      [](const ModelParams& params, const Eigen::MatrixXd& x1,
         const std::optional<Eigen::MatrixXd>& x2, const Eigen::MatrixXi& y, double epsilon,
         long samples_per_tensor, std::uint64_t seed) {
        return gradient_check(params, make_features(x1, x2), y, epsilon, samples_per_tensor, seed);
      },
      py::arg("params"), py::arg("x1"), py::arg("x2"), py::arg("y"), py::arg("epsilon") = 1e-4,
      py::arg("samples_per_tensor") = 8, py::arg("seed") = 1);

  m.def(
      "init_model",
      [](long input_width, bool hybrid, double dropout_rate, std::uint64_t seed) {
        return ModelParams::init(input_width, hybrid, dropout_rate, seed);
      },
      py::arg("input_width"), py::arg("hybrid"), py::arg("dropout_rate") = 0.2, py::arg("seed") = 1);

  // --- metrics ----------------------------------------------------------------
  m.def("auroc", &auroc, py::arg("scores"), py::arg("labels"));
  m.def("auprc", &auprc, py::arg("scores"), py::arg("labels"));
  m.def("mcc", &mcc, py::arg("decisions"), py::arg("labels"));
  m.def(
      "evaluate",
      [](const Eigen::MatrixXd& scores, const Eigen::MatrixXi& targets, double threshold) {
        return report_dict(evaluate(scores, targets, threshold));
      },
      py::arg("scores"), py::arg("targets"), py::arg("threshold") = 0.5);

  // --- data ---------------------------------------------------------------------
  m.def(
      "generate_synthetic",
      [](const py::dict& config, std::uint64_t seed, const std::string& out_dir,
         bool with_pretrained) {
        SyntheticConfig c = synthetic_config_from_json(to_nlohmann(config));
        SyntheticOutput out = synth_dataset(c, seed, out_dir, with_pretrained);
        py::dict d;
        d["notes_csv"] = out.notes_csv;
        d["diagnoses_csv"] = out.diagnoses_csv;
        d["keywords"] = out.keywords;
        return d;
      },
      py::arg("config"), py::arg("seed"), py::arg("out_dir"), py::arg("with_pretrained") = true);

  // --- pipeline --------------------------------------------------------------------
  m.def(
      "run_pipeline",
      [](const py::dict& config) {
        RunArtifacts artifacts = run_pipeline(RunConfig::from_json(to_nlohmann(config)));
        py::dict d;
        d["output_dir"] = artifacts.output_dir;
        d["checkpoint"] = artifacts.checkpoint_path;
        d["report_json"] = artifacts.report_json_path;
        d["report_txt"] = artifacts.report_text_path;
        d["report"] = report_dict(artifacts.report);
        return d;
      },
      py::arg("config"), "End-to-end run from a config dict; returns artifact paths and metrics.");
  m.def(
      "compare_baselines",
      [](const std::vector<std::string>& run_dirs, bool with_reference) {
        ComparisonTable t = compare_baselines(run_dirs, with_reference);
        py::dict d;
        d["columns"] = t.columns;
        d["rows"] = t.rows;
        d["values"] = t.values;
        d["text"] = t.text;
        return d;
      },
      py::arg("run_dirs"), py::arg("with_reference") = true);

  m.attr("__version__") = "0.1.0";
}
