#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

namespace icd9group {

struct GroupDiagnostics {
  int group_id = 0;  // 1-based column position
  std::string label;
  long positives = 0;
  long predicted_positives = 0;
  long true_positives = 0;
  double prevalence = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

/// The seven report metrics plus per-group diagnostics.
struct EvalReport {
  double auroc = 0.0;
  double auprc = 0.0;
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f_score = 0.0;
  double mcc = 0.0;
  double threshold = 0.5;
  std::vector<GroupDiagnostics> per_group;
};

/// Mann-Whitney statistic: fraction of (positive, negative) pairs ordered
/// correctly, ties counted 0.5. Throws DataError unless both classes occur.
double auroc(const std::vector<double>& scores, const std::vector<int>& labels);

/// Average precision: sum over descending-score cut points of
/// delta-recall x precision, ties processed as one block. Throws DataError
/// when there are no positives.
double auprc(const std::vector<double>& scores, const std::vector<int>& labels);

/// Matthews correlation over binary decisions; any zero factor yields 0.
double mcc(const std::vector<int>& decisions, const std::vector<int>& labels);

/// Sample-wise multi-label aggregates: per-sample set precision/recall/F1
/// (empty-set conventions: P empty -> precision 1 if T empty else 0;
/// T empty -> recall 1) and label-wise accuracy, each averaged over samples.
struct SampleAverages {
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f_score = 0.0;
};

SampleAverages sample_metrics(const Eigen::MatrixXi& decisions, const Eigen::MatrixXi& targets);

/// Full report: decisions = scores >= threshold; sample-wise aggregates,
/// MCC over flattened decisions, micro AUROC/AUPRC over flattened scores.
/// `group_labels` (optional) names the per-group diagnostics rows.
EvalReport evaluate(const Eigen::MatrixXd& scores, const Eigen::MatrixXi& targets,
                    double threshold = 0.5, const std::vector<std::string>& group_labels = {});

/// Fixed-width text table in the report row order
/// (AUROC, AUPRC, Accuracy, Precision, Recall, F-Score, MCC).
std::string render_report_text(const EvalReport& report);

/// Metric names in the canonical report row order.
const std::vector<std::string>& metric_row_order();

/// Metric value by canonical row name.
double metric_by_name(const EvalReport& report, const std::string& name);

}  // namespace icd9group
