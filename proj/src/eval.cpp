#include "icd9group/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "icd9group/errors.hpp"

namespace icd9group {

namespace {

void check_binary(const Eigen::MatrixXi& m, const char* what) {
  for (long i = 0; i < m.rows(); ++i) {
    for (long j = 0; j < m.cols(); ++j) {
      if (m(i, j) != 0 && m(i, j) != 1) {
        throw DataError(std::string(what) + " must be binary, found " + std::to_string(m(i, j)));
      }
    }
  }
}

}  // namespace

double auroc(const std::vector<double>& scores, const std::vector<int>& labels) {
  if (scores.size() != labels.size()) throw DataError("auroc: scores/labels length mismatch");
  long n_pos = 0, n_neg = 0;
  for (int y : labels) (y ? n_pos : n_neg) += 1;
  if (n_pos == 0 || n_neg == 0) {
    throw DataError("auroc undefined: needs at least one positive and one negative");
  }
  // Rank-sum with average ranks for ties; equals pairwise counting with
  // ties credited 0.5.
  const long n = static_cast<long>(scores.size());
  std::vector<long> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](long a, long b) { return scores[a] < scores[b]; });
  double rank_sum_pos = 0;
  long i = 0;
  while (i < n) {
    long j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);  // mean of ranks i+1..j
    for (long k = i; k < j; ++k) {
      if (labels[order[k]]) rank_sum_pos += avg_rank;
    }
    i = j;
  }
  const double u = rank_sum_pos - 0.5 * static_cast<double>(n_pos) * (n_pos + 1);
  return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

double auprc(const std::vector<double>& scores, const std::vector<int>& labels) {
  if (scores.size() != labels.size()) throw DataError("auprc: scores/labels length mismatch");
  long n_pos = 0;
  for (int y : labels) n_pos += y ? 1 : 0;
  if (n_pos == 0) throw DataError("auprc undefined: needs at least one positive");

  const long n = static_cast<long>(scores.size());
  std::vector<long> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](long a, long b) { return scores[a] > scores[b]; });
  double ap = 0;
  long tp = 0, fp = 0;
  long i = 0;
  while (i < n) {
    long j = i;
    long block_tp = 0, block_fp = 0;
    while (j < n && scores[order[j]] == scores[order[i]]) {
      (labels[order[j]] ? block_tp : block_fp) += 1;
      ++j;
    }
    const long prev_tp = tp;
    tp += block_tp;
    fp += block_fp;
    const double precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
    const double delta_recall = static_cast<double>(tp - prev_tp) / static_cast<double>(n_pos);
    ap += delta_recall * precision;
    i = j;
  }
  return ap;
}

double mcc(const std::vector<int>& decisions, const std::vector<int>& labels) {
  if (decisions.size() != labels.size()) throw DataError("mcc: decisions/labels length mismatch");
  double tp = 0, tn = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < decisions.size(); ++i) {
    if (decisions[i] && labels[i]) ++tp;
    else if (decisions[i] && !labels[i]) ++fp;
    else if (!decisions[i] && labels[i]) ++fn;
    else ++tn;
  }
  const double denom = std::sqrt(tp + fp) * std::sqrt(tp + fn) * std::sqrt(tn + fp) * std::sqrt(tn + fn);
  if (denom == 0) return 0.0;
  return (tp * tn - fp * fn) / denom;
}

SampleAverages sample_metrics(const Eigen::MatrixXi& decisions, const Eigen::MatrixXi& targets) {
  if (decisions.rows() != targets.rows() || decisions.cols() != targets.cols()) {
    throw DataError("sample_metrics: shape mismatch");
  }
  if (decisions.rows() == 0) throw DataError("sample_metrics: empty input");
  check_binary(decisions, "decisions");
  check_binary(targets, "targets");

  const long n = decisions.rows();
  const long labels = decisions.cols();
  SampleAverages avg;
  for (long i = 0; i < n; ++i) {
    long p_size = 0, t_size = 0, both = 0, correct = 0;
    for (long j = 0; j < labels; ++j) {
      const int p = decisions(i, j), t = targets(i, j);
      p_size += p;
      t_size += t;
      both += p & t;
      correct += (p == t) ? 1 : 0;
    }
    double precision, recall;
    if (p_size == 0) {
      precision = (t_size == 0) ? 1.0 : 0.0;
    } else {
      precision = static_cast<double>(both) / static_cast<double>(p_size);
    }
    recall = (t_size == 0) ? 1.0 : static_cast<double>(both) / static_cast<double>(t_size);
    const double f1 = (precision + recall == 0) ? 0.0 : 2.0 * precision * recall / (precision + recall);
    avg.accuracy += static_cast<double>(correct) / static_cast<double>(labels);
    avg.precision += precision;
    avg.recall += recall;
    avg.f_score += f1;
  }
  const double dn = static_cast<double>(n);
  avg.accuracy /= dn;
  avg.precision /= dn;
  avg.recall /= dn;
  avg.f_score /= dn;
  return avg;
}

EvalReport evaluate(const Eigen::MatrixXd& scores, const Eigen::MatrixXi& targets, double threshold,
                    const std::vector<std::string>& group_labels) {
  if (scores.rows() != targets.rows() || scores.cols() != targets.cols()) {
    throw DataError("evaluate: scores/targets shape mismatch");
  }
  if (scores.rows() == 0) throw DataError("evaluate: empty input");
  check_binary(targets, "targets");

  const long n = scores.rows();
  const long labels = scores.cols();
  Eigen::MatrixXi decisions(n, labels);
  for (long i = 0; i < n; ++i) {
    for (long j = 0; j < labels; ++j) decisions(i, j) = scores(i, j) >= threshold ? 1 : 0;
  }

  EvalReport report;
  report.threshold = threshold;
  const SampleAverages avg = sample_metrics(decisions, targets);
  report.accuracy = avg.accuracy;
  report.precision = avg.precision;
  report.recall = avg.recall;
  report.f_score = avg.f_score;

  std::vector<double> flat_scores;
  std::vector<int> flat_targets, flat_decisions;
  flat_scores.reserve(n * labels);
  flat_targets.reserve(n * labels);
  flat_decisions.reserve(n * labels);
  for (long i = 0; i < n; ++i) {
    for (long j = 0; j < labels; ++j) {
      flat_scores.push_back(scores(i, j));
      flat_targets.push_back(targets(i, j));
      flat_decisions.push_back(decisions(i, j));
    }
  }
  report.mcc = mcc(flat_decisions, flat_targets);
  report.auroc = auroc(flat_scores, flat_targets);  // throws when single-class
  report.auprc = auprc(flat_scores, flat_targets);

  report.per_group.reserve(labels);
  for (long j = 0; j < labels; ++j) {
    GroupDiagnostics g;
    g.group_id = static_cast<int>(j + 1);
    if (j < static_cast<long>(group_labels.size())) g.label = group_labels[j];
    for (long i = 0; i < n; ++i) {
      g.positives += targets(i, j);
      g.predicted_positives += decisions(i, j);
      g.true_positives += decisions(i, j) & targets(i, j);
    }
    g.prevalence = static_cast<double>(g.positives) / static_cast<double>(n);
    g.precision = g.predicted_positives ? static_cast<double>(g.true_positives) / g.predicted_positives
                                        : (g.positives ? 0.0 : 1.0);
    g.recall = g.positives ? static_cast<double>(g.true_positives) / g.positives : 1.0;
    g.f1 = (g.precision + g.recall == 0) ? 0.0 : 2.0 * g.precision * g.recall / (g.precision + g.recall);
    report.per_group.push_back(std::move(g));
  }
  return report;
}

const std::vector<std::string>& metric_row_order() {
  static const std::vector<std::string> rows = {"AUROC",  "AUPRC",  "Accuracy", "Precision",
                                                "Recall", "F-Score", "MCC"};
  return rows;
}

double metric_by_name(const EvalReport& report, const std::string& name) {
  if (name == "AUROC") return report.auroc;
  if (name == "AUPRC") return report.auprc;
  if (name == "Accuracy") return report.accuracy;
  if (name == "Precision") return report.precision;
  if (name == "Recall") return report.recall;
  if (name == "F-Score") return report.f_score;
  if (name == "MCC") return report.mcc;
  throw DataError("unknown metric name: " + name);
}

std::string render_report_text(const EvalReport& report) {
  std::ostringstream out;
  char buf[64];
  out << "Parameter      Value\n";
  out << "-------------  -----\n";
  for (const auto& name : metric_row_order()) {
    std::snprintf(buf, sizeof(buf), "%-13s  %5.2f\n", name.c_str(), metric_by_name(report, name));
    out << buf;
  }
  return out.str();
}

}  // namespace icd9group
