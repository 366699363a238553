#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "icd9group/text.hpp"

namespace icd9group {

/// Bag-of-words TF-IDF model over 1..3-grams of stop-filtered tokens.
/// idf = ln((1+N)/(1+df)) + 1 with N = training documents. Features are
/// ranked by summed tf-idf mass over the training corpus, ties broken
/// lexicographically, and the top_k kept.
class TfidfModel {
public:
  TfidfModel() = default;

  static TfidfModel fit(const std::vector<TokenSequence>& corpus, long top_k = 1000,
                        int max_ngram = 3);

  long feature_count() const { return static_cast<long>(features_.size()); }
  const std::string& feature_at(long i) const { return features_[i]; }
  double idf_at(long i) const { return idf_[i]; }
  int max_ngram() const { return max_ngram_; }
  long index_of(const std::string& feature) const;

  /// tf * idf per feature, L2-normalized per document; documents sharing no
  /// feature with the model stay all-zero.
  Eigen::VectorXd transform(const TokenSequence& tokens) const;

  /// Row i = transform of document i.
  Eigen::MatrixXd transform_corpus(const std::vector<TokenSequence>& corpus) const;

  /// Persists as text rows "feature<TAB>idf"; load() restores them.
  void save(const std::string& path) const;
  static TfidfModel load(const std::string& path);

private:
  std::vector<std::string> features_;  // selection-score descending
  std::vector<double> idf_;
  std::unordered_map<std::string, long> index_;
  int max_ngram_ = 3;
};

/// All 1..max_ngram-grams of a token sequence, space-joined.
std::vector<std::string> enumerate_ngrams(const TokenSequence& tokens, int max_ngram);

}  // namespace icd9group
