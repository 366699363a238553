#include "icd9group/baseline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "icd9group/errors.hpp"

namespace icd9group {

std::vector<std::string> enumerate_ngrams(const TokenSequence& tokens, int max_ngram) {
  std::vector<std::string> grams;
  const long n = static_cast<long>(tokens.size());
  for (long i = 0; i < n; ++i) {
    std::string gram = tokens[i];
    grams.push_back(gram);
    for (int len = 2; len <= max_ngram && i + len <= n; ++len) {
      gram += ' ';
      gram += tokens[i + len - 1];
      grams.push_back(gram);
    }
  }
  return grams;
}

TfidfModel TfidfModel::fit(const std::vector<TokenSequence>& corpus, long top_k, int max_ngram) {
  if (corpus.empty()) throw DataError("fit_tfidf on empty corpus");
  if (top_k < 1) throw DataError("tfidf top_k must be >= 1");

  // Term frequency mass and document frequency per candidate n-gram.
  std::unordered_map<std::string, long> total_tf;
  std::unordered_map<std::string, long> df;
  std::unordered_map<std::string, long> doc_tf;
  for (const auto& doc : corpus) {
    doc_tf.clear();
    for (auto& gram : enumerate_ngrams(doc, max_ngram)) ++doc_tf[gram];
    for (auto& [gram, tf] : doc_tf) {
      total_tf[gram] += tf;
      ++df[gram];
    }
  }

  const double n_docs = static_cast<double>(corpus.size());
  struct Candidate {
    std::string gram;
    double idf;
    double mass;
  };
  std::vector<Candidate> candidates;
  candidates.reserve(total_tf.size());
  for (auto& [gram, tf] : total_tf) {
    const double idf = std::log((1.0 + n_docs) / (1.0 + static_cast<double>(df[gram]))) + 1.0;
    candidates.push_back({gram, idf, static_cast<double>(tf) * idf});
  }
  std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
    if (a.mass != b.mass) return a.mass > b.mass;
    return a.gram < b.gram;
  });
  if (static_cast<long>(candidates.size()) > top_k) candidates.resize(top_k);

  TfidfModel model;
  model.max_ngram_ = max_ngram;
  model.features_.reserve(candidates.size());
  model.idf_.reserve(candidates.size());
  for (auto& c : candidates) {
    model.index_.emplace(c.gram, static_cast<long>(model.features_.size()));
    model.features_.push_back(std::move(c.gram));
    model.idf_.push_back(c.idf);
  }
  return model;
}

long TfidfModel::index_of(const std::string& feature) const {
  auto it = index_.find(feature);
  return it == index_.end() ? -1 : it->second;
}

Eigen::VectorXd TfidfModel::transform(const TokenSequence& tokens) const {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(feature_count());
  for (auto& gram : enumerate_ngrams(tokens, max_ngram_)) {
    long idx = index_of(gram);
    if (idx >= 0) v[idx] += idf_[idx];
  }
  const double norm = v.norm();
  if (norm > 0) v /= norm;
  return v;
}

Eigen::MatrixXd TfidfModel::transform_corpus(const std::vector<TokenSequence>& corpus) const {
  Eigen::MatrixXd out(static_cast<long>(corpus.size()), feature_count());
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    out.row(static_cast<long>(i)) = transform(corpus[i]).transpose();
  }
  return out;
}

void TfidfModel::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write tfidf model: " + path);
  out << feature_count() << ' ' << max_ngram_ << '\n';
  char buf[40];
  for (long i = 0; i < feature_count(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.17g", idf_[i]);
    out << features_[i] << '\t' << buf << '\n';
  }
}

TfidfModel TfidfModel::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open tfidf model: " + path);
  long count = 0;
  int max_ngram = 3;
  std::string line;
  if (!std::getline(in, line) || std::sscanf(line.c_str(), "%ld %d", &count, &max_ngram) < 1 ||
      count < 0 || max_ngram < 1) {
    throw DataError("malformed tfidf model header in " + path);
  }
  TfidfModel model;
  model.max_ngram_ = max_ngram;
  for (long i = 0; i < count; ++i) {
    if (!std::getline(in, line)) throw DataError("truncated tfidf model: " + path);
    auto tab = line.find('\t');
    if (tab == std::string::npos) {
      throw DataError("malformed tfidf model line " + std::to_string(i + 2) + " in " + path);
    }
    std::string gram = line.substr(0, tab);
    double idf = std::strtod(line.c_str() + tab + 1, nullptr);
    model.index_.emplace(gram, static_cast<long>(model.features_.size()));
    model.features_.push_back(std::move(gram));
    model.idf_.push_back(idf);
  }
  return model;
}

}  // namespace icd9group
