#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "icd9group/text.hpp"

namespace icd9group {

using RowMatrixXd = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

enum class EmbeddingSource { Pretrained, Trained };

/// Token -> fixed-length vector table, one row per token.
class EmbeddingTable {
public:
  EmbeddingTable() = default;
  EmbeddingTable(int dimension, EmbeddingSource source) : dimension_(dimension), source_(source) {}

  int dimension() const { return dimension_; }
  EmbeddingSource source() const { return source_; }
  long size() const { return static_cast<long>(tokens_.size()); }

  /// Appends a token row. Throws DataError on duplicates or length mismatch.
  void add(const std::string& token, const Eigen::VectorXd& vector);
  void reserve(long rows);

  long index_of(const std::string& token) const;
  const std::string& token_at(long index) const { return tokens_[index]; }
  Eigen::Map<const Eigen::VectorXd> vector_at(long index) const;

  /// View of all rows as a size() x dimension matrix.
  Eigen::Map<const RowMatrixXd> vectors() const;
  const std::vector<std::string>& tokens() const { return tokens_; }

  /// Copy of the table without the given tokens (used in ablation setups).
  EmbeddingTable without(const std::set<std::string>& excluded) const;

  /// Content fingerprint over tokens and raw vector bytes.
  std::string content_hash() const;

private:
  int dimension_ = 0;
  EmbeddingSource source_ = EmbeddingSource::Trained;
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, long> index_;
  std::vector<double> data_;  // row-major, size() x dimension
};

/// Reads word2vec text format: header "V D", then V lines "token v1 .. vD".
/// Throws DataError (with line numbers) on dimension mismatch against
/// expected_dim, duplicate tokens, or malformed lines.
EmbeddingTable load_pretrained(const std::string& path, int expected_dim = 200);

/// Writes the same word2vec text format with round-trippable precision.
void save_embeddings(const EmbeddingTable& table, const std::string& path);

/// Deterministic stand-in for an externally trained biomedical table: each
/// token's vector depends only on (seed, token), so coverage and order of
/// `tokens` do not change existing vectors.
EmbeddingTable seeded_pretrained_table(const std::vector<std::string>& tokens, int dimension,
                                       std::uint64_t seed);

struct SkipgramConfig {
  int dimension = 200;
  double initial_learning_rate = 0.025;
  double learning_rate_floor = 1e-4;  // linear decay floor over training pairs
  int window = 5;
  int negatives = 5;
  int epochs = 5;
  long min_count = 5;
  double subsample_threshold = 1e-3;
  double noise_power = 0.75;  // noise distribution ~ count^noise_power
  long noise_table_size = 1 << 20;
  int workers = 1;  // >1 trades bit-reproducibility for speed
  std::uint64_t seed = 1;
};

struct SkipgramResult {
  EmbeddingTable table;                 // center-word ("input") vectors
  std::vector<double> epoch_mean_loss;  // negative-sampling objective per epoch
  long total_pairs = 0;                 // (center, context) pairs per full run
};

/// Skipgram with negative sampling over in-memory token sequences.
/// Deterministic for a fixed seed when workers == 1.
SkipgramResult train_skipgram(const std::vector<TokenSequence>& corpus, const SkipgramConfig& config);

/// Elementwise mean over tokens present in the table; tokens are accumulated
/// in table-index order so the result is permutation-invariant bit-for-bit.
/// All-missing or empty input yields a zero vector with oov_fraction 1.
struct DocumentVector {
  Eigen::VectorXd vector;
  double oov_fraction = 1.0;
};

DocumentVector embed_document(const TokenSequence& tokens, const EmbeddingTable& table);

/// Row i = embed_document of document i. `mean_oov` (optional) receives the
/// corpus-mean OOV fraction.
Eigen::MatrixXd vectorize_corpus(const std::vector<TokenSequence>& corpus, const EmbeddingTable& table,
                                 double* mean_oov = nullptr);

}  // namespace icd9group
