#include "icd9group/embed.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <mutex>
#include <thread>

#include "icd9group/errors.hpp"
#include "icd9group/rng.hpp"

namespace icd9group {

void EmbeddingTable::add(const std::string& token, const Eigen::VectorXd& vector) {
  if (vector.size() != dimension_) {
    throw DataError("embedding vector for '" + token + "' has length " +
                    std::to_string(vector.size()) + ", table dimension is " + std::to_string(dimension_));
  }
  if (!index_.emplace(token, static_cast<long>(tokens_.size())).second) {
    throw DataError("duplicate token in embedding table: " + token);
  }
  tokens_.push_back(token);
  data_.insert(data_.end(), vector.data(), vector.data() + vector.size());
}

void EmbeddingTable::reserve(long rows) {
  tokens_.reserve(rows);
  data_.reserve(static_cast<std::size_t>(rows) * dimension_);
}

long EmbeddingTable::index_of(const std::string& token) const {
  auto it = index_.find(token);
  return it == index_.end() ? -1 : it->second;
}

Eigen::Map<const Eigen::VectorXd> EmbeddingTable::vector_at(long index) const {
  return {data_.data() + static_cast<std::size_t>(index) * dimension_, dimension_};
}

Eigen::Map<const RowMatrixXd> EmbeddingTable::vectors() const {
  return {data_.data(), size(), dimension_};
}

EmbeddingTable EmbeddingTable::without(const std::set<std::string>& excluded) const {
  EmbeddingTable out(dimension_, source_);
  out.reserve(size());
  for (long i = 0; i < size(); ++i) {
    if (!excluded.count(tokens_[i])) out.add(tokens_[i], vector_at(i));
  }
  return out;
}

std::string EmbeddingTable::content_hash() const {
  std::uint64_t h = fnv1a64(&dimension_, sizeof(dimension_));
  for (long i = 0; i < size(); ++i) {
    h ^= fnv1a64(tokens_[i]);
    h = h * 0x100000001b3ULL;
    h ^= fnv1a64(data_.data() + static_cast<std::size_t>(i) * dimension_, sizeof(double) * dimension_);
    h = h * 0x100000001b3ULL;
  }
  return hash_hex(h);
}

EmbeddingTable load_pretrained(const std::string& path, int expected_dim) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open embedding file: " + path);
  std::string line;
  if (!std::getline(in, line)) throw DataError("empty embedding file: " + path);
  long vocab_size = 0;
  int dim = 0;
  if (std::sscanf(line.c_str(), "%ld %d", &vocab_size, &dim) != 2 || vocab_size < 0 || dim <= 0) {
    throw DataError("malformed header at line 1 in " + path + ": expected 'V D'");
  }
  if (dim != expected_dim) {
    throw DataError("embedding dimension mismatch in " + path + ": file has " + std::to_string(dim) +
                    ", expected " + std::to_string(expected_dim));
  }
  EmbeddingTable table(dim, EmbeddingSource::Pretrained);
  table.reserve(vocab_size);
  Eigen::VectorXd vec(dim);
  long line_no = 1;
  for (long i = 0; i < vocab_size; ++i) {
    if (!std::getline(in, line)) {
      throw DataError("truncated embedding file " + path + ": header promises " +
                      std::to_string(vocab_size) + " rows, got " + std::to_string(i));
    }
    ++line_no;
    const char* p = line.c_str();
    while (*p == ' ') ++p;
    const char* tok_start = p;
    while (*p && *p != ' ') ++p;
    if (p == tok_start) throw DataError("malformed line " + std::to_string(line_no) + " in " + path);
    std::string token(tok_start, p - tok_start);
    for (int d = 0; d < dim; ++d) {
      char* end = nullptr;
      double v = std::strtod(p, &end);
      if (end == p) {
        throw DataError("malformed line " + std::to_string(line_no) + " in " + path +
                        ": expected " + std::to_string(dim) + " values after token");
      }
      vec[d] = v;
      p = end;
    }
    while (*p == ' ') ++p;
    if (*p && *p != '\r') {
      throw DataError("malformed line " + std::to_string(line_no) + " in " + path + ": trailing data");
    }
    try {
      table.add(token, vec);
    } catch (const DataError& e) {
      throw DataError(std::string(e.what()) + " at line " + std::to_string(line_no) + " in " + path);
    }
  }
  return table;
}

void save_embeddings(const EmbeddingTable& table, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write embedding file: " + path);
  out << table.size() << ' ' << table.dimension() << '\n';
  char buf[40];
  for (long i = 0; i < table.size(); ++i) {
    out << table.token_at(i);
    const auto v = table.vector_at(i);
    for (int d = 0; d < table.dimension(); ++d) {
      std::snprintf(buf, sizeof(buf), " %.17g", v[d]);
      out << buf;
    }
    out << '\n';
  }
}

EmbeddingTable seeded_pretrained_table(const std::vector<std::string>& tokens, int dimension,
                                       std::uint64_t seed) {
  EmbeddingTable table(dimension, EmbeddingSource::Pretrained);
  table.reserve(static_cast<long>(tokens.size()));
  Eigen::VectorXd vec(dimension);
  const double scale = 1.0 / std::sqrt(static_cast<double>(dimension));
  for (const auto& token : tokens) {
    Rng rng(derive_seed(seed, token));
    for (int d = 0; d < dimension; ++d) vec[d] = rng.normal() * scale;
    table.add(token, vec);
  }
  return table;
}

// ---------------------------------------------------------------------------
// Skipgram with negative sampling.
// ---------------------------------------------------------------------------

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// -log(sigmoid(x)), computed stably.
double softplus_neg(double x) { return x > 0 ? std::log1p(std::exp(-x)) : -x + std::log1p(std::exp(x)); }

struct SkipgramData {
  std::vector<std::vector<long>> docs;  // vocab indices, OOV dropped
  std::vector<double> keep_prob;        // subsampling keep probability per word
  std::vector<long> noise_table;
};

// Walks one shard of documents exactly as training does, consuming the same
// data-side randomness, and hands every (center, context) pair to `emit`.
// Used twice per run: once to count pairs (fixing the lr schedule), once to
// train; both walks see identical pair streams.
template <typename Emit>
void traverse_shard(const SkipgramData& data, long doc_begin, long doc_end, int epochs, int window,
                    double subsample_threshold, Rng& data_rng, Emit&& emit) {
  std::vector<long> sentence;
  for (int epoch = 0; epoch < epochs; ++epoch) {
    for (long d = doc_begin; d < doc_end; ++d) {
      const auto& doc = data.docs[d];
      sentence.clear();
      for (long w : doc) {
        if (subsample_threshold > 0 && data.keep_prob[w] < 1.0 &&
            data_rng.uniform_real() > data.keep_prob[w]) {
          continue;
        }
        sentence.push_back(w);
      }
      const long n = static_cast<long>(sentence.size());
      for (long pos = 0; pos < n; ++pos) {
        const long reduced = window > 1 ? static_cast<long>(data_rng.uniform_int(0, window - 1)) : 0;
        const long eff = window - reduced;
        const long lo = std::max<long>(0, pos - eff);
        const long hi = std::min<long>(n - 1, pos + eff);
        for (long j = lo; j <= hi; ++j) {
          if (j == pos) continue;
          emit(epoch, sentence[pos], sentence[j]);
        }
      }
    }
  }
}

}  // namespace

SkipgramResult train_skipgram(const std::vector<TokenSequence>& corpus, const SkipgramConfig& config) {
  if (config.dimension <= 0) throw DataError("skipgram dimension must be positive");
  if (config.negatives < 1) throw DataError("skipgram negatives must be >= 1");
  if (config.epochs < 1) throw DataError("skipgram epochs must be >= 1");
  Vocabulary vocab = Vocabulary::build(corpus, config.min_count);  // throws when empty
  const long V = vocab.size();
  const int D = config.dimension;

  SkipgramData data;
  data.docs.reserve(corpus.size());
  for (const auto& doc : corpus) {
    std::vector<long> ids;
    ids.reserve(doc.size());
    for (const auto& tok : doc) {
      long idx = vocab.index_of(tok);
      if (idx >= 0) ids.push_back(idx);
    }
    data.docs.push_back(std::move(ids));
  }

  // Subsampling keep probability: (sqrt(f/t) + 1) * t/f for frequency f.
  data.keep_prob.assign(V, 1.0);
  if (config.subsample_threshold > 0) {
    const double total = static_cast<double>(vocab.total_count());
    for (long i = 0; i < V; ++i) {
      const double f = static_cast<double>(vocab.count_at(i)) / total;
      const double r = config.subsample_threshold / f;
      data.keep_prob[i] = std::min(1.0, (std::sqrt(1.0 / r) + 1.0) * r);
    }
  }

  // Noise table proportional to count^noise_power.
  data.noise_table.resize(config.noise_table_size);
  {
    double total_pow = 0;
    for (long i = 0; i < V; ++i) total_pow += std::pow(vocab.count_at(i), config.noise_power);
    long word = 0;
    double cum = std::pow(vocab.count_at(0), config.noise_power) / total_pow;
    for (long j = 0; j < config.noise_table_size; ++j) {
      data.noise_table[j] = word;
      if (static_cast<double>(j) / config.noise_table_size > cum && word < V - 1) {
        ++word;
        cum += std::pow(vocab.count_at(word), config.noise_power) / total_pow;
      }
    }
  }

  // Center vectors uniform in [-0.5, 0.5]/D, context vectors zero.
  std::vector<double> syn0(static_cast<std::size_t>(V) * D);
  std::vector<double> syn1(static_cast<std::size_t>(V) * D, 0.0);
  {
    Rng init_rng(derive_seed(config.seed, "sg-init"));
    for (auto& x : syn0) x = (init_rng.uniform_real() - 0.5) / D;
  }

  const int workers = std::max(1, config.workers);
  const long n_docs = static_cast<long>(data.docs.size());
  std::vector<long> shard_begin(workers + 1);
  for (int w = 0; w <= workers; ++w) shard_begin[w] = n_docs * w / workers;

  // Counting pass: fixes the linear lr schedule over the exact pair stream.
  std::vector<long> shard_pairs(workers, 0);
  for (int w = 0; w < workers; ++w) {
    Rng data_rng(derive_seed(config.seed, "sg-data-" + std::to_string(w)));
    traverse_shard(data, shard_begin[w], shard_begin[w + 1], config.epochs, config.window,
                   config.subsample_threshold, data_rng, [&](int, long, long) { ++shard_pairs[w]; });
  }
  long total_pairs = 0;
  for (long p : shard_pairs) total_pairs += p;
  if (total_pairs == 0) throw DataError("skipgram corpus produced no training pairs");

  std::atomic<long> pairs_done{0};
  std::vector<double> epoch_loss(config.epochs, 0.0);
  std::vector<long> epoch_pairs(config.epochs, 0);
  std::mutex epoch_mutex;

  auto train_worker = [&](int w) {
    Rng data_rng(derive_seed(config.seed, "sg-data-" + std::to_string(w)));
    Rng neg_rng(derive_seed(config.seed, "sg-negative-" + std::to_string(w)));
    std::vector<double> neu1e(D);
    std::vector<double> local_loss(config.epochs, 0.0);
    std::vector<long> local_pairs(config.epochs, 0);
    long done_local = 0;
    const double lr0 = config.initial_learning_rate;

    traverse_shard(
        data, shard_begin[w], shard_begin[w + 1], config.epochs, config.window,
        config.subsample_threshold, data_rng, [&](int epoch, long center, long context) {
          const long done = pairs_done.fetch_add(1, std::memory_order_relaxed);
          const double lr = std::max(config.learning_rate_floor,
                                     lr0 * (1.0 - static_cast<double>(done) / total_pairs));
          double* v_center = syn0.data() + static_cast<std::size_t>(center) * D;
          std::fill(neu1e.begin(), neu1e.end(), 0.0);
          double pair_loss = 0;
          for (int k = 0; k <= config.negatives; ++k) {
            long target;
            double label;
            if (k == 0) {
              target = context;
              label = 1.0;
            } else {
              target = data.noise_table[neg_rng.next_u64() % data.noise_table.size()];
              if (target == context) continue;
              label = 0.0;
            }
            double* v_target = syn1.data() + static_cast<std::size_t>(target) * D;
            double s = 0;
            for (int d = 0; d < D; ++d) s += v_center[d] * v_target[d];
            const double g = sigmoid(s) - label;
            pair_loss += label > 0 ? softplus_neg(s) : softplus_neg(-s);
            for (int d = 0; d < D; ++d) neu1e[d] += g * v_target[d];
            const double step = lr * g;
            for (int d = 0; d < D; ++d) v_target[d] -= step * v_center[d];
          }
          for (int d = 0; d < D; ++d) v_center[d] -= lr * neu1e[d];
          local_loss[epoch] += pair_loss;
          ++local_pairs[epoch];
          ++done_local;
        });
    (void)done_local;
    std::lock_guard<std::mutex> lock(epoch_mutex);
    for (int e = 0; e < config.epochs; ++e) {
      epoch_loss[e] += local_loss[e];
      epoch_pairs[e] += local_pairs[e];
    }
  };

  if (workers == 1) {
    train_worker(0);
  } else {
    std::vector<std::thread> threads;
    threads.reserve(workers);
    for (int w = 0; w < workers; ++w) threads.emplace_back(train_worker, w);
    for (auto& t : threads) t.join();
  }

  SkipgramResult result;
  result.total_pairs = total_pairs;
  result.epoch_mean_loss.resize(config.epochs);
  for (int e = 0; e < config.epochs; ++e) {
    result.epoch_mean_loss[e] = epoch_pairs[e] > 0 ? epoch_loss[e] / epoch_pairs[e] : 0.0;
  }
  result.table = EmbeddingTable(D, EmbeddingSource::Trained);
  result.table.reserve(V);
  Eigen::VectorXd row(D);
  for (long i = 0; i < V; ++i) {
    std::memcpy(row.data(), syn0.data() + static_cast<std::size_t>(i) * D, sizeof(double) * D);
    result.table.add(vocab.token_at(i), row);
  }
  return result;
}

DocumentVector embed_document(const TokenSequence& tokens, const EmbeddingTable& table) {
  DocumentVector out;
  out.vector = Eigen::VectorXd::Zero(table.dimension());
  if (tokens.empty()) return out;
  std::vector<long> present;
  present.reserve(tokens.size());
  for (const auto& tok : tokens) {
    long idx = table.index_of(tok);
    if (idx >= 0) present.push_back(idx);
  }
  out.oov_fraction =
      static_cast<double>(tokens.size() - present.size()) / static_cast<double>(tokens.size());
  if (present.empty()) return out;
  // Table-index order makes the sum independent of token order, bit-for-bit.
  std::sort(present.begin(), present.end());
  for (long idx : present) out.vector += table.vector_at(idx);
  out.vector /= static_cast<double>(present.size());
  return out;
}

Eigen::MatrixXd vectorize_corpus(const std::vector<TokenSequence>& corpus, const EmbeddingTable& table,
                                 double* mean_oov) {
  if (corpus.empty()) throw DataError("vectorize_corpus on empty corpus");
  Eigen::MatrixXd features(static_cast<long>(corpus.size()), table.dimension());
  double oov_sum = 0;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    DocumentVector dv = embed_document(corpus[i], table);
    features.row(static_cast<long>(i)) = dv.vector.transpose();
    oov_sum += dv.oov_fraction;
  }
  if (mean_oov) *mean_oov = oov_sum / static_cast<double>(corpus.size());
  return features;
}

}  // namespace icd9group
