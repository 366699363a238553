#pragma once

#include <set>
#include <string>
#include <unordered_map>
#include <vector>

namespace icd9group {

/// Ordered lowercase tokens after stopword and length-1 filtering.
using TokenSequence = std::vector<std::string>;

/// The bundled English stopword list (318 entries), also shipped as
/// assets/stopwords.txt. Override with load_stopwords().
const std::set<std::string>& default_stopwords();

/// Loads a one-token-per-line UTF-8 stopword file.
std::set<std::string> load_stopwords(const std::string& path);

/// Lowercases, splits into maximal alphanumeric runs, drops tokens of
/// length 1 and tokens in `stoplist`. Empty output is allowed.
TokenSequence preprocess_note(const std::string& text, const std::set<std::string>& stoplist);

/// Token -> dense index and count, thresholded by min_count.
class Vocabulary {
public:
  Vocabulary() = default;

  /// Index order is deterministic: descending count, ties by lexicographic
  /// token. Throws DataError when nothing survives the threshold.
  static Vocabulary build(const std::vector<TokenSequence>& corpus, long min_count);

  long size() const { return static_cast<long>(tokens_.size()); }
  long min_count() const { return min_count_; }
  long total_count() const { return total_count_; }

  /// Index of token, or -1 when absent.
  long index_of(const std::string& token) const;
  const std::string& token_at(long index) const { return tokens_[index]; }
  long count_at(long index) const { return counts_[index]; }

private:
  std::vector<std::string> tokens_;
  std::vector<long> counts_;
  std::unordered_map<std::string, long> index_;
  long min_count_ = 1;
  long total_count_ = 0;  // sum of kept-token counts
};

}  // namespace icd9group
