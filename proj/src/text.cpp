#include "icd9group/text.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>

#include "icd9group/errors.hpp"

namespace icd9group {

std::set<std::string> load_stopwords(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open stopword list: " + path);
  std::set<std::string> words;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) words.insert(line);
  }
  return words;
}

TokenSequence preprocess_note(const std::string& text, const std::set<std::string>& stoplist) {
  TokenSequence tokens;
  std::string token;
  auto flush = [&] {
    if (token.size() >= 2 && !stoplist.count(token)) tokens.push_back(token);
    token.clear();
  };
  for (unsigned char c : text) {
    if (std::isalnum(c)) {
      token.push_back(static_cast<char>(std::tolower(c)));
    } else {
      flush();
    }
  }
  flush();
  return tokens;
}

Vocabulary Vocabulary::build(const std::vector<TokenSequence>& corpus, long min_count) {
  if (min_count < 1) throw DataError("vocabulary min_count must be >= 1");
  std::unordered_map<std::string, long> counts;
  for (const auto& doc : corpus) {
    for (const auto& tok : doc) ++counts[tok];
  }
  std::vector<std::pair<std::string, long>> kept;
  kept.reserve(counts.size());
  for (auto& [tok, count] : counts) {
    if (count >= min_count) kept.emplace_back(tok, count);
  }
  if (kept.empty()) {
    throw DataError("vocabulary is empty after min_count=" + std::to_string(min_count) + " threshold");
  }
  std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });

  Vocabulary v;
  v.min_count_ = min_count;
  v.tokens_.reserve(kept.size());
  v.counts_.reserve(kept.size());
  for (auto& [tok, count] : kept) {
    v.index_.emplace(tok, static_cast<long>(v.tokens_.size()));
    v.tokens_.push_back(std::move(tok));
    v.counts_.push_back(count);
    v.total_count_ += count;
  }
  return v;
}

long Vocabulary::index_of(const std::string& token) const {
  auto it = index_.find(token);
  return it == index_.end() ? -1 : it->second;
}

}  // namespace icd9group
