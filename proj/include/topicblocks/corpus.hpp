#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace topicblocks {

class Vocabulary {
 public:
  /// Returns the id of `word`, inserting it at the end if unseen.
  int add(const std::string& word);
  std::optional<int> lookup(std::string_view word) const;
  const std::string& word(int id) const { return words_[static_cast<std::size_t>(id)]; }
  const std::vector<std::string>& words() const { return words_; }
  int size() const { return static_cast<int>(words_.size()); }

 private:
  std::vector<std::string> words_;
  std::unordered_map<std::string, int> index_;
};

struct Document {
  std::string id;
  std::vector<int> tokens;
};

struct CountEntry {
  int doc;
  int word;
  std::int64_t count;
  bool operator==(const CountEntry&) const = default;
};

struct FilterConfig {
  /// Words with fewer total occurrences are dropped after tokenization.
  std::int64_t min_count = 1;
};

struct Corpus {
  Vocabulary vocab;
  std::vector<Document> docs;
  /// Nonzero n_dw, sorted by (doc, word).
  std::vector<CountEntry> counts;

  int num_docs() const { return static_cast<int>(docs.size()); }
  int num_words() const { return vocab.size(); }
  std::int64_t num_tokens() const;
  std::vector<std::int64_t> doc_lengths() const;
  std::vector<std::int64_t> word_counts() const;

  /// Throws IntegrityError if counts disagree with the token streams.
  void validate() const;
};

/// Lowercase, split on anything outside a-z.
std::vector<std::string> tokenize(std::string_view raw_text);

Corpus build_corpus(const std::vector<std::pair<std::string, std::string>>& raw_docs,
                    const FilterConfig& rules = {});
Corpus build_corpus_from_tokens(
    const std::vector<std::pair<std::string, std::vector<std::string>>>& docs,
    const FilterConfig& rules = {});

/// Corpus from precounted (doc, word, count) triples. Token streams are
/// expanded in word-id order.
Corpus build_corpus_from_counts(const std::vector<std::string>& doc_ids,
                                const std::vector<std::string>& words,
                                const std::vector<CountEntry>& counts);

struct RankFrequency {
  int rank;
  int word;
  double p;
};

std::vector<RankFrequency> rank_frequency(const Corpus& corpus);

struct HeapsPoint {
  int docs;
  int words;  // distinct words seen so far
  std::int64_t edges;  // distinct (d, w) pairs seen so far
  std::int64_t nodes_words() const { return words; }
  std::int64_t nodes_all() const { return static_cast<std::int64_t>(words) + docs; }
};

/// Growth of the word-document network as documents are added in `order`
/// (identity order if empty).
std::vector<HeapsPoint> heaps_curve(const Corpus& corpus, const std::vector<int>& order = {});
std::vector<HeapsPoint> heaps_curve_shuffled(const Corpus& corpus, std::uint64_t seed);

/// Least-squares slope of log y on log x.
double fit_loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

// I/O

Corpus read_jsonl(const std::filesystem::path& path, const FilterConfig& rules = {});
void write_corpus_dir(const Corpus& corpus, const std::filesystem::path& dir);
Corpus read_corpus_dir(const std::filesystem::path& dir);

}  // namespace topicblocks
