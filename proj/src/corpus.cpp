#include "topicblocks/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "topicblocks/util/error.hpp"
#include "topicblocks/util/rng.hpp"

namespace topicblocks {

int Vocabulary::add(const std::string& word) {
  auto [it, inserted] = index_.try_emplace(word, static_cast<int>(words_.size()));
  if (inserted) words_.push_back(word);
  return it->second;
}

std::optional<int> Vocabulary::lookup(std::string_view word) const {
  auto it = index_.find(std::string(word));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::int64_t Corpus::num_tokens() const {
  std::int64_t m = 0;
  for (const auto& c : counts) m += c.count;
  return m;
}

std::vector<std::int64_t> Corpus::doc_lengths() const {
  std::vector<std::int64_t> k(docs.size(), 0);
  for (const auto& c : counts) k[static_cast<std::size_t>(c.doc)] += c.count;
  return k;
}

std::vector<std::int64_t> Corpus::word_counts() const {
  std::vector<std::int64_t> n(static_cast<std::size_t>(vocab.size()), 0);
  for (const auto& c : counts) n[static_cast<std::size_t>(c.word)] += c.count;
  return n;
}

void Corpus::validate() const {
  const auto k = doc_lengths();
  for (std::size_t d = 0; d < docs.size(); ++d) {
    if (static_cast<std::int64_t>(docs[d].tokens.size()) != k[d])
      throw IntegrityError("document '" + docs[d].id + "' length disagrees with counts");
    for (int t : docs[d].tokens)
      if (t < 0 || t >= vocab.size())
        throw IntegrityError("document '" + docs[d].id + "' has token id out of range");
  }
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (counts[i].count <= 0) throw IntegrityError("nonpositive count entry");
    if (i > 0 && !(std::pair(counts[i - 1].doc, counts[i - 1].word) <
                   std::pair(counts[i].doc, counts[i].word)))
      throw IntegrityError("count entries not sorted or duplicated");
  }
}

std::vector<std::string> tokenize(std::string_view raw_text) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : raw_text) {
    unsigned char c = static_cast<unsigned char>(ch);
    if (c >= 'A' && c <= 'Z') c = static_cast<unsigned char>(c - 'A' + 'a');
    if (c >= 'a' && c <= 'z') {
      cur.push_back(static_cast<char>(c));
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

namespace {

void fill_counts(Corpus& c) {
  c.counts.clear();
  for (std::size_t d = 0; d < c.docs.size(); ++d) {
    std::vector<int> t = c.docs[d].tokens;
    std::sort(t.begin(), t.end());
    for (std::size_t i = 0; i < t.size();) {
      std::size_t j = i;
      while (j < t.size() && t[j] == t[i]) ++j;
      c.counts.push_back({static_cast<int>(d), t[i], static_cast<std::int64_t>(j - i)});
      i = j;
    }
  }
}

void check_field(const std::string& s, const char* what) {
  if (s.find_first_of("\t\n\r") != std::string::npos)
    throw InvalidInput(std::string(what) + " contains tab or newline: '" + s + "'");
}

}  // namespace

Corpus build_corpus_from_tokens(
    const std::vector<std::pair<std::string, std::vector<std::string>>>& docs,
    const FilterConfig& rules) {
  std::unordered_set<std::string> seen_ids;
  std::unordered_map<std::string, std::int64_t> freq;
  for (const auto& [id, toks] : docs) {
    check_field(id, "document id");
    if (!seen_ids.insert(id).second) throw InvalidInput("duplicate document id '" + id + "'");
    for (const auto& t : toks) {
      if (t.empty()) throw InvalidInput("empty token in document '" + id + "'");
      check_field(t, "token");
      ++freq[t];
    }
  }
  Corpus c;
  c.docs.reserve(docs.size());
  for (const auto& [id, toks] : docs) {
    Document doc{id, {}};
    doc.tokens.reserve(toks.size());
    for (const auto& t : toks)
      if (freq[t] >= rules.min_count) doc.tokens.push_back(c.vocab.add(t));
    c.docs.push_back(std::move(doc));
  }
  fill_counts(c);
  return c;
}

Corpus build_corpus(const std::vector<std::pair<std::string, std::string>>& raw_docs,
                    const FilterConfig& rules) {
  std::vector<std::pair<std::string, std::vector<std::string>>> tok(raw_docs.size());
#pragma omp parallel for schedule(dynamic, 64)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(raw_docs.size()); ++i) {
    const auto u = static_cast<std::size_t>(i);
    tok[u].first = raw_docs[u].first;
    tok[u].second = tokenize(raw_docs[u].second);
  }
  return build_corpus_from_tokens(tok, rules);
}

Corpus build_corpus_from_counts(const std::vector<std::string>& doc_ids,
                                const std::vector<std::string>& words,
                                const std::vector<CountEntry>& counts) {
  Corpus c;
  std::unordered_set<std::string> seen;
  for (const auto& w : words) {
    check_field(w, "word");
    if (c.vocab.add(w) != c.vocab.size() - 1) throw InvalidInput("duplicate word '" + w + "'");
  }
  for (const auto& id : doc_ids) {
    check_field(id, "document id");
    if (!seen.insert(id).second) throw InvalidInput("duplicate document id '" + id + "'");
    c.docs.push_back({id, {}});
  }
  std::map<std::pair<int, int>, std::int64_t> acc;
  for (const auto& e : counts) {
    if (e.doc < 0 || e.doc >= c.num_docs() || e.word < 0 || e.word >= c.num_words())
      throw InvalidInput("count entry index out of range");
    if (e.count < 0) throw InvalidInput("negative count");
    if (e.count > 0) acc[{e.doc, e.word}] += e.count;
  }
  for (const auto& [key, n] : acc) {
    c.counts.push_back({key.first, key.second, n});
    auto& toks = c.docs[static_cast<std::size_t>(key.first)].tokens;
    toks.insert(toks.end(), static_cast<std::size_t>(n), key.second);
  }
  return c;
}

std::vector<RankFrequency> rank_frequency(const Corpus& corpus) {
  const std::int64_t m = corpus.num_tokens();
  if (m == 0) throw InvalidInput("rank_frequency: corpus has no tokens");
  const auto n = corpus.word_counts();
  std::vector<int> ids;
  for (int w = 0; w < corpus.num_words(); ++w)
    if (n[static_cast<std::size_t>(w)] > 0) ids.push_back(w);
  std::stable_sort(ids.begin(), ids.end(), [&](int a, int b) {
    return n[static_cast<std::size_t>(a)] > n[static_cast<std::size_t>(b)];
  });
  std::vector<RankFrequency> out;
  out.reserve(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i)
    out.push_back({static_cast<int>(i + 1), ids[i],
                   static_cast<double>(n[static_cast<std::size_t>(ids[i])]) /
                       static_cast<double>(m)});
  return out;
}

std::vector<HeapsPoint> heaps_curve(const Corpus& corpus, const std::vector<int>& order) {
  std::vector<int> ord = order;
  if (ord.empty()) {
    ord.resize(corpus.docs.size());
    std::iota(ord.begin(), ord.end(), 0);
  }
  if (ord.size() != corpus.docs.size()) throw InvalidInput("heaps_curve: order has wrong size");
  std::vector<std::size_t> begin(corpus.docs.size() + 1, 0);
  for (const auto& e : corpus.counts) ++begin[static_cast<std::size_t>(e.doc) + 1];
  for (std::size_t d = 0; d < corpus.docs.size(); ++d) begin[d + 1] += begin[d];
  std::vector<char> seen(static_cast<std::size_t>(corpus.num_words()), 0);
  std::vector<char> used(corpus.docs.size(), 0);
  std::vector<HeapsPoint> out;
  out.reserve(ord.size());
  HeapsPoint cur{0, 0, 0};
  for (int d : ord) {
    if (d < 0 || d >= corpus.num_docs() || used[static_cast<std::size_t>(d)])
      throw InvalidInput("heaps_curve: order is not a permutation");
    used[static_cast<std::size_t>(d)] = 1;
    ++cur.docs;
    for (std::size_t i = begin[static_cast<std::size_t>(d)]; i < begin[static_cast<std::size_t>(d) + 1]; ++i) {
      const int w = corpus.counts[i].word;
      ++cur.edges;
      if (!seen[static_cast<std::size_t>(w)]) {
        seen[static_cast<std::size_t>(w)] = 1;
        ++cur.words;
      }
    }
    out.push_back(cur);
  }
  return out;
}

std::vector<HeapsPoint> heaps_curve_shuffled(const Corpus& corpus, std::uint64_t seed) {
  std::vector<int> ord(corpus.docs.size());
  std::iota(ord.begin(), ord.end(), 0);
  Rng rng = make_rng(seed, "heaps-order");
  shuffle(ord, rng);
  return heaps_curve(corpus, ord);
}

double fit_loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw InvalidInput("fit_loglog_slope: need >= 2 points");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0 && y[i] > 0)) continue;
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    ++n;
  }
  const double dn = static_cast<double>(n);
  const double den = dn * sxx - sx * sx;
  if (n < 2 || den == 0) throw InvalidInput("fit_loglog_slope: degenerate points");
  return (dn * sxy - sx * sy) / den;
}

Corpus read_jsonl(const std::filesystem::path& path, const FilterConfig& rules) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open " + path.string());
  std::vector<std::pair<std::string, std::string>> raw;
  std::vector<std::pair<std::string, std::vector<std::string>>> pre;
  std::vector<int> kind;  // 0 raw, 1 pretokenized; index into the two lists
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw InvalidInput(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
    if (!j.is_object() || !j.contains("id") || !j["id"].is_string())
      throw InvalidInput(path.string() + ":" + std::to_string(lineno) + ": missing string 'id'");
    if (j.contains("text") && j["text"].is_string()) {
      raw.emplace_back(j["id"].get<std::string>(), j["text"].get<std::string>());
      kind.push_back(0);
    } else if (j.contains("tokens") && j["tokens"].is_array()) {
      std::vector<std::string> toks;
      for (const auto& t : j["tokens"]) {
        if (!t.is_string())
          throw InvalidInput(path.string() + ":" + std::to_string(lineno) + ": non-string token");
        toks.push_back(t.get<std::string>());
      }
      pre.emplace_back(j["id"].get<std::string>(), std::move(toks));
      kind.push_back(1);
    } else {
      throw InvalidInput(path.string() + ":" + std::to_string(lineno) +
                         ": need 'text' string or 'tokens' array");
    }
  }
  std::vector<std::vector<std::string>> raw_tokens(raw.size());
#pragma omp parallel for schedule(dynamic, 64)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(raw.size()); ++i)
    raw_tokens[static_cast<std::size_t>(i)] = tokenize(raw[static_cast<std::size_t>(i)].second);
  std::vector<std::pair<std::string, std::vector<std::string>>> all;
  all.reserve(kind.size());
  std::size_t ir = 0, ip = 0;
  for (int k : kind) {
    if (k == 0) {
      all.emplace_back(std::move(raw[ir].first), std::move(raw_tokens[ir]));
      ++ir;
    } else {
      all.push_back(std::move(pre[ip++]));
    }
  }
  return build_corpus_from_tokens(all, rules);
}

void write_corpus_dir(const Corpus& corpus, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const auto n = corpus.word_counts();
  const auto k = corpus.doc_lengths();
  {
    std::ofstream out(dir / "vocab.tsv");
    for (int w = 0; w < corpus.num_words(); ++w)
      out << corpus.vocab.word(w) << '\t' << w << '\t' << n[static_cast<std::size_t>(w)] << '\n';
  }
  {
    std::ofstream out(dir / "docs.tsv");
    for (int d = 0; d < corpus.num_docs(); ++d)
      out << corpus.docs[static_cast<std::size_t>(d)].id << '\t' << d << '\t'
          << k[static_cast<std::size_t>(d)] << '\n';
  }
  std::ofstream out(dir / "edges.tsv");
  for (const auto& e : corpus.counts)
    out << corpus.docs[static_cast<std::size_t>(e.doc)].id << '\t' << corpus.vocab.word(e.word)
        << '\t' << e.count << '\n';
  if (!out) throw InvalidInput("failed writing " + (dir / "edges.tsv").string());
}

namespace {

std::vector<std::vector<std::string>> read_tsv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open " + path.string());
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::size_t pos = 0;
    for (;;) {
      const auto tab = line.find('\t', pos);
      f.push_back(line.substr(pos, tab - pos));
      if (tab == std::string::npos) break;
      pos = tab + 1;
    }
    rows.push_back(std::move(f));
  }
  return rows;
}

std::int64_t parse_int(const std::string& s, const std::filesystem::path& file) {
  std::size_t used = 0;
  std::int64_t v = 0;
  try {
    v = std::stoll(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != s.size() || s.empty()) throw InvalidInput(file.string() + ": bad integer '" + s + "'");
  return v;
}

}  // namespace

Corpus read_corpus_dir(const std::filesystem::path& dir) {
  std::vector<std::string> doc_ids, words;
  std::unordered_map<std::string, int> doc_index, word_index;
  const auto edges_path = dir / "edges.tsv";
  const auto edge_rows = read_tsv(edges_path);
  if (std::filesystem::exists(dir / "docs.tsv")) {
    for (auto& r : read_tsv(dir / "docs.tsv")) {
      doc_index.emplace(r.at(0), static_cast<int>(doc_ids.size()));
      doc_ids.push_back(r[0]);
    }
  }
  if (std::filesystem::exists(dir / "vocab.tsv")) {
    for (auto& r : read_tsv(dir / "vocab.tsv")) {
      word_index.emplace(r.at(0), static_cast<int>(words.size()));
      words.push_back(r[0]);
    }
  }
  std::vector<CountEntry> counts;
  counts.reserve(edge_rows.size());
  for (const auto& r : edge_rows) {
    if (r.size() != 3) throw InvalidInput(edges_path.string() + ": expected 3 columns");
    auto [di, dnew] = doc_index.try_emplace(r[0], static_cast<int>(doc_ids.size()));
    if (dnew) doc_ids.push_back(r[0]);
    auto [wi, wnew] = word_index.try_emplace(r[1], static_cast<int>(words.size()));
    if (wnew) words.push_back(r[1]);
    counts.push_back({di->second, wi->second, parse_int(r[2], edges_path)});
  }
  return build_corpus_from_counts(doc_ids, words, counts);
}

}  // namespace topicblocks
