#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <numeric>

#include "topicblocks/corpus.hpp"
#include "topicblocks/lda.hpp"
#include "topicblocks/util/error.hpp"

using namespace topicblocks;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
  auto p = fs::temp_directory_path() / ("topicblocks_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

}  // namespace

TEST_SUITE("corpus") {
  TEST_CASE("tokenize") {
    using V = std::vector<std::string>;
    CHECK(tokenize("The cat, the cat.") == V{"the", "cat", "the", "cat"});
    CHECK(tokenize("").empty());
    CHECK(tokenize("a1b c-d 42") == V{"a", "b", "c", "d"});
    CHECK(tokenize("Caf\xc3\xa9 / x") == V{"caf", "x"});
  }

  TEST_CASE("tokenize is idempotent on its output") {
    const auto t = tokenize("Hello,   World! It's 2024: a-b/c");
    std::string joined;
    for (const auto& w : t) joined += w + " ";
    CHECK(tokenize(joined) == t);
  }

  TEST_CASE("build corpus counts") {
    auto c = build_corpus({{"doc1", "a b a"}});
    CHECK(c.num_words() == 2);
    CHECK(c.num_docs() == 1);
    CHECK(c.num_tokens() == 3);
    REQUIRE(c.counts.size() == 2);
    CHECK(c.counts[0] == CountEntry{0, 0, 2});
    CHECK(c.counts[1] == CountEntry{0, 1, 1});
    CHECK(c.doc_lengths()[0] == 3);
    c.validate();

    auto c2 = build_corpus({{"x", "a b"}, {"y", "c a"}});
    CHECK(c2.num_words() == 3);
    CHECK(c2.vocab.lookup("a") == 0);
    CHECK(c2.vocab.lookup("c") == 2);
  }

  TEST_CASE("duplicate ids are rejected by name") {
    try {
      build_corpus({{"same", "a"}, {"same", "b"}});
      FAIL("expected rejection");
    } catch (const InvalidInput& e) {
      CHECK(std::string(e.what()).find("same") != std::string::npos);
    }
  }

  TEST_CASE("min count filter") {
    auto c = build_corpus({{"1", "a b c a"}, {"2", "c d"}}, FilterConfig{2});
    CHECK(c.num_words() == 2);
    CHECK(c.vocab.word(0) == "a");
    CHECK(c.vocab.word(1) == "c");
    CHECK(c.doc_lengths() == std::vector<std::int64_t>{3, 1});
  }

  TEST_CASE("token totals agree") {
    auto c = build_corpus({{"1", "x y z x"}, {"2", ""}, {"3", "z z q"}});
    const auto k = c.doc_lengths();
    const auto n = c.word_counts();
    CHECK(std::accumulate(k.begin(), k.end(), std::int64_t{0}) == c.num_tokens());
    CHECK(std::accumulate(n.begin(), n.end(), std::int64_t{0}) == c.num_tokens());
  }

  TEST_CASE("rank frequency") {
    auto c = build_corpus({{"1", "a a b"}});
    auto rf = rank_frequency(c);
    REQUIRE(rf.size() == 2);
    CHECK(rf[0].rank == 1);
    CHECK(rf[0].word == 0);
    CHECK(rf[0].p == doctest::Approx(2.0 / 3));
    CHECK(rf[1].p == doctest::Approx(1.0 / 3));
    CHECK_THROWS_AS(rank_frequency(build_corpus({{"1", ""}})), InvalidInput);
  }

  TEST_CASE("rank frequency of a uniform sample is flat") {
    const int V = 50;
    auto hyper = make_hyper(1.0, 1e4, uniform_base(1), uniform_base(V), 200);
    auto s = sample_corpus(1, 200, V, std::vector<std::int64_t>(200, 100), hyper, 11);
    auto rf = rank_frequency(s.corpus);
    double total = 0;
    for (const auto& r : rf) {
      total += r.p;
      // multinomial sd for 20000 tokens at p = 0.02 is about 0.001
      CHECK(std::abs(r.p - 1.0 / V) < 0.006);
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
  }

  TEST_CASE("heaps curve") {
    auto c = build_corpus({{"1", "a"}, {"2", "a"}});
    auto h = heaps_curve(c);
    REQUIRE(h.size() == 2);
    CHECK(h[1].words == 1);
    CHECK(h[1].docs == 2);
    CHECK(h[1].edges == 2);

    auto single = build_corpus({{"1", "a b b c"}});
    auto hs = heaps_curve(single);
    REQUIRE(hs.size() == 1);
    CHECK(hs[0].edges == 3);

    auto c3 = build_corpus({{"1", "a b"}, {"2", "b c d"}, {"3", "a e"}});
    auto h1 = heaps_curve(c3);
    auto h2 = heaps_curve_shuffled(c3, 4);
    CHECK(h1.back().edges == static_cast<std::int64_t>(c3.counts.size()));
    CHECK(h2.back().edges == static_cast<std::int64_t>(c3.counts.size()));
    for (std::size_t i = 1; i < h2.size(); ++i) {
      CHECK(h2[i].edges >= h2[i - 1].edges);
      CHECK(h2[i].nodes_all() >= h2[i - 1].nodes_all());
    }
  }

  TEST_CASE("log-log slope") {
    std::vector<double> x, y;
    for (int i = 1; i <= 20; ++i) {
      x.push_back(i);
      y.push_back(3.0 * std::pow(i, 1.4));
    }
    CHECK(fit_loglog_slope(x, y) == doctest::Approx(1.4));
  }

  TEST_CASE("jsonl ingestion and corpus directory round trip") {
    auto dir = temp_dir("corpus_io");
    {
      std::ofstream out(dir / "docs.jsonl");
      out << R"({"id": "a", "text": "The cat sat."})" << "\n";
      out << R"({"id": "b", "tokens": ["cat", "dog", "cat"]})" << "\n";
      out << R"({"id": "c", "text": ""})" << "\n";
    }
    auto c = read_jsonl(dir / "docs.jsonl");
    CHECK(c.num_docs() == 3);
    CHECK(c.num_words() == 4);
    CHECK(c.num_tokens() == 6);
    write_corpus_dir(c, dir / "out");
    auto c2 = read_corpus_dir(dir / "out");
    CHECK(c2.num_docs() == 3);
    CHECK(c2.vocab.words() == c.vocab.words());
    CHECK(c2.counts == c.counts);
    c2.validate();

    std::ofstream(dir / "bad.jsonl") << "{\"id\": 3}\n";
    CHECK_THROWS_AS(read_jsonl(dir / "bad.jsonl"), InvalidInput);
  }
}
