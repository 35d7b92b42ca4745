#include <doctest.h>

#include <filesystem>

#include "topicblocks/model_io.hpp"
#include "topicblocks/util/error.hpp"

using namespace topicblocks;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("topicblocks_io_" + name);
  fs::remove_all(p);
  return p;
}

Corpus two_topics() {
  std::vector<std::pair<std::string, std::string>> raw;
  for (int d = 0; d < 4; ++d) raw.emplace_back("p" + std::to_string(d), "a a b c c c");
  for (int d = 0; d < 4; ++d) raw.emplace_back("q" + std::to_string(d), "x y y z z");
  raw.emplace_back("it's, mixed", "a x w");
  return build_corpus(raw);
}

}  // namespace

TEST_SUITE("model_io") {
  TEST_CASE("fitted model round-trips with identical Σ") {
    const auto c = two_topics();
    const auto g = from_counts(c);
    InferenceConfig cfg;
    cfg.n_sweeps = 20;
    cfg.n_restarts = 2;
    cfg.Q = 2;
    const auto r = fit(g, cfg);
    const auto dir = scratch("model");
    write_model_dir(dir, r, cfg);
    const auto m = read_model_dir(dir);
    CHECK(m.Q == 2);
    CHECK(m.state.bundles == r.state.bundles);
    CHECK(m.hierarchy.parents == r.hierarchy.parents);
    CHECK(m.score.sigma == r.score.sigma);
    const auto again = joint_logp(g, m.state, m.hierarchy, JointOptions{m.Q});
    CHECK(again.sigma == r.score.sigma);
    CHECK(again.breakdown == m.score.breakdown);

    fs::remove(dir / "hierarchy.json");
    CHECK_THROWS_AS(read_model_dir(dir), IntegrityError);
    write_text(dir / "hierarchy.json", "{\"parents\": 3}");
    CHECK_THROWS_AS(read_model_dir(dir), IntegrityError);
    CHECK_THROWS_AS(read_model_dir(scratch("absent")), IntegrityError);
  }

  TEST_CASE("config JSON mirrors fields and rejects unknown keys") {
    InferenceConfig c;
    c.mode = Mode::Greedy;
    c.doc_clustering = DocClustering::PerDocGroup;
    c.Q = 3;
    c.seed = 77;
    c.temperatures = {2.0, 1.0};
    c.fixed_word_groups = 4;
    const auto back = config_from_json(config_to_json(c));
    CHECK(config_to_json(back) == config_to_json(c));
    CHECK(back.seed == 77);
    CHECK_THROWS_AS(config_from_json(Json{{"swepes", 3}}), InvalidInput);
    CHECK_THROWS_AS(config_from_json(Json{{"sweeps", "many"}}), InvalidInput);
    CHECK_THROWS_AS(config_from_json(Json{{"overlap", -1}}), InvalidInput);
  }

  TEST_CASE("sample directory round-trip") {
    const auto s = sample_corpus(3, 12, 20, std::vector<std::int64_t>(12, 30), noninformative_hyper(12, 3, 20), 4);
    const auto dir = scratch("sample");
    write_sample_dir(dir, s);
    const auto b = read_sample_dir(dir);
    CHECK(b.K == 3);
    CHECK(b.seed == 4);
    REQUIRE(b.labels.size() == s.labels.size());
    for (std::size_t k = 0; k < b.labels.size(); ++k) {
      CHECK(b.labels[k].d == s.labels[k].d);
      CHECK(b.labels[k].w == s.labels[k].w);
      CHECK(b.labels[k].r == s.labels[k].r);
      CHECK(b.labels[k].count == s.labels[k].count);
    }
    CHECK(b.hyper.alpha.data == s.hyper.alpha.data);
    CHECK(b.hyper.beta.data == s.hyper.beta.data);
    CHECK(lda_description_length(b.labels, b.hyper).sigma == lda_description_length(s.labels, s.hyper).sigma);
  }

  TEST_CASE("tree exports") {
    const auto c = two_topics();
    const auto g = from_counts(c);
    LabeledState s;
    s.B = 4;
    s.side_of_group = {Side::Doc, Side::Doc, Side::Word, Side::Word};
    const int D = c.num_docs();
    const auto xw = *c.vocab.lookup("x");
    for (const auto& e : g.edges) {
      const bool q = e.doc >= 4 && e.doc < D - 1;
      const bool wq = c.vocab.word(e.word) >= "x" || e.word == xw;
      s.bundles.push_back({e.doc, e.word, q ? 1 : 0, wq ? 3 : 2, e.count});
    }
    validate_state(g, s);

    const auto flat = hierarchy_tree_json(c, s, {});
    CHECK(flat["depth"] == 1);
    CHECK(flat["children"].size() == 4);
    std::int64_t half = 0;
    for (const auto& grp : flat["children"])
      for (const auto& m : grp["members"]) half += m["half_edges"].get<std::int64_t>();
    CHECK(half == 2 * g.E);

    const Hierarchy h{{{0, 0, 1, 1}}};
    const auto deep = hierarchy_tree_json(c, s, h);
    CHECK(deep["depth"] == 2);
    REQUIRE(deep["children"].size() == 2);
    CHECK(deep["children"][0]["children"].size() == 2);

    const auto nw = hierarchy_newick(c, s, h);
    CHECK(nw.back() == '\n');
    CHECK(nw.find(")root;") != std::string::npos);
    CHECK(nw.find("'it''s, mixed'") != std::string::npos);
    CHECK(std::count(nw.begin(), nw.end(), '(') == std::count(nw.begin(), nw.end(), ')'));

    const auto tsv = bundles_tsv(c, s);
    CHECK(static_cast<std::size_t>(std::count(tsv.begin(), tsv.end(), '\n')) == s.bundles.size() + 1);
    CHECK(sigma_trace_tsv({3.0, 2.5}) == "sweep\tsigma\n1\t3\n2\t2.5\n");
  }

  TEST_CASE("digests") {
    const auto dir = scratch("digest");
    write_text(dir / "a.txt", "alpha");
    write_text(dir / "sub" / "b.txt", "beta");
    const auto d1 = digest_path(dir);
    CHECK(d1.size() == 16);
    write_text(dir / "manifest.json", "{}");
    CHECK(digest_path(dir) == d1);
    write_text(dir / "a.txt", "alpha!");
    CHECK(digest_path(dir) != d1);
    CHECK(digest_path(dir / "a.txt") == hex64(fnv1a("alpha!")));
    CHECK(hex64(255) == "00000000000000ff");
  }
}
