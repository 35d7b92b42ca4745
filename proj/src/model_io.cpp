#include "topicblocks/model_io.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "topicblocks/util/error.hpp"
#include "topicblocks/util/rng.hpp"

namespace topicblocks {

namespace fs = std::filesystem;

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw InvalidInput("failed writing " + path.string());
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput("cannot open " + path.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Json read_json(const fs::path& path) {
  try {
    return Json::parse(read_text(path));
  } catch (const Json::parse_error& e) {
    throw InvalidInput(path.string() + ": " + e.what());
  }
}

Json score_to_json(const ModelScore& s) {
  Json j;
  j["model_id"] = s.model_id;
  j["parametrization"] = s.parametrization;
  j["sigma_nats"] = s.sigma;
  Json b = Json::object();
  for (const auto& [k, v] : s.breakdown) b[k] = v;
  j["breakdown"] = b;
  return j;
}

ModelScore score_from_json(const Json& j) {
  ModelScore s;
  s.model_id = j.value("model_id", "");
  s.parametrization = j.value("parametrization", "");
  for (const auto& [k, v] : j.at("breakdown").items()) s.breakdown.emplace_back(k, v.get<double>());
  s.sigma = j.at("sigma_nats").get<double>();
  return s;
}

Json state_to_json(const LabeledState& s) {
  Json j;
  j["B"] = s.B;
  Json sides = Json::array();
  for (const Side x : s.side_of_group) sides.push_back(side_name(x));
  j["sides"] = sides;
  Json b = Json::array();
  for (const auto& x : s.bundles) b.push_back({x.d, x.w, x.rd, x.rw, x.count});
  j["bundles"] = b;
  return j;
}

LabeledState state_from_json(const Json& j) {
  LabeledState s;
  s.B = j.at("B").get<int>();
  for (const auto& x : j.at("sides")) {
    const auto v = x.get<std::string>();
    if (v != "doc" && v != "word") throw IntegrityError("state: unknown side '" + v + "'");
    s.side_of_group.push_back(v == "doc" ? Side::Doc : Side::Word);
  }
  if (static_cast<int>(s.side_of_group.size()) != s.B) throw IntegrityError("state: sides do not match B");
  for (const auto& x : j.at("bundles")) {
    if (!x.is_array() || x.size() != 5) throw IntegrityError("state: bundle must be [d, w, rd, rw, count]");
    s.bundles.push_back({x[0].get<int>(), x[1].get<int>(), x[2].get<int>(), x[3].get<int>(), x[4].get<std::int64_t>()});
  }
  return s;
}

Json hierarchy_to_json(const Hierarchy& h) {
  Json j;
  j["depth"] = h.depth();
  j["parents"] = h.parents;
  return j;
}

Hierarchy hierarchy_from_json(const Json& j) {
  Hierarchy h;
  h.parents = j.at("parents").get<std::vector<std::vector<int>>>();
  return h;
}

Json config_to_json(const InferenceConfig& c) {
  Json j;
  j["mode"] = mode_name(c.mode);
  j["doc_clustering"] = doc_clustering_name(c.doc_clustering);
  j["init"] = c.init == InitKind::Random ? "random" : "agglomerative";
  j["overlap"] = c.Q;
  j["seed"] = c.seed;
  j["sweeps"] = c.n_sweeps;
  j["restarts"] = c.n_restarts;
  j["temperatures"] = c.temperatures;
  j["sweeps_per_temperature"] = c.sweeps_per_temperature;
  j["window"] = c.window;
  j["tolerance"] = c.tolerance;
  j["init_doc_groups"] = c.init_doc_groups;
  j["init_word_groups"] = c.init_word_groups;
  j["fixed_word_groups"] = c.fixed_word_groups;
  j["hierarchy_moves"] = c.hierarchy_moves;
  j["overlap_moves"] = c.overlap_moves;
  j["label_move_fraction"] = c.label_move_fraction;
  return j;
}

InferenceConfig config_from_json(const Json& j, InferenceConfig c) {
  try {
    for (const auto& [k, v] : j.items()) {
      if (k == "mode") c.mode = parse_mode(v.get<std::string>());
      else if (k == "doc_clustering") c.doc_clustering = parse_doc_clustering(v.get<std::string>());
      else if (k == "init") {
        const auto s = v.get<std::string>();
        if (s != "random" && s != "agglomerative") throw InvalidInput("unknown init '" + s + "'");
        c.init = s == "random" ? InitKind::Random : InitKind::Agglomerative;
      } else if (k == "overlap") c.Q = v.get<int>();
      else if (k == "seed") c.seed = v.get<std::uint64_t>();
      else if (k == "sweeps") c.n_sweeps = v.get<int>();
      else if (k == "restarts") c.n_restarts = v.get<int>();
      else if (k == "temperatures") c.temperatures = v.get<std::vector<double>>();
      else if (k == "sweeps_per_temperature") c.sweeps_per_temperature = v.get<int>();
      else if (k == "window") c.window = v.get<int>();
      else if (k == "tolerance") c.tolerance = v.get<double>();
      else if (k == "init_doc_groups") c.init_doc_groups = v.get<int>();
      else if (k == "init_word_groups") c.init_word_groups = v.get<int>();
      else if (k == "fixed_word_groups") c.fixed_word_groups = v.get<int>();
      else if (k == "hierarchy_moves") c.hierarchy_moves = v.get<bool>();
      else if (k == "overlap_moves") c.overlap_moves = v.get<bool>();
      else if (k == "label_move_fraction") c.label_move_fraction = v.get<double>();
      else throw InvalidInput("unknown inference option '" + k + "'");
    }
  } catch (const Json::exception& e) {
    throw InvalidInput(std::string("inference options: ") + e.what());
  }
  c.validate();
  return c;
}

std::string sigma_trace_tsv(const std::vector<double>& trace) {
  std::string out = "sweep\tsigma\n";
  char buf[64];
  for (std::size_t k = 0; k < trace.size(); ++k) {
    std::snprintf(buf, sizeof buf, "%zu\t%.17g\n", k + 1, trace[k]);
    out += buf;
  }
  return out;
}

void write_model_dir(const fs::path& dir, const FitResult& r, const InferenceConfig& cfg) {
  fs::create_directories(dir);
  write_text(dir / "state.json", state_to_json(r.state).dump(1) + "\n");
  write_text(dir / "hierarchy.json", hierarchy_to_json(r.hierarchy).dump(1) + "\n");
  write_text(dir / "sigma_trace.tsv", sigma_trace_tsv(r.trace));
  Json s = score_to_json(r.score);
  s["overlap"] = cfg.Q;
  s["doc_groups"] = r.doc_groups;
  s["word_groups"] = r.word_groups;
  s["depth"] = r.depth;
  s["converged"] = r.converged;
  s["best_restart"] = r.best_restart;
  s["restart_sigma"] = r.restart_sigma;
  auto stats = [](const MoveStats& m) { return Json{{"proposed", m.proposed}, {"accepted", m.accepted}}; };
  s["moves"] = {{"node", stats(r.stats.node)},   {"label", stats(r.stats.label)},
                {"merge", stats(r.stats.merge)}, {"split", stats(r.stats.split)},
                {"hierarchy", stats(r.stats.hierarchy)}, {"unit", stats(r.stats.unit)}};
  write_text(dir / "score.json", s.dump(1) + "\n");
}

StoredModel read_model_dir(const fs::path& dir) {
  for (const char* f : {"state.json", "hierarchy.json", "score.json"})
    if (!fs::exists(dir / f)) throw IntegrityError("model directory " + dir.string() + " lacks " + f);
  StoredModel m;
  try {
    m.state = state_from_json(read_json(dir / "state.json"));
    m.hierarchy = hierarchy_from_json(read_json(dir / "hierarchy.json"));
    const Json s = read_json(dir / "score.json");
    m.score = score_from_json(s);
    m.Q = s.value("overlap", 0);
  } catch (const Json::exception& e) {
    throw IntegrityError("model directory " + dir.string() + ": " + e.what());
  } catch (const InvalidInput& e) {
    throw IntegrityError(e.what());
  }
  return m;
}

void write_labels(const fs::path& path, const Corpus& corpus, const std::vector<TopicCount>& labels) {
  std::string out;
  for (const auto& l : labels) {
    out += corpus.docs[static_cast<std::size_t>(l.d)].id;
    out += '\t';
    out += corpus.vocab.word(l.w);
    out += '\t' + std::to_string(l.r) + '\t' + std::to_string(l.count) + '\n';
  }
  write_text(path, out);
}

std::vector<TopicCount> read_labels(const fs::path& path, const Corpus& corpus) {
  std::map<std::string, int> docs;
  for (int d = 0; d < corpus.num_docs(); ++d) docs[corpus.docs[static_cast<std::size_t>(d)].id] = d;
  std::istringstream in(read_text(path));
  std::string line;
  std::vector<TopicCount> out;
  int row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    std::istringstream f(line);
    std::string doc, word;
    int r = -1;
    long long c = 0;
    if (!std::getline(f, doc, '\t') || !std::getline(f, word, '\t') || !(f >> r >> c))
      throw InvalidInput(path.string() + ":" + std::to_string(row) + ": expected doc, word, topic, count");
    const auto d = docs.find(doc);
    const auto w = corpus.vocab.lookup(word);
    if (d == docs.end() || !w)
      throw InvalidInput(path.string() + ":" + std::to_string(row) + ": unknown document or word");
    out.push_back({d->second, *w, r, c});
  }
  return aggregate_labels(std::move(out));
}

void write_sample_dir(const fs::path& dir, const LdaSample& s) {
  write_corpus_dir(s.corpus, dir);
  write_labels(dir / "labels.tsv", s.corpus, s.labels);
  Json j;
  j["K"] = s.K;
  j["seed"] = s.seed;
  j["alpha_scalar"] = s.hyper.alpha_scalar;
  j["beta_scalar"] = s.hyper.beta_scalar;
  j["p_r"] = s.hyper.p_r;
  j["p_w"] = s.hyper.p_w;
  auto mat = [](const Matrix& m) {
    Json a = Json::array();
    for (std::size_t r = 0; r < m.rows; ++r) a.push_back(std::vector<double>(m.row(r).begin(), m.row(r).end()));
    return a;
  };
  j["alpha"] = mat(s.hyper.alpha);
  j["beta"] = mat(s.hyper.beta);
  write_text(dir / "params.json", j.dump() + "\n");
}

LdaSample read_sample_dir(const fs::path& dir) {
  LdaSample s;
  s.corpus = read_corpus_dir(dir);
  const Json j = read_json(dir / "params.json");
  try {
    s.K = j.at("K").get<int>();
    s.seed = j.at("seed").get<std::uint64_t>();
    s.hyper.alpha_scalar = j.at("alpha_scalar").get<double>();
    s.hyper.beta_scalar = j.at("beta_scalar").get<double>();
    s.hyper.p_r = j.at("p_r").get<std::vector<double>>();
    s.hyper.p_w = j.at("p_w").get<std::vector<double>>();
    auto mat = [](const Json& a) {
      const auto rows = a.get<std::vector<std::vector<double>>>();
      Matrix m(rows.size(), rows.empty() ? 0 : rows[0].size());
      for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r].size() != m.cols) throw InvalidInput("ragged hyperparameter matrix");
        std::copy(rows[r].begin(), rows[r].end(), m.row(r).begin());
      }
      return m;
    };
    s.hyper.alpha = mat(j.at("alpha"));
    s.hyper.beta = mat(j.at("beta"));
  } catch (const Json::exception& e) {
    throw InvalidInput((dir / "params.json").string() + ": " + e.what());
  }
  if (static_cast<int>(s.hyper.alpha.rows) != s.corpus.num_docs() || static_cast<int>(s.hyper.alpha.cols) != s.K ||
      static_cast<int>(s.hyper.beta.rows) != s.K || static_cast<int>(s.hyper.beta.cols) != s.corpus.num_words())
    throw InvalidInput((dir / "params.json").string() + ": hyperparameter shapes do not match the corpus");
  s.labels = read_labels(dir / "labels.tsv", s.corpus);
  check_labels(s.corpus, s.labels, s.K);
  return s;
}

// ---------------------------------------------------------------------------
// exports

namespace {

struct Tree {
  // blocks[l][b]: children at level l-1 (level 1 children are node ids)
  int depth = 1;
  std::vector<std::map<int, std::vector<int>>> children;  // index l-1 for level l
  std::vector<std::map<int, Side>> side;
  std::map<int, std::map<int, std::int64_t>> members;  // group -> node -> half-edges
};

Tree build_tree(const Corpus& corpus, const LabeledState& s, const Hierarchy& h) {
  Tree t;
  t.depth = h.depth();
  t.children.resize(static_cast<std::size_t>(t.depth));
  t.side.resize(static_cast<std::size_t>(t.depth));
  const int D = corpus.num_docs();
  for (const auto& b : s.bundles) {
    t.members[b.rd][b.d] += b.count;
    t.members[b.rw][D + b.w] += b.count;
  }
  for (const auto& [r, nodes] : t.members) {
    auto& ch = t.children[0][r];
    for (const auto& kv : nodes) ch.push_back(kv.first);
    t.side[0][r] = s.side_of_group[static_cast<std::size_t>(r)];
  }
  for (int l = 2; l <= t.depth; ++l) {
    const auto& par = h.parents[static_cast<std::size_t>(l - 2)];
    for (const auto& [b, ch] : t.children[static_cast<std::size_t>(l - 2)]) {
      const int p = par.at(static_cast<std::size_t>(b));
      t.children[static_cast<std::size_t>(l - 1)][p].push_back(b);
      t.side[static_cast<std::size_t>(l - 1)][p] = t.side[static_cast<std::size_t>(l - 2)][b];
    }
  }
  return t;
}

std::string node_name(const Corpus& corpus, int i) {
  const int D = corpus.num_docs();
  return i < D ? corpus.docs[static_cast<std::size_t>(i)].id : corpus.vocab.word(i - D);
}

Json tree_node(const Corpus& corpus, const Tree& t, int level, int block) {
  Json j;
  j["level"] = level;
  j["block"] = block;
  j["side"] = side_name(t.side[static_cast<std::size_t>(level - 1)].at(block));
  Json ch = Json::array();
  if (level == 1) {
    const auto& mem = t.members.at(block);
    for (const auto& [i, c] : mem) ch.push_back({{"name", node_name(corpus, i)}, {"half_edges", c}});
    j["members"] = ch;
  } else {
    for (const int c : t.children[static_cast<std::size_t>(level - 1)].at(block)) ch.push_back(tree_node(corpus, t, level - 1, c));
    j["children"] = ch;
  }
  return j;
}

std::string newick_label(const std::string& s) {
  std::string out = "'";
  for (const char c : s) {
    if (c == '\'') out += '\'';
    out += c;
  }
  return out + "'";
}

void newick_node(const Corpus& corpus, const Tree& t, int level, int block, std::string& out) {
  out += '(';
  bool first = true;
  if (level == 1) {
    for (const auto& [i, c] : t.members.at(block)) {
      if (!first) out += ',';
      first = false;
      out += newick_label(node_name(corpus, i));
    }
  } else {
    for (const int c : t.children[static_cast<std::size_t>(level - 1)].at(block)) {
      if (!first) out += ',';
      first = false;
      newick_node(corpus, t, level - 1, c, out);
    }
  }
  out += ")L" + std::to_string(level) + "_" + side_name(t.side[static_cast<std::size_t>(level - 1)].at(block)) + "_" +
         std::to_string(block);
}

}  // namespace

Json hierarchy_tree_json(const Corpus& corpus, const LabeledState& s, const Hierarchy& h) {
  const Tree t = build_tree(corpus, s, h);
  Json root;
  root["level"] = t.depth + 1;
  root["name"] = "root";
  root["depth"] = t.depth;
  Json ch = Json::array();
  for (const auto& kv : t.children[static_cast<std::size_t>(t.depth - 1)]) ch.push_back(tree_node(corpus, t, t.depth, kv.first));
  root["children"] = ch;
  return root;
}

std::string hierarchy_newick(const Corpus& corpus, const LabeledState& s, const Hierarchy& h) {
  const Tree t = build_tree(corpus, s, h);
  std::string out = "(";
  bool first = true;
  for (const auto& kv : t.children[static_cast<std::size_t>(t.depth - 1)]) {
    if (!first) out += ',';
    first = false;
    newick_node(corpus, t, t.depth, kv.first, out);
  }
  return out + ")root;\n";
}

std::string bundles_tsv(const Corpus& corpus, const LabeledState& s) {
  std::string out = "doc\tword\tdoc_group\tword_group\tcount\n";
  for (const auto& b : s.bundles) {
    out += corpus.docs[static_cast<std::size_t>(b.d)].id + '\t' + corpus.vocab.word(b.w) + '\t' + std::to_string(b.rd) +
           '\t' + std::to_string(b.rw) + '\t' + std::to_string(b.count) + '\n';
  }
  return out;
}

// ---------------------------------------------------------------------------
// manifests

std::string hex64(std::uint64_t x) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(x));
  return buf;
}

std::string digest_path(const fs::path& p) {
  if (fs::is_directory(p)) {
    std::vector<fs::path> files;
    for (const auto& e : fs::recursive_directory_iterator(p))
      if (e.is_regular_file() && e.path().filename() != "manifest.json") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    std::uint64_t h = fnv1a("");
    for (const auto& f : files) {
      h = fnv1a(fs::relative(f, p).generic_string(), h);
      h = fnv1a(read_text(f), h);
    }
    return hex64(h);
  }
  return hex64(fnv1a(read_text(p)));
}

}  // namespace topicblocks
