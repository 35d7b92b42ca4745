#include <omp.h>

#include <CLI11.hpp>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "topicblocks/corpus.hpp"
#include "topicblocks/evaluation.hpp"
#include "topicblocks/inference.hpp"
#include "topicblocks/lda.hpp"
#include "topicblocks/model_io.hpp"
#include "topicblocks/presets.hpp"
#include "topicblocks/util/error.hpp"

using namespace topicblocks;
namespace fs = std::filesystem;

namespace {

std::string utc_now() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

Json option_value(const CLI::Option* o) {
  if (o->get_items_expected_max() == 0 || o->get_type_size() == 0) return o->count() > 0;
  std::vector<std::string> vals = o->count() ? o->results() : std::vector<std::string>{};
  if (!o->count()) {
    const std::string d = o->get_default_str();
    if (d.empty()) return nullptr;
    if (o->get_items_expected_max() > 1) {
      std::string s = d;
      if (!s.empty() && s.front() == '[') s = s.substr(1, s.size() - 2);
      std::istringstream in(s);
      for (std::string x; std::getline(in, x, ',');) vals.push_back(x);
    } else {
      vals = {d};
    }
  }
  auto one = [](const std::string& s) -> Json {
    // numbers stay numbers
    char* end = nullptr;
    const double x = std::strtod(s.c_str(), &end);
    if (!s.empty() && end == s.c_str() + s.size()) {
      if (s.find_first_of(".eE") == std::string::npos) return std::stoll(s);
      return x;
    }
    return s;
  };
  if (o->get_items_expected_max() > 1) {
    Json a = Json::array();
    for (const auto& v : vals) a.push_back(one(v));
    return a;
  }
  return vals.empty() ? Json(nullptr) : one(vals.back());
}

/// Every long option of a subcommand with its resolved value.
Json resolved_config(const CLI::App* sub) {
  Json j = Json::object();
  for (const CLI::Option* o : sub->get_options()) {
    const auto& names = o->get_lnames();
    if (names.empty() || names[0] == "help" || names[0] == "config") continue;
    j[names[0]] = option_value(o);
  }
  return j;
}

struct Run {
  std::string command;
  std::vector<std::string> argv;
  Json config;
  std::uint64_t seed = 1;
  Json seeds = Json::object();
  Json inputs = Json::object();
  std::string started = utc_now();

  void input(const std::string& name, const fs::path& p) {
    if (!fs::exists(p)) throw InvalidInput("missing input " + p.string());
    inputs[name] = {{"path", fs::absolute(p).lexically_normal().string()}, {"digest", digest_path(p)}};
  }

  void manifest(const fs::path& dir) const {
    Json m;
    m["command"] = command;
    m["argv"] = argv;
    m["config"] = config;
    m["seed"] = seed;
    m["seeds"] = seeds;
    m["inputs"] = inputs;
    Json outs = Json::object();
    std::vector<fs::path> files;
    for (const auto& e : fs::recursive_directory_iterator(dir))
      if (e.is_regular_file() && e.path().filename() != "manifest.json") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    for (const auto& f : files) outs[fs::relative(f, dir).generic_string()] = digest_path(f);
    m["outputs"] = outs;
    m["version"] = TOPICBLOCKS_VERSION;
    m["threads"] = omp_get_max_threads();
    m["started"] = started;
    m["finished"] = utc_now();
    write_text(dir / "manifest.json", m.dump(1) + "\n");
  }
};

/// Corpus a model was fitted on: explicit path, else the one named in the
/// model's manifest, checked against the recorded digest.
fs::path model_corpus(const fs::path& model, const std::string& corpus_flag, Run& run) {
  read_model_dir(model);
  fs::path corpus;
  if (!corpus_flag.empty()) {
    corpus = corpus_flag;
  } else {
    const fs::path mf = model / "manifest.json";
    if (!fs::exists(mf)) throw IntegrityError("model " + model.string() + " has no manifest; pass --corpus");
    const Json m = read_json(mf);
    if (!m.contains("inputs") || !m["inputs"].contains("corpus"))
      throw IntegrityError("model manifest names no corpus; pass --corpus");
    corpus = m["inputs"]["corpus"]["path"].get<std::string>();
    if (!fs::exists(corpus)) throw IntegrityError("corpus " + corpus.string() + " recorded by the model is gone");
    if (digest_path(corpus) != m["inputs"]["corpus"]["digest"].get<std::string>())
      throw IntegrityError("corpus " + corpus.string() + " changed since the model was fitted");
  }
  run.input("model", model);
  run.input("corpus", corpus);
  return corpus;
}

Corpus read_count_file(const fs::path& path, std::int64_t min_count) {
  std::istringstream in(read_text(path));
  std::vector<std::string> docs, words;
  std::map<std::string, int> di, wi;
  std::map<std::pair<int, int>, std::int64_t> acc;
  std::string line;
  int row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    std::istringstream f(line);
    std::string d, w;
    long long c = 0;
    if (!std::getline(f, d, '\t') || !std::getline(f, w, '\t') || !(f >> c) || c < 0)
      throw InvalidInput(path.string() + ":" + std::to_string(row) + ": expected doc<TAB>word<TAB>count");
    auto [dit, dnew] = di.emplace(d, static_cast<int>(docs.size()));
    if (dnew) docs.push_back(d);
    auto [wit, wnew] = wi.emplace(w, static_cast<int>(words.size()));
    if (wnew) words.push_back(w);
    acc[{dit->second, wit->second}] += c;
  }
  std::vector<std::int64_t> total(words.size(), 0);
  for (const auto& [k, c] : acc) total[static_cast<std::size_t>(k.second)] += c;
  std::vector<int> remap(words.size(), -1);
  std::vector<std::string> kept;
  for (std::size_t w = 0; w < words.size(); ++w)
    if (total[w] >= min_count && total[w] > 0) remap[w] = static_cast<int>(kept.size()), kept.push_back(words[w]);
  std::vector<CountEntry> counts;
  for (const auto& [k, c] : acc)
    if (c > 0 && remap[static_cast<std::size_t>(k.second)] >= 0)
      counts.push_back({k.first, remap[static_cast<std::size_t>(k.second)], c});
  return build_corpus_from_counts(docs, kept, counts);
}

std::vector<double> base_measure(const std::string& spec, std::size_t n) {
  if (spec == "uniform") return uniform_base(n);
  if (spec == "zipf") return double_power_law_base(n);
  if (spec == "harmonic") return harmonic_base(n);
  return read_base_measure(spec);
}

/// Appends flags from a JSON config for every key not given on the command line.
std::vector<std::string> expand_config(std::vector<std::string> args) {
  std::string path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
    else if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
  }
  if (path.empty()) return args;
  const Json j = read_json(path);
  if (!j.is_object()) throw InvalidInput(path + ": config must be a JSON object");
  std::set<std::string> given;
  for (const auto& a : args)
    if (a.rfind("--", 0) == 0) given.insert(a.substr(2, a.find('=') == std::string::npos ? std::string::npos : a.find('=') - 2));
  auto scalar = [](const Json& v) { return v.is_string() ? v.get<std::string>() : v.dump(); };
  for (const auto& [k, v] : j.items()) {
    if (given.count(k)) continue;
    if (v.is_boolean()) {
      if (v.get<bool>()) args.push_back("--" + k);
      continue;
    }
    args.push_back("--" + k);
    if (v.is_array())
      for (const auto& x : v) args.push_back(scalar(x));
    else
      args.push_back(scalar(v));
  }
  return args;
}

void apply_threads() {
  const char* t = std::getenv("TOPICBLOCKS_THREADS");
  if (!t || !*t) return;
  char* end = nullptr;
  const long n = std::strtol(t, &end, 10);
  if (*end != '\0' || n <= 0) throw InvalidInput(std::string("TOPICBLOCKS_THREADS must be a positive integer, got '") + t + "'");
  omp_set_num_threads(static_cast<int>(n));
}

struct Options {
  std::uint64_t seed = 1;
  std::string config, out, corpus, model, input, counts, labels, sample, spec, preset, format = "all";
  // ingest
  std::int64_t min_count = 1;
  // synth
  int K = 10, D = 1000, m = 128, V = 0;
  double alpha = 1.0, beta = 1.0;
  std::string p_w = "zipf", p_r = "uniform";
  bool bimodal = false;
  // fit
  std::string mode = "anneal", doc_clustering = "clustered", init = "random";
  int overlap = 0, restarts = 10, sweeps = 200, window = 50, spt = 2;
  int init_doc_groups = 0, init_word_groups = 0, word_groups = 0;
  double tolerance = 0.1, label_fraction = 1.0;
  std::vector<double> temperatures = {1.0, 0.5, 0.25, 0.1};
  bool no_hierarchy = false, no_overlap_moves = false, serial = false;
  // score
  std::string score_model = "hsbm", hyper = "noninformative", variant = "clustered";
  // compare
  std::vector<int> lengths;
  std::string baseline;
  // summarize
  int level = 1, top = 5, doc_samples = 5;
};

InferenceConfig fit_config(const Options& o) {
  InferenceConfig c;
  c.mode = parse_mode(o.mode);
  c.doc_clustering = parse_doc_clustering(o.doc_clustering);
  if (o.init != "random" && o.init != "agglomerative") throw InvalidInput("unknown init '" + o.init + "'");
  c.init = o.init == "random" ? InitKind::Random : InitKind::Agglomerative;
  c.Q = o.overlap;
  c.seed = o.seed;
  c.n_restarts = o.restarts;
  c.n_sweeps = o.sweeps;
  c.window = o.window;
  c.tolerance = o.tolerance;
  c.temperatures = o.temperatures;
  c.sweeps_per_temperature = o.spt;
  c.init_doc_groups = o.init_doc_groups;
  c.init_word_groups = o.init_word_groups;
  c.fixed_word_groups = o.word_groups;
  c.hierarchy_moves = !o.no_hierarchy;
  c.overlap_moves = !o.no_overlap_moves;
  c.label_move_fraction = o.label_fraction;
  c.parallel = !o.serial;
  if (o.doc_clustering == "fig2-mode") {
    if (o.word_groups <= 0) throw InvalidInput("fig2-mode needs --word-groups K");
    c = [&] {
      InferenceConfig f = fig2_mode_config(o.word_groups, o.seed);
      f.mode = c.mode;
      f.Q = c.Q;
      f.n_restarts = c.n_restarts;
      f.n_sweeps = c.n_sweeps;
      f.window = c.window;
      f.tolerance = c.tolerance;
      f.temperatures = c.temperatures;
      f.sweeps_per_temperature = c.sweeps_per_temperature;
      f.init = c.init;
      f.overlap_moves = c.overlap_moves;
      f.label_move_fraction = c.label_move_fraction;
      f.parallel = c.parallel;
      return f;
    }();
  }
  c.validate();
  return c;
}

Json fit_summary(const FitResult& r) {
  Json j = score_to_json(r.score);
  j["doc_groups"] = r.doc_groups;
  j["word_groups"] = r.word_groups;
  j["depth"] = r.depth;
  j["converged"] = r.converged;
  j["best_restart"] = r.best_restart;
  return j;
}

// ---------------------------------------------------------------------------
// commands

void cmd_ingest(const Options& o, Run& run) {
  if (o.input.empty() == o.counts.empty()) throw InvalidInput("ingest needs exactly one of --input or --counts");
  FilterConfig rules;
  rules.min_count = o.min_count;
  Corpus c;
  if (!o.input.empty()) {
    run.input("input", o.input);
    c = read_jsonl(o.input, rules);
  } else {
    run.input("counts", o.counts);
    c = read_count_file(o.counts, o.min_count);
  }
  write_corpus_dir(c, o.out);
  run.manifest(o.out);
  std::cout << Json{{"docs", c.num_docs()}, {"words", c.num_words()}, {"tokens", c.num_tokens()},
                    {"edges", c.counts.size()}}
                   .dump()
            << "\n";
}

void cmd_synth(const Options& o, Run& run) {
  LdaSample s;
  if (o.bimodal) {
    const int V = o.V > 0 ? o.V : 100;
    s = bimodal_sample(o.D, V, o.m, o.seed);
  } else {
    if (o.K <= 0 || o.D <= 0 || o.m <= 0) throw InvalidInput("synth needs positive --K, --D and --m");
    auto pw = base_measure(o.p_w, static_cast<std::size_t>(o.V > 0 ? o.V : 10000));
    if (o.p_w != "zipf" && o.p_w != "uniform" && o.p_w != "harmonic") run.input("p_w", o.p_w);
    if (o.V > 0 && static_cast<int>(pw.size()) != o.V) throw InvalidInput("--V disagrees with the --p-w file");
    auto pr = base_measure(o.p_r, static_cast<std::size_t>(o.K));
    if (o.p_r != "zipf" && o.p_r != "uniform" && o.p_r != "harmonic") run.input("p_r", o.p_r);
    if (static_cast<int>(pr.size()) != o.K) throw InvalidInput("--p-r must have K entries");
    const int V = static_cast<int>(pw.size());
    const auto hyper = make_hyper(o.alpha, o.beta, pr, pw, static_cast<std::size_t>(o.D));
    s = sample_corpus(o.K, o.D, V, std::vector<std::int64_t>(static_cast<std::size_t>(o.D), o.m), hyper, o.seed);
  }
  write_sample_dir(o.out, s);
  run.seeds["sample"] = o.seed;
  run.manifest(o.out);
  std::cout << Json{{"K", s.K}, {"docs", s.corpus.num_docs()}, {"words", s.corpus.num_words()},
                    {"tokens", s.corpus.num_tokens()}}
                   .dump()
            << "\n";
}

void cmd_fit(const Options& o, Run& run) {
  const InferenceConfig cfg = fit_config(o);
  run.input("corpus", o.corpus);
  const Corpus c = read_corpus_dir(o.corpus);
  const auto g = from_counts(c);
  const FitResult r = fit(g, cfg);
  run.config["inference"] = config_to_json(cfg);
  Json restarts = Json::array();
  for (int k = 0; k < cfg.n_restarts; ++k) restarts.push_back(substream_seed(cfg.seed, "restart", static_cast<std::uint64_t>(k)));
  run.seeds["restarts"] = restarts;
  write_model_dir(o.out, r, cfg);
  run.manifest(o.out);
  std::cout << fit_summary(r).dump() << "\n";
}

void cmd_score(const Options& o, Run& run) {
  Json out;
  if (o.score_model == "lda" || (o.score_model == "hsbm" && o.model.empty())) {
    if (o.labels.empty()) throw InvalidInput("scoring from topic labels needs --labels");
    const fs::path dir = o.sample.empty() ? fs::path(o.labels).parent_path() : fs::path(o.sample);
    if (dir.empty()) throw InvalidInput("cannot locate the sample directory; pass --sample");
    run.input("labels", o.labels);
    run.input("sample", dir);
    LdaSample s = read_sample_dir(dir);
    s.labels = read_labels(o.labels, s.corpus);
    check_labels(s.corpus, s.labels, s.K);
    ModelScore sc;
    if (o.score_model == "lda") {
      if (o.hyper == "noninformative")
        sc = lda_description_length(s.labels, noninformative_hyper(static_cast<std::size_t>(s.corpus.num_docs()),
                                                                   static_cast<std::size_t>(s.K),
                                                                   static_cast<std::size_t>(s.corpus.num_words())));
      else if (o.hyper == "true")
        sc = lda_description_length(s.labels, s.hyper);
      else
        throw InvalidInput("--hyper must be noninformative or true");
    } else {
      if (o.variant != "clustered" && o.variant != "unclustered")
        throw InvalidInput("--variant must be clustered or unclustered");
      sc = fixed_label_score(s, o.variant == "clustered" ? LabelVariant::DocClustering : LabelVariant::NoDocClustering);
    }
    out = score_to_json(sc);
    out["tokens"] = s.corpus.num_tokens();
  } else if (o.score_model == "hsbm") {
    const fs::path corpus = model_corpus(o.model, o.corpus, run);
    const auto m = read_model_dir(o.model);
    const auto g = from_counts(read_corpus_dir(corpus));
    validate_state(g, m.state);
    ModelScore sc = joint_logp(g, m.state, m.hierarchy, JointOptions{m.Q});
    sc.model_id = m.score.model_id;
    sc.parametrization = m.score.parametrization;
    out = score_to_json(sc);
    out["tokens"] = g.E;
    out["stored_sigma_nats"] = m.score.sigma;
    if (sc.sigma != m.score.sigma) throw IntegrityError("stored Σ differs from the recomputed value");
  } else {
    throw InvalidInput("--model must be lda or hsbm");
  }
  if (!o.out.empty()) {
    write_text(fs::path(o.out) / "score.json", out.dump(1) + "\n");
    run.manifest(o.out);
  }
  std::cout << out.dump(1) << "\n";
}

fs::path out_dir_of(const std::string& out) {
  const fs::path p(out);
  return p.extension() == ".tsv" ? (p.has_parent_path() ? p.parent_path() : fs::path(".")) : p;
}

fs::path table_path(const std::string& out) {
  const fs::path p(out);
  return p.extension() == ".tsv" ? p : p / "table.tsv";
}

void cmd_compare(const Options& o, Run& run) {
  if (o.spec.empty() == o.preset.empty()) throw InvalidInput("compare needs exactly one of --spec or --preset");
  std::string tsv;
  std::map<std::string, std::string> extra;
  if (!o.spec.empty()) {
    run.input("spec", o.spec);
    const Json j = read_json(o.spec);
    const fs::path base = fs::path(o.spec).parent_path();
    auto rel = [&](const std::string& p) { return fs::path(p).is_absolute() ? fs::path(p) : base / p; };
    std::vector<ModelSpec> specs;
    try {
      for (const auto& m : j.at("models")) {
        ModelSpec s;
        s.kind = parse_model_kind(m.at("kind").get<std::string>());
        s.name = m.value("name", std::string(model_kind_name(s.kind)));
        InferenceConfig fc;
        fc.seed = o.seed;
        s.fit = m.contains("fit") ? config_from_json(m["fit"], fc) : fc;
        specs.push_back(std::move(s));
      }
    } catch (const Json::exception& e) {
      throw InvalidInput(o.spec + ": " + e.what());
    }
    const std::string bl = o.baseline.empty() ? j.value("baseline", std::string()) : o.baseline;
    ComparisonTable t;
    if (j.contains("sample")) {
      const auto dir = rel(j["sample"].get<std::string>());
      run.input("sample", dir);
      const LdaSample s = read_sample_dir(dir);
      t = compare_models(s.corpus, &s, specs, bl);
    } else if (j.contains("corpus")) {
      const auto dir = rel(j["corpus"].get<std::string>());
      run.input("corpus", dir);
      t = compare_models(read_corpus_dir(dir), nullptr, specs, bl);
    } else {
      throw InvalidInput(o.spec + ": needs a \"sample\" or \"corpus\" entry");
    }
    tsv = t.to_tsv();
  } else if (o.preset == "fig4") {
    Fig4Preset p;
    p.seed = o.seed;
    if (o.D > 0) p.D = o.D;
    if (o.V > 0) p.V = o.V;
    if (o.K > 0) p.K = o.K;
    p.alpha = o.alpha;
    p.beta = o.beta;
    p.zipf = o.p_w != "uniform";
    if (!o.lengths.empty()) p.lengths = o.lengths;
    run.config["preset"] = {{"D", p.D}, {"V", p.V}, {"K", p.K}, {"alpha", p.alpha}, {"beta", p.beta},
                            {"zipf", p.zipf}, {"lengths", p.lengths}};
    tsv = fig4_tsv(run_fig4(p));
  } else if (o.preset == "sm-sweep") {
    SmSweepPreset p;
    p.seed = o.seed;
    if (o.D > 0) p.D = o.D;
    if (o.V > 0) p.V = o.V;
    if (!o.lengths.empty()) p.m = o.lengths.front();
    p.zipf = o.p_w != "uniform";
    run.config["preset"] = {{"D", p.D}, {"V", p.V}, {"m", p.m}, {"topics", p.topics}, {"alphas", p.alphas},
                            {"betas", p.betas}, {"zipf", p.zipf}};
    tsv = sm_sweep_tsv(run_sm_sweep(p, !o.serial));
  } else if (o.preset == "fig2-mode") {
    Fig2Preset p;
    p.seed = o.seed;
    if (o.D > 0) p.D = o.D;
    if (o.V > 0) p.V = o.V;
    if (!o.lengths.empty()) p.m = o.lengths.front();
    p.sweeps = o.sweeps;
    p.restarts = o.restarts;
    run.config["preset"] = {{"D", p.D}, {"V", p.V}, {"m", p.m}, {"sweeps", p.sweeps}, {"restarts", p.restarts},
                            {"n_bins", p.n_bins}, {"mode_fraction", p.mode_fraction}};
    const Fig2Result r = run_fig2(p);
    tsv = r.table.to_tsv();
    extra["simplex_truth.tsv"] = r.truth_hist.to_tsv();
    extra["simplex_hsbm_clustered.tsv"] = r.clustered_hist.to_tsv();
    extra["simplex_hsbm_fig2_mode.tsv"] = r.per_doc_hist.to_tsv();
    extra["modes.json"] = Json{{"truth", r.truth_modes}, {"hsbm-clustered", r.clustered_modes},
                               {"hsbm-fig2-mode", r.per_doc_modes}}
                              .dump(1) +
                          "\n";
  } else {
    throw InvalidInput("unknown preset '" + o.preset + "' (expected fig4, sm-sweep or fig2-mode)");
  }
  if (o.out.empty()) {
    std::cout << tsv;
    return;
  }
  const fs::path dir = out_dir_of(o.out);
  write_text(table_path(o.out), tsv);
  for (const auto& [name, text] : extra) write_text(dir / name, text);
  run.manifest(dir);
}

void cmd_summarize(const Options& o, Run& run) {
  const fs::path corpus = model_corpus(o.model, o.corpus, run);
  const auto m = read_model_dir(o.model);
  const Corpus c = read_corpus_dir(corpus);
  validate_state(from_counts(c), m.state);
  std::ostringstream s;
  s << "level\tblock\tside\ttokens\tmembers\ttop_words\tud_p5\tud_p25\tud_p50\tud_p75\tud_p95\tsample_docs\n";
  char buf[32];
  for (const auto& gs : group_summaries(c, m.state, m.hierarchy, o.level, o.seed, o.top, o.doc_samples)) {
    s << gs.level << '\t' << gs.block << '\t' << side_name(gs.side) << '\t' << gs.tokens << '\t' << gs.members << '\t';
    for (std::size_t k = 0; k < gs.top_words.size(); ++k)
      s << (k ? "," : "") << gs.top_words[k].first << ':' << gs.top_words[k].second;
    for (const double q : gs.ud_percentiles) {
      std::snprintf(buf, sizeof buf, "%.6g", q);
      s << '\t' << (gs.side == Side::Word ? buf : "");
    }
    s << '\t';
    for (std::size_t k = 0; k < gs.sample_docs.size(); ++k) s << (k ? "," : "") << gs.sample_docs[k];
    s << '\n';
  }
  if (o.out.empty()) {
    std::cout << s.str();
    return;
  }
  write_text(fs::path(o.out) / "summary.tsv", s.str());
  run.manifest(o.out);
}

void cmd_stats(const Options& o, Run& run) {
  run.input("corpus", o.corpus);
  const Corpus c = read_corpus_dir(o.corpus);
  const auto heaps = heaps_curve_shuffled(c, substream_seed(o.seed, "heaps"));
  std::vector<double> n, e;
  std::ostringstream ht;
  ht << "docs\twords\tnodes\tedges\n";
  for (const auto& p : heaps) {
    ht << p.docs << '\t' << p.words << '\t' << p.nodes_all() << '\t' << p.edges << '\n';
    if (p.edges > 0) n.push_back(static_cast<double>(p.nodes_all())), e.push_back(static_cast<double>(p.edges));
  }
  std::ostringstream rf;
  rf << "rank\tword\tp\n";
  char buf[64];
  for (const auto& r : rank_frequency(c)) {
    std::snprintf(buf, sizeof buf, "%.17g", r.p);
    rf << r.rank << '\t' << c.vocab.word(r.word) << '\t' << buf << '\n';
  }
  std::ostringstream ud;
  ud << "word\tn_w\tD_w\texpected\tU_D\n";
  for (const auto& d : dissemination_all(c, !o.serial)) {
    ud << c.vocab.word(d.word) << '\t' << d.n_w << '\t' << d.D_w << '\t';
    std::snprintf(buf, sizeof buf, "%.17g", d.expected);
    ud << buf << '\t';
    std::snprintf(buf, sizeof buf, "%.17g", d.U_D);
    ud << buf << '\n';
  }
  Json j;
  j["docs"] = c.num_docs();
  j["words"] = c.num_words();
  j["tokens"] = c.num_tokens();
  j["edges"] = c.counts.size();
  j["heaps_delta"] = n.size() >= 2 ? fit_loglog_slope(n, e) : 0.0;
  if (c.num_tokens() > 0) {
    const auto nc = dissemination_null_check(c, substream_seed(o.seed, "null"));
    j["null_median_ud"] = nc.median;
    j["null_sigma_ud"] = nc.sigma;
    j["null_words"] = nc.words;
    j["null_within_2sigma"] = nc.within;
  }
  run.seeds["heaps"] = substream_seed(o.seed, "heaps");
  run.seeds["null"] = substream_seed(o.seed, "null");
  if (!o.out.empty()) {
    const fs::path d(o.out);
    write_text(d / "heaps.tsv", ht.str());
    write_text(d / "rank_frequency.tsv", rf.str());
    write_text(d / "dissemination.tsv", ud.str());
    write_text(d / "stats.json", j.dump(1) + "\n");
    run.manifest(d);
  }
  std::cout << j.dump(1) << "\n";
}

void cmd_export(const Options& o, Run& run) {
  const fs::path corpus = model_corpus(o.model, o.corpus, run);
  const auto m = read_model_dir(o.model);
  const Corpus c = read_corpus_dir(corpus);
  validate_state(from_counts(c), m.state);
  const std::set<std::string> ok = {"all", "json", "newick", "bundles"};
  if (!ok.count(o.format)) throw InvalidInput("--format must be all, json, newick or bundles");
  const fs::path d(o.out);
  if (o.format == "all" || o.format == "json")
    write_text(d / "hierarchy_tree.json", hierarchy_tree_json(c, m.state, m.hierarchy).dump(1) + "\n");
  if (o.format == "all" || o.format == "newick") write_text(d / "hierarchy.nwk", hierarchy_newick(c, m.state, m.hierarchy));
  if (o.format == "all" || o.format == "bundles") write_text(d / "bundles.tsv", bundles_tsv(c, m.state));
  if (o.format == "all") {
    write_text(d / "state.json", state_to_json(m.state).dump(1) + "\n");
    write_text(d / "hierarchy.json", hierarchy_to_json(m.hierarchy).dump(1) + "\n");
    Json s = score_to_json(m.score);
    s["overlap"] = m.Q;
    write_text(d / "score.json", s.dump(1) + "\n");
  }
  run.manifest(d);
}

void print_error(bool as_json, const std::string& kind, const std::string& msg, int code) {
  if (as_json)
    std::cerr << Json{{"error", {{"kind", kind}, {"message", msg}, {"exit_code", code}}}}.dump() << "\n";
  else
    std::cerr << "topicblocks: " << msg << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<std::string> raw(argv + 1, argv + argc);
  bool error_json = false;
  for (const auto& a : raw) error_json |= a == "--error-json";

  Options o;
  CLI::App app{"Topic models as hierarchical stochastic block models on word-document networks"};
  app.name("topicblocks");
  app.set_version_flag("--version", std::string(TOPICBLOCKS_VERSION));
  app.add_flag("--error-json", error_json, "Errors as one JSON object on stderr");
  app.require_subcommand(1);

  auto common = [&](CLI::App* s) {
    s->add_option("--seed", o.seed, "Run seed")->capture_default_str();
    s->add_option("--config", o.config, "JSON file whose keys mirror the flags");
  };

  auto* ingest = app.add_subcommand("ingest", "Build a corpus directory from JSON lines or a count file");
  common(ingest);
  ingest->add_option("--input", o.input, "JSON lines, one {id, text} or {id, tokens} per document");
  ingest->add_option("--counts", o.counts, "TSV doc<TAB>word<TAB>count");
  ingest->add_option("--min-count", o.min_count, "Drop words occurring fewer times")->capture_default_str();
  ingest->add_option("--out", o.out, "Corpus directory")->required();

  auto* synth = app.add_subcommand("synth", "Draw an LDA corpus with its topic labels");
  common(synth);
  synth->add_option("--K", o.K, "Topics")->capture_default_str();
  synth->add_option("--D", o.D, "Documents")->capture_default_str();
  synth->add_option("--m", o.m, "Tokens per document")->capture_default_str();
  synth->add_option("--V", o.V, "Vocabulary size (default 10000, or 100 with --bimodal)");
  synth->add_option("--alpha", o.alpha, "Document-topic concentration")->capture_default_str();
  synth->add_option("--beta", o.beta, "Topic-word concentration")->capture_default_str();
  synth->add_option("--p-w", o.p_w, "Word base measure: zipf, uniform, harmonic or a TSV file")->capture_default_str();
  synth->add_option("--p-r", o.p_r, "Topic base measure: uniform, harmonic or a TSV file")->capture_default_str();
  synth->add_flag("--bimodal", o.bimodal, "Two-population K=3 corpus with β=0.01");
  synth->add_option("--out", o.out, "Sample directory")->required();

  auto* fitc = app.add_subcommand("fit", "Infer a hierarchical SBM");
  common(fitc);
  fitc->add_option("--corpus", o.corpus, "Corpus directory")->required();
  fitc->add_option("--mode", o.mode, "anneal, greedy or mcmc")->capture_default_str();
  fitc->add_option("--doc-clustering", o.doc_clustering, "clustered, per-doc-group or fig2-mode")->capture_default_str();
  fitc->add_option("--init", o.init, "random or agglomerative")->capture_default_str();
  fitc->add_option("--overlap", o.overlap, "Maximum groups per node, 0 for unbounded")->capture_default_str();
  fitc->add_option("--restarts", o.restarts)->capture_default_str();
  fitc->add_option("--sweeps", o.sweeps, "Sweep budget per restart")->capture_default_str();
  fitc->add_option("--window", o.window, "Convergence window in sweeps")->capture_default_str();
  fitc->add_option("--tolerance", o.tolerance, "Minimum improvement in nats over the window")->capture_default_str();
  fitc->add_option("--temperatures", o.temperatures, "Anneal schedule")->capture_default_str();
  fitc->add_option("--sweeps-per-temperature", o.spt)->capture_default_str();
  fitc->add_option("--init-doc-groups", o.init_doc_groups)->capture_default_str();
  fitc->add_option("--init-word-groups", o.init_word_groups)->capture_default_str();
  fitc->add_option("--word-groups", o.word_groups, "Keep exactly this many word groups")->capture_default_str();
  fitc->add_option("--label-fraction", o.label_fraction, "Share of edge labels revisited per sweep")->capture_default_str();
  fitc->add_flag("--no-hierarchy", o.no_hierarchy, "Single level only");
  fitc->add_flag("--no-overlap-moves", o.no_overlap_moves, "Node moves only");
  fitc->add_flag("--serial", o.serial, "Run restarts one after another");
  fitc->add_option("--out", o.out, "Model directory")->required();

  auto* score = app.add_subcommand("score", "Description length of a labeled corpus or a fitted model");
  common(score);
  score->add_option("--model", o.score_model, "lda or hsbm")->capture_default_str();
  score->add_option("--hyper", o.hyper, "LDA prior: noninformative or true")->capture_default_str();
  score->add_option("--labels", o.labels, "labels.tsv of a sample directory");
  score->add_option("--sample", o.sample, "Sample directory (default: the directory of --labels)");
  score->add_option("--variant", o.variant, "hSBM from labels: clustered or unclustered")->capture_default_str();
  score->add_option("--model-dir", o.model, "Fitted model directory");
  score->add_option("--corpus", o.corpus, "Corpus of the fitted model (default: from its manifest)");
  score->add_option("--out", o.out, "Directory for score.json");

  auto* compare = app.add_subcommand("compare", "Σ table for several models on one corpus");
  common(compare);
  compare->add_option("--spec", o.spec, "JSON with sample or corpus, baseline and models");
  compare->add_option("--preset", o.preset, "fig4, sm-sweep or fig2-mode");
  compare->add_option("--D", o.D, "Documents (preset default if 0)");
  compare->get_option("--D")->default_val(0);
  compare->add_option("--V", o.V, "Vocabulary size (preset default if 0)");
  compare->add_option("--K", o.K, "Topics for fig4")->default_val(10);
  compare->add_option("--m", o.lengths, "Text lengths (fig4) or the single length of the other presets");
  compare->add_option("--alpha", o.alpha, "fig4 α")->capture_default_str();
  compare->add_option("--beta", o.beta, "fig4 β")->capture_default_str();
  compare->add_option("--p-w", o.p_w, "zipf or uniform word base")->capture_default_str();
  compare->add_option("--sweeps", o.sweeps, "fig2-mode sweep budget")->default_val(10);
  compare->add_option("--restarts", o.restarts, "fig2-mode restarts")->default_val(2);
  compare->add_option("--baseline", o.baseline, "Row name ΔΣ is measured against");
  compare->add_flag("--serial", o.serial, "No concurrent cells");
  compare->add_option("--out", o.out, "table.tsv path or output directory");

  auto* summarize = app.add_subcommand("summarize", "Per-group listings of a fitted model");
  common(summarize);
  summarize->add_option("--model", o.model, "Model directory")->required();
  summarize->add_option("--corpus", o.corpus, "Corpus (default: from the model manifest)");
  summarize->add_option("--level", o.level)->capture_default_str();
  summarize->add_option("--top", o.top, "Top words per group")->capture_default_str();
  summarize->add_option("--docs", o.doc_samples, "Sampled documents per group")->capture_default_str();
  summarize->add_option("--out", o.out, "Directory for summary.tsv");

  auto* stats = app.add_subcommand("stats", "Rank-frequency, network growth and dissemination of a corpus");
  common(stats);
  stats->add_option("--corpus", o.corpus, "Corpus directory")->required();
  stats->add_flag("--serial", o.serial, "Serial dissemination");
  stats->add_option("--out", o.out, "Output directory");

  auto* exportc = app.add_subcommand("export", "Write the hierarchy as nested JSON and Newick, bundles as TSV");
  common(exportc);
  exportc->add_option("--model", o.model, "Model directory")->required();
  exportc->add_option("--corpus", o.corpus, "Corpus (default: from the model manifest)");
  exportc->add_option("--format", o.format, "all, json, newick or bundles")->capture_default_str();
  exportc->add_option("--out", o.out, "Output directory")->required();

  std::vector<std::string> args;
  try {
    args = expand_config(raw);
  } catch (const std::exception& e) {
    print_error(error_json, "invalid_input", e.what(), 1);
    return 1;
  }
  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    print_error(error_json, "usage", e.what(), 2);
    if (!error_json) {
      const auto subs = app.get_subcommands();
      std::cerr << (subs.empty() ? app.help() : subs.front()->help());
    }
    return 2;
  }

  try {
    apply_threads();
    CLI::App* sub = app.get_subcommands().front();
    Run run;
    run.command = sub->get_name();
    run.argv = args;
    run.config = resolved_config(sub);
    run.seed = o.seed;
    const std::string& name = run.command;
    if (name == "ingest") cmd_ingest(o, run);
    else if (name == "synth") cmd_synth(o, run);
    else if (name == "fit") cmd_fit(o, run);
    else if (name == "score") cmd_score(o, run);
    else if (name == "compare") cmd_compare(o, run);
    else if (name == "summarize") cmd_summarize(o, run);
    else if (name == "stats") cmd_stats(o, run);
    else if (name == "export") cmd_export(o, run);
  } catch (const IntegrityError& e) {
    print_error(error_json, "integrity", e.what(), 3);
    return 3;
  } catch (const InvalidInput& e) {
    print_error(error_json, "invalid_input", e.what(), 1);
    return 1;
  } catch (const std::exception& e) {
    print_error(error_json, "internal", e.what(), 1);
    return 1;
  }
  return 0;
}
