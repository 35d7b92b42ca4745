#pragma once

#include <cstdint>
#include <filesystem>
#include <json.hpp>
#include <string>
#include <vector>

#include "topicblocks/corpus.hpp"
#include "topicblocks/graph.hpp"
#include "topicblocks/inference.hpp"
#include "topicblocks/lda.hpp"
#include "topicblocks/model_score.hpp"
#include "topicblocks/sbm_core.hpp"

namespace topicblocks {

using Json = nlohmann::ordered_json;

Json score_to_json(const ModelScore& s);
ModelScore score_from_json(const Json& j);

/// {"B", "sides": [...], "bundles": [[d, w, rd, rw, count], ...]}
Json state_to_json(const LabeledState& s);
LabeledState state_from_json(const Json& j);
/// {"parents": [[...], ...]}, level 2 first.
Json hierarchy_to_json(const Hierarchy& h);
Hierarchy hierarchy_from_json(const Json& j);

Json config_to_json(const InferenceConfig& c);
InferenceConfig config_from_json(const Json& j, InferenceConfig base = {});

/// Model directory: state.json, hierarchy.json, sigma_trace.tsv, score.json.
void write_model_dir(const std::filesystem::path& dir, const FitResult& r, const InferenceConfig& cfg);

struct StoredModel {
  LabeledState state;
  Hierarchy hierarchy;
  ModelScore score;
  int Q = 0;
};

/// Throws IntegrityError when files are missing or malformed.
StoredModel read_model_dir(const std::filesystem::path& dir);

/// Sample directory: the corpus files plus labels.tsv and params.json
/// (K, seed and the full hyperparameter matrices).
void write_sample_dir(const std::filesystem::path& dir, const LdaSample& s);
LdaSample read_sample_dir(const std::filesystem::path& dir);

/// labels.tsv rows `doc_id<TAB>word<TAB>topic<TAB>count`, resolved against corpus.
void write_labels(const std::filesystem::path& path, const Corpus& corpus, const std::vector<TopicCount>& labels);
std::vector<TopicCount> read_labels(const std::filesystem::path& path, const Corpus& corpus);

// exports
/// Root -> top blocks -> ... -> level-1 groups -> member nodes with their
/// half-edge counts.
Json hierarchy_tree_json(const Corpus& corpus, const LabeledState& s, const Hierarchy& h);
/// Same tree in Newick form.
std::string hierarchy_newick(const Corpus& corpus, const LabeledState& s, const Hierarchy& h);
/// `doc_id word doc_group word_group count` rows.
std::string bundles_tsv(const Corpus& corpus, const LabeledState& s);
std::string sigma_trace_tsv(const std::vector<double>& trace);

// manifests
std::string hex64(std::uint64_t x);
/// FNV-1a over a file, or over sorted relative paths and contents of a directory.
std::string digest_path(const std::filesystem::path& p);

void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);
Json read_json(const std::filesystem::path& path);

}  // namespace topicblocks
