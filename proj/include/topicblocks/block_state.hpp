#pragma once

#include <cstdint>
#include <unordered_map>
#include <vector>

#include "topicblocks/graph.hpp"
#include "topicblocks/model_score.hpp"
#include "topicblocks/sbm_core.hpp"

namespace topicblocks {

struct StateOptions {
  int Q = 0;  // maximum mixture size per node, 0 = unbounded
  bool fixed_doc_groups = false;
};

/// Mutable labeled state with incrementally maintained Σ_hSBM.
///
/// All changes go through move_mass(); composite moves are made atomic with
/// begin()/rollback()/commit(). Group ids are never reused while a
/// transaction is open, and empty groups stay allocated but do not enter Σ.
class BlockState {
 public:
  BlockState(const BipartiteMultigraph& g, const LabeledState& s, const Hierarchy& h = {},
             StateOptions opt = {});

  const BipartiteMultigraph& graph() const { return *g_; }
  const StateOptions& options() const { return opt_; }

  double sigma() const { return sigma_; }
  /// Rebuilds every term from the sufficient statistics and resets the
  /// running total to it (removes drift from long chains).
  double resync();
  /// Σ from scratch through joint_logp on the exported state.
  ModelScore full_score() const;

  LabeledState export_state() const;
  Hierarchy export_hierarchy() const;

  // groups
  int capacity() const { return static_cast<int>(groups_.size()); }
  Side side_of(int r) const { return groups_[static_cast<std::size_t>(r)].side; }
  bool empty_group(int r) const { return groups_[static_cast<std::size_t>(r)].e == 0; }
  std::int64_t group_degree(int r) const { return groups_[static_cast<std::size_t>(r)].e; }
  int nonempty(Side s) const { return b_side_[static_cast<int>(s)]; }
  std::vector<int> groups_of(Side s, bool nonempty_only = true) const;
  const std::vector<int>& members(int r) const { return groups_[static_cast<std::size_t>(r)].member_list; }
  /// Returns an empty group of side `s`, allocating one if needed. The new
  /// group is placed under the level-2 parent of `sibling` when given.
  int fresh_group(Side s, int sibling = -1);

  // nodes: docs 0..D-1, words D..D+V-1
  int num_nodes() const { return g_->num_nodes(); }
  Side node_side(int i) const { return i < g_->D ? Side::Doc : Side::Word; }
  const std::vector<std::pair<int, std::int64_t>>& node_groups(int i) const {
    return node_deg_[static_cast<std::size_t>(i)];
  }
  std::int64_t node_degree(int i) const;
  const std::vector<int>& node_edges(int i) const { return node_edges_[static_cast<std::size_t>(i)]; }

  // edges
  struct Mass {
    int rd;
    int rw;
    std::int64_t c;
  };
  int num_edges() const { return static_cast<int>(labels_.size()); }
  const std::vector<Mass>& edge_labels(int e) const { return labels_[static_cast<std::size_t>(e)]; }
  const CountEntry& edge(int e) const { return g_->edges[static_cast<std::size_t>(e)]; }
  std::int64_t ers(int r, int s) const;
  const std::unordered_map<int, std::int64_t>& group_neighbors(int r) const {
    return ers_[static_cast<std::size_t>(r)];
  }

  /// Moves `amount` units on edge `e` from label (rd, rw) to (nrd, nrw).
  /// Returns ΔΣ. Does not check Q; see feasible().
  double move_mass(int e, int rd, int rw, int nrd, int nrw, std::int64_t amount);

  /// False while some node has more than Q groups.
  bool feasible() const { return q_violations_ == 0; }

  void begin();
  void rollback();
  void commit();

  // hierarchy; level 1 is the group level, parents(l) maps level-l blocks
  // to level-(l+1) blocks for l = 1..depth()-1
  int depth() const { return static_cast<int>(parents_.size()) + 1; }
  int level_size(int l) const;  // capacity of level l
  int parent(int l, int r) const { return parents_[static_cast<std::size_t>(l - 1)][static_cast<std::size_t>(r)]; }
  Side level_side(int l, int r) const;
  /// Replaces the levels above the groups and returns ΔΣ.
  double set_hierarchy(const Hierarchy& h);
  /// Moves level-l block r under level-(l+1) block p and returns ΔΣ.
  double set_parent(int l, int r, int p);
  /// New empty block of side s at level l (l >= 2), returns its id.
  int fresh_block(int l, Side s);
  /// Σ contribution of the hierarchy part (edges_l*, partition_l*, edges_top).
  double hierarchy_cost() const { return hier_cost_; }

 private:
  struct Group {
    Side side = Side::Doc;
    std::int64_t e = 0;    // half-edges
    std::int64_t S = 0;    // nodes holding r
    std::int64_t m = 0;    // distinct mixtures holding r
    std::vector<int> member_list;
    std::unordered_map<int, int> member_pos;
  };
  struct Comp {
    std::int64_t e = 0;
    std::unordered_map<std::int64_t, std::int64_t> hist;
    double slh = 0.0;
  };
  struct Mix {
    std::vector<int> key;
    std::int64_t n = 0;
    std::vector<Comp> comps;
  };
  struct VecHash {
    std::size_t operator()(const std::vector<int>& v) const;
  };
  struct Op {
    int e, rd, rw, nrd, nrw;
    std::int64_t amount;
  };

  double comp_cost(const Comp& c, std::int64_t n) const;
  double group_cost(const Group& g) const;
  double side_cost(int side) const;
  double hier_full() const;

  double add_label(int e, int rd, int rw, std::int64_t delta);
  double change_node(int i, int r, std::int64_t delta);
  double change_group_e(int r, std::int64_t delta);
  double change_ers(int r, int s, std::int64_t delta);
  double node_leave_mix(int i);
  double node_join_mix(int i);
  void add_member(int r, int i);
  void remove_member(int r, int i);
  std::vector<int> ancestors(int r) const;
  void assign_block_sides();

  const BipartiteMultigraph* g_;
  StateOptions opt_;
  std::vector<Group> groups_;
  std::vector<std::unordered_map<int, std::int64_t>> ers_;
  std::vector<std::vector<Mass>> labels_;
  std::vector<std::vector<int>> node_edges_;
  std::vector<std::vector<std::pair<int, std::int64_t>>> node_deg_;
  std::vector<Mix*> node_mix_;
  std::unordered_map<std::vector<int>, Mix, VecHash> mixes_[2];
  std::int64_t n_active_[2] = {0, 0};
  std::vector<std::int64_t> n_q_[2];
  double slf_nb_[2] = {0.0, 0.0};
  int b_side_[2] = {0, 0};
  std::int64_t q_violations_ = 0;

  std::vector<std::vector<int>> parents_;
  std::vector<std::vector<Side>> block_side_;  // per level >= 2
  std::vector<std::unordered_map<std::uint64_t, std::int64_t>> level_e_;  // per level >= 2
  std::vector<std::vector<std::int64_t>> level_n_;  // nonempty children per block, level >= 2
  double hier_cost_ = 0.0;
  bool hier_dirty_ = false;

  double sigma_ = 0.0;
  bool recording_ = false;
  std::vector<Op> journal_;
  double saved_sigma_ = 0.0;
  double saved_hier_ = 0.0;
  std::vector<std::vector<int>> saved_parents_;
  bool saved_parents_valid_ = false;
};

/// log p(m, n) with a per-thread memo.
double cached_log_partitions(std::int64_t m, std::int64_t n);

}  // namespace topicblocks
