#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "slimshap/forest.hpp"
#include "slimshap/slim.hpp"
#include "slimshap/subsets.hpp"

namespace slimshap {

// Probability models attached to the splitting nodes of a tree so that
// P(reach terminal | X_u = x_u) can be evaluated for arbitrary feature subsets u.
//
// Per splitting node with split variable v:
//  - a selector forest (all features except v) ranks the remaining features;
//    the top `top_vars` of them become the node's candidate conditioning set
//  - one event forest per nonempty subset s of that set predicts the
//    left-branch indicator from X_s alone, trained on the rows reaching the node
//  - the empirical left fraction covers subsets that miss the candidate set
struct PathProbConfig {
  int top_vars = 3;
  ForestConfig forest{};     // seed field is ignored; seeds are derived per model
  double clip = 1e-6;        // model outputs are kept inside [clip, 1-clip]
};

struct NodeModels {
  std::vector<int> top_vars;            // ascending feature ids, split var excluded
  Eigen::VectorXd selector_importance;  // length p, zero at the split var
  double empirical_left = 0.0;
  std::vector<ForestModel> event;       // indexed by bitmask over top_vars; [0] unused
};

struct NodeModelBank {
  std::vector<NodeModels> nodes;  // parallel to tree.nodes; empty models at terminals
  PathProbConfig config;
  std::uint64_t seed = 0;
  int n_split_nodes = 0;
  int n_event_models = 0;
};

NodeModelBank fit_node_models(const SlimTree& tree, const Eigen::MatrixXd& X,
                              const PathProbConfig& config, std::uint64_t seed,
                              int threads = 1);

// Left-branch probability at `node` given X_u = x_u (x carries all coordinates;
// only those in u are read unless the split variable itself is known).
double conditional_split_prob(const SlimTree& tree, const NodeModelBank& bank, int node,
                              const FeatureSubset& u, const Eigen::RowVectorXd& x);

// Probability of landing in each terminal (ordered as tree.terminals) given X_u = x_u.
// Entries are exact zeros on branches ruled out by known coordinates; the vector sums to 1.
Eigen::VectorXd terminal_probabilities(const SlimTree& tree, const NodeModelBank& bank,
                                       const FeatureSubset& u, const Eigen::RowVectorXd& x);

// Precomputed left-branch probabilities for a fixed block of query rows.  Every
// subset u then resolves at each node to one of the cached vectors (deterministic
// routing / one per event mask) or the scalar empirical fraction, so sweeping
// many subsets costs one multiply pass per node instead of fresh forest walks.
struct BranchProbCache {
  struct NodeCache {
    Eigen::VectorXd det;                   // 0/1 routing of the query rows
    std::vector<Eigen::VectorXd> by_mask;  // [smask] forest output, clipped; [0] unused
  };
  std::vector<NodeCache> nodes;  // parallel to tree.nodes
  int n_rows = 0;
};

BranchProbCache build_branch_cache(const SlimTree& tree, const NodeModelBank& bank,
                                   const Eigen::MatrixXd& rows, int threads = 1);

// Rows x terminals matrix of reach probabilities for subset u over cached rows.
Eigen::MatrixXd terminal_prob_matrix(const SlimTree& tree, const NodeModelBank& bank,
                                     const BranchProbCache& cache, const FeatureSubset& u);

}  // namespace slimshap
