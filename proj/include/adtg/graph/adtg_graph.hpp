// Copyright 2026 The ADTG Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "adtg/corpus/types.hpp"

namespace adtg {

/// Action dynamics task graph: one node per observed action plus EOS, and an
/// edge a -> b whenever b immediately follows a in some demonstration.
/// Immutable once built.
class Graph {
 public:
  using Edge = std::pair<ActionId, ActionId>;

  Graph() = default;
  /// Throws DataError if an edge endpoint is not a node, a node is not in the
  /// vocabulary, or EOS has outgoing edges.
  Graph(ActionVocabulary vocab, std::vector<ActionId> nodes, std::map<Edge, std::size_t> edge_counts,
        std::size_t skipped_sequences = 0);

  const std::string& task_id() const { return vocab_.task_id(); }
  const ActionVocabulary& vocab() const { return vocab_; }
  /// Sorted by action index; EOS (when present) is last.
  const std::vector<ActionId>& nodes() const { return nodes_; }
  const std::map<Edge, std::size_t>& edge_counts() const { return edges_; }
  std::size_t edge_count() const { return edges_.size(); }
  /// Empty input sequences ignored by build_graph.
  std::size_t skipped_sequences() const { return skipped_; }

  bool has_node(ActionId a) const;
  bool has_edge(ActionId a, ActionId b) const { return edges_.count({a, b}) != 0; }
  /// Occurrences of a -> b; 0 when absent.
  std::size_t count(ActionId a, ActionId b) const;

  bool operator==(const Graph& o) const {
    return vocab_ == o.vocab_ && nodes_ == o.nodes_ && edges_ == o.edges_;
  }

 private:
  ActionVocabulary vocab_;
  std::vector<ActionId> nodes_;
  std::map<Edge, std::size_t> edges_;
  std::size_t skipped_ = 0;
};

/// Consecutive pairs of every sequence plus final -> EOS. Empty sequences are
/// skipped and counted. Throws DataError on NULL/EOS or out-of-vocabulary ids
/// inside a sequence.
Graph build_graph(const ActionVocabulary& vocab, std::span<const std::vector<ActionId>> sequences);

/// Outgoing-edge targets in action-index order (EOS last). QueryError on an unknown node.
std::vector<ActionId> successors(const Graph& g, ActionId a);

/// Both a -> b and b -> a are edges. QueryError on an unknown node.
bool is_interchangeable(const Graph& g, ActionId a, ActionId b);

/// The sequence is a path of g ending with an edge into EOS.
bool is_replayable(const Graph& g, std::span<const ActionId> sequence);

/// Transitions of `sequence` (including final -> EOS) that are not edges of g.
std::vector<Graph::Edge> unseen_edges(const Graph& g, std::span<const ActionId> sequence);

/// Graphviz digraph; node labels are action names, edge labels are counts.
std::string to_dot(const Graph& g);

/// {"task_id", "actions", "nodes": [names], "edges": [[src, dst, count], ...]}.
std::string graph_to_json(const Graph& g);
Graph graph_from_json(const std::string& text);

}  // namespace adtg
