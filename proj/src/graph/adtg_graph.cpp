// Copyright 2026 The ADTG Authors
// SPDX-License-Identifier: Apache-2.0

#include "adtg/graph/adtg_graph.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "adtg/error.hpp"
#include "json.hpp"

namespace adtg {

using nlohmann::json;

Graph::Graph(ActionVocabulary vocab, std::vector<ActionId> nodes, std::map<Edge, std::size_t> edge_counts,
             std::size_t skipped_sequences)
    : vocab_(std::move(vocab)), nodes_(std::move(nodes)), edges_(std::move(edge_counts)), skipped_(skipped_sequences) {
  std::sort(nodes_.begin(), nodes_.end());
  nodes_.erase(std::unique(nodes_.begin(), nodes_.end()), nodes_.end());
  for (ActionId a : nodes_) {
    if (!vocab_.is_action(a) && a != vocab_.eos()) {
      throw DataError("graph node " + std::to_string(a.value) + " is not an action of task '" + task_id() + "'");
    }
  }
  for (const auto& [e, n] : edges_) {
    if (!has_node(e.first) || !has_node(e.second)) {
      throw DataError("graph edge " + std::to_string(e.first.value) + " -> " + std::to_string(e.second.value) +
                      " has an endpoint outside the node set");
    }
    if (e.first == vocab_.eos()) throw DataError("EOS cannot have outgoing edges");
    if (n == 0) throw DataError("graph edge with zero count");
  }
}

bool Graph::has_node(ActionId a) const { return std::binary_search(nodes_.begin(), nodes_.end(), a); }

std::size_t Graph::count(ActionId a, ActionId b) const {
  auto it = edges_.find({a, b});
  return it == edges_.end() ? 0 : it->second;
}

Graph build_graph(const ActionVocabulary& vocab, std::span<const std::vector<ActionId>> sequences) {
  std::set<ActionId> nodes{vocab.eos()};
  std::map<Graph::Edge, std::size_t> edges;
  std::size_t skipped = 0;
  for (const auto& seq : sequences) {
    if (seq.empty()) {
      ++skipped;
      continue;
    }
    for (ActionId a : seq) {
      if (!vocab.is_action(a)) {
        throw DataError("sequence for task '" + vocab.task_id() + "' contains non-action id " + std::to_string(a.value));
      }
      nodes.insert(a);
    }
    for (std::size_t i = 0; i + 1 < seq.size(); ++i) ++edges[{seq[i], seq[i + 1]}];
    ++edges[{seq.back(), vocab.eos()}];
  }
  return Graph(vocab, {nodes.begin(), nodes.end()}, std::move(edges), skipped);
}

namespace {

void require_node(const Graph& g, ActionId a) {
  if (!g.has_node(a)) {
    throw QueryError("action " + std::to_string(a.value) + " is not a node of the graph for task '" + g.task_id() + "'");
  }
}

}  // namespace

std::vector<ActionId> successors(const Graph& g, ActionId a) {
  require_node(g, a);
  std::vector<ActionId> out;
  const auto& edges = g.edge_counts();
  for (auto it = edges.lower_bound({a, ActionId{0}}); it != edges.end() && it->first.first == a; ++it) {
    out.push_back(it->first.second);
  }
  return out;
}

bool is_interchangeable(const Graph& g, ActionId a, ActionId b) {
  require_node(g, a);
  require_node(g, b);
  return g.has_edge(a, b) && g.has_edge(b, a);
}

std::vector<Graph::Edge> unseen_edges(const Graph& g, std::span<const ActionId> sequence) {
  std::vector<Graph::Edge> out;
  for (std::size_t i = 0; i < sequence.size(); ++i) {
    const ActionId next = i + 1 < sequence.size() ? sequence[i + 1] : g.vocab().eos();
    if (!g.has_edge(sequence[i], next)) out.push_back({sequence[i], next});
  }
  return out;
}

bool is_replayable(const Graph& g, std::span<const ActionId> sequence) {
  return !sequence.empty() && unseen_edges(g, sequence).empty();
}

namespace {

std::string dot_quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out + "\"";
}

std::string node_key(ActionId a) { return "n" + std::to_string(a.value); }

}  // namespace

std::string to_dot(const Graph& g) {
  std::ostringstream out;
  out << "digraph " << dot_quote(g.task_id()) << " {\n";
  for (ActionId a : g.nodes()) {
    out << "  " << node_key(a) << " [label=" << dot_quote(g.vocab().name(a)) << "];\n";
  }
  for (const auto& [e, n] : g.edge_counts()) {
    out << "  " << node_key(e.first) << " -> " << node_key(e.second) << " [label=\"" << n << "\"];\n";
  }
  out << "}\n";
  return out.str();
}

std::string graph_to_json(const Graph& g) {
  json nodes = json::array();
  for (ActionId a : g.nodes()) nodes.push_back(g.vocab().name(a));
  json edges = json::array();
  for (const auto& [e, n] : g.edge_counts()) {
    edges.push_back({g.vocab().name(e.first), g.vocab().name(e.second), n});
  }
  json j = {{"task_id", g.task_id()}, {"actions", g.vocab().names()}, {"nodes", nodes}, {"edges", edges}};
  return j.dump(2) + "\n";
}

Graph graph_from_json(const std::string& text) {
  try {
    const json j = json::parse(text);
    ActionVocabulary vocab(j.at("task_id").get<std::string>(), j.at("actions").get<std::vector<std::string>>());
    auto lookup = [&](const std::string& name) {
      if (name == "<EOS>") return vocab.eos();
      return vocab.id(name);
    };
    std::vector<ActionId> nodes;
    for (const auto& n : j.at("nodes")) nodes.push_back(lookup(n.get<std::string>()));
    std::map<Graph::Edge, std::size_t> edges;
    for (const auto& e : j.at("edges")) {
      if (!e.is_array() || e.size() != 3) throw ParseError("graph edge must be [src, dst, count]");
      edges[{lookup(e[0].get<std::string>()), lookup(e[1].get<std::string>())}] = e[2].get<std::size_t>();
    }
    return Graph(std::move(vocab), std::move(nodes), std::move(edges));
  } catch (const json::exception& e) {
    throw ParseError(std::string("graph: ") + e.what());
  }
}

}  // namespace adtg
