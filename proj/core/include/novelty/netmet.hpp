#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "novelty/feature_store.hpp"
#include "novelty/time.hpp"

namespace novelty::net {

using NodeId = std::uint32_t;

/// Directed simple graph with named nodes. Self-loops and parallel edges are
/// not representable.
class DiGraph {
 public:
  DiGraph() = default;
  // Anonymous nodes named "0".."n-1".
  explicit DiGraph(std::size_t n);

  NodeId add_node(std::string_view name);
  std::optional<NodeId> find(std::string_view name) const;
  // Returns false when the edge already exists. Throws on self-loops.
  bool add_edge(NodeId src, NodeId dst);
  bool has_edge(NodeId src, NodeId dst) const;

  std::size_t node_count() const { return names_.size(); }
  std::size_t edge_count() const { return edges_; }
  const std::string& name(NodeId u) const { return names_[u]; }
  std::span<const NodeId> out_neighbors(NodeId u) const { return out_[u]; }
  std::span<const NodeId> in_neighbors(NodeId u) const { return in_[u]; }

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, NodeId> index_;
  std::vector<std::vector<NodeId>> out_;  // sorted
  std::vector<std::vector<NodeId>> in_;   // sorted
  std::size_t edges_ = 0;
};

/// Follow edges with creation times. A repeated (src, dst) pair keeps its
/// earliest timestamp.
class TemporalGraph {
 public:
  explicit TemporalGraph(std::span<const store::FollowEdge> edges);

  std::span<const store::FollowEdge> edges() const { return edges_; }

  /// Edges created strictly before t. Nodes are the endpoints of those edges.
  DiGraph snapshot_at(Timestamp t) const;

 private:
  std::vector<store::FollowEdge> edges_;  // sorted by timestamp
};

/// Walks forward through time, growing one snapshot incrementally. Queries
/// must be issued with non-decreasing t.
class SnapshotCursor {
 public:
  explicit SnapshotCursor(const TemporalGraph& graph) : graph_(&graph) {}

  const DiGraph& advance_to(Timestamp t);

 private:
  const TemporalGraph* graph_;
  DiGraph snapshot_;
  std::size_t next_ = 0;
  std::optional<Timestamp> last_;
};

struct NetworkFeatures {
  std::uint64_t in_degree = 0;
  std::uint64_t out_degree = 0;
  double closeness = 0.0;
  double constraint = 0.0;
  double density = 0.0;
};

/// Wasserman-Faust closeness on the undirected projection:
/// (r / (n - 1)) * (r / sum of distances to the r reachable nodes).
double closeness(const DiGraph& g, NodeId u);

/// Burt's constraint on the undirected ego network of u and the nodes u
/// follows, unit tie strengths. Zero when u follows nobody.
double constraint(const DiGraph& g, NodeId u);

/// Directed ties among the nodes u follows over |S| (|S| - 1); zero when
/// |S| < 2.
double ego_density(const DiGraph& g, NodeId u);

NetworkFeatures network_features(const DiGraph& g, NodeId u);

// Name-based lookups; throw ValidationError for unknown nodes.
double closeness(const DiGraph& g, std::string_view u);
double constraint(const DiGraph& g, std::string_view u);
double ego_density(const DiGraph& g, std::string_view u);
NetworkFeatures network_features(const DiGraph& g, std::string_view u);

}  // namespace novelty::net
