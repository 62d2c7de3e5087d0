#include "novelty/netmet.hpp"

#include <algorithm>
#include <map>
#include <utility>

#include "novelty/error.hpp"

namespace novelty::net {
namespace {

void insert_sorted(std::vector<NodeId>& v, NodeId x) {
  v.insert(std::lower_bound(v.begin(), v.end(), x), x);
}

bool contains_sorted(std::span<const NodeId> v, NodeId x) {
  return std::binary_search(v.begin(), v.end(), x);
}

NodeId require(const DiGraph& g, std::string_view u) {
  const auto id = g.find(u);
  if (!id) throw ValidationError("unknown node '" + std::string(u) + "'");
  return *id;
}

bool adjacent_undirected(const DiGraph& g, NodeId a, NodeId b) {
  return g.has_edge(a, b) || g.has_edge(b, a);
}

}  // namespace

DiGraph::DiGraph(std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) add_node(std::to_string(i));
}

NodeId DiGraph::add_node(std::string_view name) {
  const auto [it, inserted] =
      index_.emplace(std::string(name), static_cast<NodeId>(names_.size()));
  if (inserted) {
    names_.emplace_back(name);
    out_.emplace_back();
    in_.emplace_back();
  }
  return it->second;
}

std::optional<NodeId> DiGraph::find(std::string_view name) const {
  const auto it = index_.find(std::string(name));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

bool DiGraph::add_edge(NodeId src, NodeId dst) {
  if (src == dst) throw ValidationError("self-loop on node '" + names_.at(src) + "'");
  if (src >= names_.size() || dst >= names_.size()) throw ValidationError("edge to unknown node");
  if (has_edge(src, dst)) return false;
  insert_sorted(out_[src], dst);
  insert_sorted(in_[dst], src);
  ++edges_;
  return true;
}

bool DiGraph::has_edge(NodeId src, NodeId dst) const {
  return contains_sorted(out_[src], dst);
}

TemporalGraph::TemporalGraph(std::span<const store::FollowEdge> edges) {
  std::map<std::pair<std::string, std::string>, Timestamp> earliest;
  for (const auto& e : edges) {
    if (e.src == e.dst) throw ValidationError("self-follow edge for '" + e.src + "'");
    const auto key = std::make_pair(e.src, e.dst);
    const auto it = earliest.find(key);
    if (it == earliest.end() || e.timestamp < it->second) earliest[key] = e.timestamp;
  }
  edges_.reserve(earliest.size());
  for (const auto& [key, ts] : earliest) edges_.push_back({key.first, key.second, ts});
  std::stable_sort(edges_.begin(), edges_.end(),
                   [](const store::FollowEdge& a, const store::FollowEdge& b) {
                     return a.timestamp < b.timestamp;
                   });
}

DiGraph TemporalGraph::snapshot_at(Timestamp t) const {
  DiGraph g;
  for (const auto& e : edges_) {
    if (e.timestamp >= t) break;
    const NodeId s = g.add_node(e.src);
    const NodeId d = g.add_node(e.dst);
    g.add_edge(s, d);
  }
  return g;
}

const DiGraph& SnapshotCursor::advance_to(Timestamp t) {
  if (last_ && t < *last_) throw ValidationError("snapshot cursor moved backwards in time");
  last_ = t;
  const auto edges = graph_->edges();
  while (next_ < edges.size() && edges[next_].timestamp < t) {
    const auto& e = edges[next_++];
    const NodeId s = snapshot_.add_node(e.src);
    const NodeId d = snapshot_.add_node(e.dst);
    snapshot_.add_edge(s, d);
  }
  return snapshot_;
}

double closeness(const DiGraph& g, NodeId u) {
  const std::size_t n = g.node_count();
  if (u >= n) throw ValidationError("unknown node id");
  if (n < 2) return 0.0;
  std::vector<int> dist(n, -1);
  std::vector<NodeId> queue{u};
  dist[u] = 0;
  std::uint64_t reached = 0;
  std::uint64_t total = 0;
  for (std::size_t head = 0; head < queue.size(); ++head) {
    const NodeId v = queue[head];
    for (auto neighbors : {g.out_neighbors(v), g.in_neighbors(v)}) {
      for (NodeId w : neighbors) {
        if (dist[w] >= 0) continue;
        dist[w] = dist[v] + 1;
        ++reached;
        total += static_cast<std::uint64_t>(dist[w]);
        queue.push_back(w);
      }
    }
  }
  if (reached == 0) return 0.0;
  const auto r = static_cast<double>(reached);
  return (r / static_cast<double>(n - 1)) * (r / static_cast<double>(total));
}

double constraint(const DiGraph& g, NodeId u) {
  if (u >= g.node_count()) throw ValidationError("unknown node id");
  const auto alters = g.out_neighbors(u);
  if (alters.empty()) return 0.0;

  std::vector<NodeId> ego{u};
  ego.insert(ego.end(), alters.begin(), alters.end());
  const std::size_t m = ego.size();

  // Undirected adjacency restricted to the ego network; row-normalized.
  std::vector<double> p(m * m, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    double degree = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      if (i != j && adjacent_undirected(g, ego[i], ego[j])) {
        p[i * m + j] = 1.0;
        degree += 1.0;
      }
    }
    if (degree > 0.0) {
      for (std::size_t j = 0; j < m; ++j) p[i * m + j] /= degree;
    }
  }

  double c = 0.0;
  for (std::size_t j = 1; j < m; ++j) {
    double indirect = 0.0;
    for (std::size_t q = 1; q < m; ++q) {
      if (q != j) indirect += p[q] * p[q * m + j];
    }
    const double term = p[j] + indirect;
    c += term * term;
  }
  return c;
}

double ego_density(const DiGraph& g, NodeId u) {
  if (u >= g.node_count()) throw ValidationError("unknown node id");
  const auto alters = g.out_neighbors(u);
  const std::size_t s = alters.size();
  if (s < 2) return 0.0;
  std::uint64_t ties = 0;
  for (NodeId a : alters) {
    for (NodeId b : g.out_neighbors(a)) {
      if (b != u && contains_sorted(alters, b)) ++ties;
    }
  }
  return static_cast<double>(ties) / static_cast<double>(s * (s - 1));
}

NetworkFeatures network_features(const DiGraph& g, NodeId u) {
  if (u >= g.node_count()) throw ValidationError("unknown node id");
  return {g.in_neighbors(u).size(), g.out_neighbors(u).size(), closeness(g, u),
          constraint(g, u), ego_density(g, u)};
}

double closeness(const DiGraph& g, std::string_view u) { return closeness(g, require(g, u)); }
double constraint(const DiGraph& g, std::string_view u) { return constraint(g, require(g, u)); }
double ego_density(const DiGraph& g, std::string_view u) { return ego_density(g, require(g, u)); }
NetworkFeatures network_features(const DiGraph& g, std::string_view u) {
  return network_features(g, require(g, u));
}

}  // namespace novelty::net
