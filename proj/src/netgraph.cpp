#include "roadvec/netgraph.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <set>
#include <string>

namespace roadvec::graph {

int RoadGraph::degree(NodeId n) const {
  int d = 0;
  for (const auto& [id, e] : edges) d += (e.a == n) + (e.b == n);
  return d;
}

std::vector<EdgeId> RoadGraph::incident(NodeId n) const {
  std::vector<EdgeId> out;
  for (const auto& [id, e] : edges)
    if (e.a == n || e.b == n) out.push_back(id);
  return out;
}

void RoadGraph::move_node(NodeId n, geom::Point p) {
  nodes.at(n) = p;
  for (auto& [id, e] : edges) {
    if (e.a == n) e.geometry.front() = p;
    if (e.b == n) e.geometry.back() = p;
  }
}

void RoadGraph::remove_orphan_nodes() {
  std::set<NodeId> used;
  for (const auto& [id, e] : edges) {
    used.insert(e.a);
    used.insert(e.b);
  }
  for (auto it = nodes.begin(); it != nodes.end();)
    it = used.count(it->first) ? std::next(it) : nodes.erase(it);
}

void RoadGraph::validate() const {
  for (const auto& [id, e] : edges) {
    if (!nodes.count(e.a) || !nodes.count(e.b))
      throw geometry_error("edge " + std::to_string(id) +
                           " references a missing node");
    geom::validate_polyline(e.geometry);
    if (geom::distance(e.geometry.front(), nodes.at(e.a)) > 1e-6 ||
        geom::distance(e.geometry.back(), nodes.at(e.b)) > 1e-6)
      throw geometry_error("edge " + std::to_string(id) +
                           " geometry detached from its nodes");
  }
  for (const auto& [id, p] : nodes) {
    (void)p;
    if (degree(id) == 0)
      throw geometry_error("node " + std::to_string(id) + " has no edges");
  }
}

std::vector<NodeId> junctions(const RoadGraph& g) {
  std::vector<NodeId> out;
  for (const auto& [id, p] : g.nodes) {
    (void)p;
    if (g.degree(id) >= 3) out.push_back(id);
  }
  return out;
}

void merge_degree2(RoadGraph& g) {
  bool changed = true;
  while (changed) {
    changed = false;
    for (const auto& [nid, pos] : g.nodes) {
      (void)pos;
      if (g.degree(nid) != 2) continue;
      const std::vector<EdgeId> inc = g.incident(nid);
      if (inc.size() != 2) continue;  // lone self-loop anchor
      Edge& e1 = g.edges.at(inc[0]);
      Edge& e2 = g.edges.at(inc[1]);
      if (e1.attrs.pending_circle || e2.attrs.pending_circle) continue;

      // Orient e1 to end at nid and e2 to start at nid, then concatenate.
      geom::Polyline head = e1.geometry;
      NodeId start = e1.a;
      if (e1.a == nid) {
        std::reverse(head.begin(), head.end());
        start = e1.b;
      }
      geom::Polyline tail = e2.geometry;
      NodeId finish = e2.b;
      if (e2.b == nid) {
        std::reverse(tail.begin(), tail.end());
        finish = e2.a;
      }
      head.insert(head.end(), tail.begin() + 1, tail.end());

      EdgeAttrs attrs = geom::length(e1.geometry) >= geom::length(e2.geometry)
                            ? e1.attrs
                            : e2.attrs;
      g.edges.erase(inc[0]);
      g.edges.erase(inc[1]);
      g.add_edge(start, finish, std::move(head), std::move(attrs));
      changed = true;
      break;  // node map mutated; restart the scan
    }
  }
  g.remove_orphan_nodes();
}

void dedup_parallel_edges(RoadGraph& g) {
  std::map<std::pair<NodeId, NodeId>, std::vector<EdgeId>> by_pair;
  for (const auto& [id, e] : g.edges)
    by_pair[{std::min(e.a, e.b), std::max(e.a, e.b)}].push_back(id);

  std::vector<EdgeId> doomed;
  for (const auto& [pair, ids] : by_pair) {
    (void)pair;
    if (ids.size() < 2) continue;
    // ids ascend; a later edge matching any earlier survivor is dropped.
    std::vector<EdgeId> kept;
    for (EdgeId id : ids) {
      const Edge& e = g.edges.at(id);
      bool dup = false;
      for (EdgeId kid : kept) {
        const Edge& k = g.edges.at(kid);
        if (e.a == k.a && e.geometry == k.geometry) dup = true;
        if (!dup && e.a == k.b && e.geometry.size() == k.geometry.size())
          dup = std::equal(e.geometry.begin(), e.geometry.end(),
                           k.geometry.rbegin());
        if (dup) break;
      }
      (dup ? doomed : kept).push_back(id);
    }
  }
  for (EdgeId id : doomed) g.edges.erase(id);
}

void contract_junction_clusters(RoadGraph& g, double min_length) {
  if (min_length < 0) throw param_error("min_length must be >= 0");
  // Fusing a node that carries an edge held for circle replacement would
  // drag ring geometry around (or degenerate it into an erasable loop).
  auto holds_circle = [&](NodeId n) {
    for (EdgeId id : g.incident(n))
      if (g.edges.at(id).attrs.pending_circle) return true;
    return false;
  };
  bool changed = true;
  while (changed) {
    changed = false;
    for (const auto& [id, e] : g.edges) {
      if (e.a == e.b || e.attrs.pending_circle) continue;
      if (g.degree(e.a) < 3 || g.degree(e.b) < 3) continue;
      if (holds_circle(e.a) || holds_circle(e.b)) continue;
      const double limit =
          std::max(e.attrs.mean_width.value_or(0.0), min_length);
      if (geom::length(e.geometry) >= limit) continue;

      const NodeId keep = e.a;
      const NodeId gone = e.b;
      const geom::Point mid = (g.nodes.at(keep) + g.nodes.at(gone)) * 0.5;
      g.edges.erase(id);
      for (auto& [fid, f] : g.edges) {
        if (f.a == gone) f.a = keep;
        if (f.b == gone) f.b = keep;
      }
      g.nodes.erase(gone);
      g.nodes.at(keep) = mid;

      std::vector<EdgeId> degenerate;
      for (EdgeId fid : g.incident(keep)) {
        Edge& f = g.edges.at(fid);
        if (f.a == keep) f.geometry.front() = mid;
        if (f.b == keep) f.geometry.back() = mid;
        f.geometry.erase(std::unique(f.geometry.begin(), f.geometry.end()),
                         f.geometry.end());
        if (f.geometry.size() < 2 ||
            (f.a == f.b && geom::length(f.geometry) < limit))
          degenerate.push_back(fid);
      }
      for (EdgeId fid : degenerate) g.edges.erase(fid);

      // Fusing one corner of a triangle cluster leaves two bit-identical
      // stubs to the third corner; keep the lowest id, like dedup does.
      const std::vector<EdgeId> inc = g.incident(keep);
      for (std::size_t i = 0; i < inc.size(); ++i) {
        if (!g.edges.count(inc[i])) continue;
        for (std::size_t j = i + 1; j < inc.size(); ++j) {
          if (!g.edges.count(inc[j])) continue;
          const Edge& x = g.edges.at(inc[i]);
          const Edge& y = g.edges.at(inc[j]);
          bool dup = x.a == y.a && x.b == y.b && x.geometry == y.geometry;
          if (!dup && x.a == y.b && x.b == y.a &&
              x.geometry.size() == y.geometry.size())
            dup = std::equal(x.geometry.begin(), x.geometry.end(),
                             y.geometry.rbegin());
          if (dup) g.edges.erase(inc[j]);
        }
      }
      changed = true;
      break;  // ids and degrees shifted under the scan; restart
    }
  }
  g.remove_orphan_nodes();
}

void prune_dangles(RoadGraph& g, double min_length) {
  if (min_length < 0) throw param_error("min_length must be >= 0");

  bool changed = true;
  while (changed) {
    changed = false;
    std::vector<EdgeId> doomed;
    for (const auto& [id, e] : g.edges) {
      if (e.attrs.pending_circle) continue;
      // Short self-loops are pinched noise blobs; they enclose nothing (a
      // zero-area loop is never a face, so loop collapse cannot reach them)
      // yet prop up the degree of the node they sit on, hiding the blob's
      // tail from the dangle rule below.
      const bool noise_loop =
          e.a == e.b && geom::length(e.geometry) < min_length;
      const bool dangle = (g.degree(e.a) == 1 || g.degree(e.b) == 1) &&
                          geom::length(e.geometry) < min_length;
      if (noise_loop || dangle) doomed.push_back(id);
    }
    for (EdgeId id : doomed) g.edges.erase(id);
    changed = !doomed.empty();
  }

  // Isolated components below the threshold go entirely (circle loops held
  // for replacement are kept regardless).
  std::map<NodeId, NodeId> comp;  // union-find, path halving
  std::function<NodeId(NodeId)> find = [&](NodeId n) {
    while (comp[n] != n) n = comp[n] = comp[comp[n]];
    return n;
  };
  for (const auto& [id, p] : g.nodes) {
    (void)p;
    comp[id] = id;
  }
  for (const auto& [id, e] : g.edges) {
    const NodeId ra = find(e.a), rb = find(e.b);
    if (ra != rb) comp[ra] = rb;
  }
  std::map<NodeId, double> comp_length;
  std::map<NodeId, bool> comp_keep;
  for (const auto& [id, e] : g.edges) {
    const NodeId r = find(e.a);
    comp_length[r] += geom::length(e.geometry);
    if (e.attrs.pending_circle) comp_keep[r] = true;
  }
  for (auto it = g.edges.begin(); it != g.edges.end();) {
    const NodeId r = find(it->second.a);
    const bool drop = comp_length[r] < min_length && !comp_keep[r];
    it = drop ? g.edges.erase(it) : std::next(it);
  }

  g.remove_orphan_nodes();
  merge_degree2(g);
}

namespace {

struct Dart {
  EdgeId e;
  bool fwd;
  friend bool operator<(const Dart& a, const Dart& b) {
    return a.e != b.e ? a.e < b.e : a.fwd < b.fwd;
  }
  friend bool operator==(const Dart&, const Dart&) = default;
};

NodeId leaving_node(const RoadGraph& g, Dart d) {
  const Edge& e = g.edges.at(d.e);
  return d.fwd ? e.a : e.b;
}

NodeId arrival_node(const RoadGraph& g, Dart d) {
  const Edge& e = g.edges.at(d.e);
  return d.fwd ? e.b : e.a;
}

double departure_bearing(const RoadGraph& g, Dart d) {
  const geom::Polyline& line = g.edges.at(d.e).geometry;
  return d.fwd ? geom::bearing(line[0], line[1])
               : geom::bearing(line[line.size() - 1], line[line.size() - 2]);
}

geom::Polyline oriented_geometry(const RoadGraph& g, Dart d) {
  geom::Polyline line = g.edges.at(d.e).geometry;
  if (!d.fwd) std::reverse(line.begin(), line.end());
  return line;
}

}  // namespace

std::vector<Loop> enumerate_faces(const RoadGraph& g) {
  // Darts sorted by departure bearing around each node.
  std::map<NodeId, std::vector<Dart>> around;
  for (const auto& [id, e] : g.edges) {
    around[e.a].push_back({id, true});
    around[e.b].push_back({id, false});
  }
  std::map<Dart, size_t> position;
  for (auto& [nid, darts] : around) {
    std::stable_sort(darts.begin(), darts.end(), [&](Dart a, Dart b) {
      return departure_bearing(g, a) < departure_bearing(g, b);
    });
    for (size_t i = 0; i < darts.size(); ++i) {
      if (i > 0 &&
          std::abs(departure_bearing(g, darts[i]) -
                   departure_bearing(g, darts[i - 1])) < 1e-12 &&
          !(darts[i].e == darts[i - 1].e))
        throw geometry_error("coincident edge directions at node " +
                             std::to_string(nid));
      position[darts[i]] = i;
    }
  }

  auto next_dart = [&](Dart d) {
    const NodeId v = arrival_node(g, d);
    const Dart reversed{d.e, !d.fwd};  // leaves v back along d
    const std::vector<Dart>& darts = around.at(v);
    const size_t p = position.at(reversed);
    return darts[(p + darts.size() - 1) % darts.size()];  // next clockwise
  };

  std::set<Dart> used;
  std::vector<Loop> out;
  for (const auto& [id, e] : g.edges) {
    (void)e;
    for (bool fwd : {true, false}) {
      const Dart start{id, fwd};
      if (used.count(start)) continue;
      Loop loop;
      geom::Ring ring;
      Dart d = start;
      do {
        used.insert(d);
        loop.edges.emplace_back(d.e, d.fwd);
        loop.nodes.push_back(leaving_node(g, d));
        const geom::Polyline part = oriented_geometry(g, d);
        ring.insert(ring.end(), part.begin() + (ring.empty() ? 0 : 1),
                    part.end());
        d = next_dart(d);
      } while (!(d == start));
      loop.area = geom::signed_ring_area(ring);
      if (loop.area > 1e-9) {
        loop.ring = std::move(ring);
        out.push_back(std::move(loop));
      }
    }
  }
  for (Loop& l : out) l.area = std::abs(l.area);
  return out;
}

}  // namespace roadvec::graph
