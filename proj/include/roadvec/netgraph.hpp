#pragma once

#include <map>
#include <optional>
#include <utility>
#include <vector>

#include "roadvec/common.hpp"
#include "roadvec/geom.hpp"

namespace roadvec::graph {

using NodeId = int;
using EdgeId = int;

enum class Material { unknown, processed, gravel, sand };
enum class Provenance { traced, collapsed, circle, lane_duplicate };

struct EdgeAttrs {
  bool double_lane = false;
  Material material = Material::unknown;
  std::optional<double> mean_width;  // meters
  Provenance provenance = Provenance::traced;
  // Transient: edge belongs to a loop kept for circle replacement, so
  // degree-2 chain merging must not swallow it.
  bool pending_circle = false;
};

struct Edge {
  NodeId a = -1;
  NodeId b = -1;
  geom::Polyline geometry;  // front() at node a, back() at node b
  EdgeAttrs attrs;
};

struct RoadGraph {
  std::map<NodeId, geom::Point> nodes;
  std::map<EdgeId, Edge> edges;
  NodeId next_node = 0;
  EdgeId next_edge = 0;

  NodeId add_node(geom::Point p) {
    nodes[next_node] = p;
    return next_node++;
  }
  EdgeId add_edge(NodeId a, NodeId b, geom::Polyline geometry,
                  EdgeAttrs attrs = {}) {
    edges[next_edge] = Edge{a, b, std::move(geometry), std::move(attrs)};
    return next_edge++;
  }

  bool empty() const { return edges.empty(); }
  // Self-loops count 2 toward their anchor's degree.
  int degree(NodeId n) const;
  // Incident edge ids; a self-loop appears once.
  std::vector<EdgeId> incident(NodeId n) const;
  // Moves a node and the terminal vertices of its incident edges with it.
  void move_node(NodeId n, geom::Point p);
  void remove_orphan_nodes();
  // Checks the structural invariants, throws geometry_error on violation.
  void validate() const;
};

enum class LoopKind { undetermined, noise, circle };

struct Loop {
  std::vector<std::pair<EdgeId, bool>> edges;  // (edge id, traversed forward)
  std::vector<NodeId> nodes;                   // node cycle, nodes[i] starts edges[i]
  geom::Ring ring;                             // closed boundary geometry
  double area = 0.0;
  LoopKind kind = LoopKind::undetermined;
  std::optional<geom::Circle> circle;          // attached when kind == circle
};

// Nodes with degree >= 3.
std::vector<NodeId> junctions(const RoadGraph& g);

// Repeatedly removes edges with a degree-1 endpoint shorter than
// min_length along with short pinched self-loops (zero-area noise blobs the
// face machinery cannot see), drops isolated components of total length <
// min_length, then re-merges chains through degree-2 nodes. Edges held for
// circle replacement are kept.
void prune_dangles(RoadGraph& g, double min_length);

// Merges every pair of edges meeting at a degree-2 node into one polyline
// (skipping self-loops and edges held for circle replacement).
void merge_degree2(RoadGraph& g);

// Drops parallel edges whose geometry is exactly the same polyline (either
// orientation), keeping the lowest edge id. Simplification folds pixel-scale
// double connections -- thinning diamonds around one-pixel mask holes --
// onto each other; the identical copies say nothing and break the angular
// walk's distinct-bearing premise.
void dedup_parallel_edges(RoadGraph& g);

// Fuses junction pairs closer than the local road width. Thinning splits a
// wide X crossing into two nearby 3-way nodes joined by a stub no longer
// than the crossing blob itself, so an edge between two degree>=3 nodes
// shorter than its own mean_width (floored at min_length) is treated as one
// junction: the stub goes away and both nodes merge at the segment midpoint.
// Fusion can degenerate a parallel stub into a tiny self-loop; those are
// dropped too. Runs to a fixed point; self-loops and edges latched for
// circle replacement are never contracted. Call measure_widths first.
void contract_junction_clusters(RoadGraph& g, double min_length = 0.0);

// All bounded faces of the planar subdivision, found by angular walking:
// at each node continue with the next incident dart clockwise from the
// reversed arrival direction. Bounded faces come out counter-clockwise.
std::vector<Loop> enumerate_faces(const RoadGraph& g);

}  // namespace roadvec::graph
