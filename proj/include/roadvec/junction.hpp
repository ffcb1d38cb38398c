#pragma once

#include <set>

#include "roadvec/common.hpp"
#include "roadvec/netgraph.hpp"

namespace roadvec::junction {

struct JunctionResult {
  bool flagged = false;  // no through-road candidate (best pair under 90 deg)
  double moved = 0.0;    // displacement of the junction node
};

// Straightens one junction: picks the incident edge pair whose departure
// bearings are closest to anti-parallel, fits a single total-least-squares
// line through the junction and the first `reach` vertices of both arms, and
// projects the junction plus those vertices onto it. Other incident edges
// keep their geometry except the terminal vertex, which follows the node.
// Vertices that are another node's position (short edges) take part in the
// fit but stay put. If the best pair spans less than 90 degrees, or the
// projection fails to leave the arms within angle_tol_deg of anti-parallel,
// the junction is left untouched and flagged instead.
//
// Throws param_error on an unknown node, degree < 3, reach < 1, or a
// non-positive tolerance.
JunctionResult smooth_junction(graph::RoadGraph& g, graph::NodeId node,
                               double angle_tol_deg, int reach);

struct SmoothStats {
  int rounds = 0;                       // passes actually executed
  int junctions = 0;                    // degree >= 3 nodes considered
  double last_round_max_move = 0.0;     // largest node move in the last pass
  std::set<graph::NodeId> flagged;      // no-through-road junctions
};

// Smooths every junction, lowest degree first, repeating full passes until
// no node moves more than 1e-3 m or max_rounds is reached. Node and edge
// incidence never changes, only coordinates.
SmoothStats smooth_all(graph::RoadGraph& g, double angle_tol_deg = 2.0,
                       int reach = 2, int max_rounds = 5);

}  // namespace roadvec::junction
