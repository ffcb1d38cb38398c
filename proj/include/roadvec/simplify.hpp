#pragma once

#include "roadvec/common.hpp"
#include "roadvec/geom.hpp"
#include "roadvec/netgraph.hpp"

namespace roadvec::simplify {

// Greedy incremental total-least-squares segmentation. The point window
// grows while the orthogonal RMS residual of its TLS line stays within
// epsilon (and no single residual exceeds 2*epsilon); on violation a
// breakpoint is emitted at the intersection of the two fitted lines, or at
// the midpoint of the boundary vertex's projections when the lines meet at
// less than 5 degrees. First and last input vertices are kept unchanged.
geom::Polyline fit_polyline(const geom::Polyline& points, double epsilon);

// fit_polyline applied to every edge geometry; node positions and the
// node/edge incidence are untouched. Edges are independent, so the
// parallel path fits them concurrently.
void simplify_graph(graph::RoadGraph& g, double epsilon,
                    Exec exec = Exec::parallel);

}  // namespace roadvec::simplify
