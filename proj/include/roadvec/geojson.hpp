#pragma once

#include <string>

#include "roadvec/netgraph.hpp"

namespace roadvec::geojson {

// Road networks as GeoJSON FeatureCollections: one LineString feature per
// edge, coordinates in x,y order, properties carrying the edge id,
// material, double_lane, provenance and (when present) mean_width.
// Numbers are written in shortest round-trip form, so geometry and
// attributes survive write/read losslessly; node identity is rebuilt by
// exact endpoint coordinates, which preserves the original topology
// because terminal vertices equal their node's position.

void write_network(const graph::RoadGraph& g, const std::string& path);

// Accepts only LineString features; anything else (Polygon, Point, bare
// geometry...) is a parse_error. Malformed JSON reports 1-based line and
// column. Edge ids come from the id property and must be unique.
graph::RoadGraph read_network(const std::string& path);

std::string material_name(graph::Material m);
graph::Material material_from_name(const std::string& s);  // parse_error
std::string provenance_name(graph::Provenance p);
graph::Provenance provenance_from_name(const std::string& s);  // parse_error

}  // namespace roadvec::geojson
