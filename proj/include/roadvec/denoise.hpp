#pragma once

#include <optional>
#include <vector>

#include "roadvec/common.hpp"
#include "roadvec/geom.hpp"
#include "roadvec/netgraph.hpp"
#include "roadvec/raster.hpp"

namespace roadvec::denoise {

// Pixel-space search window in mask coordinates.
struct PixelRect {
  int col = 0;
  int row = 0;
  int width = 0;
  int height = 0;
};

struct HoughParams {
  int r_min_px = 4;
  int r_max_px = 60;
  double support_min = 0.6;
};

// Circular Hough transform over the window's interior-class pixels: votes
// are accumulated per (center, radius) cell for off-road centers, and the
// candidates are tried best first -- each refined to the centroid of its
// plateau and kept only when enough of its circumference is covered by
// interior pixels and its inside is mostly clear (a filled blob supports
// every radius and is not a traffic circle; a rejected candidate does not
// end the search). The returned circle is in *pixel* units of the whole
// mask (center as fractional (col,row), radius in pixels); callers convert
// to world.
std::optional<geom::Circle> detect_circle(const raster::RasterMask& mask,
                                          const PixelRect& window,
                                          const HoughParams& params = {});

// Enumerates bounded faces and assigns kinds: faces under area_threshold
// (square meters) are noise unless a circle whose disc area is commensurate
// with the face (within a factor of three) is detected inside their
// bounding window padded by 20% per side; those become kind=circle, carry
// the detected circle in world units, and their edges get the
// pending_circle latch so chain merging and pruning leave them alone.
std::vector<graph::Loop> classify_loops(graph::RoadGraph& g,
                                        const raster::RasterMask& mask,
                                        double area_threshold,
                                        const HoughParams& params = {});

// Collapses kind=noise loops, smallest first. A loop's attachment nodes are
// its nodes with edges outside the loop: none or one -> loop deleted, two
// -> straight replacement edge, three or more -> star of spokes to the area
// centroid. Loops whose edges were consumed by an earlier collapse are
// skipped; collapsing adjacent loops can melt them into a new face that is
// still below area_threshold, so faces are re-enumerated and swept until
// none qualifies (faces touching pending-circle edges are left alone).
void collapse_noise_loops(graph::RoadGraph& g,
                          const std::vector<graph::Loop>& loops,
                          double area_threshold);

// Replaces kind=circle loops by their fitted circle discretized with arcs
// of at most max_arc_step_deg. Attachment nodes are re-projected radially
// onto the circle (attachments landing on the same circle point merge) and
// the circle is split into one edge per arc between consecutive
// attachments, provenance=circle.
void replace_circle_loops(graph::RoadGraph& g,
                          const std::vector<graph::Loop>& loops,
                          double max_arc_step_deg = 5.0);

struct CircleFit {
  geom::Point center;
  double radius = 0.0;
  double rmse = 0.0;  // root-mean-square radial residual
};

// Algebraic least-squares circle (Kasa) refined by at most 20 Gauss-Newton
// steps on the geometric distance. Throws geometry_error on collinear input.
CircleFit fit_circle(const std::vector<geom::Point>& points);

// Fills attrs.mean_width: twice the mean clearance from centerline samples
// (one per pixel of arc length) to the nearest non-interior pixel, measured
// with an exact Euclidean distance transform. Edges without any on-road
// sample keep mean_width unset.
void measure_widths(graph::RoadGraph& g, const raster::RasterMask& mask,
                    Exec exec = Exec::parallel);

// Sets attrs.double_lane on edges whose mean_width exceeds width_min.
void flag_double_lanes(graph::RoadGraph& g, double width_min);

// Replaces each double_lane edge by two parallel copies at +/- lane_offset
// (nullopt -> per-edge mean_width/4), both provenance=lane_duplicate,
// connected back to the original nodes wherever those keep other roads.
// Offset failures (tight curves) leave the edge in place with a warning on
// stderr. Returns the number of edges duplicated.
int duplicate_double_lanes(graph::RoadGraph& g,
                           std::optional<double> lane_offset = std::nullopt);

}  // namespace roadvec::denoise
