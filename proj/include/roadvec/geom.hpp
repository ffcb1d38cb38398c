#pragma once

#include <cmath>
#include <vector>

#include "roadvec/common.hpp"

namespace roadvec::geom {

// All geometry is planar in a projected metric CRS; coordinates are meters.
struct Point {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point& a, const Point& b) {
    return a.x == b.x && a.y == b.y;
  }
};

inline Point operator+(Point a, Point b) { return {a.x + b.x, a.y + b.y}; }
inline Point operator-(Point a, Point b) { return {a.x - b.x, a.y - b.y}; }
inline Point operator*(Point a, double s) { return {a.x * s, a.y * s}; }

inline double dot(Point a, Point b) { return a.x * b.x + a.y * b.y; }
inline double cross(Point a, Point b) { return a.x * b.y - a.y * b.x; }
inline double norm(Point a);
inline double distance(Point a, Point b);

// Ordered vertex chain, >= 2 vertices, no two consecutive vertices identical.
using Polyline = std::vector<Point>;

// Closed ring: front() == back(). Exterior rings are counter-clockwise,
// holes clockwise.
using Ring = std::vector<Point>;

struct Polygon {
  Ring exterior;
  std::vector<Ring> holes;
};

using PolygonSet = std::vector<Polygon>;

// Circle with a support fraction (used by the Hough verification step).
struct Circle {
  Point center;
  double radius = 0.0;
  double support = 0.0;  // fraction of circumference covered, in [0,1]
};

double length(const Polyline& line);
double point_segment_distance(Point p, Point a, Point b);
double point_polyline_distance(Point p, const Polyline& line);

// Point at arc-length position `s` along the line, clamped to [0, length].
Point point_at(const Polyline& line, double s);

// Bearing of the segment a->b in radians, atan2 convention.
double bearing(Point a, Point b);

double signed_ring_area(const Ring& ring);
double polygon_area(const Polygon& poly);
double polygon_set_area(const PolygonSet& polys);
Point ring_centroid(const Ring& ring);

// Even-odd rule over all rings (exterior and holes).
bool point_in_polygon(Point p, const Polygon& poly);

// Resamples so consecutive vertices are at most `step` apart; original
// vertices are kept.
Polyline densify(const Polyline& line, double step);

// Throws param_error if the polyline violates its invariants.
void validate_polyline(const Polyline& line);

// Cap/join arcs are discretized at <= 8 degrees per step, keeping the area
// error from discretization below 1% at the radii used here.
inline constexpr double kBufferArcStepDeg = 8.0;

// All points within `radius` of the polyline, round joins and round caps.
Polygon buffer_polyline(const Polyline& line, double radius);

// Area of the boolean intersection of two polygon sets.
double polygon_intersection_area(const PolygonSet& a, const PolygonSet& b);

PolygonSet polygon_union(const PolygonSet& polys);

// Symmetric Hausdorff distance between two polylines, densified at `step`;
// each sample is measured with the exact point-to-polyline distance.
double hausdorff_distance(const Polyline& a, const Polyline& b, double step,
                          Exec exec = Exec::parallel);

// Perpendicular offset; positive is left of the travel direction. Miter
// joins are limited to 2*|offset| and beveled beyond that. Throws
// geometry_error naming the vertex when the offset collapses on a tight
// inner curve.
Polyline offset_polyline(const Polyline& line, double offset);

inline double norm(Point a) { return std::sqrt(a.x * a.x + a.y * a.y); }
inline double distance(Point a, Point b) { return norm(a - b); }

}  // namespace roadvec::geom
