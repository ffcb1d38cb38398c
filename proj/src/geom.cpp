#include "roadvec/geom.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include <boost/geometry.hpp>
#include <boost/geometry/geometries/linestring.hpp>
#include <boost/geometry/geometries/multi_polygon.hpp>
#include <boost/geometry/geometries/point_xy.hpp>
#include <boost/geometry/geometries/polygon.hpp>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace bg = boost::geometry;

namespace roadvec::geom {

namespace {

using BPoint = bg::model::d2::point_xy<double>;
// Counter-clockwise outer ring, clockwise holes, closed: same convention as
// our Polygon type, so conversion is a plain copy.
using BPolygon = bg::model::polygon<BPoint, false, true>;
using BMultiPolygon = bg::model::multi_polygon<BPolygon>;
using BLinestring = bg::model::linestring<BPoint>;

BPolygon to_boost(const Polygon& p) {
  BPolygon out;
  for (const Point& v : p.exterior) out.outer().emplace_back(v.x, v.y);
  out.inners().resize(p.holes.size());
  for (size_t i = 0; i < p.holes.size(); ++i)
    for (const Point& v : p.holes[i]) out.inners()[i].emplace_back(v.x, v.y);
  return out;
}

BMultiPolygon to_boost(const PolygonSet& ps) {
  BMultiPolygon out;
  for (const Polygon& p : ps) out.push_back(to_boost(p));
  return out;
}

Polygon from_boost(const BPolygon& p) {
  Polygon out;
  for (const BPoint& v : p.outer()) out.exterior.push_back({v.x(), v.y()});
  for (const auto& ring : p.inners()) {
    Ring hole;
    for (const BPoint& v : ring) hole.push_back({v.x(), v.y()});
    out.holes.push_back(std::move(hole));
  }
  return out;
}

PolygonSet from_boost(const BMultiPolygon& mp) {
  PolygonSet out;
  for (const BPolygon& p : mp) out.push_back(from_boost(p));
  return out;
}

void check_valid(const BMultiPolygon& mp, const char* which) {
  std::string reason;
  if (!bg::is_valid(mp, reason))
    throw geometry_error(std::string("invalid ring topology in polygon set ") +
                         which + ": " + reason);
}

// Directed distance of the densified samples of `a` to the polyline `b`.
double directed_hausdorff(const Polyline& a, const Polyline& b, double step,
                          Exec exec) {
  const Polyline samples = densify(a, step);
  double best = 0.0;
  const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(samples.size());
  if (exec == Exec::parallel) {
#pragma omp parallel for reduction(max : best) schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i)
      best = std::max(best, point_polyline_distance(samples[i], b));
  } else {
    for (std::ptrdiff_t i = 0; i < n; ++i)
      best = std::max(best, point_polyline_distance(samples[i], b));
  }
  return best;
}

}  // namespace

double length(const Polyline& line) {
  double total = 0.0;
  for (size_t i = 1; i < line.size(); ++i) total += distance(line[i - 1], line[i]);
  return total;
}

double point_segment_distance(Point p, Point a, Point b) {
  const Point ab = b - a;
  const double len2 = dot(ab, ab);
  if (len2 == 0.0) return distance(p, a);
  const double t = std::clamp(dot(p - a, ab) / len2, 0.0, 1.0);
  return distance(p, a + ab * t);
}

double point_polyline_distance(Point p, const Polyline& line) {
  double best = distance(p, line.front());
  for (size_t i = 1; i < line.size(); ++i)
    best = std::min(best, point_segment_distance(p, line[i - 1], line[i]));
  return best;
}

Point point_at(const Polyline& line, double s) {
  if (s <= 0.0) return line.front();
  for (size_t i = 1; i < line.size(); ++i) {
    const double seg = distance(line[i - 1], line[i]);
    if (s <= seg) {
      const double t = seg > 0.0 ? s / seg : 0.0;
      return line[i - 1] + (line[i] - line[i - 1]) * t;
    }
    s -= seg;
  }
  return line.back();
}

double bearing(Point a, Point b) { return std::atan2(b.y - a.y, b.x - a.x); }

double signed_ring_area(const Ring& ring) {
  double twice = 0.0;
  for (size_t i = 1; i < ring.size(); ++i)
    twice += cross(ring[i - 1], ring[i]);
  return 0.5 * twice;
}

double polygon_area(const Polygon& poly) {
  double area = std::abs(signed_ring_area(poly.exterior));
  for (const Ring& h : poly.holes) area -= std::abs(signed_ring_area(h));
  return area;
}

double polygon_set_area(const PolygonSet& polys) {
  double area = 0.0;
  for (const Polygon& p : polys) area += polygon_area(p);
  return area;
}

Point ring_centroid(const Ring& ring) {
  double twice_area = 0.0, cx = 0.0, cy = 0.0;
  for (size_t i = 1; i < ring.size(); ++i) {
    const double w = cross(ring[i - 1], ring[i]);
    twice_area += w;
    cx += (ring[i - 1].x + ring[i].x) * w;
    cy += (ring[i - 1].y + ring[i].y) * w;
  }
  if (std::abs(twice_area) < 1e-12) {
    // Degenerate ring: fall back to the vertex mean.
    Point mean;
    const size_t n = ring.size() > 1 ? ring.size() - 1 : ring.size();
    for (size_t i = 0; i < n; ++i) mean = mean + ring[i];
    return mean * (1.0 / static_cast<double>(n));
  }
  return {cx / (3.0 * twice_area), cy / (3.0 * twice_area)};
}

bool point_in_polygon(Point p, const Polygon& poly) {
  bool inside = false;
  auto cast = [&](const Ring& ring) {
    for (size_t i = 1; i < ring.size(); ++i) {
      const Point& a = ring[i - 1];
      const Point& b = ring[i];
      if ((a.y > p.y) != (b.y > p.y)) {
        const double xcross = a.x + (b.x - a.x) * (p.y - a.y) / (b.y - a.y);
        if (p.x < xcross) inside = !inside;
      }
    }
  };
  cast(poly.exterior);
  for (const Ring& h : poly.holes) cast(h);
  return inside;
}

Polyline densify(const Polyline& line, double step) {
  if (step <= 0.0) throw param_error("densify: step must be > 0");
  Polyline out;
  out.push_back(line.front());
  for (size_t i = 1; i < line.size(); ++i) {
    const double seg = distance(line[i - 1], line[i]);
    const int pieces = std::max(1, static_cast<int>(std::ceil(seg / step)));
    for (int k = 1; k <= pieces; ++k) {
      const double t = static_cast<double>(k) / pieces;
      out.push_back(line[i - 1] + (line[i] - line[i - 1]) * t);
    }
  }
  return out;
}

void validate_polyline(const Polyline& line) {
  if (line.size() < 2) throw param_error("polyline needs >= 2 vertices");
  for (size_t i = 1; i < line.size(); ++i)
    if (line[i] == line[i - 1])
      throw param_error("polyline has identical consecutive vertices");
  if (!(length(line) > 0.0)) throw param_error("polyline has zero length");
}

Polygon buffer_polyline(const Polyline& line, double radius) {
  if (!(radius > 0.0)) throw param_error("buffer radius must be > 0");
  validate_polyline(line);

  constexpr int kPointsPerCircle =
      static_cast<int>(360.0 / kBufferArcStepDeg);  // 8 deg/step
  BLinestring ls;
  for (const Point& p : line) ls.emplace_back(p.x, p.y);

  bg::strategy::buffer::distance_symmetric<double> dist(radius);
  bg::strategy::buffer::join_round join(kPointsPerCircle);
  bg::strategy::buffer::end_round end(kPointsPerCircle);
  bg::strategy::buffer::point_circle circ(kPointsPerCircle);
  bg::strategy::buffer::side_straight side;

  BMultiPolygon out;
  bg::buffer(ls, out, dist, side, join, end, circ);
  if (out.size() != 1)
    throw geometry_error("buffer of a connected polyline is not one polygon");
  return from_boost(out.front());
}

double polygon_intersection_area(const PolygonSet& a, const PolygonSet& b) {
  if (a.empty() || b.empty()) return 0.0;
  BMultiPolygon ba = to_boost(a);
  BMultiPolygon bb = to_boost(b);
  bg::correct(ba);
  bg::correct(bb);
  check_valid(ba, "a");
  check_valid(bb, "b");
  BMultiPolygon inter;
  bg::intersection(ba, bb, inter);
  return bg::area(inter);
}

PolygonSet polygon_union(const PolygonSet& polys) {
  BMultiPolygon acc;
  for (const Polygon& p : polys) {
    BMultiPolygon one;
    one.push_back(to_boost(p));
    bg::correct(one);
    BMultiPolygon merged;
    bg::union_(acc, one, merged);
    acc = std::move(merged);
  }
  return from_boost(acc);
}

double hausdorff_distance(const Polyline& a, const Polyline& b, double step,
                          Exec exec) {
  if (step <= 0.0) throw param_error("hausdorff: step must be > 0");
  validate_polyline(a);
  validate_polyline(b);
  return std::max(directed_hausdorff(a, b, step, exec),
                  directed_hausdorff(b, a, step, exec));
}

Polyline offset_polyline(const Polyline& line, double offset) {
  if (offset == 0.0) throw param_error("offset must be non-zero");
  validate_polyline(line);
  const double r = std::abs(offset);
  if (!(length(line) > r))
    throw geometry_error("polyline shorter than |offset|, would collapse");

  // Per-segment unit directions and left normals.
  const size_t nseg = line.size() - 1;
  std::vector<Point> dir(nseg), nrm(nseg);
  for (size_t i = 0; i < nseg; ++i) {
    Point d = line[i + 1] - line[i];
    const double len = norm(d);
    dir[i] = d * (1.0 / len);
    nrm[i] = {-dir[i].y, dir[i].x};
  }

  Polyline out;
  out.push_back(line.front() + nrm[0] * offset);
  for (size_t j = 1; j < nseg; ++j) {
    const Point v = line[j];
    const Point p1 = v + nrm[j - 1] * offset;  // end of previous offset segment
    const Point p2 = v + nrm[j] * offset;      // start of next offset segment
    const double sine = cross(dir[j - 1], dir[j]);
    if (std::abs(sine) < 1e-9) {
      out.push_back(p1);  // straight-through join
      continue;
    }
    // Intersection of the two offset lines: p1 + t*dir[j-1] == p2 + s*dir[j].
    const double t = cross(p2 - p1, dir[j]) / sine;
    const Point miter = p1 + dir[j - 1] * t;
    if (distance(miter, v) > 2.0 * r) {
      out.push_back(p1);
      out.push_back(p2);
    } else {
      out.push_back(miter);
    }
  }
  out.push_back(line.back() + nrm[nseg - 1] * offset);

  // Drop exact duplicates produced by degenerate bevels.
  Polyline dedup;
  for (const Point& p : out)
    if (dedup.empty() || !(distance(dedup.back(), p) < 1e-12)) dedup.push_back(p);

  if (dedup.size() < 2)
    throw geometry_error("offset collapsed the polyline at vertex 0");

  // A folded-back output segment means the offset collapsed on an inner curve.
  for (size_t i = 1; i < dedup.size(); ++i) {
    const Point mid = (dedup[i - 1] + dedup[i]) * 0.5;
    size_t seg = 0;
    double best = point_segment_distance(mid, line[0], line[1]);
    for (size_t k = 1; k < nseg; ++k) {
      const double d = point_segment_distance(mid, line[k], line[k + 1]);
      if (d < best) { best = d; seg = k; }
    }
    if (dot(dedup[i] - dedup[i - 1], dir[seg]) <= 0.0)
      throw geometry_error("offset collapse near vertex " +
                           std::to_string(seg + 1));
  }
  return dedup;
}

}  // namespace roadvec::geom
