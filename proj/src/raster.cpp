#include "roadvec/raster.hpp"

#include <algorithm>
#include <cmath>

#include "roadvec/netgraph.hpp"

namespace roadvec::raster {

void validate(const GeoTransform& t) {
  if (t.pixel_width == 0.0 || t.pixel_height == 0.0)
    throw param_error("degenerate transform: zero pixel size");
  const double det = t.pixel_width * t.pixel_height - t.skew_x * t.skew_y;
  if (det == 0.0) throw param_error("degenerate transform: zero determinant");
}

geom::Point pixel_to_world(const GeoTransform& t, double col, double row) {
  return {t.origin_x + col * t.pixel_width + row * t.skew_x,
          t.origin_y + col * t.skew_y + row * t.pixel_height};
}

void world_to_pixel(const GeoTransform& t, geom::Point p, double& col,
                    double& row) {
  const double det = t.pixel_width * t.pixel_height - t.skew_x * t.skew_y;
  const double dx = p.x - t.origin_x;
  const double dy = p.y - t.origin_y;
  col = (t.pixel_height * dx - t.skew_x * dy) / det;
  row = (t.pixel_width * dy - t.skew_y * dx) / det;
}

namespace {

// Distance from p to the polyline with flat caps: positions past the free
// ends do not count (roads are cut off square at dead ends), interior
// vertices keep round joins.
double flat_cap_distance(geom::Point p, const geom::Polyline& line) {
  double best = 1e300;
  const size_t nseg = line.size() - 1;
  for (size_t i = 0; i < nseg; ++i) {
    const geom::Point a = line[i], b = line[i + 1];
    const geom::Point ab = b - a;
    const double len2 = geom::dot(ab, ab);
    const double t = len2 > 0.0 ? geom::dot(p - a, ab) / len2 : 0.0;
    if (t < 0.0) {
      if (i > 0) best = std::min(best, geom::distance(p, a));
    } else if (t > 1.0) {
      if (i + 1 < nseg) best = std::min(best, geom::distance(p, b));
    } else {
      best = std::min(best, geom::distance(p, a + ab * t));
    }
  }
  return best;
}

struct PixelBox {
  int c0, r0, c1, r1;  // inclusive
  bool empty() const { return c0 > c1 || r0 > r1; }
};

PixelBox line_pixel_box(const geom::Polyline& line, const GeoTransform& t,
                        int width, int height, double pad_px) {
  double cmin = 1e300, cmax = -1e300, rmin = 1e300, rmax = -1e300;
  for (const geom::Point& p : line) {
    double c, r;
    world_to_pixel(t, p, c, r);
    cmin = std::min(cmin, c);
    cmax = std::max(cmax, c);
    rmin = std::min(rmin, r);
    rmax = std::max(rmax, r);
  }
  PixelBox box;
  box.c0 = std::max(0, static_cast<int>(std::floor(cmin - pad_px)));
  box.r0 = std::max(0, static_cast<int>(std::floor(rmin - pad_px)));
  box.c1 = std::min(width - 1, static_cast<int>(std::ceil(cmax + pad_px)));
  box.r1 = std::min(height - 1, static_cast<int>(std::ceil(rmax + pad_px)));
  return box;
}

}  // namespace

RasterMask rasterize_centerlines(const std::vector<geom::Polyline>& lines,
                                 const GeoTransform& t, int width, int height,
                                 double road_width, int contour_thickness,
                                 Exec exec) {
  validate(t);
  if (width <= 0 || height <= 0) throw param_error("raster dimensions must be positive");
  if (!(road_width > 0.0)) throw param_error("road_width must be > 0");
  if (contour_thickness < 0) throw param_error("contour_thickness must be >= 0");

  RasterMask mask;
  mask.width = width;
  mask.height = height;
  mask.transform = t;
  mask.classes.assign(size_t(width) * height, kOther);

  const double half = road_width / 2.0;
  const double px = std::min(std::abs(t.pixel_width), std::abs(t.pixel_height));
  const double pad = half / px + 2.0;

  // Mark the road region. Edges are processed one at a time; rows within an
  // edge's bounding box are independent.
  for (const geom::Polyline& line : lines) {
    if (line.size() < 2) continue;
    const PixelBox box = line_pixel_box(line, t, width, height, pad);
    if (box.empty()) continue;
    if (exec == Exec::parallel) {
#pragma omp parallel for schedule(static)
      for (int r = box.r0; r <= box.r1; ++r)
        for (int c = box.c0; c <= box.c1; ++c)
          if (flat_cap_distance(pixel_to_world(t, c, r), line) <= half)
            mask.at(c, r) = kInterior;
    } else {
      for (int r = box.r0; r <= box.r1; ++r)
        for (int c = box.c0; c <= box.c1; ++c)
          if (flat_cap_distance(pixel_to_world(t, c, r), line) <= half)
            mask.at(c, r) = kInterior;
    }
  }

  if (contour_thickness == 0) return mask;

  // Carve the contour ring out of the region: a road pixel becomes contour
  // when any pixel within the Chebyshev radius is off-road (pixels past the
  // image border count as off-road).
  const std::vector<uint8_t> region = mask.classes;
  auto ring_pass = [&](int r) {
    for (int c = 0; c < width; ++c) {
      if (region[size_t(r) * width + c] != kInterior) continue;
      bool boundary = false;
      for (int dr = -contour_thickness; dr <= contour_thickness && !boundary; ++dr)
        for (int dc = -contour_thickness; dc <= contour_thickness; ++dc) {
          const int rr = r + dr, cc = c + dc;
          if (rr < 0 || rr >= height || cc < 0 || cc >= width ||
              region[size_t(rr) * width + cc] != kInterior) {
            boundary = true;
            break;
          }
        }
      if (boundary) mask.at(c, r) = kContour;
    }
  };
  if (exec == Exec::parallel) {
#pragma omp parallel for schedule(static)
    for (int r = 0; r < height; ++r) ring_pass(r);
  } else {
    for (int r = 0; r < height; ++r) ring_pass(r);
  }
  return mask;
}

RasterMask rasterize_network(const graph::RoadGraph& g, const GeoTransform& t,
                             int width, int height, double road_width,
                             int contour_thickness, Exec exec) {
  std::vector<geom::Polyline> lines;
  lines.reserve(g.edges.size());
  for (const auto& [id, e] : g.edges) lines.push_back(e.geometry);
  return rasterize_centerlines(lines, t, width, height, road_width,
                               contour_thickness, exec);
}

namespace {

// Shared scan: visit every pixel whose center is inside the polygon.
template <typename F>
void scan_polygon(const GeoTransform& t, int width, int height,
                  const geom::Polygon& poly, F&& visit) {
  double cmin = 1e300, cmax = -1e300, rmin = 1e300, rmax = -1e300;
  for (const geom::Point& p : poly.exterior) {
    double c, r;
    world_to_pixel(t, p, c, r);
    cmin = std::min(cmin, c);
    cmax = std::max(cmax, c);
    rmin = std::min(rmin, r);
    rmax = std::max(rmax, r);
  }
  const int c0 = std::max(0, static_cast<int>(std::floor(cmin)) - 1);
  const int r0 = std::max(0, static_cast<int>(std::floor(rmin)) - 1);
  const int c1 = std::min(width - 1, static_cast<int>(std::ceil(cmax)) + 1);
  const int r1 = std::min(height - 1, static_cast<int>(std::ceil(rmax)) + 1);
  for (int r = r0; r <= r1; ++r)
    for (int c = c0; c <= c1; ++c)
      if (geom::point_in_polygon(pixel_to_world(t, c, r), poly)) visit(c, r);
}

}  // namespace

std::vector<uint8_t> sample_window(const RasterMask& m,
                                   const geom::Polygon& poly) {
  std::vector<uint8_t> out;
  scan_polygon(m.transform, m.width, m.height, poly,
               [&](int c, int r) { out.push_back(m.at(c, r)); });
  return out;
}

std::vector<uint8_t> sample_window(const LulcRaster& m,
                                   const geom::Polygon& poly) {
  std::vector<uint8_t> out;
  scan_polygon(m.transform, m.width, m.height, poly, [&](int c, int r) {
    out.push_back(m.labels[size_t(r) * m.width + c]);
  });
  return out;
}

std::vector<std::vector<uint16_t>> sample_window(const ImageRaster& img,
                                                 const geom::Polygon& poly) {
  std::vector<std::vector<uint16_t>> out(img.bands.size());
  scan_polygon(img.transform, img.width, img.height, poly, [&](int c, int r) {
    for (size_t b = 0; b < img.bands.size(); ++b)
      out[b].push_back(img.bands[b][size_t(r) * img.width + c]);
  });
  return out;
}

}  // namespace roadvec::raster
