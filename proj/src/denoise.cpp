#include "roadvec/denoise.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <map>
#include <numbers>
#include <set>
#include <vector>

namespace roadvec::denoise {
namespace {

using geom::Point;

constexpr double kPi = std::numbers::pi;

struct PxPoint {
  int c, r;
};

double mean_pixel_size(const raster::GeoTransform& t) {
  return 0.5 * (std::abs(t.pixel_width) + std::abs(t.pixel_height));
}

// Best (votes/circumference) radius for one candidate center.
void score_center(const std::vector<PxPoint>& px, int cc, int cr, int r_min,
                  int r_max, double* best_score, int* best_r) {
  thread_local std::vector<int> votes;
  votes.assign(static_cast<std::size_t>(r_max) + 1, 0);
  for (const PxPoint& p : px) {
    const double d = std::hypot(p.c - cc, p.r - cr);
    const int ri = static_cast<int>(std::lround(d));
    if (ri >= r_min && ri <= r_max) ++votes[ri];
  }
  *best_score = -1.0;
  *best_r = r_min;
  for (int r = r_min; r <= r_max; ++r) {
    const double s = votes[r] / (2.0 * kPi * r);
    if (s > *best_score) {
      *best_score = s;
      *best_r = r;
    }
  }
}

// A circumference sample counts as covered when some interior pixel centre
// lies within one pixel of it (Euclidean, not a 3x3 box: the box is loose
// enough to let a square ring fake 60% coverage).
double circle_support(const raster::RasterMask& mask, double cx, double cy,
                      double radius) {
  const int kSamples = 360;
  int covered = 0;
  for (int k = 0; k < kSamples; ++k) {
    const double th = 2.0 * kPi * k / kSamples;
    const double sx = cx + radius * std::cos(th);
    const double sy = cy + radius * std::sin(th);
    const int pc = static_cast<int>(std::lround(sx));
    const int pr = static_cast<int>(std::lround(sy));
    bool hit = false;
    for (int dr = -1; dr <= 1 && !hit; ++dr)
      for (int dc = -1; dc <= 1 && !hit; ++dc)
        if (std::hypot(pc + dc - sx, pr + dr - sy) <= 1.0 &&
            mask.in_bounds(pc + dc, pr + dr) &&
            mask.at(pc + dc, pr + dr) == raster::kInterior)
          hit = true;
    if (hit) ++covered;
  }
  return static_cast<double>(covered) / kSamples;
}

// Fraction of the disc around the candidate center that is road. A genuine
// traffic circle has a clear island inside the ring.
double inner_fill(const raster::RasterMask& mask, double cx, double cy,
                  double radius) {
  const double rr = 0.6 * radius;
  const int c0 = static_cast<int>(std::floor(cx - rr));
  const int c1 = static_cast<int>(std::ceil(cx + rr));
  const int r0 = static_cast<int>(std::floor(cy - rr));
  const int r1 = static_cast<int>(std::ceil(cy + rr));
  long long total = 0, road = 0;
  for (int r = r0; r <= r1; ++r)
    for (int c = c0; c <= c1; ++c) {
      if (std::hypot(c - cx, r - cy) > rr) continue;
      if (!mask.in_bounds(c, r)) continue;
      ++total;
      if (mask.at(c, r) == raster::kInterior) ++road;
    }
  if (total == 0) return 0.0;
  return static_cast<double>(road) / static_cast<double>(total);
}

void rewire_node(graph::RoadGraph& g, graph::NodeId from, graph::NodeId to) {
  const Point target = g.nodes.at(to);
  for (graph::EdgeId id : g.incident(from)) {
    graph::Edge& e = g.edges.at(id);
    if (e.a == from) {
      e.a = to;
      e.geometry.front() = target;
    }
    if (e.b == from) {
      e.b = to;
      e.geometry.back() = target;
    }
  }
  g.nodes.erase(from);
}

// Attachment nodes: loop nodes that still touch edges outside the loop.
std::vector<graph::NodeId> attachments(const graph::RoadGraph& g,
                                       const graph::Loop& loop,
                                       const std::set<graph::EdgeId>& own) {
  std::set<graph::NodeId> uniq(loop.nodes.begin(), loop.nodes.end());
  std::vector<graph::NodeId> out;
  for (graph::NodeId n : uniq) {
    for (graph::EdgeId id : g.incident(n)) {
      if (!own.count(id)) {
        out.push_back(n);
        break;
      }
    }
  }
  return out;  // std::set iteration: already ascending
}

bool edges_alive(const graph::RoadGraph& g, const graph::Loop& loop) {
  for (const auto& [id, fwd] : loop.edges)
    if (!g.edges.count(id)) return false;
  return true;
}

// ---- exact Euclidean distance transform (squared), Felzenszwalb ----------

void edt_1d(std::vector<double>& f, std::vector<double>& d,
            std::vector<int>& v, std::vector<double>& z, int n) {
  int k = 0;
  v[0] = 0;
  z[0] = -std::numeric_limits<double>::infinity();
  z[1] = std::numeric_limits<double>::infinity();
  for (int q = 1; q < n; ++q) {
    double s = ((f[q] + double(q) * q) - (f[v[k]] + double(v[k]) * v[k])) /
               (2.0 * q - 2.0 * v[k]);
    while (s <= z[k]) {
      --k;
      s = ((f[q] + double(q) * q) - (f[v[k]] + double(v[k]) * v[k])) /
          (2.0 * q - 2.0 * v[k]);
    }
    ++k;
    v[k] = q;
    z[k] = s;
    z[k + 1] = std::numeric_limits<double>::infinity();
  }
  k = 0;
  for (int q = 0; q < n; ++q) {
    while (z[k + 1] < q) ++k;
    d[q] = double(q - v[k]) * (q - v[k]) + f[v[k]];
  }
}

// Squared distance from every pixel to the nearest non-interior pixel; the
// outside of the raster counts as non-interior (one-pixel virtual pad).
std::vector<double> clearance_squared(const raster::RasterMask& mask) {
  const int w = mask.width + 2, h = mask.height + 2;
  // Large finite stand-in for "no source here": a literal infinity makes the
  // envelope intercepts evaluate inf-inf = NaN between interior cells.
  const double far = 1e18;
  std::vector<double> grid(static_cast<std::size_t>(w) * h, 0.0);
  for (int r = 0; r < mask.height; ++r)
    for (int c = 0; c < mask.width; ++c)
      grid[std::size_t(r + 1) * w + (c + 1)] =
          mask.at(c, r) == raster::kInterior ? far : 0.0;

#pragma omp parallel
  {
    std::vector<double> f(std::max(w, h)), d(std::max(w, h));
    std::vector<int> v(std::max(w, h));
    std::vector<double> z(static_cast<std::size_t>(std::max(w, h)) + 1);
#pragma omp for
    for (int c = 0; c < w; ++c) {
      for (int r = 0; r < h; ++r) f[r] = grid[std::size_t(r) * w + c];
      edt_1d(f, d, v, z, h);
      for (int r = 0; r < h; ++r) grid[std::size_t(r) * w + c] = d[r];
    }
#pragma omp for
    for (int r = 0; r < h; ++r) {
      for (int c = 0; c < w; ++c) f[c] = grid[std::size_t(r) * w + c];
      edt_1d(f, d, v, z, w);
      for (int c = 0; c < w; ++c) grid[std::size_t(r) * w + c] = d[c];
    }
  }

  std::vector<double> out(static_cast<std::size_t>(mask.width) * mask.height);
  for (int r = 0; r < mask.height; ++r)
    for (int c = 0; c < mask.width; ++c)
      out[std::size_t(r) * mask.width + c] =
          grid[std::size_t(r + 1) * w + (c + 1)];
  return out;
}

}  // namespace

std::optional<geom::Circle> detect_circle(const raster::RasterMask& mask,
                                          const PixelRect& window,
                                          const HoughParams& params) {
  if (window.width <= 0 || window.height <= 0 ||
      !mask.in_bounds(window.col, window.row) ||
      !mask.in_bounds(window.col + window.width - 1,
                      window.row + window.height - 1))
    throw param_error("detect_circle: window outside mask");
  if (params.r_min_px < 1 || params.r_max_px < params.r_min_px)
    throw param_error("detect_circle: bad radius range");

  std::vector<PxPoint> px;
  for (int r = window.row; r < window.row + window.height; ++r)
    for (int c = window.col; c < window.col + window.width; ++c)
      if (mask.at(c, r) == raster::kInterior) px.push_back({c, r});
  if (px.empty()) return std::nullopt;

  const int n_centers = window.width * window.height;
  std::vector<double> best_score(n_centers, -1.0);
  std::vector<int> best_r(n_centers, 0);
#pragma omp parallel for schedule(dynamic, 8)
  for (int i = 0; i < n_centers; ++i) {
    const int cc = window.col + i % window.width;
    const int cr = window.row + i / window.width;
    // A ring's centre sits off-road by construction. Skipping interior
    // cells keeps the vote peak from landing in the middle of a plain wide
    // band, where every radius up to the clearance scores a full
    // circumference.
    if (mask.at(cc, cr) == raster::kInterior) continue;
    score_center(px, cc, cr, params.r_min_px, params.r_max_px,
                 &best_score[i], &best_r[i]);
  }

  // Candidate centres, best vote score first. A candidate that fails the
  // verification below must not end the search: a stray mask hole inside a
  // junction blob can outscore a genuine ring, and the ring is only found
  // after such fakes are rejected.
  std::vector<int> order;
  for (int i = 0; i < n_centers; ++i)
    if (best_score[i] >= 0.8 * params.support_min) order.push_back(i);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (best_score[a] != best_score[b]) return best_score[a] > best_score[b];
    return a < b;
  });
  if (order.size() > 256) order.resize(256);

  for (const int cand : order) {
    const int pc = window.col + cand % window.width;
    const int pr = window.row + cand / window.width;
    const int prad = best_r[cand];

    // Sub-cell refinement: centroid of the near-peak plateau. The plateau
    // is a function of the vote pattern alone, so integer translations of
    // the window content move the result by exactly the same amount.
    double sum_c = 0, sum_r = 0;
    int count = 0;
    for (int dr = -2; dr <= 2; ++dr)
      for (int dc = -2; dc <= 2; ++dc) {
        const int cc = pc + dc, cr = pr + dr;
        if (cc < window.col || cc >= window.col + window.width ||
            cr < window.row || cr >= window.row + window.height)
          continue;
        const int i = (cr - window.row) * window.width + (cc - window.col);
        if (best_score[i] >= 0.95 * best_score[cand] &&
            std::abs(best_r[i] - prad) <= 1) {
          sum_c += cc;
          sum_r += cr;
          ++count;
        }
      }
    const double cx = sum_c / count;
    const double cy = sum_r / count;

    // Radius refinement. The vote score saturates across every radius a
    // wide road annulus covers, so the raw argmax bin lands wherever
    // rasterization noise peaks. Take the mean pixel distance over the
    // contiguous run of bins scoring at least half the peak (band bins sit
    // near the peak, bins past the rims near zero); the distance multiset
    // is shift-invariant, keeping the estimate exactly translation
    // equivariant.
    std::vector<int> votes(static_cast<std::size_t>(params.r_max_px) + 1, 0);
    std::vector<double> dist_sum(
        static_cast<std::size_t>(params.r_max_px) + 1, 0.0);
    for (const PxPoint& p : px) {
      const double d = std::hypot(p.c - cx, p.r - cy);
      const int ri = static_cast<int>(std::lround(d));
      if (ri >= params.r_min_px && ri <= params.r_max_px) {
        ++votes[ri];
        dist_sum[ri] += d;
      }
    }
    auto bin_score = [&](int r) { return votes[r] / (2.0 * kPi * r); };
    int rbest = params.r_min_px;
    for (int r = params.r_min_px + 1; r <= params.r_max_px; ++r)
      if (bin_score(r) > bin_score(rbest)) rbest = r;
    if (votes[rbest] == 0) continue;
    int lo = rbest, hi = rbest;
    while (lo > params.r_min_px && bin_score(lo - 1) >= 0.5 * bin_score(rbest))
      --lo;
    while (hi < params.r_max_px && bin_score(hi + 1) >= 0.5 * bin_score(rbest))
      ++hi;
    double band_sum = 0.0;
    long long band_n = 0;
    for (int r = lo; r <= hi; ++r) {
      band_sum += dist_sum[r];
      band_n += votes[r];
    }
    const double radius = band_sum / band_n;

    if (inner_fill(mask, cx, cy, radius) > 0.4) continue;
    const double support = circle_support(mask, cx, cy, radius);
    if (support < params.support_min) continue;
    return geom::Circle{Point{cx, cy}, radius, support};
  }
  return std::nullopt;
}

std::vector<graph::Loop> classify_loops(graph::RoadGraph& g,
                                        const raster::RasterMask& mask,
                                        double area_threshold,
                                        const HoughParams& params) {
  if (!(area_threshold > 0))
    throw param_error("classify_loops: area_threshold must be positive");
  std::vector<graph::Loop> loops = graph::enumerate_faces(g);
  const double px_size = mean_pixel_size(mask.transform);

#pragma omp parallel for schedule(dynamic)
  for (long long li = 0; li < static_cast<long long>(loops.size()); ++li) {
    graph::Loop& loop = loops[li];
    if (loop.area >= area_threshold) {
      loop.kind = graph::LoopKind::undetermined;
      continue;
    }
    loop.kind = graph::LoopKind::noise;

    // A face far smaller than the smallest detectable disc cannot be a
    // traffic circle, whatever the Hough transform says about the window;
    // junction-cluster slivers otherwise pick up fake rings from the road
    // pixels around them.
    const double min_disc = kPi * params.r_min_px * params.r_min_px *
                            px_size * px_size;
    if (3.0 * loop.area < min_disc) continue;

    // Pixel bounding box of the ring, padded by 20% per side.
    double c0 = 1e300, c1 = -1e300, r0 = 1e300, r1 = -1e300;
    for (const Point& p : loop.ring) {
      double col, row;
      raster::world_to_pixel(mask.transform, p, col, row);
      c0 = std::min(c0, col);
      c1 = std::max(c1, col);
      r0 = std::min(r0, row);
      r1 = std::max(r1, row);
    }
    const double pad_c = std::max(2.0, 0.2 * (c1 - c0));
    const double pad_r = std::max(2.0, 0.2 * (r1 - r0));
    int wc0 = std::max(0, static_cast<int>(std::floor(c0 - pad_c)));
    int wr0 = std::max(0, static_cast<int>(std::floor(r0 - pad_r)));
    int wc1 = std::min(mask.width - 1, static_cast<int>(std::ceil(c1 + pad_c)));
    int wr1 =
        std::min(mask.height - 1, static_cast<int>(std::ceil(r1 + pad_r)));
    if (wc1 < wc0 || wr1 < wr0) continue;  // ring outside the raster

    const PixelRect win{wc0, wr0, wc1 - wc0 + 1, wr1 - wr0 + 1};
    const auto hit = detect_circle(mask, win, params);
    if (hit) {
      // The detected disc has to explain the face: a circle several times
      // larger or smaller than the face belongs to something else in the
      // window (a neighbouring ring, a band edge), not to this loop.
      const double r_world = hit->radius * px_size;
      const double disc = kPi * r_world * r_world;
      if (disc > 3.0 * loop.area || 3.0 * disc < loop.area) continue;
      loop.kind = graph::LoopKind::circle;
      loop.circle = geom::Circle{
          raster::pixel_to_world(mask.transform, hit->center.x, hit->center.y),
          r_world, hit->support};
    }
  }

  for (const graph::Loop& loop : loops)
    if (loop.kind == graph::LoopKind::circle)
      for (const auto& [id, fwd] : loop.edges)
        g.edges.at(id).attrs.pending_circle = true;
  return loops;
}

namespace {

void collapse_pass(graph::RoadGraph& g, std::vector<const graph::Loop*> noise) {
  std::sort(noise.begin(), noise.end(),
            [](const graph::Loop* a, const graph::Loop* b) {
              if (a->area != b->area) return a->area < b->area;
              return a->edges.front().first < b->edges.front().first;
            });

  for (const graph::Loop* loop : noise) {
    if (!edges_alive(g, *loop)) continue;  // consumed by an earlier collapse
    std::set<graph::EdgeId> own;
    for (const auto& [id, fwd] : loop->edges) own.insert(id);
    const std::vector<graph::NodeId> att = attachments(g, *loop, own);
    for (graph::EdgeId id : own) g.edges.erase(id);

    if (att.size() == 2) {
      const Point pa = g.nodes.at(att[0]);
      const Point pb = g.nodes.at(att[1]);
      if (!(pa == pb)) {
        graph::EdgeAttrs attrs;
        attrs.provenance = graph::Provenance::collapsed;
        g.add_edge(att[0], att[1], {pa, pb}, attrs);
      }
    } else if (att.size() >= 3) {
      const Point c = geom::ring_centroid(loop->ring);
      const graph::NodeId hub = g.add_node(c);
      for (graph::NodeId n : att) {
        const Point p = g.nodes.at(n);
        if (geom::distance(p, c) < 1e-9) continue;
        graph::EdgeAttrs attrs;
        attrs.provenance = graph::Provenance::collapsed;
        g.add_edge(n, hub, {p, c}, attrs);
      }
    }
  }
}

}  // namespace

void collapse_noise_loops(graph::RoadGraph& g,
                          const std::vector<graph::Loop>& loops,
                          double area_threshold) {
  if (!(area_threshold > 0))
    throw param_error("collapse_noise_loops: area_threshold must be positive");
  std::vector<const graph::Loop*> noise;
  for (const graph::Loop& l : loops) {
    if (l.kind != graph::LoopKind::noise) continue;
    // A noise face bordering a detected circle shares edges with it;
    // collapsing it would tear pieces out of the ring.
    bool circleish = false;
    for (const auto& [id, fwd] : l.edges)
      if (g.edges.count(id) && g.edges.at(id).attrs.pending_circle) {
        circleish = true;
        break;
      }
    if (!circleish) noise.push_back(&l);
  }
  collapse_pass(g, std::move(noise));

  // Two collapsed neighbours can merge into a face that is itself below the
  // threshold (a chord or spoke closing a cycle with the survivors). Sweep
  // until no such face is left; pending-circle faces are not ours to touch.
  for (int round = 0; round < 64; ++round) {
    std::vector<graph::Loop> faces = graph::enumerate_faces(g);
    std::vector<const graph::Loop*> again;
    for (graph::Loop& f : faces) {
      if (f.area >= area_threshold) continue;
      bool circleish = false;
      for (const auto& [id, fwd] : f.edges)
        if (g.edges.at(id).attrs.pending_circle) {
          circleish = true;
          break;
        }
      if (circleish) continue;
      f.kind = graph::LoopKind::noise;
      again.push_back(&f);
    }
    if (again.empty()) break;
    collapse_pass(g, std::move(again));
  }
  g.remove_orphan_nodes();
}

void replace_circle_loops(graph::RoadGraph& g,
                          const std::vector<graph::Loop>& loops,
                          double max_arc_step_deg) {
  if (!(max_arc_step_deg > 0))
    throw param_error("replace_circle_loops: arc step must be positive");
  const double step = max_arc_step_deg * kPi / 180.0;

  for (const graph::Loop& loop : loops) {
    if (loop.kind != graph::LoopKind::circle) continue;
    if (!edges_alive(g, loop)) continue;

    // Precise circle from the loop geometry itself; the Hough result backs
    // it up if the ring degenerates.
    Point center;
    double radius;
    std::vector<Point> ring_pts(loop.ring.begin(), loop.ring.end() - 1);
    try {
      const CircleFit fit = fit_circle(ring_pts);
      center = fit.center;
      radius = fit.radius;
    } catch (const geometry_error&) {
      if (!loop.circle) continue;
      center = loop.circle->center;
      radius = loop.circle->radius;
    }
    if (!(radius > 0)) continue;

    std::set<graph::EdgeId> own;
    for (const auto& [id, fwd] : loop.edges) own.insert(id);
    std::vector<graph::NodeId> att = attachments(g, loop, own);
    for (graph::EdgeId id : own) g.edges.erase(id);

    auto on_circle = [&](double theta) {
      return Point{center.x + radius * std::cos(theta),
                   center.y + radius * std::sin(theta)};
    };

    // Radial projection of every attachment; coincident projections merge
    // into the lowest node id.
    std::vector<std::pair<double, graph::NodeId>> polar;
    for (graph::NodeId n : att) {
      const Point p = g.nodes.at(n);
      const Point d = p - center;
      const double theta = geom::norm(d) < 1e-12 ? 0.0 : std::atan2(d.y, d.x);
      polar.emplace_back(theta, n);
    }
    std::sort(polar.begin(), polar.end());
    std::vector<std::pair<double, graph::NodeId>> kept;
    for (const auto& [theta, n] : polar) {
      if (!kept.empty() && theta - kept.back().first < 1e-7) {
        const graph::NodeId keeper = std::min(kept.back().second, n);
        const graph::NodeId gone = std::max(kept.back().second, n);
        g.move_node(gone, g.nodes.at(keeper));
        rewire_node(g, gone, keeper);
        kept.back().second = keeper;
        continue;
      }
      kept.emplace_back(theta, n);
    }
    // Wrap-around pair (first and last within tolerance across 2*pi).
    if (kept.size() >= 2 &&
        (kept.front().first + 2.0 * kPi) - kept.back().first < 1e-7) {
      const graph::NodeId keeper =
          std::min(kept.front().second, kept.back().second);
      const graph::NodeId gone =
          std::max(kept.front().second, kept.back().second);
      g.move_node(gone, g.nodes.at(keeper));
      rewire_node(g, gone, keeper);
      kept.front().second = keeper;
      kept.pop_back();
    }

    graph::EdgeAttrs attrs;
    attrs.provenance = graph::Provenance::circle;

    if (kept.empty()) {
      // Free-standing ring: anchor it where the old geometry started.
      const Point d = loop.ring.front() - center;
      const double theta0 =
          geom::norm(d) < 1e-12 ? 0.0 : std::atan2(d.y, d.x);
      const graph::NodeId n = g.add_node(on_circle(theta0));
      geom::Polyline arc;
      const int steps = std::max(3, static_cast<int>(std::ceil(2.0 * kPi / step)));
      for (int k = 0; k <= steps; ++k)
        arc.push_back(k == 0 || k == steps
                          ? g.nodes.at(n)
                          : on_circle(theta0 + 2.0 * kPi * k / steps));
      g.add_edge(n, n, arc, attrs);
      continue;
    }

    for (auto& [theta, n] : kept) g.move_node(n, on_circle(theta));

    const std::size_t m = kept.size();
    for (std::size_t k = 0; k < m; ++k) {
      const auto& [th_a, na] = kept[k];
      const auto& [th_b_raw, nb] = kept[(k + 1) % m];
      double th_b = m == 1 ? th_a + 2.0 * kPi : th_b_raw;
      if (th_b <= th_a) th_b += 2.0 * kPi;
      const double span = th_b - th_a;
      const int steps = std::max(1, static_cast<int>(std::ceil(span / step)));
      geom::Polyline arc;
      arc.push_back(g.nodes.at(na));
      for (int i = 1; i < steps; ++i)
        arc.push_back(on_circle(th_a + span * i / steps));
      arc.push_back(g.nodes.at(nb));
      g.add_edge(na, nb, arc, attrs);
    }
  }
  g.remove_orphan_nodes();
}

CircleFit fit_circle(const std::vector<Point>& points) {
  if (points.size() < 3)
    throw param_error("fit_circle: need at least 3 points");

  double mx = 0, my = 0;
  for (const Point& p : points) {
    mx += p.x;
    my += p.y;
  }
  const double n = static_cast<double>(points.size());
  mx /= n;
  my /= n;

  // Kasa fit in centered coordinates: 2*uc*u + 2*vc*v + c = u^2 + v^2.
  double suu = 0, svv = 0, suv = 0, suz = 0, svz = 0, sz = 0;
  for (const Point& p : points) {
    const double u = p.x - mx, v = p.y - my;
    const double z = u * u + v * v;
    suu += u * u;
    svv += v * v;
    suv += u * v;
    suz += u * z;
    svz += v * z;
    sz += z;
  }
  const double det = suu * svv - suv * suv;
  if (!(det > 1e-12 * (suu + svv) * (suu + svv) + 1e-300))
    throw geometry_error("fit_circle: collinear points");
  const double a = (svv * suz - suv * svz) / det;  // = 2*uc
  const double b = (suu * svz - suv * suz) / det;  // = 2*vc
  double uc = 0.5 * a, vc = 0.5 * b;
  const double r2 = sz / n + uc * uc + vc * vc;
  if (!(r2 > 0)) throw geometry_error("fit_circle: degenerate radius");
  double radius = std::sqrt(r2);

  // Gauss-Newton on geometric residuals d_i - r.
  for (int iter = 0; iter < 20; ++iter) {
    double jtj00 = 0, jtj01 = 0, jtj02 = 0, jtj11 = 0, jtj12 = 0, jtj22 = 0;
    double g0 = 0, g1 = 0, g2 = 0;
    for (const Point& p : points) {
      const double dx = (p.x - mx) - uc, dy = (p.y - my) - vc;
      const double d = std::max(1e-12, std::hypot(dx, dy));
      const double f = d - radius;
      const double jx = -dx / d, jy = -dy / d, jr = -1.0;
      jtj00 += jx * jx;
      jtj01 += jx * jy;
      jtj02 += jx * jr;
      jtj11 += jy * jy;
      jtj12 += jy * jr;
      jtj22 += jr * jr;
      g0 += jx * f;
      g1 += jy * f;
      g2 += jr * f;
    }
    // Solve (JtJ) delta = -Jtf via Cramer.
    const double d00 = jtj11 * jtj22 - jtj12 * jtj12;
    const double d01 = jtj01 * jtj22 - jtj02 * jtj12;
    const double d02 = jtj01 * jtj12 - jtj02 * jtj11;
    const double ddet = jtj00 * d00 - jtj01 * d01 + jtj02 * d02;
    if (std::abs(ddet) < 1e-300) break;
    const double r0 = -g0, r1 = -g1, r2v = -g2;
    const double dc0 =
        (r0 * d00 - jtj01 * (r1 * jtj22 - jtj12 * r2v) +
         jtj02 * (r1 * jtj12 - jtj11 * r2v)) /
        ddet;
    const double dc1 =
        (jtj00 * (r1 * jtj22 - jtj12 * r2v) - r0 * d01 +
         jtj02 * (jtj01 * r2v - r1 * jtj02)) /
        ddet;
    const double dc2 =
        (jtj00 * (jtj11 * r2v - r1 * jtj12) -
         jtj01 * (jtj01 * r2v - r1 * jtj02) + r0 * d02) /
        ddet;
    uc += dc0;
    vc += dc1;
    radius += dc2;
    if (std::hypot(dc0, dc1) + std::abs(dc2) < 1e-12) break;
  }
  if (!(radius > 0)) throw geometry_error("fit_circle: degenerate radius");

  double ss = 0;
  for (const Point& p : points) {
    const double f = std::hypot((p.x - mx) - uc, (p.y - my) - vc) - radius;
    ss += f * f;
  }
  return CircleFit{Point{mx + uc, my + vc}, radius, std::sqrt(ss / n)};
}

void measure_widths(graph::RoadGraph& g, const raster::RasterMask& mask,
                    Exec exec) {
  const std::vector<double> d2 = clearance_squared(mask);
  const double px_size = mean_pixel_size(mask.transform);

  std::vector<graph::EdgeId> ids;
  for (const auto& [id, e] : g.edges) ids.push_back(id);

  auto width_of = [&](const graph::Edge& e) -> std::optional<double> {
    const double len = geom::length(e.geometry);
    const int samples = std::max(1, static_cast<int>(std::floor(len / px_size)));
    double sum = 0;
    int used = 0;
    for (int k = 0; k <= samples; ++k) {
      const Point p = geom::point_at(e.geometry, len * k / samples);
      double col, row;
      raster::world_to_pixel(mask.transform, p, col, row);
      const int c = static_cast<int>(std::lround(col));
      const int r = static_cast<int>(std::lround(row));
      if (!mask.in_bounds(c, r) || mask.at(c, r) != raster::kInterior)
        continue;
      const double d = std::sqrt(d2[std::size_t(r) * mask.width + c]);
      sum += std::max(1.0, 2.0 * d - 1.0);  // pixel-center quantization
      ++used;
    }
    if (used == 0) return std::nullopt;
    return sum / used * px_size;
  };

  std::vector<std::optional<double>> widths(ids.size());
  if (exec == Exec::parallel) {
#pragma omp parallel for schedule(dynamic)
    for (long long i = 0; i < static_cast<long long>(ids.size()); ++i)
      widths[i] = width_of(g.edges.at(ids[i]));
  } else {
    for (std::size_t i = 0; i < ids.size(); ++i)
      widths[i] = width_of(g.edges.at(ids[i]));
  }
  for (std::size_t i = 0; i < ids.size(); ++i)
    g.edges.at(ids[i]).attrs.mean_width = widths[i];
}

void flag_double_lanes(graph::RoadGraph& g, double width_min) {
  if (!(width_min > 0))
    throw param_error("flag_double_lanes: width_min must be positive");
  for (auto& [id, e] : g.edges)
    e.attrs.double_lane = e.attrs.mean_width && *e.attrs.mean_width > width_min;
}

int duplicate_double_lanes(graph::RoadGraph& g,
                           std::optional<double> lane_offset) {
  std::vector<graph::EdgeId> flagged;
  for (const auto& [id, e] : g.edges)
    if (e.attrs.double_lane) flagged.push_back(id);

  int duplicated = 0;
  for (graph::EdgeId id : flagged) {
    const graph::Edge e = g.edges.at(id);  // copy: the original goes away
    if (e.a == e.b) {
      std::cerr << "warning: double-lane ring edge " << id
                << " left unduplicated\n";
      continue;
    }
    double off;
    if (lane_offset) {
      off = *lane_offset;
    } else if (e.attrs.mean_width) {
      off = *e.attrs.mean_width / 4.0;
    } else {
      std::cerr << "warning: double-lane edge " << id
                << " has no width; left unduplicated\n";
      continue;
    }
    geom::Polyline plus, minus;
    try {
      plus = geom::offset_polyline(e.geometry, off);
      minus = geom::offset_polyline(e.geometry, -off);
    } catch (const geometry_error& err) {
      std::cerr << "warning: offset failed on edge " << id << " ("
                << err.what() << "); left unduplicated\n";
      continue;
    }

    g.edges.erase(id);
    graph::EdgeAttrs lane_attrs = e.attrs;
    lane_attrs.provenance = graph::Provenance::lane_duplicate;
    graph::EdgeAttrs link_attrs;
    link_attrs.material = e.attrs.material;
    link_attrs.provenance = graph::Provenance::lane_duplicate;

    for (const geom::Polyline& side : {plus, minus}) {
      const graph::NodeId na = g.add_node(side.front());
      const graph::NodeId nb = g.add_node(side.back());
      g.add_edge(na, nb, side, lane_attrs);
      // Tie the lane back to whichever original endpoints still carry roads.
      if (g.degree(e.a) > 0)
        g.add_edge(e.a, na, {g.nodes.at(e.a), side.front()}, link_attrs);
      if (g.degree(e.b) > 0)
        g.add_edge(e.b, nb, {g.nodes.at(e.b), side.back()}, link_attrs);
    }
    ++duplicated;
  }
  g.remove_orphan_nodes();
  return duplicated;
}

}  // namespace roadvec::denoise
