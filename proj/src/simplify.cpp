#include "roadvec/simplify.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace roadvec::simplify {
namespace {

using geom::Point;
using geom::Polyline;

// Infinite line as point + unit direction.
struct Line {
  Point anchor;
  Point dir;
};

// Total-least-squares statistics for a contiguous point window. Coordinates
// are accumulated relative to a shift point so the second moments stay well
// conditioned for large world coordinates.
struct WindowFit {
  Line line;
  double rms = 0.0;
  double max_residual = 0.0;
};

WindowFit fit_window(const Polyline& pts, std::size_t begin, std::size_t end) {
  const Point shift = pts[begin];
  const double n = static_cast<double>(end - begin + 1);
  double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
  for (std::size_t i = begin; i <= end; ++i) {
    const double x = pts[i].x - shift.x;
    const double y = pts[i].y - shift.y;
    sx += x;
    sy += y;
    sxx += x * x;
    syy += y * y;
    sxy += x * y;
  }
  const double mx = sx / n;
  const double my = sy / n;
  const double cxx = sxx / n - mx * mx;
  const double cyy = syy / n - my * my;
  const double cxy = sxy / n - mx * my;

  const double tr = cxx + cyy;
  const double gap = std::sqrt((cxx - cyy) * (cxx - cyy) + 4.0 * cxy * cxy);
  const double lam_max = 0.5 * (tr + gap);
  const double lam_min = std::max(0.0, tr - lam_max);

  // Eigenvector of the dominant eigenvalue; two algebraic candidates, pick
  // the better conditioned one.
  Point dir{cxy, lam_max - cxx};
  Point alt{lam_max - cyy, cxy};
  if (geom::norm(alt) > geom::norm(dir)) dir = alt;
  if (geom::norm(dir) < 1e-30) {
    // Isotropic scatter (or a two-point window): fall back to the chord.
    dir = pts[end] - pts[begin];
  }
  const double len = geom::norm(dir);
  if (len > 0) dir = dir * (1.0 / len);

  WindowFit fit;
  fit.line.anchor = Point{shift.x + mx, shift.y + my};
  fit.line.dir = dir;
  fit.rms = std::sqrt(lam_min);
  for (std::size_t i = begin; i <= end; ++i) {
    const Point d = pts[i] - fit.line.anchor;
    fit.max_residual = std::max(fit.max_residual,
                                std::abs(geom::cross(fit.line.dir, d)));
  }
  return fit;
}

Point project_onto(const Line& l, const Point& p) {
  const double t = geom::dot(l.dir, p - l.anchor);
  return l.anchor + l.dir * t;
}

// Breakpoint between two consecutive fitted lines sharing boundary vertex b.
// Lines meeting at less than 5 degrees have an unstable (or missing)
// intersection, so the midpoint of b's projections is used instead; the
// same fallback caps intersections that overshoot the boundary vertex by
// more than the deviation budget, which keeps sharp corners within bounds.
Point breakpoint(const Line& a, const Line& b_line, const Point& b,
                 double epsilon) {
  constexpr double kMinCrossingSin = 0.08715574274765817;  // sin(5 deg)
  const Point pa = project_onto(a, b);
  const Point pb = project_onto(b_line, b);
  const Point mid{0.5 * (pa.x + pb.x), 0.5 * (pa.y + pb.y)};
  const double denom = geom::cross(a.dir, b_line.dir);
  if (std::abs(denom) < kMinCrossingSin) return mid;
  const double t = geom::cross(b_line.anchor - a.anchor, b_line.dir) / denom;
  const Point ix = a.anchor + a.dir * t;
  if (geom::distance(ix, b) > 2.0 * epsilon) return mid;
  return ix;
}

struct Window {
  std::size_t s, e;
  WindowFit fit;
};

Polyline assemble(const Polyline& pts, const std::vector<Window>& ws,
                  const std::vector<bool>& forced, double epsilon) {
  Polyline out;
  out.reserve(ws.size() + 1);
  out.push_back(pts.front());
  for (std::size_t k = 0; k + 1 < ws.size(); ++k) {
    // Boundaries the repair loop pinned replay the input vertex verbatim.
    const Point bp = forced[k]
                         ? pts[ws[k].e]
                         : breakpoint(ws[k].fit.line, ws[k + 1].fit.line,
                                      pts[ws[k].e], epsilon);
    if (!(bp == out.back())) out.push_back(bp);
  }
  if (!(pts.back() == out.back())) out.push_back(pts.back());
  return out;
}

}  // namespace

Polyline fit_polyline(const Polyline& points, double epsilon) {
  if (!(epsilon > 0) || !std::isfinite(epsilon))
    throw param_error("fit_polyline: epsilon must be positive");
  geom::validate_polyline(points);
  const std::size_t n = points.size();
  if (n == 2) return points;

  // Greedy maximal windows; consecutive windows share their boundary vertex.
  std::vector<Window> ws;
  std::size_t start = 0;
  while (start + 1 < n) {
    std::size_t stop = start + 1;
    WindowFit fit = fit_window(points, start, stop);
    while (stop + 1 < n) {
      WindowFit grown = fit_window(points, start, stop + 1);
      if (grown.rms > epsilon || grown.max_residual > 2.0 * epsilon) break;
      fit = grown;
      ++stop;
    }
    ws.push_back({start, stop, fit});
    start = stop;
  }
  std::vector<bool> forced(ws.size() > 0 ? ws.size() - 1 : 0, false);

  // Line intersections can overshoot sharp corners, so the assembled chain
  // is checked against the whole input and repaired until every vertex sits
  // within 2*epsilon: an offending interior vertex splits its window, an
  // offending shared boundary is pinned to the input vertex. Both moves
  // strictly refine, so the loop terminates (worst case: output == input).
  Polyline out = assemble(points, ws, forced, epsilon);
  for (std::size_t guard = 0; guard < 2 * n; ++guard) {
    double worst = 0.0;
    std::size_t worst_idx = n;
    for (std::size_t i = 0; i < n; ++i) {
      const double d = geom::point_polyline_distance(points[i], out);
      if (d > worst) {
        worst = d;
        worst_idx = i;
      }
    }
    if (worst <= 2.0 * epsilon + 1e-12) break;

    bool handled = false;
    for (std::size_t k = 0; k + 1 < ws.size(); ++k) {
      if (ws[k].e == worst_idx) {
        if (!forced[k]) {
          forced[k] = true;
          handled = true;
        }
        break;
      }
    }
    if (!handled) {
      for (std::size_t k = 0; k < ws.size(); ++k) {
        if (ws[k].s < worst_idx && worst_idx < ws[k].e) {
          Window left{ws[k].s, worst_idx,
                      fit_window(points, ws[k].s, worst_idx)};
          Window right{worst_idx, ws[k].e,
                       fit_window(points, worst_idx, ws[k].e)};
          ws[k] = left;
          ws.insert(ws.begin() + static_cast<std::ptrdiff_t>(k) + 1, right);
          forced.insert(forced.begin() + static_cast<std::ptrdiff_t>(k),
                        false);
          handled = true;
          break;
        }
      }
    }
    if (!handled) break;  // anchors cannot offend; nothing left to refine
    out = assemble(points, ws, forced, epsilon);
  }

  // Degenerate results (a closed ring collapsing onto its anchor, or every
  // breakpoint landing on an anchor) keep the original geometry.
  if (out.size() < 2 || (out.size() == 2 && out.front() == out.back()))
    return points;
  return out;
}

void simplify_graph(graph::RoadGraph& g, double epsilon, Exec exec) {
  std::vector<graph::EdgeId> ids;
  ids.reserve(g.edges.size());
  for (const auto& [id, e] : g.edges) ids.push_back(id);
  std::vector<Polyline> fitted(ids.size());

  if (exec == Exec::parallel) {
#pragma omp parallel for schedule(dynamic)
    for (long long i = 0; i < static_cast<long long>(ids.size()); ++i)
      fitted[i] = fit_polyline(g.edges.at(ids[i]).geometry, epsilon);
  } else {
    for (std::size_t i = 0; i < ids.size(); ++i)
      fitted[i] = fit_polyline(g.edges.at(ids[i]).geometry, epsilon);
  }
  for (std::size_t i = 0; i < ids.size(); ++i)
    g.edges.at(ids[i]).geometry = std::move(fitted[i]);
}

}  // namespace roadvec::simplify
