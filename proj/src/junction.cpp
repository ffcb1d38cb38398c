#include "roadvec/junction.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <utility>
#include <vector>

namespace roadvec::junction {
namespace {

using geom::Point;

// One incidence of an edge at the junction; a self-loop contributes two.
struct Arm {
  graph::EdgeId id = -1;
  bool forward = true;  // true: leaves from geometry.front()
};

Point depart_dir(const graph::RoadGraph& g, const Arm& arm) {
  const geom::Polyline& geo = g.edges.at(arm.id).geometry;
  return arm.forward ? geo[1] - geo[0]
                     : geo[geo.size() - 2] - geo[geo.size() - 1];
}

struct Line {
  Point anchor;
  Point dir;  // unit
};

// Principal axis through the centroid (orthogonal least squares).
std::optional<Line> tls_line(const std::vector<Point>& pts) {
  Point c{0, 0};
  for (const Point& p : pts) c = c + p;
  c = c * (1.0 / static_cast<double>(pts.size()));
  double cxx = 0, cyy = 0, cxy = 0;
  for (const Point& p : pts) {
    const Point d = p - c;
    cxx += d.x * d.x;
    cyy += d.y * d.y;
    cxy += d.x * d.y;
  }
  const double gap = std::hypot(cxx - cyy, 2.0 * cxy);
  const double lmax = 0.5 * (cxx + cyy + gap);
  // Pick the better-conditioned eigenvector expression.
  Point dir = std::abs(lmax - cxx) > std::abs(lmax - cyy)
                  ? Point{cxy, lmax - cxx}
                  : Point{lmax - cyy, cxy};
  const double n = geom::norm(dir);
  if (n < 1e-12) {
    // Isotropic or degenerate scatter; no meaningful axis.
    if (cxx + cyy < 1e-20) return std::nullopt;
    dir = Point{1, 0};
    return Line{c, dir};
  }
  return Line{c, dir * (1.0 / n)};
}

}  // namespace

JunctionResult smooth_junction(graph::RoadGraph& g, graph::NodeId node,
                               double angle_tol_deg, int reach) {
  if (!(angle_tol_deg > 0))
    throw param_error("smooth_junction: angle_tol must be positive");
  if (reach < 1) throw param_error("smooth_junction: reach must be >= 1");
  if (!g.nodes.count(node)) throw param_error("smooth_junction: unknown node");
  if (g.degree(node) < 3)
    throw param_error("smooth_junction: node is not a junction");

  std::vector<Arm> arms;
  for (graph::EdgeId id : g.incident(node)) {
    const graph::Edge& e = g.edges.at(id);
    if (e.a == node) arms.push_back({id, true});
    if (e.b == node) arms.push_back({id, false});
  }

  // Unit departure bearings; arms with a degenerate first segment cannot
  // anchor a through-road.
  std::vector<std::optional<Point>> unit(arms.size());
  for (std::size_t i = 0; i < arms.size(); ++i) {
    const Point d = depart_dir(g, arms[i]);
    const double n = geom::norm(d);
    if (n > 1e-12) unit[i] = d * (1.0 / n);
  }

  // The pair closest to anti-parallel has the smallest bearing dot product.
  std::size_t ba = 0, bb = 0;
  double best_cos = 2.0;
  for (std::size_t i = 0; i < arms.size(); ++i) {
    if (!unit[i]) continue;
    for (std::size_t j = i + 1; j < arms.size(); ++j) {
      if (!unit[j]) continue;
      const double cs = geom::dot(*unit[i], *unit[j]);
      if (cs < best_cos) {
        best_cos = cs;
        ba = i;
        bb = j;
      }
    }
  }
  if (best_cos > 0.0) return {true, 0.0};  // sharper than 90 deg, or no pair
  const double tol_cos = -std::cos(angle_tol_deg * std::numbers::pi / 180.0);
  // Already anti-parallel within tolerance: correcting a compliant junction
  // would creep it toward the frozen far vertices on every pass.
  if (best_cos <= tol_cos) return {false, 0.0};

  // Fit set: the junction plus the first `reach` vertices down both arms.
  // Vertices that are the far node of a short edge join the fit but are not
  // ours to move.
  const Point p0 = g.nodes.at(node);
  std::vector<Point> fit{p0};
  std::vector<std::pair<graph::EdgeId, std::size_t>> movable;
  std::set<std::pair<graph::EdgeId, std::size_t>> seen;
  for (const Arm& arm : {arms[ba], arms[bb]}) {
    const geom::Polyline& geo = g.edges.at(arm.id).geometry;
    const std::size_t m = geo.size();
    for (int k = 1; k <= reach && static_cast<std::size_t>(k) < m; ++k) {
      const std::size_t idx = arm.forward ? static_cast<std::size_t>(k)
                                          : m - 1 - static_cast<std::size_t>(k);
      if (!seen.insert({arm.id, idx}).second) continue;
      fit.push_back(geo[idx]);
      const bool far_terminal = idx == (arm.forward ? m - 1 : std::size_t{0});
      if (!far_terminal) movable.emplace_back(arm.id, idx);
    }
  }

  const auto line = tls_line(fit);
  if (!line) return {true, 0.0};
  auto project = [&](Point p) {
    return line->anchor + line->dir * geom::dot(p - line->anchor, line->dir);
  };
  const Point pn = project(p0);

  // Dry-run the post-condition before touching the graph: the straightened
  // departures must come out anti-parallel within tolerance (a very bent
  // pair can project onto the same side of the node).
  auto post_depart = [&](const Arm& arm) {
    const geom::Polyline& geo = g.edges.at(arm.id).geometry;
    const std::size_t idx = arm.forward ? 1 : geo.size() - 2;
    const bool moves =
        std::find(movable.begin(), movable.end(),
                  std::make_pair(arm.id, idx)) != movable.end();
    return (moves ? project(geo[idx]) : geo[idx]) - pn;
  };
  const Point da = post_depart(arms[ba]);
  const Point db = post_depart(arms[bb]);
  const double na = geom::norm(da), nb = geom::norm(db);
  if (na < 1e-12 || nb < 1e-12 || geom::dot(da, db) / (na * nb) > tol_cos)
    return {true, 0.0};

  g.move_node(node, pn);
  for (const auto& [id, idx] : movable) {
    geom::Polyline& geo = g.edges.at(id).geometry;
    geo[idx] = project(geo[idx]);
  }
  return {false, geom::distance(p0, pn)};
}

SmoothStats smooth_all(graph::RoadGraph& g, double angle_tol_deg, int reach,
                       int max_rounds) {
  if (max_rounds < 1)
    throw param_error("smooth_all: max_rounds must be >= 1");

  // Topology never changes below, so order is fixed up front: by degree,
  // then id for determinism.
  std::vector<graph::NodeId> ids = graph::junctions(g);
  std::stable_sort(ids.begin(), ids.end(),
                   [&](graph::NodeId a, graph::NodeId b) {
                     return g.degree(a) < g.degree(b);
                   });

  SmoothStats st;
  st.junctions = static_cast<int>(ids.size());
  for (int round = 0; round < max_rounds; ++round) {
    double mx = 0.0;
    for (graph::NodeId id : ids) {
      const JunctionResult r = smooth_junction(g, id, angle_tol_deg, reach);
      if (r.flagged) {
        st.flagged.insert(id);
      } else {
        st.flagged.erase(id);
        mx = std::max(mx, r.moved);
      }
    }
    st.rounds = round + 1;
    st.last_round_max_move = mx;
    if (mx <= 1e-3) break;
  }
  return st;
}

}  // namespace roadvec::junction
