#include "roadvec/skeleton.hpp"

#include <algorithm>
#include <array>
#include <map>
#include <set>

namespace roadvec::skel {

namespace {

// One thinning subiteration: mark deletable pixels against a frozen
// snapshot, then erase the marks. Simultaneous application keeps the
// parallel rows identical to the serial pass.
bool thin_subiteration(std::vector<uint8_t>& img, int w, int h, int iter,
                       Exec exec) {
  std::vector<uint8_t> marker(img.size(), 0);
  auto scan_row = [&](int r) {
    for (int c = 0; c < w; ++c) {
      if (!img[size_t(r) * w + c]) continue;
      auto px = [&](int cc, int rr) -> int {
        return cc >= 0 && cc < w && rr >= 0 && rr < h &&
               img[size_t(rr) * w + cc];
      };
      const int p2 = px(c, r - 1), p3 = px(c + 1, r - 1), p4 = px(c + 1, r);
      const int p5 = px(c + 1, r + 1), p6 = px(c, r + 1), p7 = px(c - 1, r + 1);
      const int p8 = px(c - 1, r), p9 = px(c - 1, r - 1);

      const int C = ((!p2) & (p3 | p4)) + ((!p4) & (p5 | p6)) +
                    ((!p6) & (p7 | p8)) + ((!p8) & (p9 | p2));
      const int N1 = (p9 | p2) + (p3 | p4) + (p5 | p6) + (p7 | p8);
      const int N2 = (p2 | p3) + (p4 | p5) + (p6 | p7) + (p8 | p9);
      const int N = std::min(N1, N2);
      const int m = iter == 0 ? ((p6 | p7 | (!p9)) & p8)
                              : ((p2 | p3 | (!p5)) & p4);
      if (C == 1 && N >= 2 && N <= 3 && m == 0)
        marker[size_t(r) * w + c] = 1;
    }
  };
  if (exec == Exec::parallel) {
#pragma omp parallel for schedule(static)
    for (int r = 0; r < h; ++r) scan_row(r);
  } else {
    for (int r = 0; r < h; ++r) scan_row(r);
  }

  bool changed = false;
  for (size_t i = 0; i < img.size(); ++i) {
    if (marker[i]) {
      img[i] = 0;
      changed = true;
    }
  }
  return changed;
}

}  // namespace

SkeletonRaster thin(const raster::RasterMask& mask, Exec exec) {
  SkeletonRaster skel;
  skel.width = mask.width;
  skel.height = mask.height;
  skel.transform = mask.transform;
  skel.on.resize(mask.classes.size());
  for (size_t i = 0; i < mask.classes.size(); ++i)
    skel.on[i] = mask.classes[i] == raster::kInterior ? 1 : 0;

  bool changed = true;
  while (changed) {
    changed = thin_subiteration(skel.on, skel.width, skel.height, 0, exec);
    changed |= thin_subiteration(skel.on, skel.width, skel.height, 1, exec);
  }
  return skel;
}

namespace {

// Neighbor order N, NE, E, SE, S, SW, W, NW keeps tracing deterministic.
constexpr std::array<std::pair<int, int>, 8> kNbr = {
    {{0, -1}, {1, -1}, {1, 0}, {1, 1}, {0, 1}, {-1, 1}, {-1, 0}, {-1, -1}}};

struct Px {
  int c, r;
  friend auto operator<=>(const Px&, const Px&) = default;
};

}  // namespace

graph::RoadGraph trace(const SkeletonRaster& skel) {
  graph::RoadGraph g;
  const int w = skel.width, h = skel.height;

  auto degree_of = [&](int c, int r) {
    int d = 0;
    for (const auto& [dc, dr] : kNbr) d += skel.at(c + dc, r + dr);
    return d;
  };

  std::map<Px, graph::NodeId> node_at;
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c) {
      if (!skel.at(c, r)) continue;
      const int d = degree_of(c, r);
      if (d == 0) continue;  // isolated pixel, nothing to connect
      if (d != 2)
        node_at[{c, r}] =
            g.add_node(raster::pixel_to_world(skel.transform, c, r));
    }

  std::set<std::pair<Px, Px>> used;  // directed first steps out of node pixels
  std::set<Px> chained;              // degree-2 pixels consumed by a chain

  // Chains anchored at node pixels.
  for (const auto& [start_px, start_node] : node_at) {
    for (const auto& [dc, dr] : kNbr) {
      Px cur{start_px.c + dc, start_px.r + dr};
      if (!skel.at(cur.c, cur.r)) continue;
      if (used.count({start_px, cur})) continue;

      geom::Polyline line{
          raster::pixel_to_world(skel.transform, start_px.c, start_px.r)};
      Px prev = start_px;
      while (!node_at.count(cur)) {
        chained.insert(cur);
        line.push_back(raster::pixel_to_world(skel.transform, cur.c, cur.r));
        Px next{-1, -1};
        for (const auto& [nc, nr] : kNbr) {
          const Px cand{cur.c + nc, cur.r + nr};
          if (skel.at(cand.c, cand.r) && !(cand == prev)) {
            next = cand;
            break;
          }
        }
        prev = cur;
        cur = next;
      }
      line.push_back(raster::pixel_to_world(skel.transform, cur.c, cur.r));
      used.insert({start_px, {start_px.c + dc, start_px.r + dr}});
      used.insert({cur, prev});
      g.add_edge(start_node, node_at.at(cur), std::move(line));
    }
  }

  // Pure cycles: remaining degree-2 pixels with no node pixel anywhere.
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c) {
      const Px anchor{c, r};
      if (!skel.at(c, r) || node_at.count(anchor) || chained.count(anchor))
        continue;
      if (degree_of(c, r) != 2) continue;
      const graph::NodeId nid =
          g.add_node(raster::pixel_to_world(skel.transform, c, r));
      geom::Polyline line{raster::pixel_to_world(skel.transform, c, r)};
      Px prev = anchor;
      Px cur{-1, -1};
      for (const auto& [dc, dr] : kNbr) {
        if (skel.at(c + dc, r + dr)) {
          cur = {c + dc, r + dr};
          break;
        }
      }
      while (!(cur == anchor)) {
        chained.insert(cur);
        line.push_back(raster::pixel_to_world(skel.transform, cur.c, cur.r));
        Px next{-1, -1};
        for (const auto& [nc, nr] : kNbr) {
          const Px cand{cur.c + nc, cur.r + nr};
          if (skel.at(cand.c, cand.r) && !(cand == prev)) {
            next = cand;
            break;
          }
        }
        prev = cur;
        cur = next;
      }
      line.push_back(line.front());  // close the ring
      chained.insert(anchor);
      g.add_edge(nid, nid, std::move(line));
    }

  return g;
}

void write_skeleton(const SkeletonRaster& skel, const std::string& pixel_path,
                    const std::string& worldfile_path) {
  raster::RasterMask m;
  m.width = skel.width;
  m.height = skel.height;
  m.transform = skel.transform;
  m.classes.assign(skel.on.begin(), skel.on.end());
  raster::write_mask(m, pixel_path, worldfile_path);
}

}  // namespace roadvec::skel
