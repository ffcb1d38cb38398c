#include "roadvec/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>
#include <vector>

#include <json.hpp>

#include "roadvec/geom.hpp"
#include "roadvec/junction.hpp"
#include "roadvec/simplify.hpp"
#include "roadvec/skeleton.hpp"

namespace roadvec::pipeline {

namespace {

using nlohmann::json;

double num(const json& v, const std::string& where) {
  if (!v.is_number()) throw param_error("config: " + where + " must be a number");
  return v.get<double>();
}

int integer(const json& v, const std::string& where) {
  if (!v.is_number_integer())
    throw param_error("config: " + where + " must be an integer");
  return v.get<int>();
}

[[noreturn]] void unknown_key(const std::string& where) {
  throw param_error("config: unknown key '" + where + "'");
}

void apply_section(const std::string& name, const json& sec,
                   PipelineConfig& cfg) {
  if (!sec.is_object())
    throw param_error("config: section '" + name + "' must be an object");
  for (const auto& [key, value] : sec.items()) {
    const std::string where = name + "." + key;
    if (name == "simplify") {
      if (key == "epsilon") cfg.simplify_epsilon = num(value, where);
      else unknown_key(where);
    } else if (name == "dangle") {
      if (key == "min_length") cfg.dangle_min_length = num(value, where);
      else unknown_key(where);
    } else if (name == "loop") {
      if (key == "area_threshold") cfg.loop_area_threshold = num(value, where);
      else unknown_key(where);
    } else if (name == "hough") {
      if (key == "r_min_px") cfg.hough.r_min_px = integer(value, where);
      else if (key == "r_max_px") cfg.hough.r_max_px = integer(value, where);
      else if (key == "support_min") cfg.hough.support_min = num(value, where);
      else unknown_key(where);
    } else if (name == "junction") {
      if (key == "angle_tol_deg") cfg.junction_angle_tol_deg = num(value, where);
      else if (key == "reach") cfg.junction_reach = integer(value, where);
      else if (key == "max_rounds") cfg.junction_max_rounds = integer(value, where);
      else unknown_key(where);
    } else if (name == "lane") {
      if (key == "width_min") cfg.lane_width_min = num(value, where);
      else if (key == "offset") {
        if (value.is_string() && value.get<std::string>() == "auto")
          cfg.lane_offset.reset();
        else if (value.is_number())
          cfg.lane_offset = value.get<double>();
        else
          throw param_error("config: lane.offset must be \"auto\" or a number");
      } else unknown_key(where);
    } else if (name == "material") {
      if (key == "buffer") cfg.material.buffer_m = num(value, where);
      else if (key == "lulc_radius") cfg.material.lulc_radius_m = num(value, where);
      else if (key == "barren_water_min") cfg.material.barren_water_min = num(value, where);
      else if (key == "svm_c") cfg.svm_c = num(value, where);
      else if (key == "svm_iterations") cfg.svm_iterations = integer(value, where);
      else unknown_key(where);
    } else if (name == "eval") {
      if (key == "buffer") cfg.eval_buffer = num(value, where);
      else if (key == "hausdorff_step") cfg.eval_hausdorff_step = num(value, where);
      else unknown_key(where);
    } else if (name == "synth") {
      SynthParams& s = cfg.synth;
      if (key == "width_px") s.width_px = integer(value, where);
      else if (key == "height_px") s.height_px = integer(value, where);
      else if (key == "pixel_size") s.pixel_size = num(value, where);
      else if (key == "road_width") s.road_width = num(value, where);
      else if (key == "contour_px") s.contour_px = integer(value, where);
      else if (key == "streets_x") s.streets_x = integer(value, where);
      else if (key == "streets_y") s.streets_y = integer(value, where);
      else if (key == "jitter") s.jitter = num(value, where);
      else if (key == "circle_count") s.circle_count = integer(value, where);
      else if (key == "circle_radius") s.circle_radius = num(value, where);
      else if (key == "double_lane_count") s.double_lane_count = integer(value, where);
      else if (key == "double_lane_width") s.double_lane_width = num(value, where);
      else if (key == "noise") s.noise = num(value, where);
      else if (key == "bands") s.bands = integer(value, where);
      else if (key == "lulc_radius") s.lulc_radius = num(value, where);
      else unknown_key(where);
    } else {
      throw param_error("config: unknown section '" + name + "'");
    }
  }
}

}  // namespace

void validate_config(const PipelineConfig& cfg) {
  auto need = [](bool ok, const char* msg) {
    if (!ok) throw param_error(std::string("config: ") + msg);
  };
  need(cfg.simplify_epsilon > 0.0, "simplify.epsilon must be > 0");
  need(cfg.dangle_min_length >= 0.0, "dangle.min_length must be >= 0");
  need(cfg.loop_area_threshold > 0.0, "loop.area_threshold must be > 0");
  need(cfg.hough.r_min_px >= 1, "hough.r_min_px must be >= 1");
  need(cfg.hough.r_max_px >= cfg.hough.r_min_px,
       "hough.r_max_px must be >= hough.r_min_px");
  need(cfg.hough.support_min > 0.0 && cfg.hough.support_min <= 1.0,
       "hough.support_min must be in (0, 1]");
  need(cfg.junction_angle_tol_deg > 0.0, "junction.angle_tol_deg must be > 0");
  need(cfg.junction_reach >= 1, "junction.reach must be >= 1");
  need(cfg.junction_max_rounds >= 1, "junction.max_rounds must be >= 1");
  need(cfg.lane_width_min > 0.0, "lane.width_min must be > 0");
  need(!cfg.lane_offset || *cfg.lane_offset > 0.0,
       "lane.offset must be > 0 when numeric");
  need(cfg.material.buffer_m > 0.0, "material.buffer must be > 0");
  need(cfg.material.lulc_radius_m > 0.0, "material.lulc_radius must be > 0");
  need(cfg.material.barren_water_min >= 0.0 &&
           cfg.material.barren_water_min <= 1.0,
       "material.barren_water_min must be in [0, 1]");
  need(cfg.svm_c > 0.0, "material.svm_c must be > 0");
  need(cfg.svm_iterations >= 1, "material.svm_iterations must be >= 1");
  need(cfg.eval_buffer > 0.0, "eval.buffer must be > 0");
  need(cfg.eval_hausdorff_step > 0.0, "eval.hausdorff_step must be > 0");

  const SynthParams& s = cfg.synth;
  need(s.width_px >= 64 && s.width_px <= 4096, "synth.width_px must be in [64, 4096]");
  need(s.height_px >= 64 && s.height_px <= 4096, "synth.height_px must be in [64, 4096]");
  need(s.pixel_size > 0.0, "synth.pixel_size must be > 0");
  need(s.road_width >= 4.0 * s.pixel_size,
       "synth.road_width must be at least 4 pixels");
  need(s.contour_px >= 0 && s.contour_px <= 3, "synth.contour_px must be in [0, 3]");
  need(s.streets_x >= 1 && s.streets_x <= 32, "synth.streets_x must be in [1, 32]");
  need(s.streets_y >= 1 && s.streets_y <= 32, "synth.streets_y must be in [1, 32]");
  need(s.jitter >= 0.0, "synth.jitter must be >= 0");
  need(s.circle_count >= 0, "synth.circle_count must be >= 0");
  need(s.circle_radius > 0.0, "synth.circle_radius must be > 0");
  need(s.double_lane_count >= 0, "synth.double_lane_count must be >= 0");
  need(s.double_lane_width > s.road_width,
       "synth.double_lane_width must exceed synth.road_width");
  need(s.noise >= 0.0 && s.noise <= 0.2, "synth.noise must be in [0, 0.2]");
  need(s.bands == 3 || s.bands == 4, "synth.bands must be 3 or 4");
  need(s.lulc_radius > 0.0, "synth.lulc_radius must be > 0");
}

PipelineConfig config_from_json(const std::string& text, PipelineConfig base) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw param_error(std::string("config: ") + e.what());
  }
  if (!j.is_object()) throw param_error("config: root must be a JSON object");
  for (const auto& [name, sec] : j.items()) apply_section(name, sec, base);
  validate_config(base);
  return base;
}

PipelineConfig load_config(const std::string& path, PipelineConfig base) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw param_error("config: cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return config_from_json(buf.str(), std::move(base));
}

graph::RoadGraph run_reconstruct(const raster::RasterMask& mask,
                                 const PipelineConfig& cfg, std::ostream* log,
                                 Exec exec) {
  validate_config(cfg);
  raster::validate(mask.transform);
  if (mask.width <= 0 || mask.height <= 0 ||
      mask.classes.size() != size_t(mask.width) * mask.height)
    throw param_error("mask dimensions do not match its pixel buffer");

  using clock = std::chrono::steady_clock;
  graph::RoadGraph g;
  skel::SkeletonRaster sk;
  std::vector<graph::Loop> loops;

  auto stage = [&](const char* name, auto&& fn) {
    const auto t0 = clock::now();
    try {
      fn();
    } catch (const std::exception& e) {
      throw pipeline_error(std::string(name) + ": " + e.what());
    }
    if (log) {
      const auto ms = std::chrono::duration<double, std::milli>(clock::now() - t0);
      (*log) << name << ": " << g.nodes.size() << " nodes / " << g.edges.size()
             << " edges, " << static_cast<long>(ms.count() + 0.5) << " ms\n";
    }
  };

  stage("thin", [&] { sk = skel::thin(mask, exec); });
  stage("trace", [&] { g = skel::trace(sk); });
  stage("simplify", [&] {
    simplify::simplify_graph(g, cfg.simplify_epsilon, exec);
    // Pixel-scale double connections fold onto each other here; drop the
    // identical copies before the planar embedding is built.
    graph::dedup_parallel_edges(g);
    // Thinning splits wide crossings into pairs of nearby 3-way nodes and
    // grows diamond detours around one-pixel mask holes. Both are stubs
    // shorter than the local road width between junction nodes; fuse them
    // now so faces and dangles are computed on the real topology. The
    // contraction limit is width-relative, so widths are measured first.
    denoise::measure_widths(g, mask, exec);
    graph::contract_junction_clusters(
        g, 2.0 * 0.5 *
               (std::abs(mask.transform.pixel_width) +
                std::abs(mask.transform.pixel_height)));
  });
  stage("classify_loops", [&] {
    loops = denoise::classify_loops(g, mask, cfg.loop_area_threshold, cfg.hough);
  });
  stage("collapse_loops", [&] {
    denoise::collapse_noise_loops(g, loops, cfg.loop_area_threshold);
  });
  stage("prune_dangles", [&] { graph::prune_dangles(g, cfg.dangle_min_length); });
  stage("smooth", [&] {
    junction::smooth_all(g, cfg.junction_angle_tol_deg, cfg.junction_reach,
                         cfg.junction_max_rounds);
  });
  stage("circles", [&] { denoise::replace_circle_loops(g, loops); });
  stage("lanes", [&] {
    denoise::measure_widths(g, mask, exec);
    denoise::flag_double_lanes(g, cfg.lane_width_min);
    denoise::duplicate_double_lanes(g, cfg.lane_offset);
  });

  g.remove_orphan_nodes();
  g.validate();
  return g;
}

// ---------------------------------------------------------------------------
// Synthetic scenes.

namespace {

// splitmix64 finalizer: all per-pixel randomness is a pure function of
// (seed, channel, pixel), so serial and parallel renders agree bit for bit.
uint64_t mix64(uint64_t z) {
  z += 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

uint64_t pix_hash(uint64_t seed, uint64_t channel, uint64_t x, uint64_t y) {
  return mix64(seed ^ mix64((channel << 48) ^ (x << 24) ^ (y + 1)));
}

double unit(uint64_t h) { return double(h >> 11) * 0x1.0p-53; }  // [0, 1)

constexpr double kMargin = 18.0;  // perimeter road inset, meters

struct Anchor {
  geom::Point p;
  graph::NodeId node = -1;  // -1 for circle crossings (no node at center)
  int circle = -1;          // index into circles when this crossing hosts one
};

struct CircleSite {
  geom::Point center;
  // Ring attachment points in the order the approaches were emitted.
  std::vector<std::pair<double, graph::NodeId>> hooks;  // (angle, ring node)
};

struct DrawPiece {
  geom::Polyline line;
  bool wide = false;
};

double frand(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

// Same contour rule as the mask rasterizer: a road pixel turns contour when
// any pixel within the Chebyshev radius is off-road or off-image. Needed
// here because mixed road widths are rasterized as two region passes.
void carve_ring(raster::RasterMask& mask, int thickness, Exec exec) {
  if (thickness <= 0) return;
  const int width = mask.width, height = mask.height;
  const std::vector<uint8_t> region = mask.classes;
  auto pass = [&](int r) {
    for (int c = 0; c < width; ++c) {
      if (region[size_t(r) * width + c] != raster::kInterior) continue;
      bool boundary = false;
      for (int dr = -thickness; dr <= thickness && !boundary; ++dr)
        for (int dc = -thickness; dc <= thickness; ++dc) {
          const int rr = r + dr, cc = c + dc;
          if (rr < 0 || rr >= height || cc < 0 || cc >= width ||
              region[size_t(rr) * width + cc] != raster::kInterior) {
            boundary = true;
            break;
          }
        }
      if (boundary) mask.at(c, r) = raster::kContour;
    }
  };
  if (exec == Exec::parallel) {
#pragma omp parallel for schedule(static)
    for (int r = 0; r < height; ++r) pass(r);
  } else {
    for (int r = 0; r < height; ++r) pass(r);
  }
}

struct SurfaceColor {
  int rgb[3];
  int nir;
  int amp;  // noise amplitude, +/- digital numbers
};

SurfaceColor material_color(graph::Material m) {
  switch (m) {
    case graph::Material::processed: return {{95, 95, 100}, 80, 8};
    case graph::Material::gravel:    return {{165, 160, 150}, 150, 10};
    case graph::Material::sand:      return {{205, 185, 140}, 170, 12};
    default:                         return {{120, 120, 120}, 110, 10};
  }
}

SurfaceColor lulc_color(int label) {
  switch (label) {
    case 1:  return {{75, 140, 70}, 230, 12};   // crops
    case 2:  return {{150, 128, 100}, 160, 12}; // barren
    case 3:  return {{40, 60, 110}, 25, 6};     // water
    default: return {{125, 122, 120}, 115, 15}; // urban
  }
}

double polyline_distance(geom::Point p, const geom::Polyline& line) {
  double best = 1e300;
  for (size_t i = 0; i + 1 < line.size(); ++i)
    best = std::min(best, geom::point_segment_distance(p, line[i], line[i + 1]));
  return best;
}

}  // namespace

SynthScene run_synth(uint64_t seed, const SynthParams& params, Exec exec) {
  PipelineConfig probe;
  probe.synth = params;
  validate_config(probe);

  const SynthParams& sp = params;
  const double wm = sp.width_px * sp.pixel_size;
  const double hm = sp.height_px * sp.pixel_size;
  const double span_x = wm - 2.0 * kMargin;
  const double span_y = hm - 2.0 * kMargin;
  const double spacing_x = span_x / (sp.streets_x + 1);
  const double spacing_y = span_y / (sp.streets_y + 1);
  const double spacing = std::min(spacing_x, spacing_y);
  if (spacing < 4.0 * sp.road_width || spacing < 8.0 * sp.jitter)
    throw param_error("synth: scene too small for the requested street count");
  if (sp.circle_count > 0 &&
      spacing < 2.0 * (sp.circle_radius + sp.road_width) + 4.0)
    throw param_error("synth: streets too close for the requested circles");
  if (sp.double_lane_count > sp.streets_x + sp.streets_y)
    throw param_error("synth: more double-lane streets than streets");

  std::mt19937_64 rng(seed);
  SynthScene scene;

  // --- street layout -------------------------------------------------------
  const int nx = sp.streets_x, ny = sp.streets_y;
  std::vector<bool> wide(nx + ny, false);  // street id: verticals then horizontals
  {
    std::vector<int> ids(nx + ny);
    for (int i = 0; i < nx + ny; ++i) ids[i] = i;
    std::shuffle(ids.begin(), ids.end(), rng);
    for (int k = 0; k < sp.double_lane_count; ++k) wide[ids[k]] = true;
  }

  std::vector<double> vx(nx), hy(ny);
  for (int i = 0; i < nx; ++i) vx[i] = kMargin + (i + 1) * spacing_x;
  for (int j = 0; j < ny; ++j) hy[j] = -(kMargin + (j + 1) * spacing_y);

  auto jit = [&] { return frand(rng, -sp.jitter, sp.jitter); };

  // Crossing positions, then the circle sites among crossings of two normal
  // streets.
  std::vector<std::vector<Anchor>> cross(nx, std::vector<Anchor>(ny));
  for (int i = 0; i < nx; ++i)
    for (int j = 0; j < ny; ++j) cross[i][j].p = {vx[i] + jit(), hy[j] + jit()};

  std::vector<CircleSite> circles;
  if (sp.circle_count > 0) {
    std::vector<std::pair<int, int>> candidates;
    for (int i = 0; i < nx; ++i)
      for (int j = 0; j < ny; ++j)
        if (!wide[i] && !wide[nx + j]) candidates.emplace_back(i, j);
    if (int(candidates.size()) < sp.circle_count)
      throw param_error("synth: not enough normal crossings for the circles");
    std::shuffle(candidates.begin(), candidates.end(), rng);
    for (int k = 0; k < sp.circle_count; ++k) {
      auto [i, j] = candidates[k];
      // The ring center stays on the unjittered crossing so the four
      // approaches meet it nearly radially.
      cross[i][j].p = {vx[i], hy[j]};
      cross[i][j].circle = k;
      circles.push_back({cross[i][j].p, {}});
    }
  }

  graph::RoadGraph& gt = scene.gt;
  for (int i = 0; i < nx; ++i)
    for (int j = 0; j < ny; ++j)
      if (cross[i][j].circle < 0) cross[i][j].node = gt.add_node(cross[i][j].p);

  std::vector<DrawPiece> draw;
  // Pairs (first GT edge id, lane count) so materials can be assigned to
  // both lanes of a piece at once.
  std::vector<std::pair<graph::EdgeId, int>> pieces;

  auto emit_piece = [&](const Anchor& a, const Anchor& b, bool is_wide) {
    geom::Point pa = a.p, pb = b.p;
    graph::NodeId na = a.node, nb = b.node;
    if (a.circle >= 0) {
      CircleSite& site = circles[a.circle];
      const geom::Point d = b.p - site.center;
      const geom::Point hook = site.center + d * (sp.circle_radius / geom::norm(d));
      na = gt.add_node(hook);
      site.hooks.emplace_back(std::atan2(hook.y - site.center.y,
                                         hook.x - site.center.x), na);
      pa = hook;
    }
    if (b.circle >= 0) {
      CircleSite& site = circles[b.circle];
      const geom::Point d = a.p - site.center;
      const geom::Point hook = site.center + d * (sp.circle_radius / geom::norm(d));
      nb = gt.add_node(hook);
      site.hooks.emplace_back(std::atan2(hook.y - site.center.y,
                                         hook.x - site.center.x), nb);
      pb = hook;
    }
    if (is_wide) {
      const geom::Point t = pb - pa;
      const double len = geom::norm(t);
      const geom::Point n = {-t.y / len, t.x / len};
      const double off = sp.double_lane_width / 4.0;
      graph::EdgeAttrs attrs;
      attrs.double_lane = true;
      const graph::NodeId l0 = gt.add_node(pa + n * off);
      const graph::NodeId l1 = gt.add_node(pb + n * off);
      const graph::EdgeId first =
          gt.add_edge(l0, l1, {pa + n * off, pb + n * off}, attrs);
      const graph::NodeId r0 = gt.add_node(pa - n * off);
      const graph::NodeId r1 = gt.add_node(pb - n * off);
      gt.add_edge(r0, r1, {pa - n * off, pb - n * off}, attrs);
      pieces.emplace_back(first, 2);
      draw.push_back({{pa, pb}, true});
    } else {
      const graph::EdgeId id = gt.add_edge(na, nb, {pa, pb});
      pieces.emplace_back(id, 1);
      draw.push_back({{pa, pb}, false});
    }
  };

  // Perimeter attachment anchors, gathered for the perimeter walk.
  std::vector<Anchor> top(nx), bottom(nx), left(ny), right(ny);
  for (int i = 0; i < nx; ++i) {
    top[i].p = {vx[i] + jit(), -kMargin};
    top[i].node = gt.add_node(top[i].p);
    bottom[i].p = {vx[i] + jit(), -(hm - kMargin)};
    bottom[i].node = gt.add_node(bottom[i].p);
  }
  for (int j = 0; j < ny; ++j) {
    left[j].p = {kMargin, hy[j] + jit()};
    left[j].node = gt.add_node(left[j].p);
    right[j].p = {wm - kMargin, hy[j] + jit()};
    right[j].node = gt.add_node(right[j].p);
  }

  for (int i = 0; i < nx; ++i) {
    emit_piece(top[i], cross[i][0], wide[i]);
    for (int j = 0; j + 1 < ny; ++j) emit_piece(cross[i][j], cross[i][j + 1], wide[i]);
    emit_piece(cross[i][ny - 1], bottom[i], wide[i]);
  }
  for (int j = 0; j < ny; ++j) {
    emit_piece(left[j], cross[0][j], wide[nx + j]);
    for (int i = 0; i + 1 < nx; ++i) emit_piece(cross[i][j], cross[i + 1][j], wide[nx + j]);
    emit_piece(cross[nx - 1][j], right[j], wide[nx + j]);
  }

  // --- traffic circle rings ------------------------------------------------
  // One GT edge per arc between consecutive attachments, matching what
  // circle replacement produces on the reconstruction side.
  for (CircleSite& site : circles) {
    std::sort(site.hooks.begin(), site.hooks.end());
    const size_t n = site.hooks.size();
    for (size_t k = 0; k < n; ++k) {
      const auto [a0, n0] = site.hooks[k];
      auto [a1, n1] = site.hooks[(k + 1) % n];
      if (k + 1 == n) a1 += 2.0 * std::numbers::pi;
      const int steps =
          std::max(2, int(std::ceil((a1 - a0) / (5.0 * std::numbers::pi / 180.0))));
      geom::Polyline arc;
      for (int s = 0; s <= steps; ++s) {
        const double a = a0 + (a1 - a0) * s / steps;
        arc.push_back(site.center + geom::Point{std::cos(a), std::sin(a)} * sp.circle_radius);
      }
      arc.front() = gt.nodes.at(n0);
      arc.back() = gt.nodes.at(n1);
      graph::EdgeAttrs attrs;
      attrs.provenance = graph::Provenance::circle;
      attrs.material = graph::Material::processed;
      gt.add_edge(n0, n1, arc, attrs);
      draw.push_back({arc, false});
    }
  }

  // --- perimeter road ------------------------------------------------------
  {
    const geom::Point tl{kMargin, -kMargin}, tr{wm - kMargin, -kMargin};
    const geom::Point br{wm - kMargin, -(hm - kMargin)}, bl{kMargin, -(hm - kMargin)};
    std::vector<Anchor> ts = top, rs = right, bs = bottom, ls = left;
    std::sort(ts.begin(), ts.end(), [](auto& a, auto& b) { return a.p.x < b.p.x; });
    std::sort(rs.begin(), rs.end(), [](auto& a, auto& b) { return a.p.y > b.p.y; });
    std::sort(bs.begin(), bs.end(), [](auto& a, auto& b) { return a.p.x > b.p.x; });
    std::sort(ls.begin(), ls.end(), [](auto& a, auto& b) { return a.p.y < b.p.y; });

    // Clockwise walk; corners are plain vertices, attachments are nodes.
    struct Stop { geom::Point p; graph::NodeId node; };
    std::vector<Stop> walk;
    walk.push_back({tl, -1});
    for (const Anchor& a : ts) walk.push_back({a.p, a.node});
    walk.push_back({tr, -1});
    for (const Anchor& a : rs) walk.push_back({a.p, a.node});
    walk.push_back({br, -1});
    for (const Anchor& a : bs) walk.push_back({a.p, a.node});
    walk.push_back({bl, -1});
    for (const Anchor& a : ls) walk.push_back({a.p, a.node});

    size_t first = 0;
    while (walk[first].node < 0) ++first;  // streets_x >= 1 guarantees one
    geom::Polyline run{walk[first].p};
    graph::NodeId run_start = walk[first].node;
    for (size_t k = 1; k <= walk.size(); ++k) {
      const Stop& s = walk[(first + k) % walk.size()];
      run.push_back(s.p);
      if (s.node >= 0) {
        const graph::EdgeId id = gt.add_edge(run_start, s.node, run);
        pieces.emplace_back(id, 1);
        draw.push_back({run, false});
        run = {s.p};
        run_start = s.node;
      }
    }
  }

  // --- land cover ----------------------------------------------------------
  raster::GeoTransform t;
  t.origin_x = 0.0;
  t.origin_y = 0.0;
  t.pixel_width = sp.pixel_size;
  t.pixel_height = -sp.pixel_size;

  raster::LulcRaster& lulc = scene.lulc;
  lulc.width = sp.width_px;
  lulc.height = sp.height_px;
  lulc.transform = t;
  lulc.legend = {{1, "crops"}, {2, "barren"}, {3, "water"}, {4, "urban"}};
  lulc.labels.assign(size_t(sp.width_px) * sp.height_px, 1);
  {
    struct Site { double x, y; uint8_t label; };
    std::vector<Site> sites(7);
    for (Site& s : sites) {
      s.x = frand(rng, 0.0, sp.width_px);
      s.y = frand(rng, 0.0, sp.height_px);
      const double u = frand(rng, 0.0, 1.0);
      s.label = u < 0.40 ? 1 : u < 0.65 ? 2 : u < 0.80 ? 3 : 4;
    }
    auto rows = [&](int r) {
      for (int c = 0; c < sp.width_px; ++c) {
        double best = 1e300;
        uint8_t label = 1;
        for (const Site& s : sites) {
          const double d = (c - s.x) * (c - s.x) + (r - s.y) * (r - s.y);
          if (d < best) { best = d; label = s.label; }
        }
        lulc.labels[size_t(r) * sp.width_px + c] = label;
      }
    };
    if (exec == Exec::parallel) {
#pragma omp parallel for schedule(static)
      for (int r = 0; r < sp.height_px; ++r) rows(r);
    } else {
      for (int r = 0; r < sp.height_px; ++r) rows(r);
    }
  }

  // --- ground-truth materials ----------------------------------------------
  // Unprocessed pieces resolve sand vs gravel by the same land-cover rule
  // the classifier applies, so an end-to-end run can be scored against GT.
  for (const auto& [first, lanes] : pieces) {
    graph::Material m;
    if (frand(rng, 0.0, 1.0) < 0.55) {
      m = graph::Material::processed;
    } else {
      const auto d = material::refine_unprocessed(
          gt.edges.at(first).geometry, lulc, sp.lulc_radius, 0.5);
      m = d.label;
    }
    for (int k = 0; k < lanes; ++k) gt.edges.at(first + k).attrs.material = m;
  }

  // --- mask ----------------------------------------------------------------
  std::vector<geom::Polyline> narrow, wide_lines;
  for (const DrawPiece& p : draw)
    (p.wide ? wide_lines : narrow).push_back(p.line);

  raster::RasterMask& mask = scene.mask;
  if (wide_lines.empty()) {
    mask = raster::rasterize_centerlines(narrow, t, sp.width_px, sp.height_px,
                                         sp.road_width, sp.contour_px, exec);
  } else {
    mask = raster::rasterize_centerlines(narrow, t, sp.width_px, sp.height_px,
                                         sp.road_width, 0, exec);
    const raster::RasterMask wide_mask = raster::rasterize_centerlines(
        wide_lines, t, sp.width_px, sp.height_px, sp.double_lane_width, 0, exec);
    for (size_t k = 0; k < mask.classes.size(); ++k)
      if (wide_mask.classes[k] == raster::kInterior)
        mask.classes[k] = raster::kInterior;
    carve_ring(mask, sp.contour_px, exec);
  }

  // --- imagery -------------------------------------------------------------
  // Nearest-centerline material id per pixel, painted edge by edge (rows of
  // one edge are independent; the running minimum keeps the first edge on
  // ties, so the result does not depend on the execution mode).
  std::vector<float> best(mask.classes.size(), 1e30f);
  std::vector<uint8_t> mat(mask.classes.size(), 255);
  {
    const double pad = sp.double_lane_width / 2.0 + 3.0;
    for (const auto& [id, e] : gt.edges) {
      double cmin = 1e300, cmax = -1e300, rmin = 1e300, rmax = -1e300;
      for (const geom::Point& p : e.geometry) {
        double c, r;
        raster::world_to_pixel(t, p, c, r);
        cmin = std::min(cmin, c); cmax = std::max(cmax, c);
        rmin = std::min(rmin, r); rmax = std::max(rmax, r);
      }
      const double pad_px = pad / sp.pixel_size;
      const int c0 = std::max(0, int(std::floor(cmin - pad_px)));
      const int c1 = std::min(sp.width_px - 1, int(std::ceil(cmax + pad_px)));
      const int r0 = std::max(0, int(std::floor(rmin - pad_px)));
      const int r1 = std::min(sp.height_px - 1, int(std::ceil(rmax + pad_px)));
      if (c0 > c1 || r0 > r1) continue;
      const uint8_t code = uint8_t(e.attrs.material);
      auto rows = [&](int r) {
        for (int c = c0; c <= c1; ++c) {
          const float d = float(polyline_distance(
              raster::pixel_to_world(t, c, r), e.geometry));
          const size_t k = size_t(r) * sp.width_px + c;
          if (d < best[k]) { best[k] = d; mat[k] = code; }
        }
      };
      if (exec == Exec::parallel) {
#pragma omp parallel for schedule(static)
        for (int r = r0; r <= r1; ++r) rows(r);
      } else {
        for (int r = r0; r <= r1; ++r) rows(r);
      }
    }
  }

  raster::ImageRaster& img = scene.image;
  img.width = sp.width_px;
  img.height = sp.height_px;
  img.bit_depth = 8;
  img.transform = t;
  img.bands.assign(sp.bands, std::vector<uint16_t>(mask.classes.size(), 0));
  {
    auto rows = [&](int r) {
      for (int c = 0; c < sp.width_px; ++c) {
        const size_t k = size_t(r) * sp.width_px + c;
        const uint8_t cls = mask.classes[k];
        SurfaceColor col;
        double shade = 1.0;
        if (cls == raster::kOther) {
          col = lulc_color(lulc.labels[k]);
        } else {
          col = material_color(mat[k] == 255 ? graph::Material::processed
                                             : graph::Material(mat[k]));
          if (cls == raster::kContour) shade = 0.9;
        }
        for (int b = 0; b < sp.bands; ++b) {
          const int base = b < 3 ? col.rgb[b] : col.nir;
          const double n =
              (unit(pix_hash(seed, 16 + b, c, r)) * 2.0 - 1.0) * col.amp;
          const int v = int(std::lround(base * shade + n));
          img.bands[b][k] = uint16_t(std::clamp(v, 0, 255));
        }
      }
    };
    if (exec == Exec::parallel) {
#pragma omp parallel for schedule(static)
      for (int r = 0; r < sp.height_px; ++r) rows(r);
    } else {
      for (int r = 0; r < sp.height_px; ++r) rows(r);
    }
  }

  // --- mask noise (after imagery: the imagery shows the true scene) --------
  if (sp.noise > 0.0) {
    auto rows = [&](int r) {
      for (int c = 0; c < sp.width_px; ++c) {
        const uint64_t h = pix_hash(seed, 7, c, r);
        if (unit(h) < sp.noise)
          mask.classes[size_t(r) * sp.width_px + c] = uint8_t((h >> 59) % 3);
      }
    };
    if (exec == Exec::parallel) {
#pragma omp parallel for schedule(static)
      for (int r = 0; r < sp.height_px; ++r) rows(r);
    } else {
      for (int r = 0; r < sp.height_px; ++r) rows(r);
    }
  }

  gt.remove_orphan_nodes();  // crossings swallowed by two wide streets
  gt.validate();
  return scene;
}

}  // namespace roadvec::pipeline
