#include "roadvec/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace roadvec::eval {

namespace {

struct Box {
  double x0 = 0, y0 = 0, x1 = 0, y1 = 0;
  bool overlaps(const Box& o) const {
    return x0 <= o.x1 && o.x0 <= x1 && y0 <= o.y1 && o.y0 <= y1;
  }
};

Box polyline_box(const geom::Polyline& line, double pad) {
  Box b{line[0].x, line[0].y, line[0].x, line[0].y};
  for (const geom::Point& p : line) {
    b.x0 = std::min(b.x0, p.x);
    b.y0 = std::min(b.y0, p.y);
    b.x1 = std::max(b.x1, p.x);
    b.y1 = std::max(b.y1, p.y);
  }
  b.x0 -= pad;
  b.y0 -= pad;
  b.x1 += pad;
  b.y1 += pad;
  return b;
}

struct BufferedEdge {
  graph::EdgeId id = -1;
  const geom::Polyline* line = nullptr;
  geom::Polygon poly;
  double area = 0.0;
  Box box;
};

std::vector<BufferedEdge> buffer_edges(const graph::RoadGraph& g, double r) {
  std::vector<BufferedEdge> out;
  out.reserve(g.edges.size());
  for (const auto& [id, e] : g.edges) {
    BufferedEdge be;
    be.id = id;
    be.line = &e.geometry;
    be.poly = geom::buffer_polyline(e.geometry, r);
    be.area = geom::polygon_area(be.poly);
    be.box = polyline_box(e.geometry, r);
    out.push_back(std::move(be));
  }
  std::sort(out.begin(), out.end(),
            [](const BufferedEdge& a, const BufferedEdge& b) { return a.id < b.id; });
  return out;
}

}  // namespace

MatchResult match_roads(const graph::RoadGraph& pred,
                        const graph::RoadGraph& gt, double buffer_radius,
                        double hausdorff_step, Exec exec) {
  if (!(buffer_radius > 0.0)) throw param_error("buffer_radius must be > 0");
  if (!(hausdorff_step > 0.0)) throw param_error("hausdorff_step must be > 0");

  MatchResult m;
  m.buffer_radius = buffer_radius;
  m.hausdorff_step = hausdorff_step;

  const std::vector<BufferedEdge> pb = buffer_edges(pred, buffer_radius);
  const std::vector<BufferedEdge> gb = buffer_edges(gt, buffer_radius);
  for (const BufferedEdge& e : gb) m.gt_length_m += geom::length(*e.line);

  geom::PolygonSet gt_polys, pred_polys;
  for (const BufferedEdge& e : gb) gt_polys.push_back(e.poly);
  for (const BufferedEdge& e : pb) pred_polys.push_back(e.poly);
  const geom::PolygonSet gt_union = geom::polygon_union(gt_polys);
  const geom::PolygonSet pred_union = geom::polygon_union(pred_polys);

  m.pred.resize(pb.size());
  m.gt.resize(gb.size());

  // Each predicted edge is scored against the GT union for the TP test and
  // against individual GT buffers for its matched reference. Work per edge
  // is independent.
  auto score_pred = [&](size_t i) {
    const BufferedEdge& e = pb[i];
    PredMatch& r = m.pred[i];
    r.id = e.id;
    const double inter =
        geom::polygon_intersection_area({e.poly}, gt_union);
    r.coverage = e.area > 0.0 ? std::min(inter / e.area, 1.0) : 0.0;
    r.tp = r.coverage >= 0.5;
    if (!r.tp) return;

    double best = -1.0;
    for (const BufferedEdge& ge : gb) {
      if (!e.box.overlaps(ge.box)) continue;
      const double a = geom::polygon_intersection_area({e.poly}, {ge.poly});
      if (a > best) {  // strict: ties keep the lower id (gb is id-sorted)
        best = a;
        r.matched_gt = ge.id;
      }
    }
    if (r.matched_gt >= 0) {
      const geom::Polyline& ref = *std::find_if(gb.begin(), gb.end(),
                                                [&](const BufferedEdge& ge) {
                                                  return ge.id == r.matched_gt;
                                                })
                                       ->line;
      r.hausdorff =
          geom::hausdorff_distance(*e.line, ref, hausdorff_step, Exec::serial);
    }
  };
  auto score_gt = [&](size_t i) {
    const BufferedEdge& e = gb[i];
    GtMatch& r = m.gt[i];
    r.id = e.id;
    const double inter =
        geom::polygon_intersection_area({e.poly}, pred_union);
    r.coverage = e.area > 0.0 ? std::min(inter / e.area, 1.0) : 0.0;
    r.matched = r.coverage >= 0.5;
  };

  const int np = int(pb.size()), ng = int(gb.size());
  if (exec == Exec::parallel) {
#pragma omp parallel for schedule(dynamic)
    for (int i = 0; i < np; ++i) score_pred(size_t(i));
#pragma omp parallel for schedule(dynamic)
    for (int i = 0; i < ng; ++i) score_gt(size_t(i));
  } else {
    for (int i = 0; i < np; ++i) score_pred(size_t(i));
    for (int i = 0; i < ng; ++i) score_gt(size_t(i));
  }

  for (const PredMatch& r : m.pred) {
    if (r.tp)
      ++m.tp;
    else
      ++m.fp;
  }
  for (const GtMatch& r : m.gt)
    if (!r.matched) ++m.fn;
  return m;
}

EvalReport compute_metrics(const MatchResult& m) {
  EvalReport r;
  r.tp = m.tp;
  r.fp = m.fp;
  r.fn = m.fn;
  r.buffer_radius = m.buffer_radius;
  r.gt_length_km = m.gt_length_m / 1000.0;
  r.pred = m.pred;
  r.gt = m.gt;

  if (m.tp + m.fp > 0) {
    r.precision = double(m.tp) / double(m.tp + m.fp);
    r.precision_defined = true;
  }
  if (m.tp + m.fn > 0) {
    r.recall = double(m.tp) / double(m.tp + m.fn);
    r.recall_defined = true;
  }
  if (r.precision_defined && r.recall_defined && r.precision + r.recall > 0.0) {
    r.f1 = 2.0 * r.precision * r.recall / (r.precision + r.recall);
    r.f1_defined = true;
  }
  if (m.tp > 0) {
    double sum = 0.0;
    for (const PredMatch& p : m.pred)
      if (p.tp) sum += p.hausdorff;
    r.avg_hausdorff = sum / double(m.tp);
    r.hausdorff_defined = true;
  }
  return r;
}

AggregateRow weighted_average(const std::vector<AggregateRow>& rows) {
  if (rows.empty()) throw param_error("no rows to aggregate");
  AggregateRow out;
  double wsum = 0.0;
  for (const AggregateRow& r : rows) {
    if (!(r.gt_length_km > 0.0))
      throw param_error("row weights (gt_length_km) must be > 0");
    wsum += r.gt_length_km;
    out.gt_length_km += r.gt_length_km;
    out.precision += r.gt_length_km * r.precision;
    out.recall += r.gt_length_km * r.recall;
    out.f1 += r.gt_length_km * r.f1;
    out.avg_hausdorff += r.gt_length_km * r.avg_hausdorff;
  }
  out.precision /= wsum;
  out.recall /= wsum;
  out.f1 /= wsum;
  out.avg_hausdorff /= wsum;
  return out;
}

void write_report_json(const EvalReport& r, const std::string& path) {
  nlohmann::json j;
  j["gt_length_km"] = r.gt_length_km;
  j["buffer_radius_m"] = r.buffer_radius;
  j["tp"] = r.tp;
  j["fp"] = r.fp;
  j["fn"] = r.fn;
  j["precision"] = r.precision_defined ? nlohmann::json(r.precision)
                                       : nlohmann::json(nullptr);
  j["recall"] =
      r.recall_defined ? nlohmann::json(r.recall) : nlohmann::json(nullptr);
  j["f1"] = r.f1_defined ? nlohmann::json(r.f1) : nlohmann::json(nullptr);
  j["avg_hausdorff_m"] = r.hausdorff_defined
                             ? nlohmann::json(r.avg_hausdorff)
                             : nlohmann::json(nullptr);
  j["pred"] = nlohmann::json::array();
  for (const PredMatch& p : r.pred) {
    nlohmann::json row;
    row["id"] = p.id;
    row["status"] = p.tp ? "TP" : "FP";
    row["coverage"] = p.coverage;
    if (p.tp) {
      row["matched_gt"] = p.matched_gt;
      row["hausdorff_m"] = p.hausdorff;
    }
    j["pred"].push_back(std::move(row));
  }
  j["gt"] = nlohmann::json::array();
  for (const GtMatch& g : r.gt) {
    nlohmann::json row;
    row["id"] = g.id;
    row["status"] = g.matched ? "matched" : "FN";
    row["coverage"] = g.coverage;
    j["gt"].push_back(std::move(row));
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw io_error("cannot write " + path);
  out << j.dump(2) << '\n';
  if (!out) throw io_error("write failed for " + path);
}

std::string format_report_text(const EvalReport& r) {
  auto cell = [](bool defined, double v, const char* fmt) {
    char buf[32];
    if (!defined) return std::string("n/a");
    std::snprintf(buf, sizeof(buf), fmt, v);
    return std::string(buf);
  };
  std::ostringstream out;
  char line[160];
  std::snprintf(line, sizeof(line), "%14s %10s %8s %8s %14s\n",
                "GT Length (km)", "Precision", "Recall", "F1score",
                "Hausdorff (m)");
  out << line;
  std::snprintf(line, sizeof(line), "%14.2f %10s %8s %8s %14s\n",
                r.gt_length_km, cell(r.precision_defined, r.precision, "%.2f").c_str(),
                cell(r.recall_defined, r.recall, "%.2f").c_str(),
                cell(r.f1_defined, r.f1, "%.2f").c_str(),
                cell(r.hausdorff_defined, r.avg_hausdorff, "%.2f").c_str());
  out << line;
  std::snprintf(line, sizeof(line), "TP %d  FP %d  FN %d  (buffer %.1f m)\n",
                r.tp, r.fp, r.fn, r.buffer_radius);
  out << line;
  return out.str();
}

}  // namespace roadvec::eval
