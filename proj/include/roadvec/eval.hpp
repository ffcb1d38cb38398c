#pragma once

#include <string>
#include <vector>

#include "roadvec/common.hpp"
#include "roadvec/geom.hpp"
#include "roadvec/netgraph.hpp"

namespace roadvec::eval {

// Object-wise comparison of an extracted network against ground truth with
// buffered matching: an object is one graph edge (a junction-to-junction
// segment).

struct PredMatch {
  graph::EdgeId id = -1;
  bool tp = false;
  double coverage = 0.0;  // fraction of the edge's buffer inside the GT union
  graph::EdgeId matched_gt = -1;  // TP only: argmax pairwise overlap
  double hausdorff = 0.0;         // TP only: centerline distance, meters
};

struct GtMatch {
  graph::EdgeId id = -1;
  bool matched = false;   // false = FN
  double coverage = 0.0;  // fraction of the edge's buffer inside the pred union
};

struct MatchResult {
  std::vector<PredMatch> pred;  // ascending edge id
  std::vector<GtMatch> gt;      // ascending edge id
  int tp = 0;
  int fp = 0;
  int fn = 0;
  double gt_length_m = 0.0;
  double buffer_radius = 2.0;
  double hausdorff_step = 0.5;
};

// Buffers every edge of both networks at buffer_radius. A predicted edge
// is a true positive when at least half of its buffer area lies inside the
// union of the ground-truth buffers, otherwise a false positive; a
// ground-truth edge with less than half of its buffer covered by the
// prediction union is a false negative. Each true positive is matched to
// the single ground-truth edge with the largest pairwise buffer overlap
// (ties to the lower edge id) and scored with the symmetric Hausdorff
// distance between the two centerlines, sampled at hausdorff_step.
// Empty networks produce degenerate counts, not errors.
// Throws param_error on non-positive buffer_radius or hausdorff_step.
MatchResult match_roads(const graph::RoadGraph& pred,
                        const graph::RoadGraph& gt, double buffer_radius = 2.0,
                        double hausdorff_step = 0.5,
                        Exec exec = Exec::parallel);

struct EvalReport {
  double gt_length_km = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double avg_hausdorff = 0.0;  // meters, mean over TP pairs
  // Zero-denominator metrics are marked undefined and hold 0.0.
  bool precision_defined = false;
  bool recall_defined = false;
  bool f1_defined = false;
  bool hausdorff_defined = false;
  int tp = 0;
  int fp = 0;
  int fn = 0;
  double buffer_radius = 2.0;
  std::vector<PredMatch> pred;  // per-road detail
  std::vector<GtMatch> gt;
};

// P = TP/(TP+FP), R = TP/(TP+FN), F1 = 2PR/(P+R), avg Hausdorff over the
// TP pairs; each is undefined-marked when its denominator is zero.
EvalReport compute_metrics(const MatchResult& m);

struct AggregateRow {
  double gt_length_km = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double avg_hausdorff = 0.0;
};

// Metrics averaged with weights proportional to gt_length_km; the result's
// gt_length_km is the plain sum. Throws param_error on an empty list or a
// non-positive length.
AggregateRow weighted_average(const std::vector<AggregateRow>& rows);

// Report serialization: JSON for machines (undefined metrics are null),
// aligned columns for humans.
void write_report_json(const EvalReport& r, const std::string& path);
std::string format_report_text(const EvalReport& r);

}  // namespace roadvec::eval
