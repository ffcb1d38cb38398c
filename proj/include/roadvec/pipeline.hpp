#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

#include "roadvec/common.hpp"
#include "roadvec/denoise.hpp"
#include "roadvec/material.hpp"
#include "roadvec/netgraph.hpp"
#include "roadvec/raster.hpp"

namespace roadvec::pipeline {

// Synthetic scene generator parameters. A scene is a jittered street grid
// inside a rectangular perimeter road, optionally with traffic circles
// replacing interior crossings and some streets drawn as one wide divided
// band. Every street ends on the perimeter, so the network has no free tips
// for thinning to erode.
struct SynthParams {
  int width_px = 512;
  int height_px = 512;
  double pixel_size = 0.5;       // meters per pixel
  double road_width = 6.0;       // meters
  int contour_px = 1;            // contour ring thickness, pixels
  int streets_x = 4;             // vertical streets
  int streets_y = 4;             // horizontal streets
  double jitter = 1.0;           // crossing displacement, +/- meters
  int circle_count = 1;          // traffic circles at interior crossings
  double circle_radius = 9.0;    // meters
  int double_lane_count = 0;     // streets drawn as a single wide band
  double double_lane_width = 15.0;
  double noise = 0.005;          // per-pixel class flip probability
  int bands = 4;                 // 3 = RGB, 4 = RGB+NIR imagery
  double lulc_radius = 60.0;     // radius for the sand-vs-gravel ground truth
};

struct SynthScene {
  raster::RasterMask mask;
  raster::ImageRaster image;
  raster::LulcRaster lulc;
  graph::RoadGraph gt;
};

// Deterministic per seed, bit-for-bit: the network comes from one seeded
// generator stream and all per-pixel randomness (imagery noise, mask noise)
// is hashed from (seed, pixel, band), so the parallel render is
// order-independent. With noise = 0 the mask equals
// rasterize_network(gt-minus-lane-splitting) exactly.
SynthScene run_synth(uint64_t seed, const SynthParams& params = {},
                     Exec exec = Exec::parallel);

// One knob struct for the whole toolchain; the JSON config file mirrors it
// section by section (see config_from_json).
struct PipelineConfig {
  double simplify_epsilon = 0.75;       // simplify.epsilon
  double dangle_min_length = 15.0;      // dangle.min_length, meters
  double loop_area_threshold = 300.0;   // loop.area_threshold, square meters
  denoise::HoughParams hough;           // hough.r_min_px / r_max_px / support_min
  double junction_angle_tol_deg = 2.0;  // junction.angle_tol_deg
  int junction_reach = 2;               // junction.reach
  int junction_max_rounds = 5;          // junction.max_rounds
  double lane_width_min = 12.0;         // lane.width_min, meters
  std::optional<double> lane_offset;    // lane.offset; nullopt = "auto"
  material::ClassifyParams material;    // material.buffer / lulc_radius / barren_water_min
  double svm_c = 1.0;                   // material.svm_c
  int svm_iterations = 1;               // material.svm_iterations
  double eval_buffer = 2.0;             // eval.buffer, meters
  double eval_hausdorff_step = 0.5;     // eval.hausdorff_step, meters
  SynthParams synth;                    // synth.*
};

// Throws param_error naming the first offending value.
void validate_config(const PipelineConfig& cfg);

// Parses the JSON config text on top of `base`. Sections: simplify, dangle,
// loop, hough, junction, lane, material, eval, synth; keys as annotated on
// PipelineConfig. Missing sections/keys keep their current values; unknown
// names are hard errors so typos cannot pass silently. lane.offset takes
// the string "auto" or a positive number.
PipelineConfig config_from_json(const std::string& text,
                                PipelineConfig base = {});
PipelineConfig load_config(const std::string& path, PipelineConfig base = {});

// Full reconstruction: thin -> trace -> simplify -> loop classification ->
// noise-loop collapse -> dangle pruning -> junction smoothing -> circle
// replacement -> lane duplication. A failure inside a stage is rethrown as
// pipeline_error prefixed with the stage name. When log is given, one line
// per stage (counts and wall time) is written to it. Deterministic for a
// fixed mask and config, in both Exec modes.
graph::RoadGraph run_reconstruct(const raster::RasterMask& mask,
                                 const PipelineConfig& cfg = {},
                                 std::ostream* log = nullptr,
                                 Exec exec = Exec::parallel);

}  // namespace roadvec::pipeline
