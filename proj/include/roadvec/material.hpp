#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "roadvec/common.hpp"
#include "roadvec/geom.hpp"
#include "roadvec/netgraph.hpp"
#include "roadvec/raster.hpp"

namespace roadvec::material {

// Hierarchical surface classification: a linear SVM splits processed
// (concrete, tar, other solid man-made surfaces) from unprocessed (dirt,
// gravel, sand), then land-cover context around each unprocessed segment
// splits gravel from sand.

enum class BandConfig { rgb, rgb_nir };

// 4 stats per band, plus the mean per-pixel (NIR-R)/(NIR+R) ratio when a
// NIR band is present: 12 features for RGB, 17 for RGB-NIR.
int feature_dim(BandConfig bc);
BandConfig band_config_for(int band_count);  // 3 or 4; else param_error
std::string to_string(BandConfig bc);
BandConfig band_config_from_string(const std::string& s);  // else parse_error

// Raw (unnormalized) radiometric features of one segment: the line-string
// is buffered at `buffer_m`, pixels whose centers fall inside the polygon
// are collected, and per band the mean, population standard deviation and
// the linearly interpolated 25th/75th percentiles are computed, in band
// order, followed by the NIR ratio when there are four bands. Statistics
// are evaluated over the sorted sample so any spatial rearrangement of the
// same pixel multiset yields bit-identical features.
// Throws no_data_error when the buffer covers no pixel center.
std::vector<double> extract_features(const raster::ImageRaster& image,
                                     const geom::Polyline& segment,
                                     double buffer_m = 2.0);

struct LabeledSample {
  int id = 0;
  int label = 0;  // +1 processed, -1 unprocessed
  std::vector<double> features;
};

struct SvmModel {
  BandConfig band_config = BandConfig::rgb;
  std::vector<double> weights;  // in z-scored feature space
  double bias = 0.0;
  std::vector<double> norm_mean;  // per raw feature
  std::vector<double> norm_std;   // per raw feature, always > 0
  double c = 1.0;
  int iterations = 1;
  std::uint64_t seed = 0;
  // Objective 0.5*|w|^2 + C*sum(hinge) after each accepted training epoch,
  // non-increasing by construction.
  std::vector<double> objective_log;
};

// Trains a linear soft-margin SVM minimizing 0.5*|w|^2 + C*sum over
// samples of max(0, 1 - y*(w.x+b)), on z-scored features (statistics are
// computed from `samples` and stored in the model; constant features get
// unit std). The optimizer is a deterministic full-batch subgradient
// schedule: each epoch steps along the negative subgradient, halving the
// step until the exact objective decreases, so the logged objective is
// monotone non-increasing and identical inputs give a bit-identical model
// (`seed` is recorded as provenance; the batch schedule uses no
// randomness). With iterations >= 2, each extra pass pseudo-labels the
// `unlabeled` feature vectors the current model classifies with |margin| >
// 1, augments the training set with them, and retrains from scratch.
// Feature dimensionality is taken from the samples; `band_config` is
// stored as metadata (it is validated against the image, not here, so
// low-dimensional experiment data trains fine).
// Throws param_error on c <= 0, iterations < 1, fewer than 2 samples,
// a single-class label set, or mismatched feature dimensions.
SvmModel train_svm(const std::vector<LabeledSample>& samples, double c,
                   int iterations, BandConfig band_config = BandConfig::rgb,
                   const std::vector<std::vector<double>>& unlabeled = {},
                   std::uint64_t seed = 0);

struct SurfaceDecision {
  bool processed = false;
  double margin = 0.0;  // signed w.x+b in normalized space
};

// sign(w.x+b) on the z-scored features; a margin of exactly zero counts as
// unprocessed. Throws param_error on dimension mismatch.
SurfaceDecision classify_surface(const SvmModel& model,
                                 const std::vector<double>& features);

struct RefineDecision {
  graph::Material label = graph::Material::gravel;
  double barren_water_fraction = 0.0;
  bool no_coverage = false;  // no LULC pixel in range -> gravel, fraction 0
};

// Gravel/sand split for a segment already deemed unprocessed: counts LULC
// pixel centers within `radius_m` of the segment midpoint; when the barren
// plus water fraction is >= barren_water_min the segment is sand,
// otherwise gravel. The default radius is that of a disk of 1 km^2 area.
// Throws param_error on non-positive radius or a threshold outside [0,1].
RefineDecision refine_unprocessed(const geom::Polyline& segment,
                                  const raster::LulcRaster& lulc,
                                  double radius_m = 564.0,
                                  double barren_water_min = 0.5);

struct ClassifyParams {
  double buffer_m = 2.0;
  double lulc_radius_m = 564.0;
  double barren_water_min = 0.5;
};

struct ClassifyStats {
  int processed = 0;
  int gravel = 0;
  int sand = 0;
  int skipped = 0;  // segments with no image coverage keep material unknown
};

// Applies the full hierarchy to every edge of the graph: features are
// extracted per edge, classify_surface assigns processed, and only
// edges that came out unprocessed are refined through the LULC context
// (never the processed ones). Edges whose buffer misses the image are
// skipped and keep material unknown. Per-edge work is independent and runs
// in parallel under Exec::parallel. Throws param_error when the model
// dimension does not match the image band configuration.
ClassifyStats classify_network(graph::RoadGraph& g,
                               const raster::ImageRaster& image,
                               const SvmModel& model,
                               const raster::LulcRaster& lulc,
                               const ClassifyParams& params = {},
                               Exec exec = Exec::parallel);

// Model file: JSON object with band_config, weights, bias, normalization
// {mean, std}, C, iterations, seed.
void save_model(const SvmModel& model, const std::string& path);
SvmModel load_model(const std::string& path);

// Training sample file: CSV with header "id,label,f0,...": one row per
// segment, label spelled processed/unprocessed, features round-tripping
// exactly (shortest-form doubles).
void write_samples_csv(const std::string& path,
                       const std::vector<LabeledSample>& samples);
std::vector<LabeledSample> read_samples_csv(const std::string& path);

}  // namespace roadvec::material
