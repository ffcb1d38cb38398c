#include "roadvec/material.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

namespace roadvec::material {

int feature_dim(BandConfig bc) { return bc == BandConfig::rgb ? 12 : 17; }

BandConfig band_config_for(int band_count) {
  if (band_count == 3) return BandConfig::rgb;
  if (band_count == 4) return BandConfig::rgb_nir;
  throw param_error("band count must be 3 or 4, got " +
                    std::to_string(band_count));
}

std::string to_string(BandConfig bc) {
  return bc == BandConfig::rgb ? "rgb" : "rgb_nir";
}

BandConfig band_config_from_string(const std::string& s) {
  if (s == "rgb") return BandConfig::rgb;
  if (s == "rgb_nir") return BandConfig::rgb_nir;
  throw parse_error("unknown band config '" + s + "'");
}

namespace {

double sorted_mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / double(v.size());
}

double sorted_pop_std(const std::vector<double>& v, double mean) {
  double s = 0.0;
  for (double x : v) s += (x - mean) * (x - mean);
  return std::sqrt(s / double(v.size()));
}

// Linear interpolation between closest ranks on a sorted sample.
double percentile(const std::vector<double>& sorted, double p) {
  const double q = double(sorted.size() - 1) * p;
  const size_t lo = size_t(q);
  if (lo + 1 >= sorted.size()) return sorted.back();
  const double frac = q - double(lo);
  return sorted[lo] * (1.0 - frac) + sorted[lo + 1] * frac;
}

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

}  // namespace

std::vector<double> extract_features(const raster::ImageRaster& image,
                                     const geom::Polyline& segment,
                                     double buffer_m) {
  if (!(buffer_m > 0.0)) throw param_error("buffer must be > 0");
  if (image.band_count() != 3 && image.band_count() != 4)
    throw param_error("image must have 3 or 4 bands");
  geom::validate_polyline(segment);

  const geom::Polygon poly = geom::buffer_polyline(segment, buffer_m);
  const auto samples = raster::sample_window(image, poly);
  if (samples.empty() || samples[0].empty())
    throw no_data_error("segment buffer covers no image pixel");

  std::vector<double> features;
  features.reserve(size_t(feature_dim(band_config_for(image.band_count()))));
  for (const auto& band : samples) {
    std::vector<double> v(band.begin(), band.end());
    std::sort(v.begin(), v.end());
    const double mean = sorted_mean(v);
    features.push_back(mean);
    features.push_back(sorted_pop_std(v, mean));
    features.push_back(percentile(v, 0.25));
    features.push_back(percentile(v, 0.75));
  }
  if (image.band_count() == 4) {
    // Mean per-pixel (NIR-R)/(NIR+R); pixels with a zero denominator are
    // skipped. Ratios are sorted before summing so the value depends only
    // on the pixel multiset, like the per-band statistics.
    std::vector<double> ratios;
    ratios.reserve(samples[0].size());
    for (size_t i = 0; i < samples[0].size(); ++i) {
      const double r = double(samples[0][i]);
      const double nir = double(samples[3][i]);
      if (r + nir > 0.0) ratios.push_back((nir - r) / (nir + r));
    }
    std::sort(ratios.begin(), ratios.end());
    features.push_back(ratios.empty() ? 0.0 : sorted_mean(ratios));
  }
  return features;
}

namespace {

double svm_objective(const std::vector<std::vector<double>>& x,
                     const std::vector<int>& y, double c,
                     const std::vector<double>& w, double b) {
  double f = 0.0;
  for (double wi : w) f += wi * wi;
  f *= 0.5;
  for (size_t i = 0; i < x.size(); ++i) {
    double m = b;
    for (size_t d = 0; d < w.size(); ++d) m += w[d] * x[i][d];
    f += c * std::max(0.0, 1.0 - double(y[i]) * m);
  }
  return f;
}

// One training pass: full-batch subgradient descent with a backtracking
// step, so every logged objective value strictly improves on the previous
// one and the whole schedule is deterministic.
void train_pass(const std::vector<std::vector<double>>& x,
                const std::vector<int>& y, double c, std::vector<double>& w,
                double& b, std::vector<double>& log) {
  const size_t dim = x[0].size();
  w.assign(dim, 0.0);
  b = 0.0;
  log.clear();
  double fcur = svm_objective(x, y, c, w, b);
  log.push_back(fcur);

  double step = 1.0;
  std::vector<double> gw(dim), wt(dim);
  const int max_epochs = 2000;
  for (int epoch = 0; epoch < max_epochs; ++epoch) {
    std::fill(gw.begin(), gw.end(), 0.0);
    double gb = 0.0;
    for (size_t i = 0; i < x.size(); ++i) {
      double m = b;
      for (size_t d = 0; d < dim; ++d) m += w[d] * x[i][d];
      if (double(y[i]) * m < 1.0) {
        for (size_t d = 0; d < dim; ++d) gw[d] -= c * double(y[i]) * x[i][d];
        gb -= c * double(y[i]);
      }
    }
    double gnorm2 = gb * gb;
    for (size_t d = 0; d < dim; ++d) {
      gw[d] += w[d];
      gnorm2 += gw[d] * gw[d];
    }
    if (gnorm2 < 1e-18) break;

    bool accepted = false;
    double s = step, bt = 0.0, ft = 0.0;
    for (int k = 0; k < 60; ++k) {
      for (size_t d = 0; d < dim; ++d) wt[d] = w[d] - s * gw[d];
      bt = b - s * gb;
      ft = svm_objective(x, y, c, wt, bt);
      if (ft < fcur) {
        accepted = true;
        break;
      }
      s *= 0.5;
    }
    if (!accepted) break;  // stalled at a hinge kink; keep the best point
    w = wt;
    b = bt;
    fcur = ft;
    log.push_back(fcur);
    step = s * 2.0;
  }
}

}  // namespace

SvmModel train_svm(const std::vector<LabeledSample>& samples, double c,
                   int iterations, BandConfig band_config,
                   const std::vector<std::vector<double>>& unlabeled,
                   std::uint64_t seed) {
  if (!(c > 0.0)) throw param_error("C must be > 0");
  if (iterations < 1) throw param_error("iterations must be >= 1");
  if (samples.size() < 2) throw param_error("need at least 2 samples");

  const size_t dim = samples[0].features.size();
  if (dim == 0) throw param_error("empty feature vectors");
  bool pos = false, neg = false;
  for (const auto& s : samples) {
    if (s.features.size() != dim)
      throw param_error("inconsistent feature dimensions");
    for (double f : s.features)
      if (!std::isfinite(f)) throw param_error("non-finite feature value");
    if (s.label == 1)
      pos = true;
    else if (s.label == -1)
      neg = true;
    else
      throw param_error("labels must be +1 or -1");
  }
  if (!pos || !neg) throw param_error("both classes must be present");
  for (const auto& u : unlabeled)
    if (u.size() != dim)
      throw param_error("unlabeled feature dimension mismatch");

  SvmModel model;
  model.band_config = band_config;
  model.c = c;
  model.iterations = iterations;
  model.seed = seed;

  // Self-training: each pass after the first re-augments the original set
  // with the previous model's confident (|margin| > 1) pseudo-labels and
  // retrains from scratch. The stored objective log is the final pass's.
  std::vector<LabeledSample> current(samples.begin(), samples.end());
  for (int pass = 0; pass < iterations; ++pass) {
    if (pass > 0) {
      current.assign(samples.begin(), samples.end());
      for (const auto& u : unlabeled) {
        const SurfaceDecision d = classify_surface(model, u);
        if (std::abs(d.margin) > 1.0)
          current.push_back({-1, d.margin > 0.0 ? 1 : -1, u});
      }
    }

    model.norm_mean.assign(dim, 0.0);
    model.norm_std.assign(dim, 0.0);
    for (const auto& s : current)
      for (size_t d = 0; d < dim; ++d) model.norm_mean[d] += s.features[d];
    for (size_t d = 0; d < dim; ++d) model.norm_mean[d] /= double(current.size());
    for (const auto& s : current)
      for (size_t d = 0; d < dim; ++d) {
        const double dv = s.features[d] - model.norm_mean[d];
        model.norm_std[d] += dv * dv;
      }
    for (size_t d = 0; d < dim; ++d) {
      model.norm_std[d] = std::sqrt(model.norm_std[d] / double(current.size()));
      if (model.norm_std[d] <= 0.0) model.norm_std[d] = 1.0;  // constant feature
    }

    std::vector<std::vector<double>> x(current.size());
    std::vector<int> y(current.size());
    for (size_t i = 0; i < current.size(); ++i) {
      x[i].resize(dim);
      for (size_t d = 0; d < dim; ++d)
        x[i][d] = (current[i].features[d] - model.norm_mean[d]) / model.norm_std[d];
      y[i] = current[i].label;
    }
    train_pass(x, y, c, model.weights, model.bias, model.objective_log);
  }
  return model;
}

SurfaceDecision classify_surface(const SvmModel& model,
                                 const std::vector<double>& features) {
  if (features.size() != model.weights.size())
    throw param_error("feature dimension " + std::to_string(features.size()) +
                      " does not match model dimension " +
                      std::to_string(model.weights.size()));
  double margin = model.bias;
  for (size_t d = 0; d < features.size(); ++d)
    margin += model.weights[d] *
              ((features[d] - model.norm_mean[d]) / model.norm_std[d]);
  return {margin > 0.0, margin};
}

RefineDecision refine_unprocessed(const geom::Polyline& segment,
                                  const raster::LulcRaster& lulc,
                                  double radius_m, double barren_water_min) {
  if (!(radius_m > 0.0)) throw param_error("LULC radius must be > 0");
  if (!(barren_water_min >= 0.0 && barren_water_min <= 1.0))
    throw param_error("barren/water threshold must be in [0,1]");
  geom::validate_polyline(segment);
  bool has_barren = false, has_water = false;
  for (const auto& [id, name] : lulc.legend) {
    if (name == "barren") has_barren = true;
    if (name == "water") has_water = true;
  }
  if (!has_barren || !has_water)
    throw param_error("LULC legend must declare barren and water ids");

  const geom::Point mid =
      geom::point_at(segment, geom::length(segment) * 0.5);

  // Candidate rows/columns from the world-space bounding square of the
  // disk; exact membership is the Euclidean test on each pixel center.
  int c0 = 0, c1 = lulc.width - 1, r0 = 0, r1 = lulc.height - 1;
  const auto& t = lulc.transform;
  if (t.skew_x == 0.0 && t.skew_y == 0.0) {
    double ca, cb, ra, rb;
    raster::world_to_pixel(t, {mid.x - radius_m, mid.y - radius_m}, ca, ra);
    raster::world_to_pixel(t, {mid.x + radius_m, mid.y + radius_m}, cb, rb);
    c0 = std::max(c0, int(std::floor(std::min(ca, cb))));
    c1 = std::min(c1, int(std::ceil(std::max(ca, cb))));
    r0 = std::max(r0, int(std::floor(std::min(ra, rb))));
    r1 = std::min(r1, int(std::ceil(std::max(ra, rb))));
  }

  long total = 0, bw = 0;
  for (int r = r0; r <= r1; ++r)
    for (int c = c0; c <= c1; ++c) {
      const geom::Point p = raster::pixel_to_world(t, c, r);
      if (geom::distance(p, mid) > radius_m) continue;
      ++total;
      if (lulc.is_barren_or_water(lulc.labels[size_t(r) * lulc.width + c]))
        ++bw;
    }

  if (total == 0) return {graph::Material::gravel, 0.0, true};
  const double frac = double(bw) / double(total);
  return {frac >= barren_water_min ? graph::Material::sand
                                   : graph::Material::gravel,
          frac, false};
}

ClassifyStats classify_network(graph::RoadGraph& g,
                               const raster::ImageRaster& image,
                               const SvmModel& model,
                               const raster::LulcRaster& lulc,
                               const ClassifyParams& params, Exec exec) {
  const BandConfig bc = band_config_for(image.band_count());
  if (int(model.weights.size()) != feature_dim(bc))
    throw param_error("model dimension " +
                      std::to_string(model.weights.size()) +
                      " does not match " + to_string(bc) + " imagery");
  if (!(params.buffer_m > 0.0)) throw param_error("buffer must be > 0");
  if (!(params.lulc_radius_m > 0.0)) throw param_error("LULC radius must be > 0");
  if (!(params.barren_water_min >= 0.0 && params.barren_water_min <= 1.0))
    throw param_error("barren/water threshold must be in [0,1]");

  std::vector<graph::Edge*> edges;
  edges.reserve(g.edges.size());
  for (auto& [id, e] : g.edges) edges.push_back(&e);

  ClassifyStats stats;
  auto one = [&](graph::Edge& e) {
    std::vector<double> f;
    try {
      f = extract_features(image, e.geometry, params.buffer_m);
    } catch (const no_data_error&) {
      e.attrs.material = graph::Material::unknown;
      return graph::Material::unknown;
    }
    const SurfaceDecision d = classify_surface(model, f);
    if (d.processed) {
      e.attrs.material = graph::Material::processed;
      return graph::Material::processed;
    }
    // Only segments the SVM called unprocessed reach the LULC refinement.
    const RefineDecision rd = refine_unprocessed(
        e.geometry, lulc, params.lulc_radius_m, params.barren_water_min);
    e.attrs.material = rd.label;
    return rd.label;
  };

  // Exceptions cannot cross an OpenMP region; the first one is re-thrown
  // after the loop.
  std::vector<graph::Material> out(edges.size());
  const int n = int(edges.size());
  std::string error;
  auto guarded = [&](int i) {
    try {
      out[size_t(i)] = one(*edges[size_t(i)]);
    } catch (const std::exception& ex) {
#pragma omp critical
      if (error.empty()) error = ex.what();
    }
  };
  if (exec == Exec::parallel) {
#pragma omp parallel for schedule(dynamic)
    for (int i = 0; i < n; ++i) guarded(i);
  } else {
    for (int i = 0; i < n; ++i) guarded(i);
  }
  if (!error.empty()) throw pipeline_error("classify: " + error);

  for (graph::Material m : out) {
    switch (m) {
      case graph::Material::processed: ++stats.processed; break;
      case graph::Material::gravel: ++stats.gravel; break;
      case graph::Material::sand: ++stats.sand; break;
      default: ++stats.skipped; break;
    }
  }
  return stats;
}

void save_model(const SvmModel& model, const std::string& path) {
  nlohmann::json j;
  j["band_config"] = to_string(model.band_config);
  j["weights"] = model.weights;
  j["bias"] = model.bias;
  j["normalization"] = {{"mean", model.norm_mean}, {"std", model.norm_std}};
  j["C"] = model.c;
  j["iterations"] = model.iterations;
  j["seed"] = model.seed;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw io_error("cannot write " + path);
  out << j.dump(2) << '\n';
  if (!out) throw io_error("write failed for " + path);
}

SvmModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw parse_error(path + ": " + e.what());
  }
  SvmModel m;
  try {
    m.band_config = band_config_from_string(j.at("band_config"));
    m.weights = j.at("weights").get<std::vector<double>>();
    m.bias = j.at("bias").get<double>();
    m.norm_mean = j.at("normalization").at("mean").get<std::vector<double>>();
    m.norm_std = j.at("normalization").at("std").get<std::vector<double>>();
    m.c = j.at("C").get<double>();
    m.iterations = j.at("iterations").get<int>();
    m.seed = j.at("seed").get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw parse_error(path + ": " + e.what());
  }
  if (m.weights.empty() || m.weights.size() != m.norm_mean.size() ||
      m.weights.size() != m.norm_std.size())
    throw parse_error(path + ": inconsistent model dimensions");
  for (double s : m.norm_std)
    if (!(s > 0.0)) throw parse_error(path + ": normalization std must be > 0");
  return m;
}

void write_samples_csv(const std::string& path,
                       const std::vector<LabeledSample>& samples) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw io_error("cannot write " + path);
  size_t dim = samples.empty() ? 0 : samples[0].features.size();
  out << "id,label";
  for (size_t d = 0; d < dim; ++d) out << ",f" << d;
  out << '\n';
  for (const auto& s : samples) {
    if (s.features.size() != dim)
      throw param_error("inconsistent feature dimensions");
    out << s.id << ','
        << (s.label > 0 ? "processed" : "unprocessed");
    for (double f : s.features) out << ',' << format_double(f);
    out << '\n';
  }
  if (!out) throw io_error("write failed for " + path);
}

std::vector<LabeledSample> read_samples_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot open " + path);
  std::vector<LabeledSample> samples;
  std::string line;
  int lineno = 0;
  size_t dim = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (lineno == 1 && line.rfind("id,", 0) == 0) continue;  // header

    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() < 3)
      throw parse_error(path + ":" + std::to_string(lineno) +
                        ": expected id,label,features");

    LabeledSample s;
    auto [p1, e1] = std::from_chars(cells[0].data(),
                                    cells[0].data() + cells[0].size(), s.id);
    if (e1 != std::errc() || p1 != cells[0].data() + cells[0].size())
      throw parse_error(path + ":" + std::to_string(lineno) + ": bad id '" +
                        cells[0] + "'");
    if (cells[1] == "processed")
      s.label = 1;
    else if (cells[1] == "unprocessed")
      s.label = -1;
    else
      throw parse_error(path + ":" + std::to_string(lineno) + ": bad label '" +
                        cells[1] + "'");
    for (size_t i = 2; i < cells.size(); ++i) {
      double v = 0.0;
      auto [p, e] = std::from_chars(cells[i].data(),
                                    cells[i].data() + cells[i].size(), v);
      if (e != std::errc() || p != cells[i].data() + cells[i].size())
        throw parse_error(path + ":" + std::to_string(lineno) +
                          ": bad feature '" + cells[i] + "'");
      s.features.push_back(v);
    }
    if (samples.empty())
      dim = s.features.size();
    else if (s.features.size() != dim)
      throw parse_error(path + ":" + std::to_string(lineno) +
                        ": feature count differs from previous rows");
    samples.push_back(std::move(s));
  }
  return samples;
}

}  // namespace roadvec::material
