#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <vector>

#include "roadvec/material.hpp"

using namespace roadvec;
using namespace roadvec::material;

namespace {

struct TempDir {
  std::filesystem::path dir;
  TempDir() {
    dir = std::filesystem::temp_directory_path() /
          ("roadvec_mat_" + std::to_string(std::rand()));
    std::filesystem::create_directories(dir);
  }
  ~TempDir() { std::filesystem::remove_all(dir); }
  std::string path(const std::string& name) const { return (dir / name).string(); }
};

raster::ImageRaster make_image(int w, int h, int bands, uint16_t fill) {
  raster::ImageRaster img;
  img.width = w;
  img.height = h;
  img.bit_depth = 8;
  img.bands.assign(size_t(bands), std::vector<uint16_t>(size_t(w) * h, fill));
  return img;  // default transform: 1 m/px, origin at top-left pixel center
}

raster::LulcRaster make_lulc(int w, int h, uint8_t fill) {
  raster::LulcRaster l;
  l.width = w;
  l.height = h;
  l.labels.assign(size_t(w) * h, fill);
  l.legend = {{1, "barren"}, {2, "water"}, {3, "crops"}, {4, "urban"}};
  return l;
}

// Reference objective recomputed from scratch on the model's own z-scored
// training matrix; used to cross-check the logged values.
double ref_objective(const SvmModel& m, const std::vector<LabeledSample>& samples) {
  double f = 0.0;
  for (double w : m.weights) f += w * w;
  f *= 0.5;
  for (const auto& s : samples) {
    double margin = m.bias;
    for (size_t d = 0; d < s.features.size(); ++d)
      margin += m.weights[d] * ((s.features[d] - m.norm_mean[d]) / m.norm_std[d]);
    f += m.c * std::max(0.0, 1.0 - double(s.label) * margin);
  }
  return f;
}

void check_monotone_log(const SvmModel& m) {
  REQUIRE(!m.objective_log.empty());
  for (size_t i = 1; i < m.objective_log.size(); ++i)
    CHECK(m.objective_log[i] <= m.objective_log[i - 1]);
}

double train_accuracy(const SvmModel& m, const std::vector<LabeledSample>& samples) {
  int ok = 0;
  for (const auto& s : samples) {
    const SurfaceDecision d = classify_surface(m, s.features);
    ok += (d.processed ? 1 : -1) == s.label;
  }
  return double(ok) / double(samples.size());
}

}  // namespace

TEST_CASE("constant-color region gives exact closed-form features") {
  raster::ImageRaster img = make_image(30, 30, 3, 0);
  const uint16_t vals[3] = {120, 100, 80};
  for (int bnd = 0; bnd < 3; ++bnd)
    std::fill(img.bands[size_t(bnd)].begin(), img.bands[size_t(bnd)].end(),
              vals[bnd]);

  const geom::Polyline seg{{5, -15}, {25, -15}};
  const auto f = extract_features(img, seg, 2.0);
  REQUIRE(f.size() == 12);
  for (int bnd = 0; bnd < 3; ++bnd) {
    CHECK(f[size_t(bnd) * 4 + 0] == double(vals[bnd]));  // mean
    CHECK(f[size_t(bnd) * 4 + 1] == 0.0);                // std
    CHECK(f[size_t(bnd) * 4 + 2] == double(vals[bnd]));  // p25
    CHECK(f[size_t(bnd) * 4 + 3] == double(vals[bnd]));  // p75
  }
}

TEST_CASE("segment outside the image is a no-data error") {
  raster::ImageRaster img = make_image(30, 30, 3, 100);
  const geom::Polyline seg{{200, -200}, {220, -200}};
  CHECK_THROWS_AS(extract_features(img, seg, 2.0), no_data_error);
}

TEST_CASE("two-value half/half sample hits the closed-form statistics") {
  // Columns < 20 hold 60, the rest 200. The segment is placed so its 2 m
  // buffer covers the same number of pixel centers on each side of the
  // boundary (checked by symmetry of the construction), making the sample
  // an exact 50/50 two-point distribution: mean 130, population std 70.
  raster::ImageRaster img = make_image(40, 40, 3, 0);
  for (int bnd = 0; bnd < 3; ++bnd)
    for (int r = 0; r < 40; ++r)
      for (int c = 0; c < 40; ++c)
        img.bands[size_t(bnd)][size_t(r) * 40 + c] = c < 20 ? 60 : 200;

  const geom::Polyline seg{{13.5, -20.25}, {25.5, -20.25}};
  const auto f = extract_features(img, seg, 2.0);
  REQUIRE(f.size() == 12);
  for (int bnd = 0; bnd < 3; ++bnd) {
    CHECK(f[size_t(bnd) * 4 + 0] == doctest::Approx(130.0).epsilon(1e-12));
    CHECK(f[size_t(bnd) * 4 + 1] == doctest::Approx(70.0).epsilon(1e-12));
    CHECK(f[size_t(bnd) * 4 + 2] == 60.0);
    CHECK(f[size_t(bnd) * 4 + 3] == 200.0);
  }
}

TEST_CASE("features are invariant under pixel rearrangement") {
  // The segment's buffer covers every pixel center, so scrambling the
  // pixel positions permutes the sampled multiset in place. Statistics
  // must not notice.
  const int w = 12, h = 12;
  raster::ImageRaster a = make_image(w, h, 4, 0);
  for (int bnd = 0; bnd < 4; ++bnd)
    for (int i = 0; i < w * h; ++i)
      a.bands[size_t(bnd)][size_t(i)] = uint16_t((i * 37 + bnd * 11) % 251);

  raster::ImageRaster b = a;
  std::vector<int> perm(size_t(w) * h);
  for (int i = 0; i < w * h; ++i) perm[size_t(i)] = i;
  std::mt19937_64 rng(99);
  std::shuffle(perm.begin(), perm.end(), rng);
  // A pixel moves with all its bands so per-pixel ratios survive too.
  for (int bnd = 0; bnd < 4; ++bnd)
    for (int i = 0; i < w * h; ++i)
      b.bands[size_t(bnd)][size_t(i)] = a.bands[size_t(bnd)][size_t(perm[size_t(i)])];

  const geom::Polyline seg{{2, -5.5}, {9, -5.5}};
  const auto fa = extract_features(a, seg, 40.0);
  const auto fb = extract_features(b, seg, 40.0);
  REQUIRE(fa.size() == 17);
  REQUIRE(fb.size() == 17);
  for (size_t i = 0; i < fa.size(); ++i) CHECK(fa[i] == fb[i]);
}

TEST_CASE("NIR ratio feature matches hand-computed values") {
  raster::ImageRaster img = make_image(20, 20, 4, 0);
  // R = 50, NIR = 150 everywhere -> per-pixel ratio exactly 0.5.
  std::fill(img.bands[0].begin(), img.bands[0].end(), uint16_t(50));
  std::fill(img.bands[1].begin(), img.bands[1].end(), uint16_t(90));
  std::fill(img.bands[2].begin(), img.bands[2].end(), uint16_t(70));
  std::fill(img.bands[3].begin(), img.bands[3].end(), uint16_t(150));

  const geom::Polyline seg{{5, -10}, {15, -10}};
  auto f = extract_features(img, seg, 2.0);
  REQUIRE(f.size() == 17);
  CHECK(f[16] == 0.5);

  // Zero-denominator pixels (R = NIR = 0) are skipped, not averaged in.
  for (int c = 0; c < 20; ++c) {
    img.bands[0][size_t(9) * 20 + c] = 0;
    img.bands[3][size_t(9) * 20 + c] = 0;
  }
  f = extract_features(img, seg, 2.0);
  CHECK(f[16] == 0.5);
}

TEST_CASE("1-D soft-margin optimum matches the closed form") {
  // Two points z = -1 and z = +1 (already centered and unit-scaled).
  // Objective g(w) = w^2/2 + 2C max(0, 1-w) with b pinned at 0 by
  // symmetry: for C >= 1/2 the optimum is w = 1, g = 1/2; for C < 1/2 it
  // is w = 2C, g = 2C - 2C^2.
  const std::vector<LabeledSample> samples = {{0, -1, {-1.0}}, {1, 1, {1.0}}};

  SUBCASE("kink optimum, C = 1") {
    const SvmModel m = train_svm(samples, 1.0, 1);
    CHECK(m.norm_mean[0] == 0.0);
    CHECK(m.norm_std[0] == 1.0);
    CHECK(m.bias == 0.0);
    CHECK(std::abs(m.weights[0] - 1.0) <= 1e-2);
    const double f = m.objective_log.back();
    CHECK(f >= 0.5 - 1e-12);  // convexity: nothing beats the true optimum
    CHECK(f <= 0.5 + 1e-4);
    CHECK(f == doctest::Approx(ref_objective(m, samples)).epsilon(1e-12));
    check_monotone_log(m);
  }

  SUBCASE("smooth optimum, C = 1/4") {
    const SvmModel m = train_svm(samples, 0.25, 1);
    CHECK(m.bias == 0.0);
    CHECK(std::abs(m.weights[0] - 0.5) <= 1e-6);
    const double f = m.objective_log.back();
    CHECK(f >= 0.375 - 1e-12);
    CHECK(f <= 0.375 + 1e-8);
    CHECK(f == doctest::Approx(ref_objective(m, samples)).epsilon(1e-12));
    check_monotone_log(m);
  }
}

TEST_CASE("separable toy set is classified perfectly") {
  const std::vector<LabeledSample> samples = {
      {0, -1, {0.0, 0.0}},
      {1, 1, {4.0, 4.0}},
      {2, 1, {5.0, 3.0}},
      {3, -1, {-1.0, 1.0}},
  };
  const SvmModel m = train_svm(samples, 10.0, 1);
  CHECK(train_accuracy(m, samples) == 1.0);
  for (const auto& s : samples) {
    const SurfaceDecision d = classify_surface(m, s.features);
    CHECK((d.margin > 0.0) == (s.label > 0));
  }
  check_monotone_log(m);
}

TEST_CASE("XOR pattern cannot be linearly separated") {
  const std::vector<LabeledSample> samples = {
      {0, -1, {0.0, 0.0}},
      {1, -1, {1.0, 1.0}},
      {2, 1, {0.0, 1.0}},
      {3, 1, {1.0, 0.0}},
  };
  const SvmModel m = train_svm(samples, 10.0, 1);
  CHECK(train_accuracy(m, samples) <= 0.75);
  check_monotone_log(m);
}

TEST_CASE("12-D Gaussians: holdout accuracy approaches the analytic Bayes rate") {
  // Two spherical unit Gaussians 4 sigma apart. The Bayes classifier is the
  // midplane, with accuracy Phi(2) computed analytically below; a linear
  // SVM on 200 samples should land just under it. C is small because with
  // d/n = 12/200 a hard margin overfits; strong regularization pulls w
  // toward the centroid difference, which is the Bayes direction here.
  const int dim = 12;
  const double shift = 2.0 / std::sqrt(double(dim));
  std::mt19937_64 rng(2024);
  std::normal_distribution<double> nd(0.0, 1.0);
  auto draw = [&](int label, int id) {
    LabeledSample s;
    s.id = id;
    s.label = label;
    s.features.resize(dim);
    for (int d = 0; d < dim; ++d)
      s.features[size_t(d)] = label * shift + nd(rng);
    return s;
  };

  std::vector<LabeledSample> train, test;
  for (int i = 0; i < 200; ++i) train.push_back(draw(i % 2 ? 1 : -1, i));
  for (int i = 0; i < 4000; ++i) test.push_back(draw(i % 2 ? 1 : -1, i));

  const SvmModel m = train_svm(train, 0.005, 1);
  const double acc = train_accuracy(m, test);
  const double bayes = 0.5 * std::erfc(-2.0 / std::sqrt(2.0));  // Phi(2)
  CHECK(bayes == doctest::Approx(0.9772).epsilon(1e-3));
  CHECK(acc >= 0.97);
  CHECK(acc <= bayes + 0.01);
  CHECK(acc >= bayes - 0.02);
  check_monotone_log(m);
}

TEST_CASE("training is deterministic") {
  std::mt19937_64 rng(31);
  std::normal_distribution<double> nd(0.0, 1.0);
  std::vector<LabeledSample> samples;
  for (int i = 0; i < 60; ++i) {
    LabeledSample s;
    s.id = i;
    s.label = i % 2 ? 1 : -1;
    for (int d = 0; d < 5; ++d)
      s.features.push_back(s.label * 0.8 + nd(rng));
    samples.push_back(s);
  }
  const SvmModel a = train_svm(samples, 2.0, 1, BandConfig::rgb, {}, 42);
  const SvmModel b = train_svm(samples, 2.0, 1, BandConfig::rgb, {}, 42);
  REQUIRE(a.weights.size() == b.weights.size());
  for (size_t d = 0; d < a.weights.size(); ++d)
    CHECK(a.weights[d] == b.weights[d]);
  CHECK(a.bias == b.bias);
  CHECK(a.norm_mean == b.norm_mean);
  CHECK(a.norm_std == b.norm_std);
  REQUIRE(a.objective_log.size() == b.objective_log.size());
  for (size_t i = 0; i < a.objective_log.size(); ++i)
    CHECK(a.objective_log[i] == b.objective_log[i]);
}

TEST_CASE("second pass self-trains on confident unlabeled points only") {
  const std::vector<LabeledSample> samples = {{0, -1, {-2.0}}, {1, 1, {2.0}}};
  const SvmModel m1 = train_svm(samples, 5.0, 1);

  SUBCASE("confident points are absorbed") {
    // z(3) = 1.5 under the pass-1 stats -> |margin| > 1 on both flanks;
    // the augmented set has std sqrt((4+4+9+9)/4).
    const std::vector<std::vector<double>> unl = {{3.0}, {-3.0}, {0.2}};
    const SvmModel m2 = train_svm(samples, 5.0, 2, BandConfig::rgb, unl);
    CHECK(m2.iterations == 2);
    CHECK(m2.norm_std[0] == doctest::Approx(std::sqrt(6.5)).epsilon(1e-15));
    CHECK(classify_surface(m2, {3.0}).processed);
    CHECK(!classify_surface(m2, {-3.0}).processed);
    CHECK(classify_surface(m2, {2.0}).processed);
    CHECK(!classify_surface(m2, {-2.0}).processed);
    check_monotone_log(m2);
  }

  SUBCASE("unconfident or absent unlabeled data changes nothing") {
    const SvmModel m2a = train_svm(samples, 5.0, 2, BandConfig::rgb, {{0.2}});
    const SvmModel m2b = train_svm(samples, 5.0, 2, BandConfig::rgb, {});
    for (const SvmModel* m2 : {&m2a, &m2b}) {
      REQUIRE(m2->weights.size() == m1.weights.size());
      CHECK(m2->weights[0] == m1.weights[0]);
      CHECK(m2->bias == m1.bias);
      CHECK(m2->norm_mean == m1.norm_mean);
      CHECK(m2->norm_std == m1.norm_std);
    }
  }
}

TEST_CASE("training rejects malformed input") {
  const std::vector<LabeledSample> ok = {{0, -1, {0.0}}, {1, 1, {1.0}}};
  CHECK_THROWS_AS(train_svm(ok, 0.0, 1), param_error);
  CHECK_THROWS_AS(train_svm(ok, -1.0, 1), param_error);
  CHECK_THROWS_AS(train_svm(ok, 1.0, 0), param_error);
  CHECK_THROWS_AS(train_svm({{0, 1, {1.0}}}, 1.0, 1), param_error);
  CHECK_THROWS_AS(train_svm({{0, 1, {1.0}}, {1, 1, {2.0}}}, 1.0, 1),
                  param_error);  // single class
  CHECK_THROWS_AS(train_svm({{0, 1, {1.0}}, {1, -1, {2.0, 3.0}}}, 1.0, 1),
                  param_error);  // ragged dims
  CHECK_THROWS_AS(train_svm({{0, 2, {1.0}}, {1, -1, {2.0}}}, 1.0, 1),
                  param_error);  // bad label value
  CHECK_THROWS_AS(
      train_svm(ok, 1.0, 2, BandConfig::rgb, {{1.0, 2.0}}),
      param_error);  // unlabeled dim mismatch
}

TEST_CASE("classify_surface follows the sign convention") {
  SvmModel m;
  m.weights = {1.0, 2.0};
  m.bias = 0.3;
  m.norm_mean = {0.0, 0.0};
  m.norm_std = {1.0, 1.0};

  const SurfaceDecision d = classify_surface(m, {1.0, 0.5});
  CHECK(d.processed);
  CHECK(d.margin == doctest::Approx(2.3).epsilon(1e-12));

  // Exact zero margin falls to unprocessed.
  m.bias = 0.0;
  const SurfaceDecision z = classify_surface(m, {0.0, 0.0});
  CHECK(!z.processed);
  CHECK(z.margin == 0.0);

  CHECK_THROWS_AS(classify_surface(m, {1.0, 2.0, 3.0}), param_error);
}

TEST_CASE("decision is invariant under a normalization round-trip") {
  SvmModel m;
  m.weights = {0.7, -1.3, 0.2};
  m.bias = -0.15;
  m.norm_mean = {140.0, -3.0, 0.01};
  m.norm_std = {55.0, 7.0, 0.002};

  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> ud(-2.0, 2.0);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> x(3);
    for (int d = 0; d < 3; ++d)
      x[size_t(d)] = m.norm_mean[size_t(d)] + ud(rng) * m.norm_std[size_t(d)];
    std::vector<double> roundtrip(3);
    for (int d = 0; d < 3; ++d) {
      const double z = (x[size_t(d)] - m.norm_mean[size_t(d)]) / m.norm_std[size_t(d)];
      roundtrip[size_t(d)] = z * m.norm_std[size_t(d)] + m.norm_mean[size_t(d)];
    }
    const SurfaceDecision a = classify_surface(m, x);
    const SurfaceDecision b = classify_surface(m, roundtrip);
    CHECK(std::abs(a.margin - b.margin) <= 1e-9);
    if (std::abs(a.margin) > 1e-6) CHECK(a.processed == b.processed);
  }
}

TEST_CASE("LULC refinement follows the barren/water fraction") {
  // The whole 10x10 raster sits inside the search disk, so the fraction is
  // a straight pixel count; an exhaustive scan recomputes it as oracle.
  raster::LulcRaster l = make_lulc(10, 10, 3);
  const geom::Polyline seg{{3.0, -4.5}, {6.0, -4.5}};

  auto oracle_fraction = [&](double radius) {
    const geom::Point mid = geom::point_at(seg, geom::length(seg) * 0.5);
    long total = 0, bw = 0;
    for (int r = 0; r < l.height; ++r)
      for (int c = 0; c < l.width; ++c) {
        if (geom::distance(raster::pixel_to_world(l.transform, c, r), mid) >
            radius)
          continue;
        ++total;
        bw += l.is_barren_or_water(l.labels[size_t(r) * l.width + c]);
      }
    return total == 0 ? 0.0 : double(bw) / double(total);
  };

  SUBCASE("mostly barren window means sand") {
    for (int i = 0; i < 90; ++i) l.labels[size_t(i)] = 1;
    const RefineDecision d = refine_unprocessed(seg, l, 100.0, 0.5);
    CHECK(d.label == graph::Material::sand);
    CHECK(d.barren_water_fraction == doctest::Approx(0.9));
    CHECK(d.barren_water_fraction == oracle_fraction(100.0));
    CHECK(!d.no_coverage);
  }

  SUBCASE("mostly cropland window means gravel") {
    for (int i = 0; i < 10; ++i) l.labels[size_t(i)] = 1;
    const RefineDecision d = refine_unprocessed(seg, l, 100.0, 0.5);
    CHECK(d.label == graph::Material::gravel);
    CHECK(d.barren_water_fraction == doctest::Approx(0.1));
    CHECK(d.barren_water_fraction == oracle_fraction(100.0));
  }

  SUBCASE("exact 50/50 boundary is sand") {
    for (int i = 0; i < 30; ++i) l.labels[size_t(i)] = 1;  // barren
    for (int i = 30; i < 50; ++i) l.labels[size_t(i)] = 2;  // water
    const RefineDecision d = refine_unprocessed(seg, l, 100.0, 0.5);
    CHECK(d.barren_water_fraction == 0.5);
    CHECK(d.label == graph::Material::sand);
  }

  SUBCASE("a small disk counts only nearby pixels") {
    // Midpoint on a pixel center; radius 2.5 px avoids distance ties.
    for (int r = 0; r < 10; ++r)
      for (int c = 0; c < 10; ++c)
        l.labels[size_t(r) * 10 + c] = (c + r) % 2 ? 1 : 3;
    const geom::Polyline on_center{{2.0, -4.0}, {6.0, -4.0}};  // mid (4,-4)
    const RefineDecision d = refine_unprocessed(on_center, l, 2.5, 0.5);
    const geom::Point mid = geom::point_at(on_center, geom::length(on_center) * 0.5);
    long total = 0, bw = 0;
    for (int r = 0; r < 10; ++r)
      for (int c = 0; c < 10; ++c) {
        if (geom::distance(raster::pixel_to_world(l.transform, c, r), mid) > 2.5)
          continue;
        ++total;
        bw += l.is_barren_or_water(l.labels[size_t(r) * 10 + c]);
      }
    REQUIRE(total > 0);
    CHECK(d.barren_water_fraction == double(bw) / double(total));
  }

  SUBCASE("no coverage defaults to gravel with a zero-confidence flag") {
    const geom::Polyline far{{1000.0, -1000.0}, {1010.0, -1000.0}};
    const RefineDecision d = refine_unprocessed(far, l, 3.0, 0.5);
    CHECK(d.label == graph::Material::gravel);
    CHECK(d.barren_water_fraction == 0.0);
    CHECK(d.no_coverage);
  }

  SUBCASE("legend without water is rejected") {
    l.legend = {{1, "barren"}, {3, "crops"}};
    CHECK_THROWS_AS(refine_unprocessed(seg, l, 100.0, 0.5), param_error);
  }

  SUBCASE("invalid parameters are rejected") {
    CHECK_THROWS_AS(refine_unprocessed(seg, l, 0.0, 0.5), param_error);
    CHECK_THROWS_AS(refine_unprocessed(seg, l, 100.0, 1.5), param_error);
    CHECK_THROWS_AS(refine_unprocessed(seg, l, 100.0, -0.1), param_error);
  }
}

TEST_CASE("network classification applies the full hierarchy") {
  // Bright band up top, dark band below; one road on each, a third road
  // outside the image. LULC is all barren, so any segment that reaches the
  // refinement stage comes out sand - which is exactly how the test proves
  // the processed road never reached it.
  raster::ImageRaster img = make_image(60, 40, 3, 0);
  for (int bnd = 0; bnd < 3; ++bnd)
    for (int r = 0; r < 40; ++r)
      for (int c = 0; c < 60; ++c)
        img.bands[size_t(bnd)][size_t(r) * 60 + c] =
            r < 16 ? uint16_t(200 - bnd * 5) : uint16_t(80 - bnd * 10);

  raster::LulcRaster lulc = make_lulc(60, 40, 1);

  const std::vector<LabeledSample> samples = {
      {0, 1, extract_features(img, {{10, -8}, {50, -8}}, 2.0)},
      {1, -1, extract_features(img, {{10, -25}, {50, -25}}, 2.0)},
  };
  const SvmModel model = train_svm(samples, 10.0, 1, BandConfig::rgb);

  graph::RoadGraph g;
  const auto a1 = g.add_node({5, -5});
  const auto a2 = g.add_node({55, -5});
  const auto b1 = g.add_node({5, -30});
  const auto b2 = g.add_node({55, -30});
  const auto c1 = g.add_node({500, -500});
  const auto c2 = g.add_node({520, -500});
  const auto ea = g.add_edge(a1, a2, {{5, -5}, {55, -5}});
  const auto eb = g.add_edge(b1, b2, {{5, -30}, {55, -30}});
  const auto ec = g.add_edge(c1, c2, {{500, -500}, {520, -500}});

  graph::RoadGraph g2 = g;  // serial copy
  const ClassifyStats st = classify_network(g, img, model, lulc);
  CHECK(st.processed == 1);
  CHECK(st.sand == 1);
  CHECK(st.gravel == 0);
  CHECK(st.skipped == 1);
  CHECK(g.edges.at(ea).attrs.material == graph::Material::processed);
  CHECK(g.edges.at(eb).attrs.material == graph::Material::sand);
  CHECK(g.edges.at(ec).attrs.material == graph::Material::unknown);

  const ClassifyStats st2 =
      classify_network(g2, img, model, lulc, {}, Exec::serial);
  CHECK(st2.processed == st.processed);
  CHECK(st2.sand == st.sand);
  CHECK(st2.skipped == st.skipped);
  for (const auto& [id, e] : g.edges)
    CHECK(g2.edges.at(id).attrs.material == e.attrs.material);
}

TEST_CASE("model dimension must match the imagery band configuration") {
  raster::ImageRaster img = make_image(20, 20, 4, 100);
  raster::LulcRaster lulc = make_lulc(20, 20, 1);
  SvmModel m;
  m.band_config = BandConfig::rgb;
  m.weights.assign(12, 0.1);
  m.norm_mean.assign(12, 0.0);
  m.norm_std.assign(12, 1.0);
  graph::RoadGraph g;
  const auto n1 = g.add_node({2, -10});
  const auto n2 = g.add_node({18, -10});
  g.add_edge(n1, n2, {{2, -10}, {18, -10}});
  CHECK_THROWS_AS(classify_network(g, img, m, lulc), param_error);
}

TEST_CASE("model JSON survives a round trip") {
  TempDir tmp;
  SvmModel m;
  m.band_config = BandConfig::rgb_nir;
  m.weights = {0.25, -1.75, 3.5e-7, 12.0, 1.0 / 3.0};
  m.bias = -0.07;
  m.norm_mean = {1.0, 2.0, 3.0, 4.0, 5.5};
  m.norm_std = {0.1, 0.2, 0.3, 0.4, 0.5};
  m.c = 2.5;
  m.iterations = 2;
  m.seed = 123456789;

  save_model(m, tmp.path("m.json"));
  const SvmModel r = load_model(tmp.path("m.json"));
  CHECK(r.band_config == m.band_config);
  CHECK(r.weights == m.weights);
  CHECK(r.bias == m.bias);
  CHECK(r.norm_mean == m.norm_mean);
  CHECK(r.norm_std == m.norm_std);
  CHECK(r.c == m.c);
  CHECK(r.iterations == m.iterations);
  CHECK(r.seed == m.seed);
}

TEST_CASE("model loading rejects malformed files") {
  TempDir tmp;
  auto put = [&](const std::string& name, const std::string& text) {
    std::ofstream out(tmp.path(name));
    out << text;
  };
  put("bad.json", "{ not json");
  CHECK_THROWS_AS(load_model(tmp.path("bad.json")), parse_error);
  put("missing.json", R"({"band_config":"rgb","weights":[1.0]})");
  CHECK_THROWS_AS(load_model(tmp.path("missing.json")), parse_error);
  put("badstd.json",
      R"({"band_config":"rgb","weights":[1.0],"bias":0.0,
          "normalization":{"mean":[0.0],"std":[0.0]},
          "C":1.0,"iterations":1,"seed":0})");
  CHECK_THROWS_AS(load_model(tmp.path("badstd.json")), parse_error);
  CHECK_THROWS_AS(load_model(tmp.path("absent.json")), io_error);
}

TEST_CASE("sample CSV survives a round trip") {
  TempDir tmp;
  std::vector<LabeledSample> samples = {
      {7, 1, {1.5, -2.25, 3.0e-9}},
      {9, -1, {0.1, 140.0, 1.0 / 3.0}},
  };
  write_samples_csv(tmp.path("s.csv"), samples);
  const auto back = read_samples_csv(tmp.path("s.csv"));
  REQUIRE(back.size() == samples.size());
  for (size_t i = 0; i < samples.size(); ++i) {
    CHECK(back[i].id == samples[i].id);
    CHECK(back[i].label == samples[i].label);
    CHECK(back[i].features == samples[i].features);
  }
}

TEST_CASE("sample CSV parsing reports bad rows") {
  TempDir tmp;
  auto put = [&](const std::string& name, const std::string& text) {
    std::ofstream out(tmp.path(name));
    out << text;
  };
  put("nolabel.csv", "id,label,f0\n4,asphalt,1.0\n");
  CHECK_THROWS_AS(read_samples_csv(tmp.path("nolabel.csv")), parse_error);
  put("badnum.csv", "id,label,f0\n4,processed,abc\n");
  CHECK_THROWS_AS(read_samples_csv(tmp.path("badnum.csv")), parse_error);
  put("short.csv", "id,label,f0\n4,processed\n");
  CHECK_THROWS_AS(read_samples_csv(tmp.path("short.csv")), parse_error);
  put("ragged.csv", "id,label,f0,f1\n1,processed,1.0,2.0\n2,unprocessed,3.0\n");
  CHECK_THROWS_AS(read_samples_csv(tmp.path("ragged.csv")), parse_error);
  put("headerless.csv", "3,unprocessed,0.5\n");
  const auto rows = read_samples_csv(tmp.path("headerless.csv"));
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].id == 3);
  CHECK(rows[0].label == -1);
}
