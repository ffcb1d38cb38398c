#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "roadvec/common.hpp"
#include "roadvec/geom.hpp"

namespace roadvec::graph {
struct RoadGraph;
}

namespace roadvec::raster {

// Affine georeferencing in world-file convention: origin is the world
// coordinate of the CENTER of the top-left pixel; pixel_height is negative
// for north-up rasters.
struct GeoTransform {
  double origin_x = 0.0;
  double origin_y = 0.0;
  double pixel_width = 1.0;
  double pixel_height = -1.0;
  double skew_y = 0.0;  // world-file line 2: y change per column
  double skew_x = 0.0;  // world-file line 3: x change per row

  friend bool operator==(const GeoTransform&, const GeoTransform&) = default;
};

void validate(const GeoTransform& t);  // param_error if degenerate
geom::Point pixel_to_world(const GeoTransform& t, double col, double row);
// Continuous pixel coordinates; (0,0) is the center of the top-left pixel.
void world_to_pixel(const GeoTransform& t, geom::Point p, double& col,
                    double& row);

// 3-class segmentation mask.
inline constexpr uint8_t kOther = 0;
inline constexpr uint8_t kInterior = 1;
inline constexpr uint8_t kContour = 2;

struct RasterMask {
  int width = 0;
  int height = 0;
  std::vector<uint8_t> classes;  // row-major, values in {0,1,2}
  GeoTransform transform;

  uint8_t at(int col, int row) const { return classes[size_t(row) * width + col]; }
  uint8_t& at(int col, int row) { return classes[size_t(row) * width + col]; }
  bool in_bounds(int col, int row) const {
    return col >= 0 && col < width && row >= 0 && row < height;
  }
};

// RGB or RGB-NIR imagery, 8- or 16-bit samples (stored widened to 16).
struct ImageRaster {
  int width = 0;
  int height = 0;
  int bit_depth = 8;                        // 8 or 16
  std::vector<std::vector<uint16_t>> bands;  // 3 or 4, each row-major
  GeoTransform transform;

  int band_count() const { return static_cast<int>(bands.size()); }
};

// Land-cover raster plus the legend mapping label id -> class name. The
// names "barren" and "water" mark the ids the material refinement needs.
struct LulcRaster {
  int width = 0;
  int height = 0;
  std::vector<uint8_t> labels;  // row-major
  GeoTransform transform;
  std::map<int, std::string> legend;

  bool is_barren_or_water(int id) const {
    auto it = legend.find(id);
    return it != legend.end() && (it->second == "barren" || it->second == "water");
  }
};

// File I/O. Pixel files are PNG or PGM/PPM chosen by extension; the world
// file is 6 ASCII lines (pixel_width, skew_y, skew_x, pixel_height,
// origin_x, origin_y).
GeoTransform load_worldfile(const std::string& path);
void write_worldfile(const GeoTransform& t, const std::string& path);

RasterMask load_mask(const std::string& pixel_path,
                     const std::string& worldfile_path);
void write_mask(const RasterMask& mask, const std::string& pixel_path,
                const std::string& worldfile_path);

ImageRaster load_image(const std::string& pixel_path,
                       const std::string& worldfile_path);
void write_image(const ImageRaster& img, const std::string& pixel_path,
                 const std::string& worldfile_path);

LulcRaster load_lulc(const std::string& pixel_path,
                     const std::string& worldfile_path,
                     const std::string& legend_path);
void write_lulc(const LulcRaster& lulc, const std::string& pixel_path,
                const std::string& worldfile_path,
                const std::string& legend_path);

// Rasterizes centerlines into the 3-class mask: pixels within road_width/2
// of a centerline (flat caps at free polyline ends, round joins inside)
// are road; the contour_thickness-pixel inner ring of that region is
// contour, the rest of it interior.
RasterMask rasterize_centerlines(const std::vector<geom::Polyline>& lines,
                                 const GeoTransform& t, int width, int height,
                                 double road_width, int contour_thickness,
                                 Exec exec = Exec::parallel);

RasterMask rasterize_network(const graph::RoadGraph& g, const GeoTransform& t,
                             int width, int height, double road_width,
                             int contour_thickness, Exec exec = Exec::parallel);

// Pixels whose centers fall inside the polygon (even-odd rule), row-major
// scan order. Empty result means no overlap; callers decide if that is an
// error.
std::vector<uint8_t> sample_window(const RasterMask& m,
                                   const geom::Polygon& poly);
std::vector<uint8_t> sample_window(const LulcRaster& m,
                                   const geom::Polygon& poly);
std::vector<std::vector<uint16_t>> sample_window(const ImageRaster& img,
                                                 const geom::Polygon& poly);

}  // namespace roadvec::raster
