#pragma once

#include <cstdint>
#include <vector>

#include "roadvec/common.hpp"
#include "roadvec/netgraph.hpp"
#include "roadvec/raster.hpp"

namespace roadvec::skel {

struct SkeletonRaster {
  int width = 0;
  int height = 0;
  std::vector<uint8_t> on;  // row-major, 0/1
  raster::GeoTransform transform;

  bool at(int col, int row) const {
    return col >= 0 && col < width && row >= 0 && row < height &&
           on[size_t(row) * width + col] != 0;
  }
};

// Iterative two-subiteration thinning of the interior class to a 1-px-wide
// skeleton. Contour and other classes are background, so parallel roads
// separated by a contour line stay separate. Preserves 8-connectivity of
// the foreground and 4-connectivity of the background.
SkeletonRaster thin(const raster::RasterMask& mask, Exec exec = Exec::parallel);

// Vectorizes the skeleton: nodes at pixels whose 8-neighbor count differs
// from 2, maximal degree-2 pixel chains as polyline edges, pure cycles as a
// single self-loop anchored at their first pixel in scan order. Isolated
// single pixels are dropped (a node must carry an edge).
graph::RoadGraph trace(const SkeletonRaster& skel);

// Debug dump in the mask file format (on-pixels stored as interior).
void write_skeleton(const SkeletonRaster& skel, const std::string& pixel_path,
                    const std::string& worldfile_path);

}  // namespace roadvec::skel
