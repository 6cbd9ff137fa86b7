#pragma once

#include "geff/nav_plan.hpp"
#include "geff/renderer.hpp"

namespace geff {

// Top-3 principal components of the feature rows, min-max normalized per
// component to [0, 255].
std::vector<std::uint8_t> pca_colors(const Tensor& features);

void export_decoded_cloud_ply(const std::string& path, const DecodedPointCloud& dpc);
void export_score_ply(const std::string& path, const DecodedPointCloud& dpc,
                      const std::vector<double>& scores);
// Occupancy: 0 free, 255 occupied. Cost map: cost * 1000, saturating u16.
void export_grid_pgm(const std::string& path, const OccupancyGrid& grid);
void export_cost_pgm(const std::string& path, const OccupancyGrid& grid);
// Occupancy overlayed with the path (red) and endpoints (green/blue).
void export_path_ppm(const std::string& path, const OccupancyGrid& grid,
                     const PlanResult& plan);
// color PNG, depth as 16-bit PGM (millimeters), feature PCA PNG.
void export_render(const std::string& prefix, const RenderedImage& image);

}  // namespace geff
