#pragma once

#include "geff/semantic_query.hpp"

namespace geff {

struct GridParams {
    double cell_size = 0.05;
    double z_min = 0.05;
    double z_max = 1.8;
    int occupied_min_points = 3;
    double padding = 0.5;  // free border added around the point extents
};

struct GridCell {
    int x = 0, y = 0;
    bool operator==(const GridCell& o) const { return x == o.x && y == o.y; }
};

// 2D navigation grid: occupancy, per-cell mean semantic feature, and an
// affordance cost multiplier (>= 1). Occupied cells are impassable regardless
// of cost.
struct OccupancyGrid {
    double origin_x = 0, origin_y = 0;
    double cell_size = 0.05;
    int width = 0, height = 0;
    std::vector<std::uint8_t> occupied;
    std::vector<int> point_count;
    std::vector<std::uint8_t> has_feature;
    Tensor features;  // cells x n, renormalized means
    std::vector<double> cost;

    std::size_t index(const GridCell& c) const {
        return static_cast<std::size_t>(c.y) * width + c.x;
    }
    bool in_bounds(const GridCell& c) const {
        return c.x >= 0 && c.x < width && c.y >= 0 && c.y < height;
    }
    GridCell cell_of(double x, double y) const {
        return GridCell{static_cast<int>(std::floor((x - origin_x) / cell_size)),
                        static_cast<int>(std::floor((y - origin_y) / cell_size))};
    }
    Vec3 cell_center(const GridCell& c) const {
        return Vec3(origin_x + (c.x + 0.5) * cell_size, origin_y + (c.y + 0.5) * cell_size, 0);
    }
};

// Projects points within the height band onto the grid; a cell is occupied at
// occupied_min_points members; cell features are renormalized means.
OccupancyGrid project_to_grid(const DecodedPointCloud& dpc, const GridParams& params = {});

// cost = 1 + sum_q weight_q * score(cellFeature, q) for cells with a feature.
void apply_affordances(OccupancyGrid& grid,
                       const std::vector<std::pair<QuerySpec, double>>& avoid_queries);

struct PlanResult {
    std::vector<GridCell> cells;
    std::vector<Vec3> waypoints;  // cell centers
    double total_cost = 0;
};

// Optimal 8-connected path; edge cost = step length (1 or sqrt 2, in cells)
// times the mean endpoint cost; octile-distance heuristic (admissible since
// cell costs are >= 1). Throws InvalidEndpointError / NoPathError-equivalent.
PlanResult astar(const OccupancyGrid& grid, const GridCell& start, const GridCell& goal);

enum class TargetLevel { Object, Part };

struct GraspTarget {
    Vec3 position = Vec3::Zero();
    TargetLevel level = TargetLevel::Object;
    int cluster_size = 0;
    double mean_score = 0;
};

struct GoalSelection {
    GraspTarget target;
    GridCell nav_goal;
};

// Query -> cluster -> centroid target, plus the nearest reachable free cell
// to the centroid (ring search, radius <= max_standoff). Throws
// QueryNoMatchError or NoReachableGoalError.
GoalSelection select_goal(const DecodedPointCloud& dpc, const OccupancyGrid& grid,
                          const QuerySpec& query, const GridCell& robot_cell,
                          double p_min = 0.5, double eps = 0.10, int min_pts = 5,
                          double max_standoff = 1.0);

// Conditional two-pass part target.
GraspTarget select_part_target(const DecodedPointCloud& dpc, const QuerySpec& object_query,
                               const QuerySpec& part_query, const PartQueryParams& params = {});

}  // namespace geff
