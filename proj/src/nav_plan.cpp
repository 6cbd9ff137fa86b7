#include "geff/nav_plan.hpp"

#include <algorithm>
#include <cmath>
#include <queue>

namespace geff {

OccupancyGrid project_to_grid(const DecodedPointCloud& dpc, const GridParams& params) {
    if (dpc.size() == 0) throw EmptyCloudError("project_to_grid: empty decoded cloud");
    OccupancyGrid grid;
    grid.cell_size = params.cell_size;

    double min_x = std::numeric_limits<double>::infinity(), min_y = min_x;
    double max_x = -min_x, max_y = -min_x;
    for (const Vec3& p : dpc.points) {
        min_x = std::min(min_x, p.x());
        max_x = std::max(max_x, p.x());
        min_y = std::min(min_y, p.y());
        max_y = std::max(max_y, p.y());
    }
    // Quantize the origin to the cell size so cell boundaries are globally
    // aligned; re-projecting after fusing more frames keeps cell identity.
    grid.origin_x = std::floor((min_x - params.padding) / params.cell_size) * params.cell_size;
    grid.origin_y = std::floor((min_y - params.padding) / params.cell_size) * params.cell_size;
    grid.width = std::max(1, static_cast<int>(
                                 std::ceil((max_x + params.padding - grid.origin_x) /
                                           params.cell_size)));
    grid.height = std::max(1, static_cast<int>(
                                  std::ceil((max_y + params.padding - grid.origin_y) /
                                            params.cell_size)));
    const std::size_t cells = static_cast<std::size_t>(grid.width) * grid.height;
    grid.occupied.assign(cells, 0);
    grid.point_count.assign(cells, 0);
    grid.has_feature.assign(cells, 0);
    grid.features = Tensor(static_cast<int>(cells), dpc.features.cols);
    grid.cost.assign(cells, 1.0);

    for (std::size_t i = 0; i < dpc.size(); ++i) {
        const Vec3& p = dpc.points[i];
        if (p.z() < params.z_min || p.z() > params.z_max) continue;
        const GridCell c = grid.cell_of(p.x(), p.y());
        if (!grid.in_bounds(c)) continue;
        const std::size_t idx = grid.index(c);
        ++grid.point_count[idx];
        const double* f = dpc.features.row_ptr(static_cast<int>(i));
        double* dst = grid.features.row_ptr(static_cast<int>(idx));
        for (int k = 0; k < dpc.features.cols; ++k) dst[k] += f[k];
    }
    for (std::size_t idx = 0; idx < cells; ++idx) {
        if (grid.point_count[idx] >= params.occupied_min_points) grid.occupied[idx] = 1;
        if (grid.point_count[idx] > 0) {
            double* f = grid.features.row_ptr(static_cast<int>(idx));
            double norm = 0;
            for (int k = 0; k < grid.features.cols; ++k) norm += f[k] * f[k];
            norm = std::sqrt(norm);
            if (norm > 1e-12) {
                for (int k = 0; k < grid.features.cols; ++k) f[k] /= norm;
                grid.has_feature[idx] = 1;
            }
        }
    }
    return grid;
}

void apply_affordances(OccupancyGrid& grid,
                       const std::vector<std::pair<QuerySpec, double>>& avoid_queries) {
    for (const auto& [query, weight] : avoid_queries) {
        query.validate(grid.features.cols);
        if (weight < 0)
            throw Error(ErrorCode::InvalidArgument, "affordance weight must be >= 0");
    }
    const std::size_t cells = grid.cost.size();
    for (std::size_t idx = 0; idx < cells; ++idx) {
        double cost = 1.0;
        if (grid.has_feature[idx]) {
            const double* f = grid.features.row_ptr(static_cast<int>(idx));
            for (const auto& [query, weight] : avoid_queries)
                cost += weight * score_feature(f, grid.features.cols, query);
        }
        grid.cost[idx] = cost;
    }
}

namespace {

struct QueueEntry {
    double f;
    double g;
    std::size_t idx;
    bool operator>(const QueueEntry& o) const {
        if (f != o.f) return f > o.f;
        if (g != o.g) return g > o.g;
        return idx > o.idx;
    }
};

double octile(const GridCell& a, const GridCell& b) {
    const double dx = std::abs(a.x - b.x);
    const double dy = std::abs(a.y - b.y);
    return std::max(dx, dy) + (std::sqrt(2.0) - 1.0) * std::min(dx, dy);
}

}  // namespace

PlanResult astar(const OccupancyGrid& grid, const GridCell& start, const GridCell& goal) {
    if (!grid.in_bounds(start) || !grid.in_bounds(goal))
        throw InvalidEndpointError("astar: endpoint out of bounds");
    if (grid.occupied[grid.index(start)] || grid.occupied[grid.index(goal)])
        throw InvalidEndpointError("astar: endpoint occupied");

    const std::size_t cells = grid.occupied.size();
    std::vector<double> g_cost(cells, std::numeric_limits<double>::infinity());
    std::vector<std::int64_t> parent(cells, -1);
    std::vector<std::uint8_t> closed(cells, 0);
    std::priority_queue<QueueEntry, std::vector<QueueEntry>, std::greater<>> open;

    const std::size_t start_idx = grid.index(start);
    const std::size_t goal_idx = grid.index(goal);
    g_cost[start_idx] = 0;
    open.push({octile(start, goal), 0, start_idx});

    static const int dx[8] = {1, -1, 0, 0, 1, 1, -1, -1};
    static const int dy[8] = {0, 0, 1, -1, 1, -1, 1, -1};
    const double diag = std::sqrt(2.0);

    while (!open.empty()) {
        const QueueEntry top = open.top();
        open.pop();
        if (closed[top.idx]) continue;
        closed[top.idx] = 1;
        if (top.idx == goal_idx) break;
        const GridCell cell{static_cast<int>(top.idx % grid.width),
                            static_cast<int>(top.idx / grid.width)};
        for (int k = 0; k < 8; ++k) {
            const GridCell nb{cell.x + dx[k], cell.y + dy[k]};
            if (!grid.in_bounds(nb)) continue;
            const std::size_t nb_idx = grid.index(nb);
            if (grid.occupied[nb_idx] || closed[nb_idx]) continue;
            const double step = k < 4 ? 1.0 : diag;
            const double edge = step * 0.5 * (grid.cost[top.idx] + grid.cost[nb_idx]);
            const double cand = g_cost[top.idx] + edge;
            if (cand < g_cost[nb_idx]) {
                g_cost[nb_idx] = cand;
                parent[nb_idx] = static_cast<std::int64_t>(top.idx);
                open.push({cand + octile(nb, goal), cand, nb_idx});
            }
        }
    }

    if (!std::isfinite(g_cost[goal_idx]))
        throw Error(ErrorCode::NoPath, "astar: goal unreachable");

    PlanResult plan;
    plan.total_cost = g_cost[goal_idx];
    std::size_t idx = goal_idx;
    while (true) {
        plan.cells.push_back(GridCell{static_cast<int>(idx % grid.width),
                                      static_cast<int>(idx / grid.width)});
        if (idx == start_idx) break;
        idx = static_cast<std::size_t>(parent[idx]);
    }
    std::reverse(plan.cells.begin(), plan.cells.end());
    for (const GridCell& c : plan.cells) plan.waypoints.push_back(grid.cell_center(c));
    return plan;
}

namespace {

// Free cells reachable from `from` by 8-connected moves.
std::vector<std::uint8_t> reachable_set(const OccupancyGrid& grid, const GridCell& from) {
    std::vector<std::uint8_t> seen(grid.occupied.size(), 0);
    if (!grid.in_bounds(from) || grid.occupied[grid.index(from)]) return seen;
    std::queue<std::size_t> queue;
    seen[grid.index(from)] = 1;
    queue.push(grid.index(from));
    static const int dx[8] = {1, -1, 0, 0, 1, 1, -1, -1};
    static const int dy[8] = {0, 0, 1, -1, 1, -1, 1, -1};
    while (!queue.empty()) {
        const std::size_t idx = queue.front();
        queue.pop();
        const GridCell cell{static_cast<int>(idx % grid.width),
                            static_cast<int>(idx / grid.width)};
        for (int k = 0; k < 8; ++k) {
            const GridCell nb{cell.x + dx[k], cell.y + dy[k]};
            if (!grid.in_bounds(nb)) continue;
            const std::size_t nb_idx = grid.index(nb);
            if (grid.occupied[nb_idx] || seen[nb_idx]) continue;
            seen[nb_idx] = 1;
            queue.push(nb_idx);
        }
    }
    return seen;
}

}  // namespace

GoalSelection select_goal(const DecodedPointCloud& dpc, const OccupancyGrid& grid,
                          const QuerySpec& query, const GridCell& robot_cell, double p_min,
                          double eps, int min_pts, double max_standoff) {
    const ScoredCluster cluster = top_cluster_query(dpc, query, eps, min_pts, p_min);

    GoalSelection out;
    out.target.position = cluster.centroid;
    out.target.level = TargetLevel::Object;
    out.target.cluster_size = static_cast<int>(cluster.members.size());
    out.target.mean_score = cluster.mean_score;

    const std::vector<std::uint8_t> reachable = reachable_set(grid, robot_cell);
    const GridCell center = grid.cell_of(cluster.centroid.x(), cluster.centroid.y());
    // Euclidean standoff cap, in cells.
    const double max_cells = std::max(1.0, max_standoff / grid.cell_size);
    const int max_ring = static_cast<int>(std::ceil(max_cells));
    double best_dist = std::numeric_limits<double>::infinity();
    GridCell best{};
    bool found = false;
    for (int r = 0; r <= max_ring; ++r) {
        for (int dy = -r; dy <= r; ++dy)
            for (int dx = -r; dx <= r; ++dx) {
                if (std::max(std::abs(dx), std::abs(dy)) != r) continue;
                const double d = std::hypot(static_cast<double>(dx), static_cast<double>(dy));
                if (d > max_cells) continue;
                const GridCell c{center.x + dx, center.y + dy};
                if (!grid.in_bounds(c)) continue;
                const std::size_t idx = grid.index(c);
                if (grid.occupied[idx] || !reachable[idx]) continue;
                if (d < best_dist) {
                    best_dist = d;
                    best = c;
                    found = true;
                }
            }
        // A ring-(r+1) cell can still beat a diagonal ring-r cell, so keep
        // scanning until the ring index passes the best Euclidean distance.
        if (found && static_cast<double>(r) >= best_dist) break;
    }
    if (!found)
        throw NoReachableGoalError("no reachable free cell within standoff of the target");
    out.nav_goal = best;
    return out;
}

GraspTarget select_part_target(const DecodedPointCloud& dpc, const QuerySpec& object_query,
                               const QuerySpec& part_query, const PartQueryParams& params) {
    const ScoredCluster part = conditional_part_query(dpc, object_query, part_query, params);
    GraspTarget target;
    target.position = part.centroid;
    target.level = TargetLevel::Part;
    target.cluster_size = static_cast<int>(part.members.size());
    target.mean_score = part.mean_score;
    return target;
}

}  // namespace geff
