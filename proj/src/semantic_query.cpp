#include "geff/semantic_query.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <unordered_map>

namespace geff {

Vec3 project_point_to_surface(const Vec3& x, const std::function<double(const Vec3&)>& sdf,
                              double h) {
    const double s = sdf(x);
    Vec3 g;
    for (int k = 0; k < 3; ++k) {
        Vec3 d = Vec3::Zero();
        d[k] = h;
        g[k] = (sdf(x + d) - sdf(x - d)) / (2 * h);
    }
    const double len = g.norm();
    if (len < 1e-9) return x;
    return x - s * (g / len);
}

DecodedPointCloud decode_point_cloud(const LatentPointCloud& cloud, FieldDecoders& dec) {
    if (cloud.empty()) throw EmptyCloudError("decode_point_cloud: empty latent cloud");
    const int n = static_cast<int>(cloud.size());
    const double h = 5e-3;  // stencil scale for the learned (smooth) field

    // Batched projection step: sdf + central differences at every anchor.
    // Stencil probes share each anchor's neighbor set.
    std::vector<Vec3> offsets = {Vec3::Zero()};
    for (int k = 0; k < 3; ++k) {
        Vec3 d = Vec3::Zero();
        d[k] = h;
        offsets.push_back(d);
        offsets.push_back(-d);
    }
    Tape stencil_tape;
    const FieldBatchInputs stencil_inputs =
        build_field_inputs_stencil(cloud, cloud.positions, offsets, dec);
    const Value stencil_sdf =
        decode_batch(stencil_tape, stencil_inputs, stencil_tape.constant(cloud.latents), dec)
            .sdf;
    FieldSamples first;
    first.sdf.assign(stencil_tape.val(stencil_sdf).data.begin(),
                     stencil_tape.val(stencil_sdf).data.end());

    std::vector<Vec3> projected(n);
    for (int i = 0; i < n; ++i) {
        const std::size_t base = static_cast<std::size_t>(i) * 7;
        const double s = first.sdf[base];
        Vec3 g;
        for (int k = 0; k < 3; ++k)
            g[k] = (first.sdf[base + 1 + 2 * k] - first.sdf[base + 2 + 2 * k]) / (2 * h);
        const double len = g.norm();
        projected[i] = len < 1e-9 ? cloud.positions[i]
                                  : Vec3(cloud.positions[i] - s * (g / len));
    }

    FieldSamples refined = decode_fields(projected, cloud, dec);
    DecodedPointCloud out;
    std::vector<int> kept;
    for (int i = 0; i < n; ++i) {
        if (!refined.valid[i]) continue;
        if (std::abs(refined.sdf[i]) > dec.truncation) continue;
        kept.push_back(i);
    }
    out.points.reserve(kept.size());
    out.sdf.reserve(kept.size());
    out.features = Tensor(static_cast<int>(kept.size()), dec.teacher_dim);
    for (std::size_t j = 0; j < kept.size(); ++j) {
        const int i = kept[j];
        out.points.push_back(projected[i]);
        out.sdf.push_back(refined.sdf[i]);
        std::copy(refined.features.row_ptr(i), refined.features.row_ptr(i) + dec.teacher_dim,
                  out.features.row_ptr(static_cast<int>(j)));
    }
    return out;
}

void QuerySpec::validate(int dim) const {
    if (temperature <= 0)
        throw Error(ErrorCode::InvalidArgument, "query temperature must be > 0");
    if (positives.empty() || negatives.empty())
        throw Error(ErrorCode::InvalidArgument, "query needs >= 1 positive and >= 1 negative");
    for (const auto& group : {positives, negatives})
        for (const auto& e : group) {
            if (static_cast<int>(e.size()) != dim)
                throw ShapeError("query embedding dimension mismatch");
            double norm = 0;
            for (double v : e) norm += v * v;
            if (std::abs(std::sqrt(norm) - 1.0) > 1e-3)
                throw Error(ErrorCode::InvalidArgument, "query embeddings must be unit norm");
        }
}

double score_feature(const double* feature, int dim, const QuerySpec& query) {
    const std::size_t np = query.positives.size();
    const std::size_t total = np + query.negatives.size();
    std::vector<double> logits(total);
    for (std::size_t q = 0; q < total; ++q) {
        const auto& e = q < np ? query.positives[q] : query.negatives[q - np];
        double dot = 0;
        for (int k = 0; k < dim; ++k) dot += feature[k] * e[k];
        logits[q] = dot / query.temperature;
    }
    const double m = *std::max_element(logits.begin(), logits.end());
    double z = 0;
    for (double& l : logits) {
        l = std::exp(l - m);
        z += l;
    }
    double score = 0;
    for (std::size_t q = 0; q < np; ++q) score += logits[q];
    return score / z;
}

std::vector<double> score_points(const DecodedPointCloud& dpc, const QuerySpec& query) {
    query.validate(dpc.features.cols);
    std::vector<double> out(dpc.size());
    for (std::size_t i = 0; i < dpc.size(); ++i)
        out[i] = score_feature(dpc.features.row_ptr(static_cast<int>(i)), dpc.features.cols,
                               query);
    return out;
}

namespace {

// Uniform grid for eps-radius queries.
class EpsGrid {
public:
    EpsGrid(const std::vector<Vec3>& points, double eps) : points_(points), eps_(eps) {
        for (std::size_t i = 0; i < points.size(); ++i)
            cells_[key(points[i])].push_back(static_cast<int>(i));
    }

    void neighbors(int idx, std::vector<int>& out) const {
        out.clear();
        const Vec3& p = points_[idx];
        const std::int64_t cx = coord(p.x()), cy = coord(p.y()), cz = coord(p.z());
        const double eps2 = eps_ * eps_;
        for (std::int64_t dx = -1; dx <= 1; ++dx)
            for (std::int64_t dy = -1; dy <= 1; ++dy)
                for (std::int64_t dz = -1; dz <= 1; ++dz) {
                    const auto it = cells_.find(pack(cx + dx, cy + dy, cz + dz));
                    if (it == cells_.end()) continue;
                    for (int j : it->second)
                        if ((points_[j] - p).squaredNorm() <= eps2) out.push_back(j);
                }
        std::sort(out.begin(), out.end());
    }

private:
    std::int64_t coord(double v) const {
        return static_cast<std::int64_t>(std::floor(v / eps_)) + (1 << 20);
    }
    static std::int64_t pack(std::int64_t x, std::int64_t y, std::int64_t z) {
        return (x << 42) | (y << 21) | z;
    }
    std::int64_t key(const Vec3& p) const {
        return pack(coord(p.x()), coord(p.y()), coord(p.z()));
    }
    const std::vector<Vec3>& points_;
    double eps_;
    std::unordered_map<std::int64_t, std::vector<int>> cells_;
};

}  // namespace

DbscanResult dbscan(const std::vector<Vec3>& points, double eps, int min_pts) {
    if (eps <= 0 || min_pts < 1)
        throw Error(ErrorCode::InvalidArgument, "dbscan: eps > 0 and min_pts >= 1 required");
    constexpr int kUndef = -2;
    constexpr int kNoise = -1;
    const int n = static_cast<int>(points.size());
    DbscanResult result;
    result.labels.assign(n, kUndef);
    if (n == 0) return result;

    EpsGrid grid(points, eps);
    std::vector<int> neigh, neigh2;
    for (int i = 0; i < n; ++i) {
        if (result.labels[i] != kUndef) continue;
        grid.neighbors(i, neigh);
        if (static_cast<int>(neigh.size()) < min_pts) {
            result.labels[i] = kNoise;
            continue;
        }
        const int cluster = static_cast<int>(result.clusters.size());
        result.clusters.emplace_back();
        result.labels[i] = cluster;
        result.clusters[cluster].push_back(i);
        std::deque<int> seeds(neigh.begin(), neigh.end());
        while (!seeds.empty()) {
            const int j = seeds.front();
            seeds.pop_front();
            if (result.labels[j] == kNoise) {
                result.labels[j] = cluster;  // border point
                result.clusters[cluster].push_back(j);
                continue;
            }
            if (result.labels[j] != kUndef) continue;
            result.labels[j] = cluster;
            result.clusters[cluster].push_back(j);
            grid.neighbors(j, neigh2);
            if (static_cast<int>(neigh2.size()) >= min_pts)
                seeds.insert(seeds.end(), neigh2.begin(), neigh2.end());
        }
        std::sort(result.clusters[cluster].begin(), result.clusters[cluster].end());
    }
    for (int i = 0; i < n; ++i)
        if (result.labels[i] == kNoise) result.noise.push_back(i);
    return result;
}

namespace {

ScoredCluster pick_best_cluster(const DecodedPointCloud& dpc, const DbscanResult& clusters,
                                const std::vector<int>& candidate_indices,
                                const std::vector<double>& candidate_scores) {
    ScoredCluster best;
    bool have = false;
    for (const auto& members : clusters.clusters) {
        ScoredCluster c;
        for (int m : members) {
            c.members.push_back(candidate_indices[m]);
            c.centroid += dpc.points[candidate_indices[m]];
            c.mean_score += candidate_scores[m];
        }
        c.centroid /= static_cast<double>(c.members.size());
        c.mean_score /= static_cast<double>(c.members.size());
        const auto rank = [](const ScoredCluster& s) {
            return std::make_tuple(s.members.size(), s.mean_score, -s.centroid.x(),
                                   -s.centroid.y(), -s.centroid.z());
        };
        if (!have || rank(c) > rank(best)) {
            best = std::move(c);
            have = true;
        }
    }
    return best;
}

ScoredCluster query_pass(const DecodedPointCloud& dpc, const std::vector<int>& pool,
                         const QuerySpec& query, double eps, int min_pts, double p_min,
                         int pass_index) {
    query.validate(dpc.features.cols);
    std::vector<int> kept;
    std::vector<double> kept_scores;
    std::vector<Vec3> kept_points;
    for (int i : pool) {
        const double s =
            score_feature(dpc.features.row_ptr(i), dpc.features.cols, query);
        if (s > p_min) {
            kept.push_back(i);
            kept_scores.push_back(s);
            kept_points.push_back(dpc.points[i]);
        }
    }
    if (kept.empty())
        throw QueryNoMatchError(pass_index, "no point above threshold in pass " +
                                                std::to_string(pass_index));
    const DbscanResult clusters = dbscan(kept_points, eps, min_pts);
    if (clusters.clusters.empty())
        throw QueryNoMatchError(pass_index, "no cluster above min_pts in pass " +
                                                std::to_string(pass_index));
    return pick_best_cluster(dpc, clusters, kept, kept_scores);
}

}  // namespace

ScoredCluster top_cluster_query(const DecodedPointCloud& dpc, const QuerySpec& query,
                                double eps, int min_pts, double p_min) {
    std::vector<int> pool(dpc.size());
    for (std::size_t i = 0; i < dpc.size(); ++i) pool[i] = static_cast<int>(i);
    return query_pass(dpc, pool, query, eps, min_pts, p_min, 1);
}

ScoredCluster conditional_part_query(const DecodedPointCloud& dpc, const QuerySpec& object_query,
                                     const QuerySpec& part_query,
                                     const PartQueryParams& params) {
    std::vector<int> pool(dpc.size());
    for (std::size_t i = 0; i < dpc.size(); ++i) pool[i] = static_cast<int>(i);
    const ScoredCluster object = query_pass(dpc, pool, object_query, params.eps_object,
                                            params.min_pts, params.p_min, 1);
    return query_pass(dpc, object.members, part_query, params.eps_part, params.min_pts,
                      params.p_min, 2);
}

}  // namespace geff
