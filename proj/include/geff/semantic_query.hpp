#pragma once

#include <functional>

#include "geff/fields.hpp"

namespace geff {

// Discretized geometric + semantic representation decoded from the latents.
struct DecodedPointCloud {
    std::vector<Vec3> points;
    Tensor features;  // N x n, unit rows
    std::vector<double> sdf;

    std::size_t size() const { return points.size(); }
};

// One Newton-style projection step x <- x - s(x) * normal(x) using central
// differences of `sdf`. Shared by decode_point_cloud and the oracle tests.
Vec3 project_point_to_surface(const Vec3& x, const std::function<double(const Vec3&)>& sdf,
                              double h = 1e-3);

// Latent anchors refined onto the decoded surface; points still farther than
// the truncation band after projection are dropped. Throws EmptyCloudError.
DecodedPointCloud decode_point_cloud(const LatentPointCloud& cloud, FieldDecoders& dec);

// Open-vocabulary query: positive and negative embeddings plus a softmax
// temperature.
struct QuerySpec {
    std::vector<std::vector<double>> positives;
    std::vector<std::vector<double>> negatives;
    double temperature = 0.1;

    void validate(int dim) const;
};

// Cosine similarity with a temperatured softmax over positives + negatives;
// the score is the summed probability of the positive queries.
double score_feature(const double* feature, int dim, const QuerySpec& query);
std::vector<double> score_points(const DecodedPointCloud& dpc, const QuerySpec& query);

struct DbscanResult {
    std::vector<std::vector<int>> clusters;  // discovery order, member indices
    std::vector<int> noise;
    std::vector<int> labels;  // -1 = noise, else cluster id
};

// Standard DBSCAN over 3D points with a fixed index scan order, so border
// ties resolve to the first-discovered cluster.
DbscanResult dbscan(const std::vector<Vec3>& points, double eps, int min_pts);

struct ScoredCluster {
    std::vector<int> members;  // indices into the decoded cloud
    Vec3 centroid = Vec3::Zero();
    double mean_score = 0;
};

struct PartQueryParams {
    double eps_object = 0.10;
    double eps_part = 0.01;
    int min_pts = 5;
    double p_min = 0.5;
};

// Single-pass query: threshold on score, cluster, return the best cluster
// (largest, then higher mean score, then lowest centroid lexicographically).
// Throws QueryNoMatchError (pass 1) when nothing qualifies.
ScoredCluster top_cluster_query(const DecodedPointCloud& dpc, const QuerySpec& query,
                                double eps, int min_pts, double p_min);

// Two-pass conditional query: segment the object, then re-query its members
// with the part prompt at a much smaller clustering radius.
ScoredCluster conditional_part_query(const DecodedPointCloud& dpc, const QuerySpec& object_query,
                                     const QuerySpec& part_query,
                                     const PartQueryParams& params = {});

}  // namespace geff
