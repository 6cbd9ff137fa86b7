#pragma once

#include <functional>
#include <optional>

#include "geff/model.hpp"
#include "geff/renderer.hpp"
#include "geff/synthetic_world.hpp"

namespace geff {

// Loss term weights (lambda 1..5).
struct LossWeights {
    double color = 1.0;
    double depth = 1.0;
    double sdf = 1.0;
    double eikonal = 0.1;
    double feature = 1.0;
};

struct TrainConfig {
    int iterations = 2000;
    int rays_per_batch = 256;
    int sdf_samples_per_batch = 512;
    int eikonal_samples_per_batch = 256;
    double truncation = 0.10;
    std::uint64_t seed = 0;
    int scenes_per_epoch = 5;  // scenes cycled per epoch (informational)
    int input_views = 3;
    int novel_views = 2;  // adjacent to input views
    double lr = 1e-3;
    int encode_budget = 512;
    int image_size = 64;
    double focal = 64.0;
    RenderConfig render{.t_near = 0.05,
                        .t_far = 8.0,
                        .samples_per_ray = 24,
                        .stratified = true,
                        .depth_guided = true};
};

enum class SdfRegime { Surface, Freespace };

// One SDF supervision sample along an observed ray, iSDF-style: L1 against
// the truncated signed distance in the surface band, hinge in observed free
// space, occluded samples dropped. The free-space hinge pushes the SDF up to
// the along-ray distance bound capped at 3x truncation: a free-space field
// that sags toward zero absorbs ray weight far from any surface, which
// drags rendered depth short.
struct SdfSample {
    Vec3 point;
    double ray_observed_dist = 0;  // Euclidean distance to the surface hit
    double sample_dist = 0;
    SdfRegime regime = SdfRegime::Surface;
    double target = 0;  // surface: observed - sample; freespace: hinge bound
};

// Classification rule; nullopt = discard (sample beyond the observed surface).
std::optional<SdfSample> classify_sdf_sample(const Vec3& point, double observed_dist,
                                             double sample_dist, double truncation);

// Draws up to `count` retained samples along valid-depth pixel rays.
std::vector<SdfSample> sdf_targets(const PosedFrame& frame, Rng& rng, int count,
                                   double truncation, double t_near, double t_far);

struct TrainBatch {
    std::vector<Ray> rays;
    std::vector<double> ray_observed_dist;  // <= 0 for invalid-depth pixels
    Tensor ray_gt_color;                    // R x 3
    Tensor ray_gt_feature;                  // R x Dt
    std::vector<double> ray_depth_mask;     // 1 where GT depth valid
    std::vector<SdfSample> sdf_samples;
    std::vector<Vec3> eikonal_points;
};

struct LossBreakdown {
    double color = 0, depth = 0, sdf = 0, eikonal = 0, feature = 0, total = 0;
};

struct TotalLoss {
    Value total;
    LossBreakdown values;
};

// Builds every term of the training objective on the tape:
// total = l1*color + l2*depth + l3*sdf + l4*eikonal + l5*feature.
// Spatial SDF gradients for the Eikonal term use a central-difference stencil
// whose forward passes are recorded on the tape, so the term still
// differentiates w.r.t. parameters. Throws EmptyBatchError on an empty batch.
TotalLoss total_loss(Tape& tape, const TrainBatch& batch, const LatentPointCloud& cloud,
                     Value latents, FieldDecoders& dec, const LossWeights& weights,
                     const RenderConfig& render_cfg, Rng& rng);

// Plain helpers shared with tests (oracle substitution paths).
double masked_mse(const Tensor& pred, const Tensor& target, const std::vector<double>& mask);
double eikonal_residual(const std::vector<Vec3>& points,
                        const std::function<double(const Vec3&)>& sdf_fn, double h = 1e-4);

struct TrainResult {
    std::vector<LossBreakdown> history;
    int steps_completed = 0;
};

using TrainCallback = std::function<void(int step, const LossBreakdown&)>;

// Joint end-to-end training over synthetic scenes. Per step: pick a scene,
// encode its input views on the tape, render novel-view rays, build the full
// objective and take one Adam step (kappa included). Deterministic per seed.
// On a non-finite loss the model is restored to the previous step and
// NonFiniteError is thrown.
TrainResult train(const std::vector<AnalyticScene>& scenes, const TeacherModel& teacher,
                  GeffModel& model, const TrainConfig& cfg, const LossWeights& weights,
                  const TrainCallback& callback = nullptr);

// View rig used for training data and benchmarks: `ring_count` poses on a
// circle (radius, height) looking at `target`, plus optional jittered
// partners within the adjacency bounds.
Pose ring_pose(double radius, double height, double azimuth, const Vec3& target);
Intrinsics square_intrinsics(int size, double focal);

}  // namespace geff
