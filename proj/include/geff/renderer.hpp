#pragma once

#include "geff/fields.hpp"

namespace geff {

struct RenderConfig {
    double t_near = 0.05;
    double t_far = 8.0;
    int samples_per_ray = 64;
    bool stratified = true;  // jitter within equal bins
    // Optional narrow-band sampling around a per-ray observed depth:
    // guided_fraction of the samples inside +-band_truncs * truncation.
    bool depth_guided = false;
    double band_truncs = 3.0;
    double guided_fraction = 0.75;

    bool valid() const { return t_near > 0 && t_near < t_far && samples_per_ray >= 2; }
};

// Ordered strictly-increasing sample distances. observed_dist <= 0 means no
// depth guidance for this ray. Deterministic given the rng state.
std::vector<double> sample_ray(const RenderConfig& cfg, Rng& rng, double observed_dist = 0,
                               double truncation = 0.10);

// Discrete compositing oracle: weights w_i = T_i * alpha_i with
// T_i = prod_{j<i} (1 - alpha_j). Pure function, shared by tests.
struct RayRender {
    Vec3 color = Vec3::Zero();
    std::vector<double> feature;
    double depth = 0;  // expected ray distance (not z-depth)
    double weight_sum = 0;
    std::vector<double> weights;
    double final_transmittance = 1;
};

RayRender composite_ray(const std::vector<double>& alphas, const Tensor& colors,
                        const Tensor& features, const std::vector<double>& dists);

// Differentiable batch render of R rays, recorded on `tape`. The SDF is
// evaluated at one extra position per ray (mean sample spacing past the last
// sample) to close the final opacity interval.
struct RayBatchRender {
    Value color;   // R x 3
    Value feature; // R x Dt
    Value depth;   // R x 1, expected ray distance
    Value weight;  // R x 1, sum of sample weights
    Value sample_weights;  // R x N
    std::vector<double> sample_dists;  // R * N, row-major
};

RayBatchRender render_rays_on_tape(Tape& tape, const std::vector<Ray>& rays,
                                   const std::vector<double>& observed_dists,
                                   const LatentPointCloud& cloud, Value latents,
                                   FieldDecoders& dec, const RenderConfig& cfg, Rng& rng);

// Convenience single-ray render (inference path).
RayRender render_ray(const Ray& ray, const LatentPointCloud& cloud, FieldDecoders& dec,
                     const RenderConfig& cfg, Rng& rng);

// Per-pixel batch render. Depth is converted to z-depth (sensor convention);
// pixels whose accumulated weight is ~0 keep depth 0.
struct RenderedImage {
    int width = 0, height = 0, feature_dim = 0;
    std::vector<float> color;    // H*W*3
    std::vector<float> feature;  // H*W*Dt
    std::vector<float> depth_z;  // H*W
    std::vector<float> weight;   // H*W
};

RenderedImage render_image(const Intrinsics& intrinsics, const Pose& pose,
                           const LatentPointCloud& cloud, FieldDecoders& dec,
                           const RenderConfig& cfg, std::uint64_t seed);

}  // namespace geff
