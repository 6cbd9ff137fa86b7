#include "geff/renderer.hpp"

#include <algorithm>
#include <cmath>

namespace geff {

std::vector<double> sample_ray(const RenderConfig& cfg, Rng& rng, double observed_dist,
                               double truncation) {
    if (!cfg.valid()) throw Error(ErrorCode::InvalidArgument, "invalid render config");
    const int n = cfg.samples_per_ray;
    std::vector<double> ts;
    ts.reserve(n);

    auto stratified = [&](double lo, double hi, int count) {
        const double width = (hi - lo) / count;
        for (int i = 0; i < count; ++i) {
            const double u = cfg.stratified ? rng.uniform() : 0.5;
            ts.push_back(lo + (i + u) * width);
        }
    };

    const bool guided = cfg.depth_guided && observed_dist > 0;
    if (guided) {
        const double band = cfg.band_truncs * truncation;
        const double lo = std::max(cfg.t_near, observed_dist - band);
        const double hi = std::min(cfg.t_far, observed_dist + band);
        int n_band = static_cast<int>(std::lround(cfg.guided_fraction * n));
        n_band = std::clamp(n_band, 1, n - 1);
        if (hi > lo) {
            stratified(cfg.t_near, cfg.t_far, n - n_band);
            stratified(lo, hi, n_band);
        } else {
            stratified(cfg.t_near, cfg.t_far, n);
        }
    } else {
        stratified(cfg.t_near, cfg.t_far, n);
    }

    std::sort(ts.begin(), ts.end());
    for (std::size_t i = 1; i < ts.size(); ++i)
        if (ts[i] <= ts[i - 1]) ts[i] = ts[i - 1] + 1e-9;
    return ts;
}

RayRender composite_ray(const std::vector<double>& alphas, const Tensor& colors,
                        const Tensor& features, const std::vector<double>& dists) {
    const int n = static_cast<int>(alphas.size());
    if (colors.rows != n || features.rows != n || static_cast<int>(dists.size()) != n)
        throw ShapeError("composite_ray: sample count mismatch");
    RayRender out;
    out.feature.assign(features.cols, 0.0);
    out.weights.resize(n);
    double transmittance = 1.0;
    for (int i = 0; i < n; ++i) {
        const double w = transmittance * alphas[i];
        out.weights[i] = w;
        out.weight_sum += w;
        for (int k = 0; k < 3; ++k) out.color[k] += w * colors.at(i, k);
        for (int k = 0; k < features.cols; ++k) out.feature[k] += w * features.at(i, k);
        out.depth += w * dists[i];
        transmittance *= (1.0 - alphas[i]);
    }
    out.final_transmittance = transmittance;
    return out;
}

RayBatchRender render_rays_on_tape(Tape& tape, const std::vector<Ray>& rays,
                                   const std::vector<double>& observed_dists,
                                   const LatentPointCloud& cloud, Value latents,
                                   FieldDecoders& dec, const RenderConfig& cfg, Rng& rng) {
    if (!cfg.valid()) throw Error(ErrorCode::InvalidArgument, "invalid render config");
    const int r_count = static_cast<int>(rays.size());
    if (r_count == 0) throw EmptyBatchError("render_rays_on_tape: no rays");
    if (!observed_dists.empty() && static_cast<int>(observed_dists.size()) != r_count)
        throw ShapeError("observed depth count mismatch");
    const int n = cfg.samples_per_ray;
    const int n_ext = n + 1;

    RayBatchRender out;
    out.sample_dists.reserve(static_cast<std::size_t>(r_count) * n);
    std::vector<Vec3> positions;
    positions.reserve(static_cast<std::size_t>(r_count) * n_ext);
    std::vector<Vec3> dirs;
    dirs.reserve(positions.capacity());
    std::vector<double> dist_rows;
    dist_rows.reserve(static_cast<std::size_t>(r_count) * n);

    for (int r = 0; r < r_count; ++r) {
        const double obs = observed_dists.empty() ? 0.0 : observed_dists[r];
        const std::vector<double> ts = sample_ray(cfg, rng, obs, dec.truncation);
        const double mean_spacing = (ts.back() - ts.front()) / std::max(1, n - 1);
        for (int i = 0; i < n; ++i) {
            positions.push_back(rays[r].origin + ts[i] * rays[r].direction);
            dirs.push_back(rays[r].direction);
            out.sample_dists.push_back(ts[i]);
            dist_rows.push_back(ts[i]);
        }
        positions.push_back(rays[r].origin + (ts.back() + mean_spacing) * rays[r].direction);
        dirs.push_back(rays[r].direction);
    }

    const FieldBatchInputs inputs = build_field_inputs(cloud, positions, dec);
    const FieldBatch fields = decode_batch(tape, inputs, latents, dec, &dirs);

    // alpha_i = max(0, 1 - sig(kappa s_{i+1}) / sig(kappa s_i)), per interval.
    const Value kappa = tape.exp(tape.param(&dec.log_kappa));
    const Value sdf_mat = tape.reshape(fields.sdf, r_count, n_ext);
    const Value sig_here =
        tape.sigmoid(tape.mul(kappa, tape.slice_cols(sdf_mat, 0, n)));
    const Value sig_next =
        tape.sigmoid(tape.mul(kappa, tape.slice_cols(sdf_mat, 1, n_ext)));
    const Value alpha = tape.relu(
        tape.add_const(tape.neg(tape.div(sig_next, tape.add_const(sig_here, 1e-300))), 1.0));

    // Transmittance recursion column by column.
    Value trans = tape.constant(Tensor::full(r_count, 1, 1.0));
    Value weights;  // R x N, built by column concatenation
    for (int i = 0; i < n; ++i) {
        const Value a_i = tape.slice_cols(alpha, i, i + 1);
        const Value w_i = tape.mul(trans, a_i);
        weights = i == 0 ? w_i : tape.concat_cols(weights, w_i);
        trans = tape.mul(trans, tape.add_const(tape.neg(a_i), 1.0));
    }
    out.sample_weights = weights;

    const Value w_flat = tape.reshape(weights, r_count * n, 1);
    const Value colors_kept = tape.drop_segment_tail(fields.color, n_ext, n);
    const Value feats_kept = tape.drop_segment_tail(fields.feature, n_ext, n);
    out.color = tape.segment_sum_rows(tape.mul_colvec(colors_kept, w_flat), n);
    out.feature = tape.segment_sum_rows(tape.mul_colvec(feats_kept, w_flat), n);
    const Value dist_const =
        tape.constant(Tensor::from_rows(r_count * n, 1, std::move(dist_rows)));
    out.depth = tape.segment_sum_rows(tape.mul(dist_const, w_flat), n);
    out.weight = tape.segment_sum_rows(w_flat, n);
    return out;
}

RayRender render_ray(const Ray& ray, const LatentPointCloud& cloud, FieldDecoders& dec,
                     const RenderConfig& cfg, Rng& rng) {
    Tape tape;
    const Value latents = tape.constant(cloud.latents);
    const RayBatchRender batch =
        render_rays_on_tape(tape, {ray}, {}, cloud, latents, dec, cfg, rng);
    RayRender out;
    const Tensor& c = tape.val(batch.color);
    for (int k = 0; k < 3; ++k) out.color[k] = c.data[k];
    const Tensor& f = tape.val(batch.feature);
    out.feature.assign(f.data.begin(), f.data.end());
    out.depth = tape.val(batch.depth).data[0];
    out.weight_sum = tape.val(batch.weight).data[0];
    const Tensor& w = tape.val(batch.sample_weights);
    out.weights.assign(w.data.begin(), w.data.end());
    double acc = 1.0;
    for (double wi : out.weights) acc -= wi;  // == final transmittance
    out.final_transmittance = acc;
    return out;
}

RenderedImage render_image(const Intrinsics& intr, const Pose& pose,
                           const LatentPointCloud& cloud, FieldDecoders& dec,
                           const RenderConfig& cfg, std::uint64_t seed) {
    RenderedImage img;
    img.width = intr.width;
    img.height = intr.height;
    img.feature_dim = dec.teacher_dim;
    const std::size_t pixels = static_cast<std::size_t>(intr.width) * intr.height;
    img.color.assign(pixels * 3, 0.f);
    img.feature.assign(pixels * dec.teacher_dim, 0.f);
    img.depth_z.assign(pixels, 0.f);
    img.weight.assign(pixels, 0.f);

    Rng base(seed);
    constexpr int kChunk = 512;
    std::vector<Ray> rays;
    std::vector<std::size_t> ray_pixel;
    std::vector<double> ray_dz;

    auto flush = [&]() {
        if (rays.empty()) return;
        Tape tape;
        const Value latents = tape.constant(cloud.latents);
        // One forked stream per chunk keeps results independent of chunking
        // only if the chunk boundaries are fixed; they are (kChunk).
        Rng rng = base.fork(ray_pixel.front());
        const RayBatchRender batch =
            render_rays_on_tape(tape, rays, {}, cloud, latents, dec, cfg, rng);
        const Tensor& c = tape.val(batch.color);
        const Tensor& f = tape.val(batch.feature);
        const Tensor& d = tape.val(batch.depth);
        const Tensor& w = tape.val(batch.weight);
        for (std::size_t i = 0; i < rays.size(); ++i) {
            const std::size_t px = ray_pixel[i];
            for (int k = 0; k < 3; ++k)
                img.color[px * 3 + k] = static_cast<float>(c.at(static_cast<int>(i), k));
            for (int k = 0; k < dec.teacher_dim; ++k)
                img.feature[px * dec.teacher_dim + k] =
                    static_cast<float>(f.at(static_cast<int>(i), k));
            img.weight[px] = static_cast<float>(w.data[i]);
            img.depth_z[px] = static_cast<float>(d.data[i] * ray_dz[i]);
        }
        rays.clear();
        ray_pixel.clear();
        ray_dz.clear();
    };

    for (int v = 0; v < intr.height; ++v)
        for (int u = 0; u < intr.width; ++u) {
            rays.push_back(ray_through_pixel(intr, pose, u, v));
            ray_pixel.push_back(static_cast<std::size_t>(v) * intr.width + u);
            const double a = (u - intr.cx) / intr.fx;
            const double b = (v - intr.cy) / intr.fy;
            ray_dz.push_back(1.0 / std::sqrt(a * a + b * b + 1.0));
            if (static_cast<int>(rays.size()) == kChunk) flush();
        }
    flush();
    return img;
}

}  // namespace geff
