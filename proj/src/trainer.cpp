#include "geff/trainer.hpp"

#include <algorithm>
#include <cmath>

namespace geff {

Pose ring_pose(double radius, double height, double azimuth, const Vec3& target) {
    const Vec3 eye(target.x() + radius * std::cos(azimuth),
                   target.y() + radius * std::sin(azimuth), height);
    return look_at(eye, target);
}

Intrinsics square_intrinsics(int size, double focal) {
    Intrinsics intr;
    intr.width = intr.height = size;
    intr.fx = intr.fy = focal;
    intr.cx = intr.cy = size / 2.0;
    return intr;
}

std::optional<SdfSample> classify_sdf_sample(const Vec3& point, double observed_dist,
                                             double sample_dist, double truncation) {
    if (sample_dist > observed_dist + truncation) return std::nullopt;  // occluded, unknown
    SdfSample s;
    s.point = point;
    s.ray_observed_dist = observed_dist;
    s.sample_dist = sample_dist;
    if (std::abs(observed_dist - sample_dist) <= truncation) {
        s.regime = SdfRegime::Surface;
        s.target = observed_dist - sample_dist;
    } else {
        s.regime = SdfRegime::Freespace;
        s.target = std::min(observed_dist - sample_dist, 3.0 * truncation);
    }
    return s;
}

namespace {

// World-frame surface normal from depth differences; zero when neighbors are
// invalid or on the frame border.
Vec3 depth_pixel_normal(const PosedFrame& frame, int u, int v) {
    if (u <= 0 || u + 1 >= frame.width || v <= 0 || v + 1 >= frame.height) return Vec3::Zero();
    const float zl = frame.depth_at(u - 1, v), zr = frame.depth_at(u + 1, v);
    const float zu = frame.depth_at(u, v - 1), zd = frame.depth_at(u, v + 1);
    if (zl <= 0 || zr <= 0 || zu <= 0 || zd <= 0) return Vec3::Zero();
    const Vec3 du = backproject_pixel(frame.intrinsics, frame.pose, u + 1, v, zr) -
                    backproject_pixel(frame.intrinsics, frame.pose, u - 1, v, zl);
    const Vec3 dv = backproject_pixel(frame.intrinsics, frame.pose, u, v + 1, zd) -
                    backproject_pixel(frame.intrinsics, frame.pose, u, v - 1, zu);
    Vec3 n = du.cross(dv);
    const double len = n.norm();
    return len > 1e-12 ? Vec3(n / len) : Vec3::Zero();
}

}  // namespace

std::vector<SdfSample> sdf_targets(const PosedFrame& frame, Rng& rng, int count,
                                   double truncation, double t_near, double t_far) {
    std::vector<std::pair<int, int>> valid_pixels;
    for (int v = 0; v < frame.height; ++v)
        for (int u = 0; u < frame.width; ++u)
            if (frame.depth_at(u, v) > 0) valid_pixels.emplace_back(u, v);
    std::vector<SdfSample> out;
    if (valid_pixels.empty()) return out;
    const int max_attempts = 20 * count;
    for (int attempt = 0; attempt < max_attempts && static_cast<int>(out.size()) < count;
         ++attempt) {
        const auto [u, v] = valid_pixels[rng.uniform_index(valid_pixels.size())];
        const double a = (u - frame.intrinsics.cx) / frame.intrinsics.fx;
        const double b = (v - frame.intrinsics.cy) / frame.intrinsics.fy;
        const double dz = 1.0 / std::sqrt(a * a + b * b + 1.0);
        const double observed_dist = frame.depth_at(u, v) / dz;
        const double hi = std::min(t_far, observed_dist + 2.0 * truncation);
        if (hi <= t_near) continue;
        const double t = rng.uniform(t_near, hi);
        const Ray ray = ray_through_pixel(frame, u, v);
        auto sample =
            classify_sdf_sample(ray.origin + t * ray.direction, observed_dist, t, truncation);
        if (!sample) continue;
        // Incidence correction: the along-ray distance overestimates the
        // true signed distance by 1/cos(theta) at grazing angles; left
        // uncorrected it trains a field with gradient 1/cos(theta).
        const Vec3 n = depth_pixel_normal(frame, u, v);
        if (n.norm() > 0.5) {
            const double incidence =
                std::clamp(std::abs(n.dot(ray.direction)), 0.35, 1.0);
            sample->target *= incidence;
        }
        out.push_back(*sample);
    }
    return out;
}

double masked_mse(const Tensor& pred, const Tensor& target, const std::vector<double>& mask) {
    if (!pred.same_shape(target) || static_cast<int>(mask.size()) != pred.rows)
        throw ShapeError("masked_mse: shape mismatch");
    double acc = 0, count = 0;
    for (int r = 0; r < pred.rows; ++r) {
        if (mask[r] <= 0) continue;
        const double* p = pred.row_ptr(r);
        const double* t = target.row_ptr(r);
        for (int c = 0; c < pred.cols; ++c) acc += (p[c] - t[c]) * (p[c] - t[c]);
        count += pred.cols;
    }
    return count > 0 ? acc / count : 0.0;
}

double eikonal_residual(const std::vector<Vec3>& points,
                        const std::function<double(const Vec3&)>& sdf_fn, double h) {
    if (points.empty()) return 0.0;
    double acc = 0;
    for (const Vec3& p : points) {
        Vec3 g;
        for (int k = 0; k < 3; ++k) {
            Vec3 d = Vec3::Zero();
            d[k] = h;
            g[k] = (sdf_fn(p + d) - sdf_fn(p - d)) / (2 * h);
        }
        const double r = g.norm() - 1.0;
        acc += r * r;
    }
    return acc / static_cast<double>(points.size());
}

namespace {

Value decode_sdf_only(Tape& tape, const std::vector<Vec3>& points,
                      const LatentPointCloud& cloud, Value latents, FieldDecoders& dec) {
    const FieldBatchInputs inputs = build_field_inputs(cloud, points, dec);
    return decode_batch(tape, inputs, latents, dec).sdf;
}

}  // namespace

TotalLoss total_loss(Tape& tape, const TrainBatch& batch, const LatentPointCloud& cloud,
                     Value latents, FieldDecoders& dec, const LossWeights& weights,
                     const RenderConfig& render_cfg, Rng& rng) {
    if (batch.rays.empty()) throw EmptyBatchError("total_loss: no rays in batch");
    const int r_count = static_cast<int>(batch.rays.size());

    const RayBatchRender render = render_rays_on_tape(
        tape, batch.rays, batch.ray_observed_dist, cloud, latents, dec, render_cfg, rng);

    // Color and feature: mean squared error over all rays.
    const Value col_diff = tape.sub(render.color, tape.constant(batch.ray_gt_color));
    const Value l_col = tape.scale(tape.sum_all(tape.square(col_diff)), 1.0 / (r_count * 3.0));
    const Value feat_diff = tape.sub(render.feature, tape.constant(batch.ray_gt_feature));
    const Value l_feat = tape.scale(tape.sum_all(tape.square(feat_diff)),
                                    1.0 / (r_count * std::max(1, batch.ray_gt_feature.cols)));

    // Depth: masked by valid reference depth.
    Tensor obs(r_count, 1), mask(r_count, 1);
    double mask_sum = 0;
    for (int r = 0; r < r_count; ++r) {
        const bool valid = batch.ray_depth_mask[r] > 0;
        obs.data[r] = valid ? batch.ray_observed_dist[r] : 0.0;
        mask.data[r] = valid ? 1.0 : 0.0;
        mask_sum += mask.data[r];
    }
    const Value depth_diff = tape.sub(render.depth, tape.constant(std::move(obs)));
    const Value l_depth =
        tape.scale(tape.sum_all(tape.mul(tape.square(depth_diff), tape.constant(std::move(mask)))),
                   1.0 / std::max(1.0, mask_sum));

    // SDF supervision: L1 in the surface band, hinge in observed free space.
    Value l_sdf;
    if (batch.sdf_samples.empty()) {
        l_sdf = tape.constant(Tensor::scalar(0.0));
    } else {
        const int count = static_cast<int>(batch.sdf_samples.size());
        std::vector<Vec3> points;
        Tensor surf_mask(count, 1), free_mask(count, 1), targets(count, 1), bounds(count, 1);
        for (int i = 0; i < count; ++i) {
            const SdfSample& s = batch.sdf_samples[i];
            points.push_back(s.point);
            const bool surface = s.regime == SdfRegime::Surface;
            surf_mask.data[i] = surface ? 1.0 : 0.0;
            free_mask.data[i] = surface ? 0.0 : 1.0;
            targets.data[i] = surface ? s.target : 0.0;
            bounds.data[i] = surface ? 0.0 : s.target;
        }
        const Value sdf = decode_sdf_only(tape, points, cloud, latents, dec);
        const Value surf_term = tape.mul(tape.abs(tape.sub(sdf, tape.constant(std::move(targets)))),
                                         tape.constant(std::move(surf_mask)));
        // Hinge toward the capped along-ray bound: max(0, bound - s).
        const Value free_term =
            tape.mul(tape.relu(tape.sub(tape.constant(std::move(bounds)), sdf)),
                     tape.constant(std::move(free_mask)));
        l_sdf = tape.scale(tape.add(tape.sum_all(surf_term), tape.sum_all(free_term)),
                           1.0 / count);
    }

    // Eikonal: central differences of the decoded SDF, stencil on-tape. All
    // six probes of a point share its neighbor set so the difference sees a
    // continuous function.
    Value l_eik;
    if (batch.eikonal_points.empty()) {
        l_eik = tape.constant(Tensor::scalar(0.0));
    } else {
        const double h = 1e-4;
        const int p_count = static_cast<int>(batch.eikonal_points.size());
        std::vector<Vec3> offsets;
        for (int k = 0; k < 3; ++k) {
            Vec3 d = Vec3::Zero();
            d[k] = h;
            offsets.push_back(d);
            offsets.push_back(-d);
        }
        const FieldBatchInputs inputs =
            build_field_inputs_stencil(cloud, batch.eikonal_points, offsets, dec);
        const Value sdf = decode_batch(tape, inputs, latents, dec).sdf;
        const Value mat = tape.reshape(sdf, p_count, 6);
        Value grad;
        for (int k = 0; k < 3; ++k) {
            const Value gk = tape.scale(tape.sub(tape.slice_cols(mat, 2 * k, 2 * k + 1),
                                                 tape.slice_cols(mat, 2 * k + 1, 2 * k + 2)),
                                        1.0 / (2 * h));
            grad = k == 0 ? gk : tape.concat_cols(grad, gk);
        }
        const Value norm = tape.sqrt(tape.add_const(tape.row_sum(tape.square(grad)), 1e-12));
        l_eik = tape.scale(tape.sum_all(tape.square(tape.add_const(norm, -1.0))),
                           1.0 / p_count);
    }

    Value total = tape.scale(l_col, weights.color);
    total = tape.add(total, tape.scale(l_depth, weights.depth));
    total = tape.add(total, tape.scale(l_sdf, weights.sdf));
    total = tape.add(total, tape.scale(l_eik, weights.eikonal));
    total = tape.add(total, tape.scale(l_feat, weights.feature));

    TotalLoss out;
    out.total = total;
    out.values.color = tape.val(l_col).scalar_value();
    out.values.depth = tape.val(l_depth).scalar_value();
    out.values.sdf = tape.val(l_sdf).scalar_value();
    out.values.eikonal = tape.val(l_eik).scalar_value();
    out.values.feature = tape.val(l_feat).scalar_value();
    out.values.total = tape.val(total).scalar_value();
    return out;
}

namespace {

struct PoolFrame {
    PosedFrame frame;
    FrameAnchors anchors;
    std::vector<std::pair<int, int>> valid_pixels;
    std::vector<std::pair<int, int>> edge_pixels;  // depth discontinuities
};

struct ViewGroup {
    PoolFrame base;
    PoolFrame partner;
};

PoolFrame make_pool_frame(const AnalyticScene& scene, const TeacherModel& teacher,
                          const Intrinsics& intr, const Pose& pose, std::uint64_t feature_seed,
                          int budget, int frame_id) {
    GtRenderOptions opts;
    opts.feature_seed = feature_seed;
    PoolFrame pf;
    pf.frame = render_ground_truth_frame(scene, intr, pose, teacher, opts);
    pf.anchors = build_frame_anchors(pf.frame, budget, frame_id);
    for (int v = 0; v < pf.frame.height; ++v)
        for (int u = 0; u < pf.frame.width; ++u) {
            if (pf.frame.depth_at(u, v) > 0) pf.valid_pixels.emplace_back(u, v);
            // Depth-edge pixels (including silhouettes against invalid
            // regions) get extra ray supervision: they carry most of the
            // novel-view depth error.
            const float z = pf.frame.depth_at(u, v);
            bool edge = false;
            for (int k = 0; k < 4 && !edge; ++k) {
                const int uu = u + (k == 0) - (k == 1);
                const int vv = v + (k == 2) - (k == 3);
                if (uu < 0 || uu >= pf.frame.width || vv < 0 || vv >= pf.frame.height)
                    continue;
                const float zn = pf.frame.depth_at(uu, vv);
                if ((z > 0) != (zn > 0) || (z > 0 && zn > 0 && std::abs(z - zn) > 0.15f))
                    edge = true;
            }
            if (edge) pf.edge_pixels.emplace_back(u, v);
        }
    return pf;
}

// 8 ring view pairs plus up to 3 close-range pairs per scene. Partners stay
// within the adjacency bounds (<= ~8 deg / 0.15 m of their base view).
std::vector<ViewGroup> build_view_pool(const AnalyticScene& scene, const TeacherModel& teacher,
                                       const TrainConfig& cfg, Rng& rng,
                                       std::uint64_t seed_base) {
    const Intrinsics intr = square_intrinsics(cfg.image_size, cfg.focal);
    std::vector<ViewGroup> groups;
    int frame_id = 0;
    for (int i = 0; i < 8; ++i) {
        // Alternate between eye-level views of the scene center and steeper
        // downward views with mostly-valid depth.
        const bool downward = i % 2 == 1;
        const Vec3 target = downward ? Vec3(0, 0, 0.1) : Vec3(0, 0, 0.25);
        const double az = 2 * M_PI * i / 8.0 + rng.uniform(-0.1, 0.1);
        const double radius = downward ? rng.uniform(1.5, 1.9) : rng.uniform(1.8, 2.2);
        const double height = downward ? rng.uniform(1.3, 1.6) : rng.uniform(0.8, 1.2);
        const Pose base = ring_pose(radius, height, az, target);
        const Pose partner = ring_pose(radius + rng.uniform(-0.1, 0.1),
                                       height + rng.uniform(-0.1, 0.1),
                                       az + rng.uniform(-0.14, 0.14), target);
        ViewGroup g;
        g.base = make_pool_frame(scene, teacher, intr, base, seed_base + frame_id,
                                 cfg.encode_budget, frame_id);
        ++frame_id;
        g.partner = make_pool_frame(scene, teacher, intr, partner, seed_base + frame_id,
                                    cfg.encode_budget, frame_id);
        ++frame_id;
        groups.push_back(std::move(g));
    }
    // Close-range pairs centered on objects to expose part-level detail.
    const auto ids = scene.object_ids();
    std::vector<int> object_ids;
    for (int id : ids)
        if (id != 0) object_ids.push_back(id);
    const int close_count = std::min<int>(3, static_cast<int>(object_ids.size()));
    for (int i = 0; i < close_count; ++i) {
        const int id = object_ids[rng.uniform_index(object_ids.size())];
        const Vec3 c = scene.object_centroid(id);
        const double az = rng.uniform(0, 2 * M_PI);
        const double r = rng.uniform(0.4, 0.6);
        const Vec3 eye = c + Vec3(r * std::cos(az), r * std::sin(az), rng.uniform(0.25, 0.4));
        const Vec3 eye2 = c + Vec3(r * std::cos(az + 0.12), r * std::sin(az + 0.12),
                                   eye.z() - c.z() + rng.uniform(-0.05, 0.05));
        ViewGroup g;
        g.base = make_pool_frame(scene, teacher, intr, look_at(eye, c), seed_base + frame_id,
                                 cfg.encode_budget, frame_id);
        ++frame_id;
        g.partner = make_pool_frame(scene, teacher, intr, look_at(eye2, c),
                                    seed_base + frame_id, cfg.encode_budget, frame_id);
        ++frame_id;
        groups.push_back(std::move(g));
    }
    return groups;
}

}  // namespace

TrainResult train(const std::vector<AnalyticScene>& scenes, const TeacherModel& teacher,
                  GeffModel& model, const TrainConfig& cfg, const LossWeights& weights,
                  const TrainCallback& callback) {
    if (scenes.empty()) throw Error(ErrorCode::InvalidArgument, "train: no scenes");
    Rng rng(cfg.seed);

    std::vector<std::vector<ViewGroup>> pools;
    for (std::size_t s = 0; s < scenes.size(); ++s)
        pools.push_back(build_view_pool(scenes[s], teacher, cfg, rng, 1000 * (s + 1)));

    AdamState adam;
    adam.lr = cfg.lr;
    const std::vector<Tensor*> params = model.params();

    TrainResult result;
    std::vector<Tensor> snapshot;
    for (int step = 0; step < cfg.iterations; ++step) {
        snapshot.clear();
        for (const Tensor* p : params) snapshot.push_back(*p);

        const std::size_t scene_idx = rng.uniform_index(scenes.size());
        const AnalyticScene& scene = scenes[scene_idx];
        auto& pool = pools[scene_idx];

        // Pick distinct view groups: bases become input views, partners of
        // the first novel_views groups are rendered as novel views.
        const int group_count = std::min<int>(cfg.input_views, static_cast<int>(pool.size()));
        std::vector<int> group_idx;
        while (static_cast<int>(group_idx.size()) < group_count) {
            const int g = static_cast<int>(rng.uniform_index(pool.size()));
            if (std::find(group_idx.begin(), group_idx.end(), g) == group_idx.end())
                group_idx.push_back(g);
        }

        Tape tape;
        // Batch all input-view descriptors through the encoder in one pass.
        LatentPointCloud cloud;
        int total_anchors = 0;
        for (int g : group_idx) total_anchors += pool[g].base.anchors.descriptors.rows;
        Tensor desc(total_anchors, model.encoder.descriptor_dim());
        cloud.teacher = Tensor(total_anchors, model.encoder.teacher_dim);
        int row = 0;
        for (int g : group_idx) {
            const FrameAnchors& a = pool[g].base.anchors;
            std::copy(a.descriptors.data.begin(), a.descriptors.data.end(),
                      desc.row_ptr(row));
            std::copy(a.teacher.data.begin(), a.teacher.data.end(), cloud.teacher.row_ptr(row));
            cloud.positions.insert(cloud.positions.end(), a.positions.begin(),
                                   a.positions.end());
            for (std::size_t i = 0; i < a.positions.size(); ++i) {
                cloud.frame_ids.push_back(a.frame_id);
                cloud.local_scales.push_back(a.voxel_size);
            }
            row += a.descriptors.rows;
        }
        cloud.latents = Tensor(total_anchors, model.encoder.latent_dim);
        cloud.rebuild_index();
        const Value latents = model.encoder.net.forward(tape, tape.constant(std::move(desc)));

        // Novel-view supervision rays.
        const int novel_count = std::min(cfg.novel_views, group_count);
        TrainBatch batch;
        batch.ray_gt_color = Tensor(cfg.rays_per_batch, 3);
        batch.ray_gt_feature = Tensor(cfg.rays_per_batch, model.encoder.teacher_dim);
        for (int r = 0; r < cfg.rays_per_batch; ++r) {
            const PoolFrame& novel = pool[group_idx[r % novel_count]].partner;
            const PosedFrame& f = novel.frame;
            int u, v;
            if (r % 10 < 3 && !novel.edge_pixels.empty()) {
                const auto& px = novel.edge_pixels[rng.uniform_index(novel.edge_pixels.size())];
                u = px.first;
                v = px.second;
            } else {
                u = static_cast<int>(rng.uniform_index(f.width));
                v = static_cast<int>(rng.uniform_index(f.height));
            }
            batch.rays.push_back(ray_through_pixel(f, u, v));
            const float z = f.depth_at(u, v);
            const double a = (u - f.intrinsics.cx) / f.intrinsics.fx;
            const double b = (v - f.intrinsics.cy) / f.intrinsics.fy;
            const double dz = 1.0 / std::sqrt(a * a + b * b + 1.0);
            batch.ray_observed_dist.push_back(z > 0 ? z / dz : 0.0);
            batch.ray_depth_mask.push_back(z > 0 ? 1.0 : 0.0);
            const float* c = f.color_at(u, v);
            for (int k = 0; k < 3; ++k) batch.ray_gt_color.at(r, k) = c[k];
            const float* tf = f.teacher_at(u, v);
            for (int k = 0; k < model.encoder.teacher_dim; ++k)
                batch.ray_gt_feature.at(r, k) = tf[k];
        }

        // SDF samples along novel-view rays.
        for (int i = 0; i < novel_count; ++i) {
            Rng sub = rng.fork(rng.next_u64());
            auto samples = sdf_targets(pool[group_idx[i]].partner.frame, sub,
                                       cfg.sdf_samples_per_batch / novel_count, cfg.truncation,
                                       cfg.render.t_near, cfg.render.t_far);
            batch.sdf_samples.insert(batch.sdf_samples.end(), samples.begin(), samples.end());
        }

        // Eikonal probes: half near observed surfaces, half uniform in bounds.
        const PoolFrame& eik_frame = pool[group_idx[0]].partner;
        for (int i = 0; i < cfg.eikonal_samples_per_batch; ++i) {
            if (i % 2 == 0 && !eik_frame.valid_pixels.empty()) {
                const auto [u, v] =
                    eik_frame.valid_pixels[rng.uniform_index(eik_frame.valid_pixels.size())];
                const Vec3 p = backproject_pixel(eik_frame.frame.intrinsics,
                                                 eik_frame.frame.pose, u, v,
                                                 eik_frame.frame.depth_at(u, v));
                batch.eikonal_points.push_back(
                    p + Vec3(rng.normal(0, cfg.truncation / 2), rng.normal(0, cfg.truncation / 2),
                             rng.normal(0, cfg.truncation / 2)));
            } else {
                batch.eikonal_points.push_back(Vec3(
                    rng.uniform(scene.bounds_min.x(), scene.bounds_max.x()),
                    rng.uniform(scene.bounds_min.y(), scene.bounds_max.y()),
                    rng.uniform(scene.bounds_min.z(), scene.bounds_max.z())));
            }
        }

        const TotalLoss loss = total_loss(tape, batch, cloud, latents, model.decoders, weights,
                                          cfg.render, rng);
        if (!std::isfinite(loss.values.total)) {
            for (std::size_t i = 0; i < params.size(); ++i) *params[i] = snapshot[i];
            throw NonFiniteError("non-finite loss at step " + std::to_string(step) +
                                 "; parameters restored to last good step");
        }
        tape.backward(loss.total);

        std::vector<const Tensor*> grads;
        for (Tensor* p : params) grads.push_back(&tape.grad(tape.param(p)));
        try {
            adam.step(params, grads);
        } catch (const NonFiniteError&) {
            for (std::size_t i = 0; i < params.size(); ++i) *params[i] = snapshot[i];
            throw;
        }

        result.history.push_back(loss.values);
        result.steps_completed = step + 1;
        if (callback) callback(step, loss.values);
    }
    return result;
}

}  // namespace geff
