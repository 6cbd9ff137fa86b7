#include "geff/encoder.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "geff/ply_io.hpp"
#include "json.hpp"

namespace geff {

using nlohmann::json;

LatentPointCloud::CellKey LatentPointCloud::cell_of(const Vec3& p) const {
    const auto q = [&](double v) {
        return static_cast<std::int64_t>(std::floor(v / cell_size_)) + (1 << 20);
    };
    return CellKey{(q(p.x()) << 42) | (q(p.y()) << 21) | q(p.z())};
}

void LatentPointCloud::rebuild_index() {
    grid_.clear();
    if (positions.empty()) {
        cell_size_ = 0.1;
        return;
    }
    std::vector<double> scales = local_scales;
    std::nth_element(scales.begin(), scales.begin() + scales.size() / 2, scales.end());
    cell_size_ = std::max(1e-4, 2.0 * scales[scales.size() / 2]);
    for (int k = 0; k < 3; ++k) {
        cell_min_[k] = std::numeric_limits<std::int64_t>::max();
        cell_max_[k] = std::numeric_limits<std::int64_t>::min();
    }
    for (std::size_t i = 0; i < positions.size(); ++i) {
        for (int k = 0; k < 3; ++k) {
            const std::int64_t c =
                static_cast<std::int64_t>(std::floor(positions[i][k] / cell_size_)) + (1 << 20);
            cell_min_[k] = std::min(cell_min_[k], c);
            cell_max_[k] = std::max(cell_max_[k], c);
        }
        grid_[cell_of(positions[i])].push_back(static_cast<int>(i));
    }
}

std::vector<Neighbor> LatentPointCloud::knn(const Vec3& x, int k) const {
    if (k < 1) throw Error(ErrorCode::InvalidArgument, "knn: k must be >= 1");
    if (positions.empty()) throw EmptyCloudError("knn on empty latent cloud");
    if (grid_.empty()) throw Error(ErrorCode::InvalidArgument, "knn: index not built");

    std::int64_t q[3];
    for (int axis = 0; axis < 3; ++axis)
        q[axis] = static_cast<std::int64_t>(std::floor(x[axis] / cell_size_)) + (1 << 20);

    const int want = std::min<int>(k, static_cast<int>(positions.size()));
    std::vector<std::pair<double, int>> candidates;  // (squared distance, index)

    auto kth_dist = [&]() {
        return std::sqrt(candidates[want - 1].first);
    };
    auto scan_cell = [&](std::int64_t cx, std::int64_t cy, std::int64_t cz) {
        auto it = grid_.find(CellKey{(cx << 42) | (cy << 21) | cz});
        if (it == grid_.end()) return;
        for (int idx : it->second) {
            const double d2 = (positions[idx] - x).squaredNorm();
            candidates.emplace_back(d2, idx);
        }
    };
    auto consolidate = [&]() {
        std::sort(candidates.begin(), candidates.end());
        if (candidates.size() > static_cast<std::size_t>(want) * 4)
            candidates.resize(want * 4);
    };

    // The occupied-cell bounding box limits both ends of the ring sweep:
    // start at the first ring touching the box, stop once every box cell is
    // covered. A cell at ring r holds no point closer than (r - 1) * cell,
    // so an early stop is safe once the kth candidate beats that bound.
    std::int64_t ring_start = 0, ring_end = 0;
    for (int axis = 0; axis < 3; ++axis) {
        const std::int64_t below = cell_min_[axis] - q[axis];
        const std::int64_t above = q[axis] - cell_max_[axis];
        ring_start = std::max({ring_start, below, above});
        ring_end = std::max({ring_end, std::abs(cell_min_[axis] - q[axis]),
                             std::abs(cell_max_[axis] - q[axis])});
    }
    for (std::int64_t r = ring_start; r <= ring_end; ++r) {
        if (r > ring_start && candidates.size() >= static_cast<std::size_t>(want)) {
            consolidate();
            if (kth_dist() <= static_cast<double>(r - 1) * cell_size_) break;
        }
        for (std::int64_t dx = -r; dx <= r; ++dx) {
            const std::int64_t cx = q[0] + dx;
            if (cx < cell_min_[0] || cx > cell_max_[0]) continue;
            for (std::int64_t dy = -r; dy <= r; ++dy) {
                const std::int64_t cy = q[1] + dy;
                if (cy < cell_min_[1] || cy > cell_max_[1]) continue;
                const bool edge_xy = std::abs(dx) == r || std::abs(dy) == r;
                for (std::int64_t dz = -r; dz <= r; ++dz) {
                    if (!edge_xy && std::abs(dz) != r) continue;
                    const std::int64_t cz = q[2] + dz;
                    if (cz < cell_min_[2] || cz > cell_max_[2]) continue;
                    scan_cell(cx, cy, cz);
                }
            }
        }
    }

    std::sort(candidates.begin(), candidates.end(),
              [](const auto& a, const auto& b) {
                  return a.first != b.first ? a.first < b.first : a.second < b.second;
              });
    std::vector<Neighbor> out;
    out.reserve(want);
    for (int i = 0; i < want; ++i)
        out.push_back(Neighbor{candidates[i].second, std::sqrt(candidates[i].first)});
    return out;
}

EncoderNet EncoderNet::create(int latent_dim, int teacher_dim, Rng& rng) {
    EncoderNet enc;
    enc.latent_dim = latent_dim;
    enc.teacher_dim = teacher_dim;
    enc.net = Mlp::create({8 + teacher_dim, 128, 128, latent_dim}, Activation::None, rng);
    return enc;
}

std::vector<double> aggregate_descriptor(const std::vector<MemberSample>& members,
                                         double voxel_size, int teacher_dim) {
    if (members.empty()) throw Error(ErrorCode::InvalidArgument, "empty voxel");
    const double inv = 1.0 / static_cast<double>(members.size());
    Vec3 color = Vec3::Zero(), normal = Vec3::Zero();
    double depth_sum = 0, depth_sq = 0;
    std::vector<double> teacher(teacher_dim, 0.0);
    for (const auto& m : members) {
        color += m.color;
        normal += m.normal;
        depth_sum += m.depth;
        depth_sq += m.depth * m.depth;
        for (int k = 0; k < teacher_dim; ++k) teacher[k] += m.teacher[k];
    }
    color *= inv;
    normal *= inv;
    const double nlen = normal.norm();
    if (nlen > 1e-12) normal /= nlen;
    const double mean_depth = depth_sum * inv;
    const double variance = std::max(0.0, depth_sq * inv - mean_depth * mean_depth);
    double tnorm = 0;
    for (double v : teacher) tnorm += v * v;
    tnorm = std::sqrt(tnorm);
    if (tnorm > 1e-9) {
        for (double& v : teacher) v /= tnorm;
    } else {
        // Cancelling teacher features; fall back to the first member's.
        for (int k = 0; k < teacher_dim; ++k) teacher[k] = members.front().teacher[k];
    }

    std::vector<double> desc;
    desc.reserve(8 + teacher_dim);
    for (int k = 0; k < 3; ++k) desc.push_back(color[k]);
    for (int k = 0; k < 3; ++k) desc.push_back(normal[k]);
    desc.push_back(variance);
    desc.push_back(voxel_size);
    desc.insert(desc.end(), teacher.begin(), teacher.end());
    return desc;
}

FrameAnchors build_frame_anchors(const PosedFrame& frame, int budget, int frame_id) {
    if (budget < 1) throw Error(ErrorCode::InvalidArgument, "encode budget must be >= 1");
    if (!frame.has_teacher())
        throw Error(ErrorCode::InvalidArgument, "frame has no teacher features");
    const int dt = frame.teacher_dim;

    FrameAnchors anchors;
    anchors.frame_id = frame_id;

    // Back-project valid pixels once; keep raster order.
    struct Pixel {
        Vec3 pos;
        int u, v;
    };
    std::vector<Pixel> pixels;
    pixels.reserve(frame.pixel_count());
    std::vector<Vec3> pos_image(frame.pixel_count());
    std::vector<bool> valid(frame.pixel_count(), false);
    for (int v = 0; v < frame.height; ++v)
        for (int u = 0; u < frame.width; ++u) {
            const float z = frame.depth_at(u, v);
            if (z <= 0) continue;
            const std::size_t idx = static_cast<std::size_t>(v) * frame.width + u;
            pos_image[idx] = backproject_pixel(frame.intrinsics, frame.pose, u, v, z);
            valid[idx] = true;
            pixels.push_back({pos_image[idx], u, v});
        }
    if (pixels.empty()) {
        anchors.descriptors = Tensor(0, 8 + dt);
        anchors.teacher = Tensor(0, dt);
        return anchors;
    }

    auto pixel_normal = [&](int u, int v) -> Vec3 {
        if (u <= 0 || u + 1 >= frame.width || v <= 0 || v + 1 >= frame.height)
            return Vec3::Zero();
        const std::size_t w = frame.width;
        const std::size_t i = static_cast<std::size_t>(v) * w + u;
        if (!valid[i - 1] || !valid[i + 1] || !valid[i - w] || !valid[i + w])
            return Vec3::Zero();
        const Vec3 du = pos_image[i + 1] - pos_image[i - 1];
        const Vec3 dv = pos_image[i + w] - pos_image[i - w];
        Vec3 n = du.cross(dv);
        const double len = n.norm();
        if (len < 1e-12) return Vec3::Zero();
        n /= len;
        if (n.dot(frame.pose.translation - pos_image[i]) < 0) n = -n;
        return n;
    };

    // Smallest power-of-two voxel size (starting at 1 cm) within budget.
    double voxel = 0.01;
    auto distinct_cells = [&](double v) {
        std::unordered_map<std::int64_t, int> cells;
        for (const auto& p : pixels) {
            const auto q = [&](double x) {
                return static_cast<std::int64_t>(std::floor(x / v)) + (1 << 20);
            };
            cells.emplace((q(p.pos.x()) << 42) | (q(p.pos.y()) << 21) | q(p.pos.z()), 0);
            if (static_cast<int>(cells.size()) > budget) return budget + 1;
        }
        return static_cast<int>(cells.size());
    };
    while (distinct_cells(voxel) > budget) voxel *= 2.0;
    anchors.voxel_size = voxel;

    // Group members per voxel in first-touch (raster) order.
    std::unordered_map<std::int64_t, int> slot_of;
    std::vector<std::vector<MemberSample>> members;
    for (const auto& p : pixels) {
        const auto q = [&](double x) {
            return static_cast<std::int64_t>(std::floor(x / voxel)) + (1 << 20);
        };
        const std::int64_t key = (q(p.pos.x()) << 42) | (q(p.pos.y()) << 21) | q(p.pos.z());
        auto [it, inserted] = slot_of.emplace(key, static_cast<int>(members.size()));
        if (inserted) members.emplace_back();
        MemberSample m;
        m.position = p.pos;
        const float* c = frame.color_at(p.u, p.v);
        m.color = Vec3(c[0], c[1], c[2]);
        m.normal = pixel_normal(p.u, p.v);
        m.depth = frame.depth_at(p.u, p.v);
        const float* tf = frame.teacher_at(p.u, p.v);
        m.teacher.assign(tf, tf + dt);
        members[it->second].push_back(std::move(m));
    }

    const int count = static_cast<int>(members.size());
    anchors.descriptors = Tensor(count, 8 + dt);
    anchors.teacher = Tensor(count, dt);
    anchors.positions.resize(count);
    for (int i = 0; i < count; ++i) {
        const auto desc = aggregate_descriptor(members[i], voxel, dt);
        std::copy(desc.begin(), desc.end(), anchors.descriptors.row_ptr(i));
        std::copy(desc.begin() + 8, desc.end(), anchors.teacher.row_ptr(i));
        Vec3 mean = Vec3::Zero();
        for (const auto& m : members[i]) mean += m.position;
        anchors.positions[i] = mean / static_cast<double>(members[i].size());
    }
    return anchors;
}

LatentPointCloud encode_frame(const PosedFrame& frame, const EncoderNet& net, int budget,
                              int frame_id) {
    if (frame.has_teacher() && frame.teacher_dim != net.teacher_dim)
        throw ShapeError("frame teacher dim does not match encoder");
    LatentPointCloud cloud;
    cloud.latents = Tensor(0, net.latent_dim);
    cloud.teacher = Tensor(0, net.teacher_dim);
    if (frame.pixel_count() == 0) {
        cloud.rebuild_index();
        return cloud;
    }
    FrameAnchors anchors = build_frame_anchors(frame, budget, frame_id);
    const int count = static_cast<int>(anchors.positions.size());
    if (count == 0) {
        cloud.rebuild_index();
        return cloud;
    }
    cloud.positions = std::move(anchors.positions);
    cloud.latents = net.net.forward_plain(anchors.descriptors);
    cloud.teacher = std::move(anchors.teacher);
    cloud.frame_ids.assign(count, frame_id);
    cloud.local_scales.assign(count, anchors.voxel_size);
    cloud.rebuild_index();
    return cloud;
}

LatentPointCloud encode_frames(const std::vector<PosedFrame>& frames, const EncoderNet& net,
                               int budget) {
    LatentPointCloud cloud;
    cloud.latents = Tensor(0, net.latent_dim);
    cloud.teacher = Tensor(0, net.teacher_dim);
    for (std::size_t i = 0; i < frames.size(); ++i)
        cloud = fuse(cloud, encode_frame(frames[i], net, budget, static_cast<int>(i)));
    return cloud;
}

LatentPointCloud fuse(const LatentPointCloud& a, const LatentPointCloud& b) {
    if (a.empty()) {
        LatentPointCloud out = b;
        out.rebuild_index();
        return out;
    }
    if (b.empty()) {
        LatentPointCloud out = a;
        out.rebuild_index();
        return out;
    }
    if (a.latent_dim() != b.latent_dim() || a.teacher_dim() != b.teacher_dim())
        throw ShapeError("fuse: latent/teacher dims disagree");
    LatentPointCloud out;
    out.positions = a.positions;
    out.positions.insert(out.positions.end(), b.positions.begin(), b.positions.end());
    out.latents = Tensor(static_cast<int>(a.size() + b.size()), a.latent_dim());
    std::copy(a.latents.data.begin(), a.latents.data.end(), out.latents.data.begin());
    std::copy(b.latents.data.begin(), b.latents.data.end(),
              out.latents.data.begin() + a.latents.size());
    out.teacher = Tensor(static_cast<int>(a.size() + b.size()), a.teacher_dim());
    std::copy(a.teacher.data.begin(), a.teacher.data.end(), out.teacher.data.begin());
    std::copy(b.teacher.data.begin(), b.teacher.data.end(),
              out.teacher.data.begin() + a.teacher.size());
    out.frame_ids = a.frame_ids;
    out.frame_ids.insert(out.frame_ids.end(), b.frame_ids.begin(), b.frame_ids.end());
    out.local_scales = a.local_scales;
    out.local_scales.insert(out.local_scales.end(), b.local_scales.begin(),
                            b.local_scales.end());
    out.rebuild_index();
    return out;
}

void save_latent_cloud(const LatentPointCloud& cloud, const std::string& path) {
    PlyData ply;
    ply.vertex_count = cloud.size();
    ply.properties = {"x", "y", "z", "scale", "frame_id"};
    for (int c = 0; c < cloud.latent_dim(); ++c) ply.properties.push_back("h_" + std::to_string(c));
    for (int c = 0; c < cloud.teacher_dim(); ++c)
        ply.properties.push_back("tf_" + std::to_string(c));
    const std::size_t stride = ply.properties.size();
    ply.floats.resize(cloud.size() * stride);
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        float* row = &ply.floats[i * stride];
        row[0] = static_cast<float>(cloud.positions[i].x());
        row[1] = static_cast<float>(cloud.positions[i].y());
        row[2] = static_cast<float>(cloud.positions[i].z());
        row[3] = static_cast<float>(cloud.local_scales[i]);
        row[4] = static_cast<float>(cloud.frame_ids[i]);
        for (int c = 0; c < cloud.latent_dim(); ++c)
            row[5 + c] = static_cast<float>(cloud.latents.at(static_cast<int>(i), c));
        for (int c = 0; c < cloud.teacher_dim(); ++c)
            row[5 + cloud.latent_dim() + c] =
                static_cast<float>(cloud.teacher.at(static_cast<int>(i), c));
    }
    write_ply(path, ply);

    json meta;
    meta["version"] = 1;
    meta["latent_dim"] = cloud.latent_dim();
    meta["teacher_dim"] = cloud.teacher_dim();
    meta["count"] = cloud.size();
    std::ofstream side(path + ".json");
    if (!side) throw IoError("cannot write sidecar: " + path + ".json");
    side << meta.dump(2) << "\n";
}

LatentPointCloud load_latent_cloud(const std::string& path) {
    std::ifstream side(path + ".json");
    if (!side) throw IoError("missing sidecar: " + path + ".json");
    json meta = json::parse(side, nullptr, false);
    if (meta.is_discarded()) throw ParseError("sidecar JSON malformed: " + path + ".json");
    const int c = meta.at("latent_dim").get<int>();
    const int dt = meta.at("teacher_dim").get<int>();

    const PlyData ply = read_ply(path);
    const std::size_t stride = ply.properties.size();
    if (stride != static_cast<std::size_t>(5 + c + dt))
        throw ParseError("latent PLY property count mismatch");
    LatentPointCloud cloud;
    const int n = static_cast<int>(ply.vertex_count);
    cloud.latents = Tensor(n, c);
    cloud.teacher = Tensor(n, dt);
    for (int i = 0; i < n; ++i) {
        const float* row = &ply.floats[i * stride];
        cloud.positions.emplace_back(row[0], row[1], row[2]);
        cloud.local_scales.push_back(row[3]);
        cloud.frame_ids.push_back(static_cast<int>(row[4]));
        for (int k = 0; k < c; ++k) cloud.latents.at(i, k) = row[5 + k];
        for (int k = 0; k < dt; ++k) cloud.teacher.at(i, k) = row[5 + c + k];
    }
    cloud.rebuild_index();
    return cloud;
}

}  // namespace geff
