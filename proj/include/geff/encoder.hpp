#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "geff/geometry.hpp"
#include "geff/nn.hpp"

namespace geff {

struct Neighbor {
    int index = -1;
    double distance = 0;
};

// World-anchored sparse latent point cloud, stored column-batched: row i of
// `latents` / `teacher` belongs to positions[i]. Fusion is order-preserving
// concatenation, which keeps per-frame encoding exactly incremental.
class LatentPointCloud {
public:
    std::vector<Vec3> positions;
    Tensor latents;            // N x C
    Tensor teacher;            // N x Dt, unit rows
    std::vector<int> frame_ids;
    std::vector<double> local_scales;

    std::size_t size() const { return positions.size(); }
    bool empty() const { return positions.empty(); }
    int latent_dim() const { return latents.cols; }
    int teacher_dim() const { return teacher.cols; }

    // Exact k nearest points by Euclidean distance, ties broken by insertion
    // order. Returns min(k, size()) entries. Throws EmptyCloudError.
    std::vector<Neighbor> knn(const Vec3& x, int k) const;

    // Uniform hash grid over positions; cell = 2x median local scale.
    void rebuild_index();
    double index_cell_size() const { return cell_size_; }

    // Serialized size in 8-byte numbers (positions + latent + teacher +
    // scale + frame id per point).
    std::size_t number_count() const {
        return size() * (3 + latents.cols + teacher.cols + 2);
    }

private:
    struct CellKey {
        std::int64_t packed;
        bool operator==(const CellKey& o) const { return packed == o.packed; }
    };
    struct CellKeyHash {
        std::size_t operator()(const CellKey& k) const {
            return std::hash<std::int64_t>()(k.packed);
        }
    };
    CellKey cell_of(const Vec3& p) const;

    double cell_size_ = 0.1;
    std::unordered_map<CellKey, std::vector<int>, CellKeyHash> grid_;
    std::int64_t cell_min_[3] = {0, 0, 0};  // occupied-cell bounding box
    std::int64_t cell_max_[3] = {0, 0, 0};
};

// Trainable per-anchor encoder f̂_enc. The frozen teacher feature is carried
// alongside the latent rather than re-concatenated downstream.
struct EncoderNet {
    int latent_dim = 64;
    int teacher_dim = 16;
    Mlp net;  // descriptor (8 + Dt) -> 128 -> 128 -> C

    static EncoderNet create(int latent_dim, int teacher_dim, Rng& rng);
    int descriptor_dim() const { return 8 + teacher_dim; }
};

// Anchors and descriptors for one frame before the encoder net runs:
// back-projected valid pixels, voxel-downsampled to at most `budget` anchors
// with the smallest voxel size from {1, 2, 4, ...} cm.
struct FrameAnchors {
    std::vector<Vec3> positions;
    Tensor descriptors;  // A x (8 + Dt)
    Tensor teacher;      // A x Dt, unit rows
    double voxel_size = 0.01;
    int frame_id = 0;
};

FrameAnchors build_frame_anchors(const PosedFrame& frame, int budget, int frame_id);

// Aggregates one voxel's member samples into a descriptor row:
// [mean color, mean normal (renormalized), depth variance, voxel size,
// mean teacher feature (renormalized)]. Order-independent statistics.
struct MemberSample {
    Vec3 position;
    Vec3 color;
    Vec3 normal;
    double depth;
    std::vector<double> teacher;
};
std::vector<double> aggregate_descriptor(const std::vector<MemberSample>& members,
                                         double voxel_size, int teacher_dim);

// Full feed-forward encode of one frame. Deterministic given frame and net.
LatentPointCloud encode_frame(const PosedFrame& frame, const EncoderNet& net, int budget = 512,
                              int frame_id = 0);

// Sequential encode of several frames; identical to encoding each frame and
// fusing in order.
LatentPointCloud encode_frames(const std::vector<PosedFrame>& frames, const EncoderNet& net,
                               int budget = 512);

// Order-preserving concatenation (a then b).
LatentPointCloud fuse(const LatentPointCloud& a, const LatentPointCloud& b);

// Latent cloud <-> binary PLY (+ JSON sidecar at path + ".json").
void save_latent_cloud(const LatentPointCloud& cloud, const std::string& path);
LatentPointCloud load_latent_cloud(const std::string& path);

}  // namespace geff
