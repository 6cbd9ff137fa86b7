#pragma once

#include <memory>
#include <vector>

#include "geff/encoder.hpp"

namespace geff {

// Sinusoidal positional encoding: [v, sin(2^l v), cos(2^l v)]_{l<freqs}.
int posenc_dim(int freqs);
void posenc_into(const Vec3& v, int freqs, double* out);

// Decoders over the latent cloud. Conditioning is k-NN based: each query
// point gathers k latent neighbors within the support radius, runs the
// per-neighbor net on [h, teacher, posenc(x - p), |x - p|] and pools with
// inverse-distance weights; heads read the pooled code. The semantic head
// takes no view direction.
struct FieldDecoders {
    Mlp neighbor_net;  // (C + Dt + posenc + 1) -> 64 -> 64, ReLU
    Mlp sdf_head;      // 64 -> 32 -> 1
    Mlp feature_head;  // 64 -> 32 -> Dt, L2-normalized rows
    Mlp color_head;    // (64 + posenc) -> 32 -> 3, sigmoid
    Tensor log_kappa = Tensor::scalar(0.0);  // opacity sharpness, stored as log
    int k = 8;
    int posenc_freqs = 4;
    double support_radius = 1.0;  // meters
    double truncation = 0.10;     // meters; free-space SDF default
    int latent_dim = 64;
    int teacher_dim = 16;

    static FieldDecoders create(int latent_dim, int teacher_dim, Rng& rng);
    std::vector<Tensor*> params();
    std::vector<const Tensor*> params() const;
    double kappa() const { return std::exp(log_kappa.data[0]); }
    int pooled_dim() const { return neighbor_net.output_size(); }
};

// Constant (non-differentiable) conditioning data for a query batch.
// Neighbor weights are inverse-distance times a (1 - d/R)^2 falloff, so the
// pooled code varies continuously as neighbors enter or leave the support —
// the finite-difference Eikonal stencil needs a continuous field.
struct FieldBatchInputs {
    int query_count = 0;
    std::vector<int> gather_indices;        // pair -> anchor row
    Tensor pair_const;                      // P x (Dt + posenc + 1)
    std::shared_ptr<const PoolPlan> plan;   // normalized neighbor weights
    Tensor valid_mask;                      // M x 1, 1 = has neighbor within radius
    Tensor coverage;                        // M x 1 in [0,1), smooth support weight
};

FieldBatchInputs build_field_inputs(const LatentPointCloud& cloud,
                                    const std::vector<Vec3>& queries,
                                    const FieldDecoders& dec);

// Stencil variant: one kNN lookup per center; every offset row reuses the
// center's neighbor set (weights still recomputed per row). Keeps finite
// difference probes on a continuous function of position. Row layout:
// center c, offset o -> row c * offsets.size() + o.
FieldBatchInputs build_field_inputs_stencil(const LatentPointCloud& cloud,
                                            const std::vector<Vec3>& centers,
                                            const std::vector<Vec3>& offsets,
                                            const FieldDecoders& dec);

// Differentiable decode. `latents` is an (A x C) tape value (encoder output
// during training, a constant during inference). Invalid rows read the free
// space defaults: sdf = truncation, feature = 0, color = 0.
struct FieldBatch {
    Value sdf;      // M x 1
    Value feature;  // M x Dt
    Value color;    // M x 3 (only when view directions were given)
    Value pooled;   // M x pooled_dim
};

FieldBatch decode_batch(Tape& tape, const FieldBatchInputs& inputs, Value latents,
                        FieldDecoders& dec, const std::vector<Vec3>* view_dirs = nullptr);

// Plain batched decode for query paths (chunked scratch tapes inside).
struct FieldSamples {
    std::vector<double> sdf;
    Tensor features;  // M x Dt, zero rows when invalid
    Tensor colors;    // M x 3, zero rows when invalid (all-zero if no dirs)
    std::vector<bool> valid;
};

FieldSamples decode_fields(const std::vector<Vec3>& queries, const LatentPointCloud& cloud,
                           FieldDecoders& dec, const std::vector<Vec3>* view_dirs = nullptr);

// Single-point conveniences.
double decode_sdf(const Vec3& x, const LatentPointCloud& cloud, FieldDecoders& dec);
std::vector<double> decode_feature(const Vec3& x, const LatentPointCloud& cloud,
                                   FieldDecoders& dec, bool* valid = nullptr);

// Discrete opacity from consecutive SDF samples:
// alpha = max((sig(kappa s_here) - sig(kappa s_next)) / sig(kappa s_here), 0).
// Numerically stable for large |kappa * s|.
double opacity(double sdf_here, double sdf_next, double kappa);

}  // namespace geff
