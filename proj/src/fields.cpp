#include "geff/fields.hpp"

#include <cmath>

namespace geff {

int posenc_dim(int freqs) { return 3 + 3 * 2 * freqs; }

void posenc_into(const Vec3& v, int freqs, double* out) {
    out[0] = v.x();
    out[1] = v.y();
    out[2] = v.z();
    int idx = 3;
    double f = 1.0;
    for (int l = 0; l < freqs; ++l) {
        for (int k = 0; k < 3; ++k) out[idx++] = std::sin(f * v[k]);
        for (int k = 0; k < 3; ++k) out[idx++] = std::cos(f * v[k]);
        f *= 2.0;
    }
}

FieldDecoders FieldDecoders::create(int latent_dim, int teacher_dim, Rng& rng) {
    FieldDecoders dec;
    dec.latent_dim = latent_dim;
    dec.teacher_dim = teacher_dim;
    const int pe = posenc_dim(dec.posenc_freqs);
    dec.neighbor_net =
        Mlp::create({latent_dim + teacher_dim + pe + 1, 64, 64}, Activation::Relu, rng);
    dec.sdf_head = Mlp::create({64, 32, 1}, Activation::None, rng);
    dec.feature_head = Mlp::create({64, 32, teacher_dim}, Activation::None, rng);
    dec.color_head = Mlp::create({64 + pe, 32, 3}, Activation::Sigmoid, rng);
    dec.log_kappa = Tensor::scalar(std::log(10.0));
    return dec;
}

std::vector<Tensor*> FieldDecoders::params() {
    std::vector<Tensor*> out;
    for (Mlp* net : {&neighbor_net, &sdf_head, &feature_head, &color_head})
        for (Tensor* p : net->params()) out.push_back(p);
    out.push_back(&log_kappa);
    return out;
}

std::vector<const Tensor*> FieldDecoders::params() const {
    std::vector<const Tensor*> out;
    for (const Mlp* net : {&neighbor_net, &sdf_head, &feature_head, &color_head})
        for (const Tensor* p : net->params()) out.push_back(p);
    out.push_back(&log_kappa);
    return out;
}

namespace {

// Fills one query row given its candidate anchor set.
struct InputsBuilder {
    const LatentPointCloud& cloud;
    const FieldDecoders& dec;
    FieldBatchInputs in;
    std::shared_ptr<PoolPlan> plan;
    std::vector<double> pair_rows;
    int pe, dt;

    InputsBuilder(const LatentPointCloud& c, const FieldDecoders& d, int query_count)
        : cloud(c), dec(d), pe(posenc_dim(d.posenc_freqs)), dt(d.teacher_dim) {
        in.query_count = query_count;
        in.valid_mask = Tensor(query_count, 1);
        in.coverage = Tensor(query_count, 1);
        plan = std::make_shared<PoolPlan>();
        plan->out_rows = query_count;
        plan->row_ptr.assign(query_count + 1, 0);
    }

    void add_query(int i, const Vec3& x, const std::vector<int>& candidate_anchors) {
        plan->row_ptr[i] = static_cast<int>(plan->src_row.size());
        double weight_sum = 0;
        std::vector<std::pair<int, double>> kept;
        for (int anchor : candidate_anchors) {
            const double dist = (x - cloud.positions[anchor]).norm();
            if (dist >= dec.support_radius) continue;
            const double falloff = 1.0 - dist / dec.support_radius;
            const double w = falloff * falloff / (dist + 1e-6);
            kept.emplace_back(anchor, w);
            weight_sum += w;
        }
        // Smooth support weight: ~1 deep inside coverage, 0 with no neighbors.
        in.coverage.data[i] = weight_sum / (weight_sum + 1e-3);
        in.valid_mask.data[i] = kept.empty() ? 0.0 : 1.0;
        for (const auto& [anchor, w] : kept) {
            plan->src_row.push_back(static_cast<int>(in.gather_indices.size()));
            plan->weight.push_back(w / weight_sum);
            in.gather_indices.push_back(anchor);

            const Vec3 delta = x - cloud.positions[anchor];
            const std::size_t base = pair_rows.size();
            pair_rows.resize(base + dt + pe + 1);
            const double* trow = cloud.teacher.row_ptr(anchor);
            for (int c = 0; c < dt; ++c) pair_rows[base + c] = trow[c];
            posenc_into(delta, dec.posenc_freqs, &pair_rows[base + dt]);
            pair_rows[base + dt + pe] = delta.norm();
        }
    }

    FieldBatchInputs finish() {
        plan->row_ptr[in.query_count] = static_cast<int>(plan->src_row.size());
        in.pair_const = Tensor::from_rows(static_cast<int>(in.gather_indices.size()),
                                          dt + pe + 1, std::move(pair_rows));
        in.plan = std::move(plan);
        return std::move(in);
    }
};

}  // namespace

FieldBatchInputs build_field_inputs(const LatentPointCloud& cloud,
                                    const std::vector<Vec3>& queries,
                                    const FieldDecoders& dec) {
    InputsBuilder builder(cloud, dec, static_cast<int>(queries.size()));
    std::vector<int> candidates;
    for (int i = 0; i < static_cast<int>(queries.size()); ++i) {
        candidates.clear();
        if (!cloud.empty())
            for (const auto& nb : cloud.knn(queries[i], dec.k)) candidates.push_back(nb.index);
        builder.add_query(i, queries[i], candidates);
    }
    return builder.finish();
}

FieldBatchInputs build_field_inputs_stencil(const LatentPointCloud& cloud,
                                            const std::vector<Vec3>& centers,
                                            const std::vector<Vec3>& offsets,
                                            const FieldDecoders& dec) {
    const int per = static_cast<int>(offsets.size());
    InputsBuilder builder(cloud, dec, static_cast<int>(centers.size()) * per);
    std::vector<int> candidates;
    for (int c = 0; c < static_cast<int>(centers.size()); ++c) {
        candidates.clear();
        if (!cloud.empty())
            for (const auto& nb : cloud.knn(centers[c], dec.k)) candidates.push_back(nb.index);
        for (int o = 0; o < per; ++o)
            builder.add_query(c * per + o, centers[c] + offsets[o], candidates);
    }
    return builder.finish();
}

FieldBatch decode_batch(Tape& tape, const FieldBatchInputs& inputs, Value latents,
                        FieldDecoders& dec, const std::vector<Vec3>* view_dirs) {
    const int m = inputs.query_count;
    if (view_dirs && static_cast<int>(view_dirs->size()) != m)
        throw ShapeError("decode_batch: view direction count mismatch");

    const Value gathered = tape.gather_rows(latents, inputs.gather_indices);
    const Value pair_in = tape.concat_cols(gathered, tape.constant(inputs.pair_const));
    const Value codes = dec.neighbor_net.forward(tape, pair_in);
    const Value pooled = tape.pool_rows(codes, inputs.plan);

    const Value mask = tape.constant(inputs.valid_mask);
    // The SDF blends to the free-space default by the smooth coverage weight;
    // rows with no neighbor read exactly `truncation`.
    Tensor fill(m, 1);
    for (int i = 0; i < m; ++i)
        fill.data[i] = (1.0 - inputs.coverage.data[i]) * dec.truncation;

    FieldBatch out;
    out.pooled = pooled;
    out.sdf = tape.add(
        tape.mul(dec.sdf_head.forward(tape, pooled), tape.constant(inputs.coverage)),
        tape.constant(std::move(fill)));
    out.feature = tape.mul_colvec(
        tape.normalize_rows(dec.feature_head.forward(tape, pooled)), mask);
    if (view_dirs) {
        const int pe = posenc_dim(dec.posenc_freqs);
        Tensor dir_enc(m, pe);
        for (int i = 0; i < m; ++i)
            posenc_into((*view_dirs)[i], dec.posenc_freqs, dir_enc.row_ptr(i));
        const Value color_in = tape.concat_cols(pooled, tape.constant(std::move(dir_enc)));
        out.color = tape.mul_colvec(dec.color_head.forward(tape, color_in), mask);
    }
    return out;
}

FieldSamples decode_fields(const std::vector<Vec3>& queries, const LatentPointCloud& cloud,
                           FieldDecoders& dec, const std::vector<Vec3>* view_dirs) {
    const int total = static_cast<int>(queries.size());
    FieldSamples out;
    out.sdf.resize(total);
    out.features = Tensor(total, dec.teacher_dim);
    out.colors = Tensor(total, 3);
    out.valid.resize(total);

    constexpr int kChunk = 8192;
    for (int begin = 0; begin < total; begin += kChunk) {
        const int end = std::min(total, begin + kChunk);
        std::vector<Vec3> chunk(queries.begin() + begin, queries.begin() + end);
        std::vector<Vec3> dirs;
        if (view_dirs) dirs.assign(view_dirs->begin() + begin, view_dirs->begin() + end);

        Tape tape;
        const FieldBatchInputs inputs = build_field_inputs(cloud, chunk, dec);
        const Value latents = tape.constant(cloud.latents);
        const FieldBatch batch =
            decode_batch(tape, inputs, latents, dec, view_dirs ? &dirs : nullptr);

        const Tensor& sdf = tape.val(batch.sdf);
        const Tensor& feat = tape.val(batch.feature);
        for (int i = 0; i < end - begin; ++i) {
            out.sdf[begin + i] = sdf.data[i];
            out.valid[begin + i] = inputs.valid_mask.data[i] > 0.5;
            std::copy(feat.row_ptr(i), feat.row_ptr(i) + dec.teacher_dim,
                      out.features.row_ptr(begin + i));
        }
        if (view_dirs) {
            const Tensor& col = tape.val(batch.color);
            for (int i = 0; i < end - begin; ++i)
                std::copy(col.row_ptr(i), col.row_ptr(i) + 3, out.colors.row_ptr(begin + i));
        }
    }
    return out;
}

double decode_sdf(const Vec3& x, const LatentPointCloud& cloud, FieldDecoders& dec) {
    return decode_fields({x}, cloud, dec).sdf[0];
}

std::vector<double> decode_feature(const Vec3& x, const LatentPointCloud& cloud,
                                   FieldDecoders& dec, bool* valid) {
    FieldSamples s = decode_fields({x}, cloud, dec);
    if (valid) *valid = s.valid[0];
    return std::vector<double>(s.features.row_ptr(0), s.features.row_ptr(0) + dec.teacher_dim);
}

double opacity(double sdf_here, double sdf_next, double kappa) {
    if (kappa <= 0) throw Error(ErrorCode::InvalidArgument, "opacity: kappa must be > 0");
    // log sigmoid(v) = -softplus(-v), stable for large |v|.
    const auto log_sigmoid = [](double v) {
        const double x = -v;
        return -(std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))));
    };
    const double ratio = std::exp(log_sigmoid(kappa * sdf_next) - log_sigmoid(kappa * sdf_here));
    return std::max(0.0, 1.0 - ratio);
}

}  // namespace geff
