#pragma once

#include <string>

#include "geff/fields.hpp"

namespace geff {

// Encoder + decoders trained jointly; the unit of checkpointing.
struct GeffModel {
    EncoderNet encoder;
    FieldDecoders decoders;

    static GeffModel create(std::uint64_t seed, int latent_dim = 64, int teacher_dim = 16);

    std::vector<Tensor*> params();
    std::vector<const Tensor*> params() const;
    std::size_t param_count() const;

    // Checkpoint: little-endian u32 header length, JSON header (version,
    // layer sizes, hyperparameters), then flat little-endian float64 values.
    void save(const std::string& path) const;
    static GeffModel load(const std::string& path);
};

}  // namespace geff
