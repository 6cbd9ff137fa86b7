#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace geff {

// Minimal binary-little-endian PLY with a single float-typed vertex element.
// Covers the latent-cloud, decoded-cloud and score-map exports plus their
// round-trip tests; not a general PLY implementation.
struct PlyData {
    std::vector<std::string> properties;  // per-vertex float property names
    std::vector<std::string> uchar_properties;  // trailing uchar properties (e.g. RGB)
    std::size_t vertex_count = 0;
    std::vector<float> floats;          // vertex_count x properties.size()
    std::vector<std::uint8_t> uchars;   // vertex_count x uchar_properties.size()
};

void write_ply(const std::string& path, const PlyData& data);
PlyData read_ply(const std::string& path);

}  // namespace geff
