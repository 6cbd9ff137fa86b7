#include "geff/dataset.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "geff/image_io.hpp"
#include "json.hpp"

namespace geff {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string frame_stem(const std::string& dir, int index) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "frame_%06d", index);
    return (fs::path(dir) / buf).string();
}

}  // namespace

void save_frame(const std::string& dir, int index, const PosedFrame& frame) {
    fs::create_directories(dir);
    const std::string stem = frame_stem(dir, index);

    json meta;
    meta["intrinsics"] = {{"fx", frame.intrinsics.fx}, {"fy", frame.intrinsics.fy},
                          {"cx", frame.intrinsics.cx}, {"cy", frame.intrinsics.cy},
                          {"width", frame.intrinsics.width},
                          {"height", frame.intrinsics.height}};
    std::vector<double> mat(16, 0.0);
    for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 3; ++c) mat[r * 4 + c] = frame.pose.rotation(r, c);
        mat[r * 4 + 3] = frame.pose.translation[r];
    }
    mat[15] = 1.0;
    meta["camera_to_world"] = mat;
    std::ofstream mj(stem + ".json");
    if (!mj) throw IoError("cannot write " + stem + ".json");
    mj << meta.dump(2) << "\n";

    std::vector<std::uint8_t> rgb(frame.pixel_count() * 3);
    for (std::size_t i = 0; i < rgb.size(); ++i)
        rgb[i] = static_cast<std::uint8_t>(
            std::lround(std::clamp(frame.color[i], 0.f, 1.f) * 255.f));
    write_png_rgb8(stem + "_color.png", frame.width, frame.height, rgb);

    std::vector<std::uint16_t> depth_mm(frame.pixel_count());
    for (std::size_t i = 0; i < depth_mm.size(); ++i) {
        const double mm = std::clamp(static_cast<double>(frame.depth[i]) * 1000.0, 0.0, 65535.0);
        depth_mm[i] = static_cast<std::uint16_t>(std::lround(mm));
    }
    write_png_gray16(stem + "_depth.png", frame.width, frame.height, depth_mm);

    if (frame.has_teacher()) {
        std::ofstream fb(stem + "_feat.bin", std::ios::binary);
        if (!fb) throw IoError("cannot write " + stem + "_feat.bin");
        const std::uint32_t header[3] = {static_cast<std::uint32_t>(frame.teacher_dim),
                                         static_cast<std::uint32_t>(frame.height),
                                         static_cast<std::uint32_t>(frame.width)};
        fb.write(reinterpret_cast<const char*>(header), sizeof(header));
        fb.write(reinterpret_cast<const char*>(frame.teacher_features.data()),
                 static_cast<std::streamsize>(frame.teacher_features.size() * sizeof(float)));
    }
}

PosedFrame load_frame(const std::string& dir, int index) {
    const std::string stem = frame_stem(dir, index);
    std::ifstream mj(stem + ".json");
    if (!mj) throw IoError("missing frame metadata: " + stem + ".json");
    json meta = json::parse(mj, nullptr, false);
    if (meta.is_discarded()) throw ParseError("frame metadata malformed: " + stem + ".json");

    PosedFrame frame;
    const auto& ij = meta.at("intrinsics");
    frame.intrinsics.fx = ij.at("fx").get<double>();
    frame.intrinsics.fy = ij.at("fy").get<double>();
    frame.intrinsics.cx = ij.at("cx").get<double>();
    frame.intrinsics.cy = ij.at("cy").get<double>();
    frame.intrinsics.width = ij.at("width").get<int>();
    frame.intrinsics.height = ij.at("height").get<int>();
    const auto mat = meta.at("camera_to_world").get<std::vector<double>>();
    if (mat.size() != 16) throw ParseError("camera_to_world must have 16 entries");
    for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 3; ++c) frame.pose.rotation(r, c) = mat[r * 4 + c];
        frame.pose.translation[r] = mat[r * 4 + 3];
    }
    if (frame.pose.orthonormality_error() > 1e-6)
        throw ParseError("pose rotation is not orthonormal: " + stem + ".json");

    const PngImage color = read_png(stem + "_color.png");
    if (color.channels != 3 || color.bit_depth != 8)
        throw ParseError("color image must be 8-bit RGB: " + stem);
    frame.width = color.width;
    frame.height = color.height;
    frame.color.resize(frame.pixel_count() * 3);
    for (std::size_t i = 0; i < frame.color.size(); ++i)
        frame.color[i] = static_cast<float>(color.pixels[i]) / 255.f;

    const PngImage depth = read_png(stem + "_depth.png");
    if (depth.channels != 1 || depth.bit_depth != 16)
        throw ParseError("depth image must be 16-bit grayscale: " + stem);
    if (depth.width != frame.width || depth.height != frame.height)
        throw ParseError("depth/color resolution mismatch: " + stem);
    frame.depth.resize(frame.pixel_count());
    for (std::size_t i = 0; i < frame.depth.size(); ++i)
        frame.depth[i] = static_cast<float>(depth.pixels[i]) / 1000.f;

    std::ifstream fb(stem + "_feat.bin", std::ios::binary);
    if (fb) {
        std::uint32_t header[3];
        fb.read(reinterpret_cast<char*>(header), sizeof(header));
        if (!fb) throw ParseError("feature file header truncated: " + stem);
        if (static_cast<int>(header[1]) != frame.height ||
            static_cast<int>(header[2]) != frame.width)
            throw ParseError("feature file resolution mismatch: " + stem);
        frame.teacher_dim = static_cast<int>(header[0]);
        frame.teacher_features.resize(frame.pixel_count() * frame.teacher_dim);
        fb.read(reinterpret_cast<char*>(frame.teacher_features.data()),
                static_cast<std::streamsize>(frame.teacher_features.size() * sizeof(float)));
        if (!fb) throw ParseError("feature file payload truncated: " + stem);
    }
    return frame;
}

int count_frames(const std::string& dir) {
    int count = 0;
    while (fs::exists(frame_stem(dir, count) + ".json")) ++count;
    return count;
}

void save_dataset(const std::string& dir, const std::vector<PosedFrame>& frames) {
    for (std::size_t i = 0; i < frames.size(); ++i)
        save_frame(dir, static_cast<int>(i), frames[i]);
}

std::vector<PosedFrame> load_dataset(const std::string& dir) {
    const int n = count_frames(dir);
    if (n == 0) throw IoError("no frames found in " + dir);
    std::vector<PosedFrame> frames;
    frames.reserve(n);
    for (int i = 0; i < n; ++i) frames.push_back(load_frame(dir, i));
    return frames;
}

}  // namespace geff
