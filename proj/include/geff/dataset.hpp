#pragma once

#include <string>
#include <vector>

#include "geff/geometry.hpp"

namespace geff {

// On-disk frame dataset: per frame
//   frame_%06d.json        intrinsics + row-major 4x4 camera-to-world pose
//   frame_%06d_color.png   8-bit RGB
//   frame_%06d_depth.png   16-bit grayscale, millimeters, 0 = invalid
//   frame_%06d_feat.bin    optional: u32 Dt, u32 H, u32 W + float32 LE data
void save_frame(const std::string& dir, int index, const PosedFrame& frame);
PosedFrame load_frame(const std::string& dir, int index);
int count_frames(const std::string& dir);
void save_dataset(const std::string& dir, const std::vector<PosedFrame>& frames);
std::vector<PosedFrame> load_dataset(const std::string& dir);

}  // namespace geff
