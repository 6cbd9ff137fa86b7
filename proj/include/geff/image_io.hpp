#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace geff {

// PNG support for the formats this tool reads and writes: 8-bit RGB/RGBA/
// grayscale and 16-bit grayscale, non-interlaced. Compression via zlib.
struct PngImage {
    int width = 0, height = 0;
    int channels = 0;      // 1 or 3 after loading (alpha dropped)
    int bit_depth = 8;     // 8 or 16
    std::vector<std::uint16_t> pixels;  // row-major, channel-interleaved
};

void write_png_rgb8(const std::string& path, int width, int height,
                    const std::vector<std::uint8_t>& rgb);
void write_png_gray16(const std::string& path, int width, int height,
                      const std::vector<std::uint16_t>& gray);
PngImage read_png(const std::string& path);

// Binary PGM/PPM (P5/P6).
void write_pgm8(const std::string& path, int width, int height,
                const std::vector<std::uint8_t>& gray);
void write_pgm16(const std::string& path, int width, int height,
                 const std::vector<std::uint16_t>& gray);
void write_ppm(const std::string& path, int width, int height,
               const std::vector<std::uint8_t>& rgb);

struct PgmImage {
    int width = 0, height = 0;
    int maxval = 255;
    std::vector<std::uint16_t> pixels;
};
PgmImage read_pgm(const std::string& path);

}  // namespace geff
