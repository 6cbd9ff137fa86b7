#include "geff/image_io.hpp"

#include <zlib.h>

#include <cstring>
#include <fstream>

#include "geff/error.hpp"

namespace geff {

namespace {

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v >> 24));
    out.push_back(static_cast<std::uint8_t>(v >> 16));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v));
}

void write_chunk(std::ofstream& out, const char type[4], const std::vector<std::uint8_t>& data) {
    std::vector<std::uint8_t> buf;
    put_u32(buf, static_cast<std::uint32_t>(data.size()));
    buf.insert(buf.end(), type, type + 4);
    buf.insert(buf.end(), data.begin(), data.end());
    const uLong crc =
        crc32(crc32(0L, reinterpret_cast<const Bytef*>(type), 4),
              data.empty() ? nullptr : data.data(), static_cast<uInt>(data.size()));
    put_u32(buf, static_cast<std::uint32_t>(crc));
    out.write(reinterpret_cast<const char*>(buf.data()),
              static_cast<std::streamsize>(buf.size()));
}

void write_png(const std::string& path, int width, int height, int channels, int bit_depth,
               const std::vector<std::uint8_t>& raw_rows) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path);
    static const std::uint8_t magic[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
    out.write(reinterpret_cast<const char*>(magic), 8);

    std::vector<std::uint8_t> ihdr;
    put_u32(ihdr, static_cast<std::uint32_t>(width));
    put_u32(ihdr, static_cast<std::uint32_t>(height));
    ihdr.push_back(static_cast<std::uint8_t>(bit_depth));
    ihdr.push_back(channels == 3 ? 2 : 0);  // color type: RGB or grayscale
    ihdr.push_back(0);                      // compression
    ihdr.push_back(0);                      // filter
    ihdr.push_back(0);                      // no interlace
    write_chunk(out, "IHDR", ihdr);

    // Filter byte 0 (None) per scanline.
    const std::size_t stride = static_cast<std::size_t>(width) * channels * (bit_depth / 8);
    std::vector<std::uint8_t> filtered;
    filtered.reserve(raw_rows.size() + height);
    for (int y = 0; y < height; ++y) {
        filtered.push_back(0);
        filtered.insert(filtered.end(), raw_rows.begin() + y * stride,
                        raw_rows.begin() + (y + 1) * stride);
    }

    uLongf bound = compressBound(static_cast<uLong>(filtered.size()));
    std::vector<std::uint8_t> compressed(bound);
    if (compress2(compressed.data(), &bound, filtered.data(),
                  static_cast<uLong>(filtered.size()), 6) != Z_OK)
        throw IoError("zlib compression failed");
    compressed.resize(bound);
    write_chunk(out, "IDAT", compressed);
    write_chunk(out, "IEND", {});
    if (!out) throw IoError("write failed: " + path);
}

std::uint32_t get_u32(const std::uint8_t* p) {
    return (static_cast<std::uint32_t>(p[0]) << 24) | (static_cast<std::uint32_t>(p[1]) << 16) |
           (static_cast<std::uint32_t>(p[2]) << 8) | p[3];
}

}  // namespace

void write_png_rgb8(const std::string& path, int width, int height,
                    const std::vector<std::uint8_t>& rgb) {
    if (rgb.size() != static_cast<std::size_t>(width) * height * 3)
        throw ShapeError("write_png_rgb8: buffer size mismatch");
    write_png(path, width, height, 3, 8, rgb);
}

void write_png_gray16(const std::string& path, int width, int height,
                      const std::vector<std::uint16_t>& gray) {
    if (gray.size() != static_cast<std::size_t>(width) * height)
        throw ShapeError("write_png_gray16: buffer size mismatch");
    std::vector<std::uint8_t> bytes(gray.size() * 2);
    for (std::size_t i = 0; i < gray.size(); ++i) {
        bytes[2 * i] = static_cast<std::uint8_t>(gray[i] >> 8);  // network order
        bytes[2 * i + 1] = static_cast<std::uint8_t>(gray[i] & 0xff);
    }
    write_png(path, width, height, 1, 16, bytes);
}

PngImage read_png(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open: " + path);
    std::vector<std::uint8_t> file((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
    static const std::uint8_t magic[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
    if (file.size() < 8 || std::memcmp(file.data(), magic, 8) != 0)
        throw ParseError("not a PNG file: " + path);

    PngImage img;
    int color_type = -1;
    std::vector<std::uint8_t> idat;
    std::size_t pos = 8;
    while (pos + 8 <= file.size()) {
        const std::uint32_t len = get_u32(&file[pos]);
        const std::string type(reinterpret_cast<const char*>(&file[pos + 4]), 4);
        if (pos + 12 + len > file.size()) throw ParseError("PNG chunk truncated");
        const std::uint8_t* data = &file[pos + 8];
        if (type == "IHDR") {
            img.width = static_cast<int>(get_u32(data));
            img.height = static_cast<int>(get_u32(data + 4));
            img.bit_depth = data[8];
            color_type = data[9];
            if (data[12] != 0) throw ParseError("interlaced PNG not supported");
        } else if (type == "IDAT") {
            idat.insert(idat.end(), data, data + len);
        } else if (type == "IEND") {
            break;
        }
        pos += 12 + len;
    }
    if (img.width <= 0 || img.height <= 0) throw ParseError("PNG missing IHDR");

    int src_channels;
    switch (color_type) {
        case 0: src_channels = 1; break;
        case 2: src_channels = 3; break;
        case 4: src_channels = 2; break;
        case 6: src_channels = 4; break;
        default: throw ParseError("unsupported PNG color type");
    }
    if (img.bit_depth != 8 && img.bit_depth != 16)
        throw ParseError("unsupported PNG bit depth");

    const int bytes_per_sample = img.bit_depth / 8;
    const std::size_t stride =
        static_cast<std::size_t>(img.width) * src_channels * bytes_per_sample;
    std::vector<std::uint8_t> raw((stride + 1) * img.height);
    uLongf raw_len = static_cast<uLongf>(raw.size());
    if (uncompress(raw.data(), &raw_len, idat.data(), static_cast<uLong>(idat.size())) != Z_OK ||
        raw_len != raw.size())
        throw ParseError("PNG inflate failed (size mismatch?)");

    // Undo per-scanline filters.
    const int bpp = src_channels * bytes_per_sample;
    std::vector<std::uint8_t> prev(stride, 0);
    std::vector<std::uint8_t> cur(stride);
    const int out_channels = src_channels >= 3 ? 3 : 1;
    img.channels = out_channels;
    img.pixels.assign(static_cast<std::size_t>(img.width) * img.height * out_channels, 0);

    for (int y = 0; y < img.height; ++y) {
        const std::uint8_t filter = raw[y * (stride + 1)];
        const std::uint8_t* src = &raw[y * (stride + 1) + 1];
        for (std::size_t i = 0; i < stride; ++i) {
            const int a = i >= static_cast<std::size_t>(bpp) ? cur[i - bpp] : 0;
            const int b = prev[i];
            const int c = i >= static_cast<std::size_t>(bpp) ? prev[i - bpp] : 0;
            int value = src[i];
            switch (filter) {
                case 0: break;
                case 1: value += a; break;
                case 2: value += b; break;
                case 3: value += (a + b) / 2; break;
                case 4: {
                    const int p = a + b - c;
                    const int pa = std::abs(p - a), pb = std::abs(p - b), pc = std::abs(p - c);
                    value += (pa <= pb && pa <= pc) ? a : (pb <= pc ? b : c);
                    break;
                }
                default: throw ParseError("unknown PNG filter");
            }
            cur[i] = static_cast<std::uint8_t>(value & 0xff);
        }
        for (int x = 0; x < img.width; ++x)
            for (int ch = 0; ch < out_channels; ++ch) {
                const std::size_t s = (static_cast<std::size_t>(x) * src_channels + ch) *
                                      bytes_per_sample;
                std::uint16_t v = cur[s];
                if (bytes_per_sample == 2) v = static_cast<std::uint16_t>((v << 8) | cur[s + 1]);
                img.pixels[(static_cast<std::size_t>(y) * img.width + x) * out_channels + ch] = v;
            }
        std::swap(prev, cur);
    }
    return img;
}

void write_pgm8(const std::string& path, int width, int height,
                const std::vector<std::uint8_t>& gray) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << "P5\n" << width << " " << height << "\n255\n";
    out.write(reinterpret_cast<const char*>(gray.data()),
              static_cast<std::streamsize>(gray.size()));
}

void write_pgm16(const std::string& path, int width, int height,
                 const std::vector<std::uint16_t>& gray) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << "P5\n" << width << " " << height << "\n65535\n";
    for (std::uint16_t v : gray) {
        const std::uint8_t hi = static_cast<std::uint8_t>(v >> 8);
        const std::uint8_t lo = static_cast<std::uint8_t>(v & 0xff);
        out.put(static_cast<char>(hi));
        out.put(static_cast<char>(lo));
    }
}

void write_ppm(const std::string& path, int width, int height,
               const std::vector<std::uint8_t>& rgb) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << "P6\n" << width << " " << height << "\n255\n";
    out.write(reinterpret_cast<const char*>(rgb.data()),
              static_cast<std::streamsize>(rgb.size()));
}

PgmImage read_pgm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open: " + path);
    std::string tag;
    in >> tag;
    if (tag != "P5") throw ParseError("not a binary PGM: " + path);
    PgmImage img;
    in >> img.width >> img.height >> img.maxval;
    in.get();  // single whitespace after maxval
    const std::size_t count = static_cast<std::size_t>(img.width) * img.height;
    img.pixels.resize(count);
    if (img.maxval > 255) {
        for (std::size_t i = 0; i < count; ++i) {
            const int hi = in.get(), lo = in.get();
            img.pixels[i] = static_cast<std::uint16_t>((hi << 8) | lo);
        }
    } else {
        for (std::size_t i = 0; i < count; ++i)
            img.pixels[i] = static_cast<std::uint16_t>(in.get());
    }
    if (!in) throw ParseError("PGM payload truncated: " + path);
    return img;
}

}  // namespace geff
