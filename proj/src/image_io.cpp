// SPDX-License-Identifier: Apache-2.0

#include "image_io.hpp"

#include <zlib.h>

#include <algorithm>
#include <cstring>
#include <fstream>

#include "error.hpp"

namespace score {

namespace {

std::vector<uint8_t> read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCode::io_error, "cannot open: " + path.string());
    std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                               std::istreambuf_iterator<char>());
    return bytes;
}

void write_file(const std::filesystem::path& path, const std::vector<uint8_t>& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCode::io_error, "cannot open for writing: " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) fail(ErrorCode::io_error, "write failed: " + path.string());
}

void put_u32le(std::vector<uint8_t>& v, uint32_t x) {
    v.push_back(static_cast<uint8_t>(x));
    v.push_back(static_cast<uint8_t>(x >> 8));
    v.push_back(static_cast<uint8_t>(x >> 16));
    v.push_back(static_cast<uint8_t>(x >> 24));
}

uint32_t get_u32le(const uint8_t* p) {
    return static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
           (static_cast<uint32_t>(p[2]) << 16) | (static_cast<uint32_t>(p[3]) << 24);
}

void put_u32be(std::vector<uint8_t>& v, uint32_t x) {
    v.push_back(static_cast<uint8_t>(x >> 24));
    v.push_back(static_cast<uint8_t>(x >> 16));
    v.push_back(static_cast<uint8_t>(x >> 8));
    v.push_back(static_cast<uint8_t>(x));
}

uint32_t get_u32be(const uint8_t* p) {
    return (static_cast<uint32_t>(p[0]) << 24) | (static_cast<uint32_t>(p[1]) << 16) |
           (static_cast<uint32_t>(p[2]) << 8) | static_cast<uint32_t>(p[3]);
}

constexpr uint8_t kPngSig[8] = {0x89, 'P', 'N', 'G', 0x0D, 0x0A, 0x1A, 0x0A};

void append_chunk(std::vector<uint8_t>& out, const char type[4],
                  const std::vector<uint8_t>& data) {
    put_u32be(out, static_cast<uint32_t>(data.size()));
    size_t type_at = out.size();
    out.insert(out.end(), type, type + 4);
    out.insert(out.end(), data.begin(), data.end());
    uLong crc = crc32(0L, Z_NULL, 0);
    crc = crc32(crc, out.data() + type_at, static_cast<uInt>(4 + data.size()));
    put_u32be(out, static_cast<uint32_t>(crc));
}

std::vector<uint8_t> to_bytes(const ImageGrid& g) {
    std::vector<uint8_t> bytes;
    bytes.reserve(g.data.size());
    for (double v : g.data) bytes.push_back(model_to_byte(v));
    return bytes;
}

}  // namespace

void save_scr1(const ImageGrid& g, const std::filesystem::path& path) {
    validate_dims(g.height, g.width, g.channels);
    require_finite(g, "save_scr1");
    std::vector<uint8_t> out;
    out.reserve(16 + g.data.size() * 4);
    out.insert(out.end(), {'S', 'C', 'R', '1'});
    put_u32le(out, static_cast<uint32_t>(g.height));
    put_u32le(out, static_cast<uint32_t>(g.width));
    put_u32le(out, static_cast<uint32_t>(g.channels));
    for (double v : g.data) {
        float f = static_cast<float>(v);
        uint32_t bits;
        std::memcpy(&bits, &f, 4);
        put_u32le(out, bits);
    }
    write_file(path, out);
}

ImageGrid load_scr1(const std::filesystem::path& path) {
    std::vector<uint8_t> bytes = read_file(path);
    if (bytes.size() < 16 || std::memcmp(bytes.data(), "SCR1", 4) != 0) {
        fail(ErrorCode::io_error, "not an SCR1 file: " + path.string());
    }
    uint32_t h = get_u32le(bytes.data() + 4);
    uint32_t w = get_u32le(bytes.data() + 8);
    uint32_t c = get_u32le(bytes.data() + 12);
    if (h > (1u << 20) || w > (1u << 20) || (c != 1 && c != 3)) {
        fail(ErrorCode::io_error, "SCR1 header out of range: " + path.string());
    }
    size_t count = static_cast<size_t>(h) * w * c;
    if (bytes.size() != 16 + count * 4) {
        fail(ErrorCode::io_error, "SCR1 payload truncated: " + path.string());
    }
    ImageGrid g(static_cast<int>(h), static_cast<int>(w), static_cast<int>(c));
    for (size_t i = 0; i < count; ++i) {
        uint32_t bits = get_u32le(bytes.data() + 16 + i * 4);
        float f;
        std::memcpy(&f, &bits, 4);
        g.data[i] = static_cast<double>(f);
    }
    require_finite(g, ("load_scr1 " + path.string()).c_str());
    return g;
}

void save_pgm(const ImageGrid& g, const std::filesystem::path& path) {
    validate_dims(g.height, g.width, g.channels);
    if (g.channels != 1) {
        fail(ErrorCode::invalid_argument, "save_pgm: PGM is single-channel");
    }
    require_finite(g, "save_pgm");
    std::string header = "P5\n" + std::to_string(g.width) + " " + std::to_string(g.height) +
                         "\n255\n";
    std::vector<uint8_t> out(header.begin(), header.end());
    std::vector<uint8_t> pixels = to_bytes(g);
    out.insert(out.end(), pixels.begin(), pixels.end());
    write_file(path, out);
}

ImageGrid load_pgm(const std::filesystem::path& path) {
    std::vector<uint8_t> bytes = read_file(path);
    size_t pos = 0;
    auto token = [&]() -> std::string {
        // skip whitespace and '#' comments
        for (;;) {
            while (pos < bytes.size() && std::isspace(bytes[pos])) ++pos;
            if (pos < bytes.size() && bytes[pos] == '#') {
                while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
                continue;
            }
            break;
        }
        size_t start = pos;
        while (pos < bytes.size() && !std::isspace(bytes[pos])) ++pos;
        if (start == pos) fail(ErrorCode::io_error, "truncated PGM header: " + path.string());
        return std::string(bytes.begin() + static_cast<long>(start),
                           bytes.begin() + static_cast<long>(pos));
    };
    if (token() != "P5") fail(ErrorCode::io_error, "not a binary PGM: " + path.string());
    int w = 0, h = 0, maxval = 0;
    try {
        w = std::stoi(token());
        h = std::stoi(token());
        maxval = std::stoi(token());
    } catch (const std::logic_error&) {
        fail(ErrorCode::io_error, "malformed PGM header: " + path.string());
    }
    if (maxval != 255) fail(ErrorCode::io_error, "only 8-bit PGM supported: " + path.string());
    ++pos;  // single whitespace after maxval
    size_t count = static_cast<size_t>(h) * w;
    if (bytes.size() < pos + count) {
        fail(ErrorCode::io_error, "PGM payload truncated: " + path.string());
    }
    ImageGrid g(h, w, 1);
    for (size_t i = 0; i < count; ++i) g.data[i] = byte_to_model(bytes[pos + i]);
    return g;
}

void save_png(const ImageGrid& g, const std::filesystem::path& path) {
    validate_dims(g.height, g.width, g.channels);
    require_finite(g, "save_png");

    std::vector<uint8_t> ihdr;
    put_u32be(ihdr, static_cast<uint32_t>(g.width));
    put_u32be(ihdr, static_cast<uint32_t>(g.height));
    ihdr.push_back(8);                                  // bit depth
    ihdr.push_back(g.channels == 1 ? 0 : 2);            // gray or truecolor
    ihdr.push_back(0);                                  // compression
    ihdr.push_back(0);                                  // filter
    ihdr.push_back(0);                                  // no interlace

    // Raw scanlines, filter type 0 per row.
    size_t row_bytes = static_cast<size_t>(g.width) * g.channels;
    std::vector<uint8_t> raw;
    raw.reserve(static_cast<size_t>(g.height) * (row_bytes + 1));
    std::vector<uint8_t> pixels = to_bytes(g);
    for (int y = 0; y < g.height; ++y) {
        raw.push_back(0);
        const uint8_t* row = pixels.data() + static_cast<size_t>(y) * row_bytes;
        raw.insert(raw.end(), row, row + row_bytes);
    }

    uLongf bound = compressBound(static_cast<uLong>(raw.size()));
    std::vector<uint8_t> idat(bound);
    if (compress2(idat.data(), &bound, raw.data(), static_cast<uLong>(raw.size()), 6) != Z_OK) {
        fail(ErrorCode::io_error, "png deflate failed: " + path.string());
    }
    idat.resize(bound);

    std::vector<uint8_t> out(kPngSig, kPngSig + 8);
    append_chunk(out, "IHDR", ihdr);
    append_chunk(out, "IDAT", idat);
    append_chunk(out, "IEND", {});
    write_file(path, out);
}

ImageGrid load_png(const std::filesystem::path& path) {
    std::vector<uint8_t> bytes = read_file(path);
    if (bytes.size() < 8 || std::memcmp(bytes.data(), kPngSig, 8) != 0) {
        fail(ErrorCode::io_error, "not a PNG file: " + path.string());
    }
    size_t pos = 8;
    uint32_t w = 0, h = 0;
    int channels = 0;
    bool seen_ihdr = false;
    std::vector<uint8_t> idat;
    while (pos + 8 <= bytes.size()) {
        uint32_t len = get_u32be(bytes.data() + pos);
        if (pos + 12 + len > bytes.size()) {
            fail(ErrorCode::io_error, "PNG chunk truncated: " + path.string());
        }
        std::string type(bytes.begin() + static_cast<long>(pos) + 4,
                         bytes.begin() + static_cast<long>(pos) + 8);
        const uint8_t* data = bytes.data() + pos + 8;
        if (type == "IHDR") {
            w = get_u32be(data);
            h = get_u32be(data + 4);
            int depth = data[8];
            int color = data[9];
            int interlace = data[12];
            if (depth != 8 || (color != 0 && color != 2) || interlace != 0) {
                fail(ErrorCode::io_error,
                     "unsupported PNG (need 8-bit gray/RGB, non-interlaced): " + path.string());
            }
            channels = color == 0 ? 1 : 3;
            seen_ihdr = true;
        } else if (type == "IDAT") {
            idat.insert(idat.end(), data, data + len);
        } else if (type == "IEND") {
            break;
        }
        pos += 12 + len;
    }
    if (!seen_ihdr || idat.empty()) fail(ErrorCode::io_error, "PNG missing chunks: " + path.string());
    if (w > (1u << 20) || h > (1u << 20) || w == 0 || h == 0) {
        fail(ErrorCode::io_error, "PNG dimensions out of range: " + path.string());
    }

    size_t row_bytes = static_cast<size_t>(w) * channels;
    size_t raw_size = static_cast<size_t>(h) * (row_bytes + 1);
    std::vector<uint8_t> raw(raw_size);
    uLongf dest_len = static_cast<uLongf>(raw_size);
    int zret = uncompress(raw.data(), &dest_len, idat.data(), static_cast<uLong>(idat.size()));
    if (zret != Z_OK || dest_len != raw_size) {
        fail(ErrorCode::io_error, "PNG inflate failed: " + path.string());
    }

    // De-filter (None/Sub/Up/Average/Paeth).
    int bpp = channels;
    std::vector<uint8_t> pixels(static_cast<size_t>(h) * row_bytes, 0);
    auto paeth = [](int a, int b, int c) {
        int p = a + b - c;
        int pa = std::abs(p - a), pb = std::abs(p - b), pc = std::abs(p - c);
        if (pa <= pb && pa <= pc) return a;
        if (pb <= pc) return b;
        return c;
    };
    for (uint32_t y = 0; y < h; ++y) {
        const uint8_t* src = raw.data() + static_cast<size_t>(y) * (row_bytes + 1);
        uint8_t filter = src[0];
        uint8_t* cur = pixels.data() + static_cast<size_t>(y) * row_bytes;
        const uint8_t* up = y > 0 ? cur - row_bytes : nullptr;
        for (size_t i = 0; i < row_bytes; ++i) {
            int a = i >= static_cast<size_t>(bpp) ? cur[i - bpp] : 0;
            int b = up ? up[i] : 0;
            int c = (up && i >= static_cast<size_t>(bpp)) ? up[i - bpp] : 0;
            int x = src[1 + i];
            switch (filter) {
                case 0: break;
                case 1: x += a; break;
                case 2: x += b; break;
                case 3: x += (a + b) / 2; break;
                case 4: x += paeth(a, b, c); break;
                default: fail(ErrorCode::io_error, "PNG bad filter type: " + path.string());
            }
            cur[i] = static_cast<uint8_t>(x);
        }
    }

    ImageGrid g(static_cast<int>(h), static_cast<int>(w), channels);
    for (size_t i = 0; i < g.data.size(); ++i) g.data[i] = byte_to_model(pixels[i]);
    return g;
}

namespace {

std::string lower_ext(const std::filesystem::path& path) {
    std::string ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
    return ext;
}

}  // namespace

bool is_image_path(const std::filesystem::path& path) {
    std::string ext = lower_ext(path);
    return ext == ".scr1" || ext == ".pgm" || ext == ".png";
}

void save_image(const ImageGrid& g, const std::filesystem::path& path) {
    std::string ext = lower_ext(path);
    if (ext == ".scr1") return save_scr1(g, path);
    if (ext == ".pgm") return save_pgm(g, path);
    if (ext == ".png") return save_png(g, path);
    fail(ErrorCode::invalid_argument, "unsupported image extension: " + path.string());
}

ImageGrid load_image(const std::filesystem::path& path) {
    std::string ext = lower_ext(path);
    if (ext == ".scr1") return load_scr1(path);
    if (ext == ".pgm") return load_pgm(path);
    if (ext == ".png") return load_png(path);
    fail(ErrorCode::invalid_argument, "unsupported image extension: " + path.string());
}

std::vector<std::filesystem::path> list_images(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir)) {
        fail(ErrorCode::io_error, "not a directory: " + dir.string());
    }
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (entry.is_regular_file() && is_image_path(entry.path())) {
            files.push_back(entry.path());
        }
    }
    std::sort(files.begin(), files.end());
    return files;
}

}  // namespace score
