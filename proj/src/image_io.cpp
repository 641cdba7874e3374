#include "dpfnet/image_io.hpp"

#include <zlib.h>

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <vector>

#include "dpfnet/errors.hpp"

namespace dpfnet {

namespace {

constexpr unsigned char kPngSignature[8] = {137, 80, 78, 71, 13, 10, 26, 10};

std::uint32_t read_be32(const unsigned char* p) {
    return (std::uint32_t(p[0]) << 24) | (std::uint32_t(p[1]) << 16) | (std::uint32_t(p[2]) << 8) | std::uint32_t(p[3]);
}

void push_be32(std::vector<unsigned char>& out, std::uint32_t v) {
    out.push_back(static_cast<unsigned char>(v >> 24));
    out.push_back(static_cast<unsigned char>(v >> 16));
    out.push_back(static_cast<unsigned char>(v >> 8));
    out.push_back(static_cast<unsigned char>(v));
}

int paeth(int a, int b, int c) {
    const int p = a + b - c;
    const int pa = std::abs(p - a), pb = std::abs(p - b), pc = std::abs(p - c);
    if (pa <= pb && pa <= pc) return a;
    if (pb <= pc) return b;
    return c;
}

void unfilter_rows(std::vector<unsigned char>& raw, std::int64_t h, std::int64_t row_bytes, int bpp,
                   const std::string& path) {
    std::vector<unsigned char> prev(static_cast<std::size_t>(row_bytes), 0);
    for (std::int64_t y = 0; y < h; ++y) {
        unsigned char* row = raw.data() + y * (row_bytes + 1);
        const int filter = row[0];
        unsigned char* cur = row + 1;
        switch (filter) {
            case 0:
                break;
            case 1:
                for (std::int64_t i = bpp; i < row_bytes; ++i) cur[i] = static_cast<unsigned char>(cur[i] + cur[i - bpp]);
                break;
            case 2:
                for (std::int64_t i = 0; i < row_bytes; ++i) cur[i] = static_cast<unsigned char>(cur[i] + prev[static_cast<std::size_t>(i)]);
                break;
            case 3:
                for (std::int64_t i = 0; i < row_bytes; ++i) {
                    const int left = i >= bpp ? cur[i - bpp] : 0;
                    cur[i] = static_cast<unsigned char>(cur[i] + ((left + prev[static_cast<std::size_t>(i)]) >> 1));
                }
                break;
            case 4:
                for (std::int64_t i = 0; i < row_bytes; ++i) {
                    const int left = i >= bpp ? cur[i - bpp] : 0;
                    const int upleft = i >= bpp ? prev[static_cast<std::size_t>(i - bpp)] : 0;
                    cur[i] = static_cast<unsigned char>(cur[i] + paeth(left, prev[static_cast<std::size_t>(i)], upleft));
                }
                break;
            default:
                throw DataError("png: bad row filter " + std::to_string(filter) + " in " + path);
        }
        std::memcpy(prev.data(), cur, static_cast<std::size_t>(row_bytes));
    }
}

}  // namespace

Tensor load_image(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("png: cannot open " + path);
    std::vector<unsigned char> file((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (file.size() < 8 || std::memcmp(file.data(), kPngSignature, 8) != 0)
        throw DataError("png: not a PNG file: " + path);

    std::int64_t w = 0, h = 0;
    int bit_depth = 0, color_type = 0;
    bool saw_ihdr = false, saw_iend = false;
    std::vector<unsigned char> idat;

    std::size_t pos = 8;
    while (pos + 12 <= file.size()) {
        const std::uint32_t len = read_be32(file.data() + pos);
        if (pos + 12 + len > file.size()) throw DataError("png: truncated chunk in " + path);
        const char* type = reinterpret_cast<const char*>(file.data() + pos + 4);
        const unsigned char* data = file.data() + pos + 8;
        const std::uint32_t crc_stored = read_be32(data + len);
        const std::uint32_t crc_actual =
            static_cast<std::uint32_t>(crc32(crc32(0L, Z_NULL, 0), file.data() + pos + 4, len + 4));
        if (crc_stored != crc_actual) throw DataError("png: chunk CRC mismatch in " + path);

        if (std::memcmp(type, "IHDR", 4) == 0) {
            if (len != 13) throw DataError("png: malformed IHDR in " + path);
            w = read_be32(data);
            h = read_be32(data + 4);
            bit_depth = data[8];
            color_type = data[9];
            const int interlace = data[12];
            if (w <= 0 || h <= 0) throw DataError("png: bad dimensions in " + path);
            if (bit_depth != 8)
                throw DataError("png: unsupported bit depth " + std::to_string(bit_depth) + " in " + path +
                                " (only 8-bit supported)");
            if (color_type != 0 && color_type != 2 && color_type != 4 && color_type != 6)
                throw DataError("png: unsupported color type " + std::to_string(color_type) + " in " + path);
            if (interlace != 0) throw DataError("png: interlaced files unsupported: " + path);
            saw_ihdr = true;
        } else if (std::memcmp(type, "IDAT", 4) == 0) {
            idat.insert(idat.end(), data, data + len);
        } else if (std::memcmp(type, "IEND", 4) == 0) {
            saw_iend = true;
            break;
        }
        pos += 12 + len;
    }
    if (!saw_ihdr || !saw_iend || idat.empty()) throw DataError("png: missing required chunks in " + path);

    const int channels = (color_type == 0) ? 1 : (color_type == 2) ? 3 : (color_type == 4) ? 2 : 4;
    const std::int64_t row_bytes = w * channels;
    std::vector<unsigned char> raw(static_cast<std::size_t>(h * (row_bytes + 1)));
    uLongf raw_len = static_cast<uLongf>(raw.size());
    const int zrc = uncompress(raw.data(), &raw_len, idat.data(), static_cast<uLong>(idat.size()));
    if (zrc != Z_OK || raw_len != raw.size()) throw DataError("png: IDAT decompression failed for " + path);

    unfilter_rows(raw, h, row_bytes, channels, path);

    Tensor out(Shape{3, h, w});
    const float inv = 1.0f / 255.0f;
    for (std::int64_t y = 0; y < h; ++y) {
        const unsigned char* row = raw.data() + y * (row_bytes + 1) + 1;
        for (std::int64_t x = 0; x < w; ++x) {
            float r, g, b;
            if (channels >= 3) {
                r = row[x * channels + 0] * inv;
                g = row[x * channels + 1] * inv;
                b = row[x * channels + 2] * inv;
            } else {
                r = g = b = row[x * channels] * inv;
            }
            out.data[static_cast<std::size_t>(0 * h * w + y * w + x)] = r;
            out.data[static_cast<std::size_t>(1 * h * w + y * w + x)] = g;
            out.data[static_cast<std::size_t>(2 * h * w + y * w + x)] = b;
        }
    }
    return out;
}

void save_image(const Tensor& x, const std::string& path) {
    require_rank(x, 3, "save_image");
    if (x.shape[0] != 3) throw std::invalid_argument("save_image: expected [3,H,W], got " + shape_str(x.shape));
    const std::int64_t h = x.shape[1], w = x.shape[2];

    // quantize: clamp then round half up
    std::vector<unsigned char> scan(static_cast<std::size_t>(h * (w * 3 + 1)));
    for (std::int64_t y = 0; y < h; ++y) {
        unsigned char* row = scan.data() + y * (w * 3 + 1);
        row[0] = 0;  // filter: none
        for (std::int64_t xx = 0; xx < w; ++xx)
            for (int c = 0; c < 3; ++c) {
                const float v = x.data[static_cast<std::size_t>(c * h * w + y * w + xx)];
                const float cl = std::min(1.0f, std::max(0.0f, v));
                row[1 + xx * 3 + c] = static_cast<unsigned char>(std::lround(cl * 255.0f));
            }
    }

    uLongf bound = compressBound(static_cast<uLong>(scan.size()));
    std::vector<unsigned char> zdata(bound);
    if (compress2(zdata.data(), &bound, scan.data(), static_cast<uLong>(scan.size()), 6) != Z_OK)
        throw DataError("png: compression failed for " + path);
    zdata.resize(bound);

    std::vector<unsigned char> out;
    out.insert(out.end(), kPngSignature, kPngSignature + 8);
    auto chunk = [&out](const char* type, const std::vector<unsigned char>& data) {
        push_be32(out, static_cast<std::uint32_t>(data.size()));
        const std::size_t start = out.size();
        out.insert(out.end(), type, type + 4);
        out.insert(out.end(), data.begin(), data.end());
        const std::uint32_t crc =
            static_cast<std::uint32_t>(crc32(crc32(0L, Z_NULL, 0), out.data() + start, static_cast<uInt>(4 + data.size())));
        push_be32(out, crc);
    };

    std::vector<unsigned char> ihdr;
    push_be32(ihdr, static_cast<std::uint32_t>(w));
    push_be32(ihdr, static_cast<std::uint32_t>(h));
    ihdr.push_back(8);  // bit depth
    ihdr.push_back(2);  // color type: RGB
    ihdr.push_back(0);
    ihdr.push_back(0);
    ihdr.push_back(0);
    chunk("IHDR", ihdr);
    chunk("IDAT", zdata);
    chunk("IEND", {});

    // atomic: write sibling temp file, then rename
    const std::string tmp = path + ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        if (!os) throw DataError("png: cannot write " + tmp);
        os.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
        if (!os) throw DataError("png: short write to " + tmp);
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw DataError("png: cannot rename " + tmp + " to " + path + ": " + ec.message());
}

}  // namespace dpfnet
