#include <doctest.h>

#include <zlib.h>

#include <cstring>
#include <fstream>

#include "dpfnet/errors.hpp"
#include "dpfnet/image_io.hpp"
#include "support/fixtures.hpp"

using namespace dpfnet;
using dpfnet::testing::random_tensor;
using dpfnet::testing::TempDir;

namespace {

std::vector<unsigned char> read_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void put_be32(std::vector<unsigned char>& v, std::uint32_t x) {
    v.push_back(static_cast<unsigned char>(x >> 24));
    v.push_back(static_cast<unsigned char>(x >> 16));
    v.push_back(static_cast<unsigned char>(x >> 8));
    v.push_back(static_cast<unsigned char>(x));
}

void put_chunk(std::vector<unsigned char>& out, const char* type, const std::vector<unsigned char>& data) {
    put_be32(out, static_cast<std::uint32_t>(data.size()));
    const std::size_t start = out.size();
    out.insert(out.end(), type, type + 4);
    out.insert(out.end(), data.begin(), data.end());
    put_be32(out, static_cast<std::uint32_t>(
                      crc32(crc32(0L, Z_NULL, 0), out.data() + start, static_cast<uInt>(4 + data.size()))));
}

// hand-rolled 1x1 16-bit grayscale PNG
std::string write_png16(const TempDir& tmp) {
    std::vector<unsigned char> out{137, 80, 78, 71, 13, 10, 26, 10};
    std::vector<unsigned char> ihdr;
    put_be32(ihdr, 1);
    put_be32(ihdr, 1);
    ihdr.insert(ihdr.end(), {16, 0, 0, 0, 0});  // depth 16, gray
    put_chunk(out, "IHDR", ihdr);

    const unsigned char scan[3] = {0, 0xAB, 0xCD};  // filter byte + one 16-bit sample
    uLongf bound = compressBound(3);
    std::vector<unsigned char> z(bound);
    REQUIRE(compress2(z.data(), &bound, scan, 3, 6) == Z_OK);
    z.resize(bound);
    put_chunk(out, "IDAT", z);
    put_chunk(out, "IEND", {});

    const std::string path = tmp.file("deep.png");
    std::ofstream(path, std::ios::binary).write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
    return path;
}

}  // namespace

TEST_CASE("png: 1x1 white pixel round trip") {
    TempDir tmp("png1");
    Tensor white(Shape{3, 1, 1}, 1.0f);
    const std::string path = tmp.file("white.png");
    save_image(white, path);
    Tensor back = load_image(path);
    CHECK(back.shape == Shape{3, 1, 1});
    for (float v : back.data) CHECK(v == 1.0f);
}

TEST_CASE("png: quantization bound on arbitrary values") {
    TempDir tmp("pngq");
    Rng rng(81);
    Tensor x = random_tensor<float>(Shape{3, 9, 13}, rng, 0.0, 1.0);
    const std::string path = tmp.file("q.png");
    save_image(x, path);
    Tensor back = load_image(path);
    for (std::size_t i = 0; i < x.data.size(); ++i)
        CHECK(std::abs(back.data[i] - x.data[i]) <= 0.5f / 255.0f + 1e-6f);
}

TEST_CASE("png: half-up rounding and clamping") {
    TempDir tmp("pngr");
    Tensor x(Shape{3, 1, 2});
    for (int c = 0; c < 3; ++c) {
        x.data[static_cast<std::size_t>(c * 2 + 0)] = 0.5f;  // 127.5 -> 128
        x.data[static_cast<std::size_t>(c * 2 + 1)] = 1.7f;  // clamps to 255
    }
    const std::string path = tmp.file("r.png");
    save_image(x, path);
    Tensor back = load_image(path);
    for (int c = 0; c < 3; ++c) {
        CHECK(back.data[static_cast<std::size_t>(c * 2 + 0)] == doctest::Approx(128.0 / 255.0));
        CHECK(back.data[static_cast<std::size_t>(c * 2 + 1)] == doctest::Approx(1.0));
    }
}

TEST_CASE("png: save/load/save is byte-identical") {
    TempDir tmp("pngd");
    Rng rng(82);
    Tensor x = random_tensor<float>(Shape{3, 16, 11}, rng, 0.0, 1.0);
    const std::string p1 = tmp.file("a.png"), p2 = tmp.file("b.png");
    save_image(x, p1);
    save_image(load_image(p1), p2);
    CHECK(read_bytes(p1) == read_bytes(p2));
}

TEST_CASE("png: 16-bit depth is rejected with an explicit error") {
    TempDir tmp("png16");
    const std::string path = write_png16(tmp);
    CHECK_THROWS_WITH_AS(load_image(path), doctest::Contains("bit depth 16"), DataError);
}

TEST_CASE("png: missing files and non-PNG bytes are data errors") {
    TempDir tmp("pngm");
    CHECK_THROWS_AS(load_image(tmp.file("absent.png")), DataError);
    const std::string junk = tmp.file("junk.png");
    std::ofstream(junk, std::ios::binary) << "definitely not a png";
    CHECK_THROWS_AS(load_image(junk), DataError);
}

TEST_CASE("png: grayscale promotes to three equal channels") {
    TempDir tmp("pngg");
    // construct a 2x1 8-bit grayscale PNG
    std::vector<unsigned char> out{137, 80, 78, 71, 13, 10, 26, 10};
    std::vector<unsigned char> ihdr;
    put_be32(ihdr, 2);
    put_be32(ihdr, 1);
    ihdr.insert(ihdr.end(), {8, 0, 0, 0, 0});
    put_chunk(out, "IHDR", ihdr);
    const unsigned char scan[3] = {0, 10, 200};
    uLongf bound = compressBound(3);
    std::vector<unsigned char> z(bound);
    REQUIRE(compress2(z.data(), &bound, scan, 3, 6) == Z_OK);
    z.resize(bound);
    put_chunk(out, "IDAT", z);
    put_chunk(out, "IEND", {});
    const std::string path = tmp.file("gray.png");
    std::ofstream(path, std::ios::binary).write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));

    Tensor t = load_image(path);
    CHECK(t.shape == Shape{3, 1, 2});
    for (int c = 0; c < 3; ++c) {
        CHECK(t.data[static_cast<std::size_t>(c * 2 + 0)] == doctest::Approx(10.0 / 255.0));
        CHECK(t.data[static_cast<std::size_t>(c * 2 + 1)] == doctest::Approx(200.0 / 255.0));
    }
}
