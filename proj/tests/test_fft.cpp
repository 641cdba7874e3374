#include <doctest.h>

#include "dpfnet/fft.hpp"
#include "support/dft_naive.hpp"
#include "support/fixtures.hpp"
#include "support/gradcheck.hpp"

using namespace dpfnet;
using dpfnet::testing::cd;
using dpfnet::testing::dft2_naive;
using dpfnet::testing::random_tensor;

namespace {

double max_err_vs(const ComplexTensorT<double>& z, const std::vector<cd>& ref) {
    double m = 0.0;
    for (std::size_t i = 0; i < ref.size(); ++i) {
        m = std::max(m, std::abs(z.re.data[i] - ref[i].real()));
        m = std::max(m, std::abs(z.im.data[i] - ref[i].imag()));
    }
    return m;
}

}  // namespace

TEST_CASE("fft2 of an impulse is flat") {
    TensorT<double> x(Shape{1, 1, 8, 6});
    x.data[0] = 1.0;
    auto z = fft2(x);
    for (std::size_t i = 0; i < z.re.data.size(); ++i) {
        CHECK(z.re.data[i] == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(std::abs(z.im.data[i]) < 1e-12);
    }
}

TEST_CASE("fft2 of a constant is DC-only, ifft2 restores it") {
    const double c = 0.37;
    TensorT<double> x(Shape{1, 1, 6, 10}, c);
    auto z = fft2(x);
    CHECK(z.re.data[0] == doctest::Approx(c * 60.0));
    for (std::size_t i = 1; i < z.re.data.size(); ++i) {
        CHECK(std::abs(z.re.data[i]) < 1e-10);
        CHECK(std::abs(z.im.data[i]) < 1e-10);
    }

    ComplexTensorT<double> dc{TensorT<double>(Shape{1, 1, 5, 4}), TensorT<double>(Shape{1, 1, 5, 4})};
    dc.re.data[0] = 20.0;
    auto back = ifft2(dc);
    for (double v : back.re.data) CHECK(v == doctest::Approx(1.0));
}

TEST_CASE("fft2 matches the naive double-sum on awkward sizes") {
    Rng rng(21);
    for (auto [h, w] : {std::pair<int, int>{7, 12}, {9, 7}, {12, 10}, {11, 13}, {16, 15}}) {
        TensorT<double> x = random_tensor<double>(Shape{1, 1, h, w}, rng);
        auto z = fft2(x);
        auto ref = dft2_naive(dpfnet::testing::plane_of(x), h, w);
        CHECK(max_err_vs(z, ref) < 1e-4);
    }
}

TEST_CASE("ifft2 matches the naive inverse on random complex planes") {
    Rng rng(22);
    for (auto [h, w] : {std::pair<int, int>{7, 9}, {10, 12}, {13, 5}}) {
        ComplexTensorT<double> z{random_tensor<double>(Shape{1, 1, h, w}, rng),
                                 random_tensor<double>(Shape{1, 1, h, w}, rng)};
        auto got = ifft2(z);
        std::vector<cd> in(static_cast<std::size_t>(h * w));
        for (std::size_t i = 0; i < in.size(); ++i) in[i] = cd(z.re.data[i], z.im.data[i]);
        auto ref = dft2_naive(in, h, w, true);
        CHECK(max_err_vs(got, ref) < 1e-4);
    }
}

TEST_CASE("fft2/ifft2 round trip on a real image") {
    Rng rng(23);
    for (auto [h, w] : {std::pair<int, int>{16, 16}, {15, 14}, {20, 9}}) {
        TensorT<double> x = random_tensor<double>(Shape{2, 3, h, w}, rng, 0.0, 1.0);
        auto back = ifft2(fft2(x));
        double mre = 0.0, mim = 0.0;
        for (std::size_t i = 0; i < x.data.size(); ++i) {
            mre = std::max(mre, std::abs(back.re.data[i] - x.data[i]));
            mim = std::max(mim, std::abs(back.im.data[i]));
        }
        CHECK(mre < 1e-5);
        CHECK(mim < 1e-5);
    }
}

TEST_CASE("fft2 is linear") {
    Rng rng(24);
    const double a = 1.3, b = -2.1;
    TensorT<double> x = random_tensor<double>(Shape{1, 1, 12, 10}, rng);
    TensorT<double> y = random_tensor<double>(Shape{1, 1, 12, 10}, rng);
    TensorT<double> mix(x.shape);
    for (std::size_t i = 0; i < mix.data.size(); ++i) mix.data[i] = a * x.data[i] + b * y.data[i];
    auto zm = fft2(mix);
    auto zx = fft2(x);
    auto zy = fft2(y);
    for (std::size_t i = 0; i < zm.re.data.size(); ++i) {
        CHECK(std::abs(zm.re.data[i] - (a * zx.re.data[i] + b * zy.re.data[i])) < 1e-4);
        CHECK(std::abs(zm.im.data[i] - (a * zx.im.data[i] + b * zy.im.data[i])) < 1e-4);
    }
}

TEST_CASE("Parseval: energy matches up to 1/(MN)") {
    Rng rng(25);
    TensorT<double> x = random_tensor<double>(Shape{1, 1, 14, 15}, rng);
    auto z = fft2(x);
    double spatial = 0.0, freq = 0.0;
    for (double v : x.data) spatial += v * v;
    for (std::size_t i = 0; i < z.re.data.size(); ++i) freq += z.re.data[i] * z.re.data[i] + z.im.data[i] * z.im.data[i];
    freq /= 14.0 * 15.0;
    CHECK(std::abs(spatial - freq) / spatial < 1e-3);
}

TEST_CASE("real-input spectra are conjugate symmetric") {
    Rng rng(26);
    const std::int64_t M = 9, N = 12;
    TensorT<double> x = random_tensor<double>(Shape{1, 1, M, N}, rng);
    auto z = fft2(x);
    for (std::int64_t u = 0; u < M; ++u)
        for (std::int64_t v = 0; v < N; ++v) {
            const std::int64_t uu = (M - u) % M, vv = (N - v) % N;
            CHECK(std::abs(z.re.data[static_cast<std::size_t>(u * N + v)] - z.re.data[static_cast<std::size_t>(uu * N + vv)]) < 1e-4);
            CHECK(std::abs(z.im.data[static_cast<std::size_t>(u * N + v)] + z.im.data[static_cast<std::size_t>(uu * N + vv)]) < 1e-4);
        }
}

TEST_CASE("polar decomposition basics") {
    ComplexTensorT<double> z{TensorT<double>(Shape{1, 1, 1, 2}), TensorT<double>(Shape{1, 1, 1, 2})};
    z.re.data = {3.0, -1.0};
    z.im.data = {4.0, 0.0};
    auto sp = polar_decompose(z);
    CHECK(sp.amplitude.data[0] == doctest::Approx(5.0));
    CHECK(sp.phase.data[0] == doctest::Approx(std::atan2(4.0, 3.0)));
    CHECK(sp.amplitude.data[1] == doctest::Approx(1.0));
    CHECK(sp.phase.data[1] == doctest::Approx(3.14159265358979));

    Rng rng(27);
    ComplexTensorT<double> r{random_tensor<double>(Shape{1, 2, 6, 5}, rng), random_tensor<double>(Shape{1, 2, 6, 5}, rng)};
    auto back = polar_compose(polar_decompose(r));
    for (std::size_t i = 0; i < back.re.data.size(); ++i) {
        CHECK(std::abs(back.re.data[i] - r.re.data[i]) < 1e-4);
        CHECK(std::abs(back.im.data[i] - r.im.data[i]) < 1e-4);
        CHECK(polar_decompose(r).amplitude.data[i] >= 0.0);
    }
}

TEST_CASE("cartesian_compose wires A to re and P to im") {
    TensorT<double> a(Shape{1, 1, 1, 1}, 1.0), p(Shape{1, 1, 1, 1}, 0.0);
    auto z = cartesian_compose(a, p);
    CHECK(z.re.data[0] == 1.0);
    CHECK(z.im.data[0] == 0.0);
    auto z2 = cartesian_compose(p, a);
    CHECK(z2.re.data[0] == 0.0);
    CHECK(z2.im.data[0] == 1.0);
    TensorT<double> bad(Shape{1, 1, 2, 1});
    CHECK_THROWS_AS(cartesian_compose(a, bad), std::invalid_argument);
}

TEST_CASE("gradients flow through fft2/ifft2/polar") {
    Rng rng(28);
    dpfnet::testing::DInputs inputs{{"x", random_tensor<double>(Shape{1, 1, 6, 7}, rng)}};
    auto res = dpfnet::testing::grad_check(inputs, [](dpfnet::testing::DInputs& in, GradTapeT<double>*) {
        auto sp = polar_decompose(fft2(in.at("x")));
        auto rec = ifft2(cartesian_compose(sp.amplitude, sp.phase));
        return mean(mul(rec.re, rec.re));
    });
    INFO(res.worst);
    CHECK(res.ok());
}
