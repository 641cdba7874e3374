#include <doctest.h>

#include "dpfnet/checkpoint.hpp"
#include "dpfnet/errors.hpp"
#include "dpfnet/loss.hpp"
#include "dpfnet/train.hpp"
#include "support/dft_naive.hpp"
#include "support/fixtures.hpp"

using namespace dpfnet;
using dpfnet::testing::random_tensor;

TEST_CASE("ssim: identity, symmetry, anti-correlated images") {
    Rng rng(71);
    Tensor x = random_tensor<float>(Shape{1, 3, 24, 24}, rng, 0.0, 1.0);
    Tensor y = random_tensor<float>(Shape{1, 3, 24, 24}, rng, 0.0, 1.0);

    CHECK(std::abs(ssim_index(x, x).item() - 1.0f) < 1e-6);
    CHECK(std::abs(ssim_loss(x, x).item()) < 1e-6);
    CHECK(ssim_index(x, y).item() == ssim_index(y, x).item());

    // binary image against its negation: structure term goes strongly negative
    Tensor bin(Shape{1, 3, 24, 24});
    for (std::size_t i = 0; i < bin.data.size(); ++i) bin.data[i] = (rng.uniform() < 0.5) ? 0.0f : 1.0f;
    Tensor inv(bin.shape);
    for (std::size_t i = 0; i < bin.data.size(); ++i) inv.data[i] = 1.0f - bin.data[i];
    CHECK(ssim_index(bin, inv).item() < 0.5f);

    Tensor small(Shape{1, 3, 8, 8}, 0.5f);
    CHECK_THROWS_AS(ssim_index(small, small), std::invalid_argument);  // smaller than the window
}

TEST_CASE("fourier loss: zero at identity, symmetric, constant-offset case vs naive DFT") {
    Rng rng(72);
    Tensor x = random_tensor<float>(Shape{1, 3, 12, 10}, rng, 0.1, 0.9);
    CHECK(fourier_loss(x, x).item() == 0.0f);

    Tensor y = random_tensor<float>(Shape{1, 3, 12, 10}, rng, 0.1, 0.9);
    CHECK(std::abs(fourier_loss(x, y).item() - fourier_loss(y, x).item()) < 1e-6);

    // constant offset: expected value computed with the naive-DFT oracle
    const double c = 0.05;
    TensorT<double> xd = random_tensor<double>(Shape{1, 3, 8, 9}, rng, 0.1, 0.8);
    TensorT<double> yd = xd;
    for (auto& v : yd.data) v += c;
    double expected = 0.0;
    for (int ch = 0; ch < 3; ++ch) {
        auto fx = dpfnet::testing::dft2_naive(dpfnet::testing::plane_of(xd, ch), 8, 9);
        auto fy = dpfnet::testing::dft2_naive(dpfnet::testing::plane_of(yd, ch), 8, 9);
        for (std::size_t i = 0; i < fx.size(); ++i) {
            const double da = std::abs(fx[i]) - std::abs(fy[i]);
            const double dp = std::arg(fx[i]) - std::arg(fy[i]);
            expected += da * da + dp * dp;
        }
    }
    expected /= static_cast<double>(2 * 3 * 8 * 9);
    const double got = fourier_loss(xd, yd).item();
    CHECK(got == doctest::Approx(expected).epsilon(1e-4));
    // only the DC amplitude differs, so the closed form is (c*H*W)^2 spread over the elements
    CHECK(got == doctest::Approx(3.0 * c * c * 72.0 * 72.0 / (2.0 * 3.0 * 72.0)).epsilon(1e-3));
}

TEST_CASE("fourier loss fast path equals a naive-DFT evaluation on random pairs") {
    Rng rng(73);
    TensorT<double> x = random_tensor<double>(Shape{1, 3, 7, 6}, rng, 0.0, 1.0);
    TensorT<double> y = random_tensor<double>(Shape{1, 3, 7, 6}, rng, 0.0, 1.0);
    double expected = 0.0;
    for (int ch = 0; ch < 3; ++ch) {
        auto fx = dpfnet::testing::dft2_naive(dpfnet::testing::plane_of(x, ch), 7, 6);
        auto fy = dpfnet::testing::dft2_naive(dpfnet::testing::plane_of(y, ch), 7, 6);
        for (std::size_t i = 0; i < fx.size(); ++i) {
            const double eps2 = kPolarEpsGuard * kPolarEpsGuard;
            const double ax = std::sqrt(std::norm(fx[i]) + eps2), ay = std::sqrt(std::norm(fy[i]) + eps2);
            const double da = ax - ay;
            const double dp = std::arg(fx[i]) - std::arg(fy[i]);
            expected += da * da + dp * dp;
        }
    }
    expected /= static_cast<double>(2 * 3 * 7 * 6);
    CHECK(fourier_loss(x, y).item() == doctest::Approx(expected).epsilon(1e-4));
}

TEST_CASE("perceptual loss: identity, determinism, quadratic scaling") {
    Rng rng(74);
    auto fx = FeatureExtractor::seeded(123);
    Tensor x = random_tensor<float>(Shape{1, 3, 16, 16}, rng, 0.0, 1.0);
    CHECK(perceptual_loss(x, x, fx).item() == 0.0f);

    auto fx2 = FeatureExtractor::seeded(123);
    CHECK(fx.checksum() == fx2.checksum());
    Tensor y = random_tensor<float>(Shape{1, 3, 16, 16}, rng, 0.0, 1.0);
    CHECK(perceptual_loss(x, y, fx).item() == perceptual_loss(x, y, fx2).item());
    CHECK(FeatureExtractor::seeded(124).checksum() != fx.checksum());

    // inside a locally linear region the loss scales with the square of the step
    Tensor delta = random_tensor<float>(Shape{1, 3, 16, 16}, rng, -1.0, 1.0);
    auto offset = [&](float s) {
        Tensor t = x;
        for (std::size_t i = 0; i < t.data.size(); ++i) t.data[i] += s * 1e-3f * delta.data[i];
        return t;
    };
    const double l1 = perceptual_loss(x, offset(1.0f), fx).item();
    const double l2 = perceptual_loss(x, offset(2.0f), fx).item();
    CHECK(l2 / l1 == doctest::Approx(4.0).epsilon(0.05));
}

TEST_CASE("extractor weights round-trip through the named-tensor container") {
    dpfnet::testing::TempDir tmp("extractor");
    auto fx = FeatureExtractor::seeded(31337);
    std::vector<std::pair<std::string, const Tensor*>> entries;
    for (std::size_t i = 0; i < fx.stages.size(); ++i) {
        entries.emplace_back("feat.stage" + std::to_string(i) + ".w", &fx.stages[i].w);
        entries.emplace_back("feat.stage" + std::to_string(i) + ".b", &fx.stages[i].b);
    }
    const std::string path = tmp.file("feat.dpfn");
    save_named_tensors(path, entries);

    Config cfg;
    cfg.seed = 1;  // different seed: loaded weights must win
    cfg.extractor_weights = path;
    FeatureExtractor loaded = load_extractor(cfg);
    CHECK(loaded.checksum() == fx.checksum());

    Config missing;
    missing.extractor_weights = tmp.file("absent.dpfn");
    CHECK_THROWS_AS(load_extractor(missing), DataError);
}

TEST_CASE("total loss composition") {
    Rng rng(75);
    auto fx = FeatureExtractor::seeded(9);
    Tensor x = random_tensor<float>(Shape{1, 3, 16, 16}, rng, 0.0, 1.0);
    Tensor y = random_tensor<float>(Shape{1, 3, 16, 16}, rng, 0.0, 1.0);

    CHECK(total_loss(x, x, LossWeights{}, fx).item() == doctest::Approx(0.0).epsilon(1e-6));

    LossBreakdown<float> lb;
    const float total = total_loss(x, y, LossWeights{}, fx, &lb).item();
    CHECK(total == doctest::Approx(lb.ssim + 1.0 * lb.fourier + 0.2 * lb.perceptual).epsilon(1e-5));
    CHECK(lb.ssim >= 0.0f);
    CHECK(lb.fourier >= 0.0f);
    CHECK(lb.perceptual >= 0.0f);

    const float only_ssim = total_loss(x, y, LossWeights{0.0, 0.0}, fx).item();
    CHECK(only_ssim == doctest::Approx(ssim_loss(x, y).item()));
}
