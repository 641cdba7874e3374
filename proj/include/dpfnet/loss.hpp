#pragma once

#include <cstdint>
#include <cstring>
#include <string>
#include <vector>

#include "dpfnet/fft.hpp"
#include "dpfnet/model.hpp"
#include "dpfnet/ops.hpp"

namespace dpfnet {

struct SsimOptions {
    int window = 11;
    double sigma = 1.5;
    double k1 = 0.01;  // C1 = (k1*L)^2 with unit dynamic range
    double k2 = 0.03;
};

// Mean local SSIM over Gaussian-windowed statistics, averaged across the
// valid region, channels and batch.
template <class S>
TensorT<S> ssim_index(const TensorT<S>& x, const TensorT<S>& y, const SsimOptions& opt = {}) {
    require_same_shape(x, y, "ssim");
    require_rank(x, 4, "ssim");
    const S c1 = static_cast<S>(opt.k1 * opt.k1);
    const S c2 = static_cast<S>(opt.k2 * opt.k2);

    TensorT<S> mu_x = gauss_blur_valid(x, opt.window, opt.sigma);
    TensorT<S> mu_y = gauss_blur_valid(y, opt.window, opt.sigma);
    TensorT<S> mu_xx = mul(mu_x, mu_x);
    TensorT<S> mu_yy = mul(mu_y, mu_y);
    TensorT<S> mu_xy = mul(mu_x, mu_y);
    TensorT<S> var_x = sub(gauss_blur_valid(mul(x, x), opt.window, opt.sigma), mu_xx);
    TensorT<S> var_y = sub(gauss_blur_valid(mul(y, y), opt.window, opt.sigma), mu_yy);
    TensorT<S> cov = sub(gauss_blur_valid(mul(x, y), opt.window, opt.sigma), mu_xy);

    TensorT<S> num = mul(add_scalar(mul_scalar(mu_xy, S(2)), c1), add_scalar(mul_scalar(cov, S(2)), c2));
    TensorT<S> den = mul(add_scalar(add(mu_xx, mu_yy), c1), add_scalar(add(var_x, var_y), c2));
    return mean(div(num, den));
}

template <class S>
TensorT<S> ssim_loss(const TensorT<S>& x, const TensorT<S>& y, const SsimOptions& opt = {}) {
    return add_scalar(mul_scalar(ssim_index(x, y, opt), S(-1)), S(1));
}

// Mean squared distance between the channel-stacked (amplitude, phase)
// spectra of the two images; phase enters as the raw principal-value
// difference.
template <class S>
TensorT<S> fourier_loss(const TensorT<S>& x, const TensorT<S>& y) {
    require_same_shape(x, y, "fourier_loss");
    require_rank(x, 4, "fourier_loss");
    SpectrumT<S> sx = polar_decompose(fft2(x));
    SpectrumT<S> sy = polar_decompose(fft2(y));
    TensorT<S> cx = concat_channels<S>({&sx.amplitude, &sx.phase});
    TensorT<S> cy = concat_channels<S>({&sy.amplitude, &sy.phase});
    TensorT<S> d = sub(cx, cy);
    return mean(mul(d, d));
}

// Frozen convolutional feature stack standing in for a pretrained backbone:
// four stages of {conv3x3, ReLU, avgpool2}, deterministically seeded or
// loaded from a weights file. Weights are never watched by a tape, so no
// gradient ever reaches them.
template <class S>
struct FeatureExtractorT {
    std::vector<ConvParamT<S>> stages;

    static FeatureExtractorT seeded(std::uint64_t seed) {
        Rng rng(Rng::mix(seed, 0x66656174ULL));
        FeatureExtractorT fx;
        const std::int64_t widths[5] = {3, 8, 16, 32, 64};
        for (int i = 0; i < 4; ++i) fx.stages.push_back(make_conv<S>(widths[i + 1], widths[i], 3, rng));
        return fx;
    }

    TensorT<S> forward(const TensorT<S>& x) const {
        TensorT<S> h = x;
        for (const auto& st : stages) h = avg_pool2(relu(conv2d(h, st.w, st.b)));
        return h;
    }

    // order-insensitive content hash; training asserts it never changes
    std::uint64_t checksum() const {
        std::uint64_t acc = 0xcbf29ce484222325ULL;
        auto mix = [&acc](const TensorT<S>& t) {
            for (S v : t.data) {
                const double d = static_cast<double>(v);
                std::uint64_t bits;
                static_assert(sizeof(bits) == sizeof(d));
                std::memcpy(&bits, &d, sizeof(bits));
                acc = (acc ^ bits) * 0x100000001b3ULL;
            }
        };
        for (const auto& st : stages) {
            mix(st.w);
            mix(st.b);
        }
        return acc;
    }
};

using FeatureExtractor = FeatureExtractorT<float>;

// squared feature distance normalized by the feature map volume (W*H*C),
// averaged over the batch
template <class S>
TensorT<S> perceptual_loss(const TensorT<S>& x, const TensorT<S>& y, const FeatureExtractorT<S>& fx) {
    require_same_shape(x, y, "perceptual_loss");
    TensorT<S> d = sub(fx.forward(x), fx.forward(y));
    return mean(mul(d, d));
}

struct LossWeights {
    double lambda_a = 1.0;  // Fourier term
    double lambda_b = 0.2;  // perceptual term
};

template <class S>
struct LossBreakdown {
    S total = 0, ssim = 0, fourier = 0, perceptual = 0;
};

template <class S>
TensorT<S> total_loss(const TensorT<S>& x, const TensorT<S>& y, const LossWeights& w, const FeatureExtractorT<S>& fx,
                      LossBreakdown<S>* breakdown = nullptr, const SsimOptions& ssim_opt = {}) {
    TensorT<S> ls = ssim_loss(x, y, ssim_opt);
    TensorT<S> lf = fourier_loss(x, y);
    TensorT<S> lp = perceptual_loss(x, y, fx);
    TensorT<S> total = add(ls, add(mul_scalar(lf, static_cast<S>(w.lambda_a)), mul_scalar(lp, static_cast<S>(w.lambda_b))));
    if (breakdown) {
        breakdown->ssim = ls.item();
        breakdown->fourier = lf.item();
        breakdown->perceptual = lp.item();
        breakdown->total = total.item();
    }
    return total;
}

}  // namespace dpfnet
