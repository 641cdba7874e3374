#pragma once

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "dpfnet/dataset.hpp"
#include "dpfnet/model.hpp"
#include "dpfnet/rng.hpp"
#include "dpfnet/tensor.hpp"

namespace dpfnet::testing {

// mdcm_only network that reproduces its input exactly: zeroed MDCM (the
// skip wins) and a channel-replicating lift/proj pair around zeroed
// residual blocks
inline DpfnetParams identity_model(int afm_width = 4) {
    ModelConfig cfg;
    cfg.pfm_width = 2;
    cfg.mdcm_width = 2;
    cfg.afm_width = afm_width;
    cfg.ablation = Ablation::mdcm_only;
    DpfnetParams m = init_model<float>(cfg, 0);
    visit_params(m, [](const std::string&, Tensor& t) { std::fill(t.data.begin(), t.data.end(), 0.0f); });
    for (std::int64_t o = 0; o < afm_width; ++o) m.afm.lift.w.at(o, o % 3, 1, 1) = 1.0f;
    for (std::int64_t o = 0; o < 3; ++o) m.afm.proj.w.at(o, o, 1, 1) = 1.0f;
    return m;
}

template <class S>
TensorT<S> random_tensor(const Shape& shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
    TensorT<S> t(shape);
    for (auto& v : t.data) v = static_cast<S>(rng.uniform(lo, hi));
    return t;
}

// smooth synthetic ground truth: box-blurred uniform noise mapped into
// [lo, hi]; smoothness keeps overfit runs honest and fast
template <class S>
TensorT<S> smooth_image(std::int64_t h, std::int64_t w, Rng& rng, double lo = 0.15, double hi = 0.9) {
    TensorT<S> img(Shape{3, h, w});
    std::vector<double> noise(static_cast<std::size_t>(h * w));
    for (std::int64_t c = 0; c < 3; ++c) {
        for (auto& v : noise) v = rng.uniform();
        for (int pass = 0; pass < 3; ++pass) {  // separable 5-tap box blur
            std::vector<double> tmp = noise;
            for (std::int64_t y = 0; y < h; ++y)
                for (std::int64_t x = 0; x < w; ++x) {
                    double acc = 0.0;
                    for (int t = -2; t <= 2; ++t) {
                        std::int64_t xx = std::clamp<std::int64_t>(x + t, 0, w - 1);
                        acc += tmp[static_cast<std::size_t>(y * w + xx)];
                    }
                    noise[static_cast<std::size_t>(y * w + x)] = acc / 5.0;
                }
            tmp = noise;
            for (std::int64_t y = 0; y < h; ++y)
                for (std::int64_t x = 0; x < w; ++x) {
                    double acc = 0.0;
                    for (int t = -2; t <= 2; ++t) {
                        std::int64_t yy = std::clamp<std::int64_t>(y + t, 0, h - 1);
                        acc += tmp[static_cast<std::size_t>(yy * w + x)];
                    }
                    noise[static_cast<std::size_t>(y * w + x)] = acc / 5.0;
                }
        }
        double mn = noise[0], mx = noise[0];
        for (double v : noise) {
            mn = std::min(mn, v);
            mx = std::max(mx, v);
        }
        const double span = mx > mn ? mx - mn : 1.0;
        for (std::int64_t i = 0; i < h * w; ++i)
            img.data[static_cast<std::size_t>(c * h * w + i)] =
                static_cast<S>(lo + (hi - lo) * (noise[static_cast<std::size_t>(i)] - mn) / span);
    }
    return img;
}

// gt plus its gamma-darkened sibling (low = gt^2.2)
inline std::vector<LoadedPair> gamma_pairs(int count, std::int64_t h, std::int64_t w, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<LoadedPair> pairs;
    for (int i = 0; i < count; ++i) {
        LoadedPair p;
        p.name = "synthetic_" + std::to_string(i) + ".png";
        p.gt = smooth_image<float>(h, w, rng);
        p.low = p.gt;
        for (auto& v : p.low.data) v = std::pow(v, 2.2f);
        pairs.push_back(std::move(p));
    }
    return pairs;
}

class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        auto base = std::filesystem::temp_directory_path() / ("dpfnet_" + tag + "_XXXXXX");
        std::string tmpl = base.string();
        if (!mkdtemp(tmpl.data())) throw std::runtime_error("mkdtemp failed");
        path_ = tmpl;
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    const std::string& path() const { return path_; }
    std::string file(const std::string& name) const { return (std::filesystem::path(path_) / name).string(); }

private:
    std::string path_;
};

}  // namespace dpfnet::testing
