#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "dpfnet/loss.hpp"
#include "dpfnet/tensor.hpp"

namespace dpfnet {

inline constexpr double kPsnrCapDb = 99.0;

// 10*log10(1/MSE) for [0,1] images; zero MSE reports the 99 dB cap
template <class S>
double psnr(const TensorT<S>& x, const TensorT<S>& y) {
    require_same_shape(x, y, "psnr");
    double acc = 0.0;
    for (std::size_t i = 0; i < x.data.size(); ++i) {
        const double d = static_cast<double>(x.data[i]) - static_cast<double>(y.data[i]);
        acc += d * d;
    }
    const double mse = acc / static_cast<double>(x.numel());
    if (mse <= 0.0) return kPsnrCapDb;
    return std::min(kPsnrCapDb, 10.0 * std::log10(1.0 / mse));
}

// metric-path SSIM (no tape involvement expected from callers)
template <class S>
double ssim_metric(const TensorT<S>& x, const TensorT<S>& y, const SsimOptions& opt = {}) {
    return static_cast<double>(ssim_index(x, y, opt).item());
}

struct EvalRow {
    std::string name;
    double psnr_db = 0.0;
    double ssim = 0.0;
};

struct EvalReport {
    std::vector<EvalRow> rows;
    double mean_psnr_db = 0.0;
    double mean_ssim = 0.0;
    std::string checkpoint;
    std::string dataset;
    int skipped = 0;

    void finalize() {
        double ps = 0.0, ss = 0.0;
        for (const auto& r : rows) {
            ps += r.psnr_db;
            ss += r.ssim;
        }
        const double n = rows.empty() ? 1.0 : static_cast<double>(rows.size());
        mean_psnr_db = ps / n;
        mean_ssim = ss / n;
    }
};

}  // namespace dpfnet
