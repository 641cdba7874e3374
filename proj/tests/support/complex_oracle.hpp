#pragma once

#include <complex>

#include "dpfnet/tensor.hpp"

// Oracle for the phase-aware convolution: the complex cross-correlation
// (phi + j*psi) * (A + j*P) + (b_phi + j*b_psi), evaluated entirely with
// std::complex arithmetic and same zero padding.

namespace dpfnet::testing {

inline TensorT<double> complex_product_conv(const TensorT<double>& A, const TensorT<double>& P,
                                            const TensorT<double>& phi_w, const TensorT<double>& psi_w,
                                            const TensorT<double>& phi_b, const TensorT<double>& psi_b,
                                            bool want_imag) {
    using cd = std::complex<double>;
    const std::int64_t N = A.shape[0], C = A.shape[1], H = A.shape[2], W = A.shape[3];
    const std::int64_t O = phi_w.shape[0], K = phi_w.shape[2];
    const std::int64_t p = (K - 1) / 2;
    TensorT<double> out(Shape{N, O, H, W});
    for (std::int64_t n = 0; n < N; ++n)
        for (std::int64_t o = 0; o < O; ++o)
            for (std::int64_t h = 0; h < H; ++h)
                for (std::int64_t w = 0; w < W; ++w) {
                    cd acc(phi_b.data[static_cast<std::size_t>(o)], psi_b.data[static_cast<std::size_t>(o)]);
                    for (std::int64_t c = 0; c < C; ++c)
                        for (std::int64_t kh = 0; kh < K; ++kh)
                            for (std::int64_t kw = 0; kw < K; ++kw) {
                                const std::int64_t ih = h + kh - p, iw = w + kw - p;
                                if (ih < 0 || ih >= H || iw < 0 || iw >= W) continue;
                                const std::size_t widx = static_cast<std::size_t>(((o * C + c) * K + kh) * K + kw);
                                acc += cd(phi_w.data[widx], psi_w.data[widx]) * cd(A.at(n, c, ih, iw), P.at(n, c, ih, iw));
                            }
                    out.at(n, o, h, w) = want_imag ? acc.imag() : acc.real();
                }
    return out;
}

}  // namespace dpfnet::testing
