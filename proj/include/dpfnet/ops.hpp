#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "dpfnet/tape.hpp"
#include "dpfnet/tensor.hpp"

// Differentiable tensor ops. Forward functions are pure; when an input
// carries a tape handle the op records one node whose closure pushes
// adjoints into the parents' gradient buffers.

namespace dpfnet {

namespace detail {

// dot product with eight explicit accumulators: a fixed reassociation the
// vectorizer can use under strict FP, and identical results on every run
template <class S>
S dot(const S* a, const S* b, std::int64_t n) {
    S acc[8] = {};
    std::int64_t i = 0;
    for (; i + 8 <= n; i += 8)
        for (int k = 0; k < 8; ++k) acc[k] += a[i + k] * b[i + k];
    for (; i < n; ++i) acc[i % 8] += a[i] * b[i];
    return ((acc[0] + acc[1]) + (acc[2] + acc[3])) + ((acc[4] + acc[5]) + (acc[6] + acc[7]));
}

template <class S>
S sum_n(const S* a, std::int64_t n) {
    S acc[8] = {};
    std::int64_t i = 0;
    for (; i + 8 <= n; i += 8)
        for (int k = 0; k < 8; ++k) acc[k] += a[i + k];
    for (; i < n; ++i) acc[i % 8] += a[i];
    return ((acc[0] + acc[1]) + (acc[2] + acc[3])) + ((acc[4] + acc[5]) + (acc[6] + acc[7]));
}

template <class S, class Fwd, class Back>
TensorT<S> elementwise_binary(const TensorT<S>& a, const TensorT<S>& b, const char* what, Fwd fwd, Back back) {
    require_same_shape(a, b, what);
    TensorT<S> out(a.shape);
    for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] = fwd(a.data[i], b.data[i]);
    if (GradTapeT<S>* tape = tape_of<S>({&a, &b})) {
        out.tape = tape;
        out.node = tape->record(out.shape, back(a, b, out, node_of(a, tape), node_of(b, tape)));
    }
    return out;
}

}  // namespace detail

template <class S>
TensorT<S> add(const TensorT<S>& a, const TensorT<S>& b) {
    return detail::elementwise_binary<S>(
        a, b, "add", [](S x, S y) { return x + y; },
        [](const TensorT<S>&, const TensorT<S>&, const TensorT<S>&, int na, int nb) {
            return [na, nb](GradTapeT<S>& tape, const std::vector<S>& up) {
                tape.accumulate(na, up);
                tape.accumulate(nb, up);
            };
        });
}

template <class S>
TensorT<S> sub(const TensorT<S>& a, const TensorT<S>& b) {
    return detail::elementwise_binary<S>(
        a, b, "sub", [](S x, S y) { return x - y; },
        [](const TensorT<S>&, const TensorT<S>&, const TensorT<S>&, int na, int nb) {
            return [na, nb](GradTapeT<S>& tape, const std::vector<S>& up) {
                tape.accumulate(na, up);
                if (nb >= 0) {
                    std::vector<S> neg(up.size());
                    for (std::size_t i = 0; i < up.size(); ++i) neg[i] = -up[i];
                    tape.accumulate(nb, neg);
                }
            };
        });
}

template <class S>
TensorT<S> mul(const TensorT<S>& a, const TensorT<S>& b) {
    return detail::elementwise_binary<S>(
        a, b, "mul", [](S x, S y) { return x * y; },
        [](const TensorT<S>& a_, const TensorT<S>& b_, const TensorT<S>&, int na, int nb) {
            std::vector<S> av = (nb >= 0) ? a_.data : std::vector<S>();
            std::vector<S> bv = (na >= 0) ? b_.data : std::vector<S>();
            return [na, nb, av = std::move(av), bv = std::move(bv)](GradTapeT<S>& tape, const std::vector<S>& up) {
                if (na >= 0) {
                    std::vector<S> g(up.size());
                    for (std::size_t i = 0; i < up.size(); ++i) g[i] = up[i] * bv[i];
                    tape.accumulate(na, g);
                }
                if (nb >= 0) {
                    std::vector<S> g(up.size());
                    for (std::size_t i = 0; i < up.size(); ++i) g[i] = up[i] * av[i];
                    tape.accumulate(nb, g);
                }
            };
        });
}

// elementwise quotient; caller guarantees the denominator is bounded away
// from zero (SSIM terms carry the +C stabilizers)
template <class S>
TensorT<S> div(const TensorT<S>& a, const TensorT<S>& b) {
    return detail::elementwise_binary<S>(
        a, b, "div", [](S x, S y) { return x / y; },
        [](const TensorT<S>&, const TensorT<S>& b_, const TensorT<S>& out_, int na, int nb) {
            std::vector<S> bv = b_.data;
            std::vector<S> ov = (nb >= 0) ? out_.data : std::vector<S>();
            return [na, nb, bv = std::move(bv), ov = std::move(ov)](GradTapeT<S>& tape, const std::vector<S>& up) {
                if (na >= 0) {
                    std::vector<S> g(up.size());
                    for (std::size_t i = 0; i < up.size(); ++i) g[i] = up[i] / bv[i];
                    tape.accumulate(na, g);
                }
                if (nb >= 0) {
                    std::vector<S> g(up.size());
                    for (std::size_t i = 0; i < up.size(); ++i) g[i] = -up[i] * ov[i] / bv[i];
                    tape.accumulate(nb, g);
                }
            };
        });
}

template <class S>
TensorT<S> add_scalar(const TensorT<S>& a, S c) {
    TensorT<S> out(a.shape);
    for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] = a.data[i] + c;
    if (GradTapeT<S>* tape = tape_of<S>({&a})) {
        int na = a.node;
        out.tape = tape;
        out.node = tape->record(out.shape, [na](GradTapeT<S>& t, const std::vector<S>& up) { t.accumulate(na, up); });
    }
    return out;
}

template <class S>
TensorT<S> mul_scalar(const TensorT<S>& a, S c) {
    TensorT<S> out(a.shape);
    for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] = a.data[i] * c;
    if (GradTapeT<S>* tape = tape_of<S>({&a})) {
        int na = a.node;
        out.tape = tape;
        out.node = tape->record(out.shape, [na, c](GradTapeT<S>& t, const std::vector<S>& up) {
            std::vector<S> g(up.size());
            for (std::size_t i = 0; i < up.size(); ++i) g[i] = up[i] * c;
            t.accumulate(na, g);
        });
    }
    return out;
}

template <class S>
TensorT<S> relu(const TensorT<S>& x) {
    TensorT<S> out(x.shape);
    for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] = x.data[i] > S(0) ? x.data[i] : S(0);
    if (GradTapeT<S>* tape = tape_of<S>({&x})) {
        int nx = x.node;
        std::vector<S> xv = x.data;
        out.tape = tape;
        out.node = tape->record(out.shape, [nx, xv = std::move(xv)](GradTapeT<S>& t, const std::vector<S>& up) {
            std::vector<S> g(up.size());
            for (std::size_t i = 0; i < up.size(); ++i) g[i] = xv[i] > S(0) ? up[i] : S(0);
            t.accumulate(nx, g);
        });
    }
    return out;
}

template <class S>
TensorT<S> leaky_relu(const TensorT<S>& x, S slope) {
    if (!(slope > S(0) && slope < S(1))) throw std::invalid_argument("leaky_relu: slope must be in (0,1)");
    TensorT<S> out(x.shape);
    for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] = x.data[i] >= S(0) ? x.data[i] : slope * x.data[i];
    if (GradTapeT<S>* tape = tape_of<S>({&x})) {
        int nx = x.node;
        std::vector<S> xv = x.data;
        out.tape = tape;
        out.node = tape->record(out.shape, [nx, slope, xv = std::move(xv)](GradTapeT<S>& t, const std::vector<S>& up) {
            std::vector<S> g(up.size());
            for (std::size_t i = 0; i < up.size(); ++i) g[i] = xv[i] >= S(0) ? up[i] : slope * up[i];
            t.accumulate(nx, g);
        });
    }
    return out;
}

template <class S>
TensorT<S> sum(const TensorT<S>& x) {
    double acc = 0.0;
    for (S v : x.data) acc += static_cast<double>(v);
    TensorT<S> out = TensorT<S>::scalar(static_cast<S>(acc));
    if (GradTapeT<S>* tape = tape_of<S>({&x})) {
        int nx = x.node;
        std::int64_t n = x.numel();
        out.tape = tape;
        out.node = tape->record(out.shape, [nx, n](GradTapeT<S>& t, const std::vector<S>& up) {
            std::vector<S> g(static_cast<std::size_t>(n), up[0]);
            t.accumulate(nx, g);
        });
    }
    return out;
}

template <class S>
TensorT<S> mean(const TensorT<S>& x) {
    if (x.numel() == 0) throw std::invalid_argument("mean: empty tensor");
    double acc = 0.0;
    for (S v : x.data) acc += static_cast<double>(v);
    TensorT<S> out = TensorT<S>::scalar(static_cast<S>(acc / static_cast<double>(x.numel())));
    if (GradTapeT<S>* tape = tape_of<S>({&x})) {
        int nx = x.node;
        std::int64_t n = x.numel();
        out.tape = tape;
        out.node = tape->record(out.shape, [nx, n](GradTapeT<S>& t, const std::vector<S>& up) {
            std::vector<S> g(static_cast<std::size_t>(n), up[0] / static_cast<S>(n));
            t.accumulate(nx, g);
        });
    }
    return out;
}

// ---------------------------------------------------------------------------
// channel plumbing

template <class S>
TensorT<S> concat_channels(const std::vector<const TensorT<S>*>& parts) {
    if (parts.empty()) throw std::invalid_argument("concat_channels: no parts");
    for (const auto* p : parts) require_rank(*p, 4, "concat_channels");
    const Shape& s0 = parts[0]->shape;
    std::int64_t ctotal = 0;
    for (const auto* p : parts) {
        if (p->shape[0] != s0[0] || p->shape[2] != s0[2] || p->shape[3] != s0[3])
            throw std::invalid_argument("concat_channels: batch/spatial mismatch " + shape_str(p->shape) + " vs " +
                                        shape_str(s0));
        ctotal += p->shape[1];
    }
    const std::int64_t N = s0[0], H = s0[2], W = s0[3], HW = H * W;
    TensorT<S> out(Shape{N, ctotal, H, W});
    std::int64_t coff = 0;
    for (const auto* p : parts) {
        const std::int64_t C = p->shape[1];
        for (std::int64_t n = 0; n < N; ++n)
            std::copy_n(p->data.data() + n * C * HW, C * HW, out.data.data() + (n * ctotal + coff) * HW);
        coff += C;
    }

    std::vector<const TensorT<S>*> view(parts.begin(), parts.end());
    GradTapeT<S>* tape = nullptr;
    for (const auto* p : view) tape = tape ? tape : p->tape;
    for (const auto* p : view)
        if (p->tape && p->tape != tape) throw std::invalid_argument("concat_channels: inputs on different tapes");
    if (tape) {
        struct Part {
            int node;
            std::int64_t channels;
        };
        std::vector<Part> spans;
        for (const auto* p : parts) spans.push_back(Part{node_of(*p, tape), p->shape[1]});
        out.tape = tape;
        out.node = tape->record(out.shape, [spans, N, HW, ctotal](GradTapeT<S>& t, const std::vector<S>& up) {
            std::int64_t coff = 0;
            for (const auto& part : spans) {
                if (part.node >= 0) {
                    std::vector<S> g(static_cast<std::size_t>(N * part.channels * HW));
                    for (std::int64_t n = 0; n < N; ++n)
                        std::copy_n(up.data() + (n * ctotal + coff) * HW, part.channels * HW,
                                    g.data() + n * part.channels * HW);
                    t.accumulate(part.node, g);
                }
                coff += part.channels;
            }
        });
    }
    return out;
}

template <class S>
TensorT<S> slice_channels(const TensorT<S>& x, std::int64_t c0, std::int64_t c1) {
    require_rank(x, 4, "slice_channels");
    if (c0 < 0 || c1 > x.shape[1] || c0 >= c1) throw std::invalid_argument("slice_channels: bad channel range");
    const std::int64_t N = x.shape[0], C = x.shape[1], H = x.shape[2], W = x.shape[3], HW = H * W;
    const std::int64_t Cs = c1 - c0;
    TensorT<S> out(Shape{N, Cs, H, W});
    for (std::int64_t n = 0; n < N; ++n)
        std::copy_n(x.data.data() + (n * C + c0) * HW, Cs * HW, out.data.data() + n * Cs * HW);
    if (GradTapeT<S>* tape = tape_of<S>({&x})) {
        int nx = x.node;
        out.tape = tape;
        out.node = tape->record(out.shape, [nx, N, C, c0, Cs, HW](GradTapeT<S>& t, const std::vector<S>& up) {
            std::vector<S> g(static_cast<std::size_t>(N * C * HW), S(0));
            for (std::int64_t n = 0; n < N; ++n)
                std::copy_n(up.data() + n * Cs * HW, Cs * HW, g.data() + (n * C + c0) * HW);
            t.accumulate(nx, g);
        });
    }
    return out;
}

// per-pixel softmax across channels, stabilized by max subtraction
template <class S>
TensorT<S> softmax_channels(const TensorT<S>& x) {
    require_rank(x, 4, "softmax_channels");
    const std::int64_t N = x.shape[0], K = x.shape[1], H = x.shape[2], W = x.shape[3], HW = H * W;
    TensorT<S> out(x.shape);
    for (std::int64_t n = 0; n < N; ++n) {
        const S* xs = x.data.data() + n * K * HW;
        S* os = out.data.data() + n * K * HW;
        for (std::int64_t p = 0; p < HW; ++p) {
            S m = xs[p];
            for (std::int64_t k = 1; k < K; ++k) m = std::max(m, xs[k * HW + p]);
            double z = 0.0;
            for (std::int64_t k = 0; k < K; ++k) {
                double e = std::exp(static_cast<double>(xs[k * HW + p] - m));
                os[k * HW + p] = static_cast<S>(e);
                z += e;
            }
            for (std::int64_t k = 0; k < K; ++k) os[k * HW + p] = static_cast<S>(os[k * HW + p] / z);
        }
    }
    if (GradTapeT<S>* tape = tape_of<S>({&x})) {
        int nx = x.node;
        std::vector<S> sv = out.data;
        out.tape = tape;
        out.node = tape->record(out.shape, [nx, sv = std::move(sv), N, K, HW](GradTapeT<S>& t, const std::vector<S>& up) {
            std::vector<S> g(up.size());
            for (std::int64_t n = 0; n < N; ++n) {
                const S* s = sv.data() + n * K * HW;
                const S* u = up.data() + n * K * HW;
                S* gp = g.data() + n * K * HW;
                for (std::int64_t p = 0; p < HW; ++p) {
                    double dot = 0.0;
                    for (std::int64_t k = 0; k < K; ++k) dot += static_cast<double>(u[k * HW + p]) * s[k * HW + p];
                    for (std::int64_t k = 0; k < K; ++k)
                        gp[k * HW + p] = s[k * HW + p] * (u[k * HW + p] - static_cast<S>(dot));
                }
            }
            t.accumulate(nx, g);
        });
    }
    return out;
}

// x[N,C,H,W] scaled per pixel by w[N,1,H,W]
template <class S>
TensorT<S> broadcast_mul(const TensorT<S>& x, const TensorT<S>& w) {
    require_rank(x, 4, "broadcast_mul");
    require_rank(w, 4, "broadcast_mul");
    if (w.shape[1] != 1 || w.shape[0] != x.shape[0] || w.shape[2] != x.shape[2] || w.shape[3] != x.shape[3])
        throw std::invalid_argument("broadcast_mul: weight must be [N,1,H,W] matching x " + shape_str(x.shape));
    const std::int64_t N = x.shape[0], C = x.shape[1], HW = x.shape[2] * x.shape[3];
    TensorT<S> out(x.shape);
    for (std::int64_t n = 0; n < N; ++n)
        for (std::int64_t c = 0; c < C; ++c) {
            const S* xs = x.data.data() + (n * C + c) * HW;
            const S* ws = w.data.data() + n * HW;
            S* os = out.data.data() + (n * C + c) * HW;
            for (std::int64_t p = 0; p < HW; ++p) os[p] = xs[p] * ws[p];
        }
    if (GradTapeT<S>* tape = tape_of<S>({&x, &w})) {
        int nx = node_of(x, tape), nw = node_of(w, tape);
        std::vector<S> xv = (nw >= 0) ? x.data : std::vector<S>();
        std::vector<S> wv = (nx >= 0) ? w.data : std::vector<S>();
        out.tape = tape;
        out.node = tape->record(out.shape, [nx, nw, N, C, HW, xv = std::move(xv),
                                            wv = std::move(wv)](GradTapeT<S>& t, const std::vector<S>& up) {
            if (nx >= 0) {
                std::vector<S> g(up.size());
                for (std::int64_t n = 0; n < N; ++n)
                    for (std::int64_t c = 0; c < C; ++c)
                        for (std::int64_t p = 0; p < HW; ++p)
                            g[(n * C + c) * HW + p] = up[(n * C + c) * HW + p] * wv[n * HW + p];
                t.accumulate(nx, g);
            }
            if (nw >= 0) {
                std::vector<S> g(static_cast<std::size_t>(N * HW), S(0));
                for (std::int64_t n = 0; n < N; ++n)
                    for (std::int64_t c = 0; c < C; ++c)
                        for (std::int64_t p = 0; p < HW; ++p)
                            g[n * HW + p] += up[(n * C + c) * HW + p] * xv[(n * C + c) * HW + p];
                t.accumulate(nw, g);
            }
        });
    }
    return out;
}

// ---------------------------------------------------------------------------
// convolution

// Dilated 2-D cross-correlation with "same" zero padding. x[N,C,H,W],
// w[O,C,kh,kw] (odd taps), bias[O]; output [N,O,H,W].
template <class S>
TensorT<S> conv2d(const TensorT<S>& x, const TensorT<S>& w, const TensorT<S>& bias, int dilation = 1) {
    require_rank(x, 4, "conv2d input");
    require_rank(w, 4, "conv2d kernel");
    require_rank(bias, 1, "conv2d bias");
    if (dilation <= 0) throw std::invalid_argument("conv2d: dilation must be positive");
    if (w.shape[1] != x.shape[1])
        throw std::invalid_argument("conv2d: kernel channels " + std::to_string(w.shape[1]) +
                                    " do not match input channels " + std::to_string(x.shape[1]));
    if (w.shape[2] % 2 == 0 || w.shape[3] % 2 == 0) throw std::invalid_argument("conv2d: kernel extents must be odd");
    if (bias.shape[0] != w.shape[0]) throw std::invalid_argument("conv2d: bias length must equal output channels");

    const std::int64_t N = x.shape[0], C = x.shape[1], H = x.shape[2], W = x.shape[3];
    const std::int64_t O = w.shape[0], KH = w.shape[2], KW = w.shape[3];
    const std::int64_t d = dilation;
    const std::int64_t HW = H * W;

    TensorT<S> out(Shape{N, O, H, W});
    for (std::int64_t n = 0; n < N; ++n)
        for (std::int64_t o = 0; o < O; ++o) {
            S* op = out.data.data() + (n * O + o) * HW;
            std::fill_n(op, HW, bias.data[static_cast<std::size_t>(o)]);
            for (std::int64_t c = 0; c < C; ++c) {
                const S* xp = x.data.data() + (n * C + c) * HW;
                const S* wp = w.data.data() + (o * C + c) * KH * KW;
                for (std::int64_t kh = 0; kh < KH; ++kh) {
                    const std::int64_t dh = kh * d - d * (KH - 1) / 2;
                    const std::int64_t h0 = std::max<std::int64_t>(0, -dh), h1 = std::min(H, H - dh);
                    for (std::int64_t kw = 0; kw < KW; ++kw) {
                        const S wv = wp[kh * KW + kw];
                        if (wv == S(0)) continue;
                        const std::int64_t dw = kw * d - d * (KW - 1) / 2;
                        const std::int64_t w0 = std::max<std::int64_t>(0, -dw), w1 = std::min(W, W - dw);
                        for (std::int64_t h = h0; h < h1; ++h) {
                            S* orow = op + h * W + w0;
                            const S* xrow = xp + (h + dh) * W + w0 + dw;
                            const std::int64_t len = w1 - w0;
                            for (std::int64_t i = 0; i < len; ++i) orow[i] += wv * xrow[i];
                        }
                    }
                }
            }
        }

    if (GradTapeT<S>* tape = tape_of<S>({&x, &w, &bias})) {
        int nx = node_of(x, tape), nw = node_of(w, tape), nb = node_of(bias, tape);
        std::vector<S> xv = (nw >= 0) ? x.data : std::vector<S>();
        std::vector<S> wv = (nx >= 0) ? w.data : std::vector<S>();
        out.tape = tape;
        out.node = tape->record(
            out.shape, [=, xv = std::move(xv), wv = std::move(wv)](GradTapeT<S>& t, const std::vector<S>& up) {
                if (nb >= 0) {
                    std::vector<S> gb(static_cast<std::size_t>(O), S(0));
                    for (std::int64_t n = 0; n < N; ++n)
                        for (std::int64_t o = 0; o < O; ++o)
                            gb[static_cast<std::size_t>(o)] += detail::sum_n(up.data() + (n * O + o) * HW, HW);
                    t.accumulate(nb, gb);
                }
                if (nx >= 0) {
                    std::vector<S>* gx = t.grad_buffer(nx);
                    for (std::int64_t n = 0; n < N; ++n)
                        for (std::int64_t o = 0; o < O; ++o) {
                            const S* us = up.data() + (n * O + o) * HW;
                            for (std::int64_t c = 0; c < C; ++c) {
                                S* gp = gx->data() + (n * C + c) * HW;
                                const S* wp = wv.data() + (o * C + c) * KH * KW;
                                for (std::int64_t kh = 0; kh < KH; ++kh) {
                                    const std::int64_t dh = kh * d - d * (KH - 1) / 2;
                                    const std::int64_t h0 = std::max<std::int64_t>(0, -dh), h1 = std::min(H, H - dh);
                                    for (std::int64_t kw = 0; kw < KW; ++kw) {
                                        const S wk = wp[kh * KW + kw];
                                        if (wk == S(0)) continue;
                                        const std::int64_t dw = kw * d - d * (KW - 1) / 2;
                                        const std::int64_t w0 = std::max<std::int64_t>(0, -dw), w1 = std::min(W, W - dw);
                                        for (std::int64_t h = h0; h < h1; ++h) {
                                            S* grow = gp + (h + dh) * W + w0 + dw;
                                            const S* urow = us + h * W + w0;
                                            const std::int64_t len = w1 - w0;
                                            for (std::int64_t i = 0; i < len; ++i) grow[i] += wk * urow[i];
                                        }
                                    }
                                }
                            }
                        }
                }
                if (nw >= 0) {
                    std::vector<S> gw(static_cast<std::size_t>(O * C * KH * KW), S(0));
                    for (std::int64_t n = 0; n < N; ++n)
                        for (std::int64_t o = 0; o < O; ++o) {
                            const S* us = up.data() + (n * O + o) * HW;
                            for (std::int64_t c = 0; c < C; ++c) {
                                const S* xp = xv.data() + (n * C + c) * HW;
                                for (std::int64_t kh = 0; kh < KH; ++kh) {
                                    const std::int64_t dh = kh * d - d * (KH - 1) / 2;
                                    const std::int64_t h0 = std::max<std::int64_t>(0, -dh), h1 = std::min(H, H - dh);
                                    for (std::int64_t kw = 0; kw < KW; ++kw) {
                                        const std::int64_t dw = kw * d - d * (KW - 1) / 2;
                                        const std::int64_t w0 = std::max<std::int64_t>(0, -dw), w1 = std::min(W, W - dw);
                                        S acc = S(0);
                                        for (std::int64_t h = h0; h < h1; ++h)
                                            acc += detail::dot(us + h * W + w0, xp + (h + dh) * W + w0 + dw, w1 - w0);
                                        gw[static_cast<std::size_t>((o * C + c) * KH * KW + kh * KW + kw)] += acc;
                                    }
                                }
                            }
                        }
                    t.accumulate(nw, gw);
                }
            });
    }
    return out;
}

// 2x2 average pooling, floor semantics on odd extents
template <class S>
TensorT<S> avg_pool2(const TensorT<S>& x) {
    require_rank(x, 4, "avg_pool2");
    const std::int64_t N = x.shape[0], C = x.shape[1], H = x.shape[2], W = x.shape[3];
    const std::int64_t Ho = H / 2, Wo = W / 2;
    if (Ho == 0 || Wo == 0) throw std::invalid_argument("avg_pool2: input too small " + shape_str(x.shape));
    TensorT<S> out(Shape{N, C, Ho, Wo});
    for (std::int64_t nc = 0; nc < N * C; ++nc) {
        const S* xp = x.data.data() + nc * H * W;
        S* op = out.data.data() + nc * Ho * Wo;
        for (std::int64_t h = 0; h < Ho; ++h)
            for (std::int64_t w = 0; w < Wo; ++w)
                op[h * Wo + w] = static_cast<S>(0.25) * (xp[(2 * h) * W + 2 * w] + xp[(2 * h) * W + 2 * w + 1] +
                                                         xp[(2 * h + 1) * W + 2 * w] + xp[(2 * h + 1) * W + 2 * w + 1]);
    }
    if (GradTapeT<S>* tape = tape_of<S>({&x})) {
        int nx = x.node;
        out.tape = tape;
        out.node = tape->record(out.shape, [nx, N, C, H, W, Ho, Wo](GradTapeT<S>& t, const std::vector<S>& up) {
            std::vector<S> g(static_cast<std::size_t>(N * C * H * W), S(0));
            for (std::int64_t nc = 0; nc < N * C; ++nc) {
                S* gp = g.data() + nc * H * W;
                const S* us = up.data() + nc * Ho * Wo;
                for (std::int64_t h = 0; h < Ho; ++h)
                    for (std::int64_t w = 0; w < Wo; ++w) {
                        const S q = static_cast<S>(0.25) * us[h * Wo + w];
                        gp[(2 * h) * W + 2 * w] += q;
                        gp[(2 * h) * W + 2 * w + 1] += q;
                        gp[(2 * h + 1) * W + 2 * w] += q;
                        gp[(2 * h + 1) * W + 2 * w + 1] += q;
                    }
            }
            t.accumulate(nx, g);
        });
    }
    return out;
}

namespace detail {

inline std::vector<double> gaussian_window(int window, double sigma) {
    std::vector<double> g(static_cast<std::size_t>(window));
    const double c = (window - 1) / 2.0;
    double total = 0.0;
    for (int i = 0; i < window; ++i) {
        g[static_cast<std::size_t>(i)] = std::exp(-0.5 * (i - c) * (i - c) / (sigma * sigma));
        total += g[static_cast<std::size_t>(i)];
    }
    for (auto& v : g) v /= total;
    return g;
}

// horizontal valid pass: [H,W] -> [H, W-win+1]
template <class S>
void blur_rows(const S* in, S* out, std::int64_t H, std::int64_t W, const std::vector<double>& g) {
    const std::int64_t Wo = W - static_cast<std::int64_t>(g.size()) + 1;
    for (std::int64_t h = 0; h < H; ++h)
        for (std::int64_t j = 0; j < Wo; ++j) {
            double acc = 0.0;
            for (std::size_t t = 0; t < g.size(); ++t) acc += g[t] * static_cast<double>(in[h * W + j + static_cast<std::int64_t>(t)]);
            out[h * Wo + j] = static_cast<S>(acc);
        }
}

// vertical valid pass: [H,W] -> [H-win+1, W]
template <class S>
void blur_cols(const S* in, S* out, std::int64_t H, std::int64_t W, const std::vector<double>& g) {
    const std::int64_t Ho = H - static_cast<std::int64_t>(g.size()) + 1;
    for (std::int64_t i = 0; i < Ho; ++i)
        for (std::int64_t w = 0; w < W; ++w) {
            double acc = 0.0;
            for (std::size_t t = 0; t < g.size(); ++t) acc += g[t] * static_cast<double>(in[(i + static_cast<std::int64_t>(t)) * W + w]);
            out[i * W + w] = static_cast<S>(acc);
        }
}

}  // namespace detail

// Separable Gaussian local mean over the valid region (used by SSIM);
// output spatial size shrinks by window-1 in each direction.
template <class S>
TensorT<S> gauss_blur_valid(const TensorT<S>& x, int window, double sigma) {
    require_rank(x, 4, "gauss_blur_valid");
    if (window < 1 || window % 2 == 0) throw std::invalid_argument("gauss_blur_valid: window must be odd and positive");
    const std::int64_t N = x.shape[0], C = x.shape[1], H = x.shape[2], W = x.shape[3];
    const std::int64_t Ho = H - window + 1, Wo = W - window + 1;
    if (Ho < 1 || Wo < 1)
        throw std::invalid_argument("gauss_blur_valid: image " + shape_str(x.shape) + " smaller than window " +
                                    std::to_string(window));
    const std::vector<double> g = detail::gaussian_window(window, sigma);

    TensorT<S> out(Shape{N, C, Ho, Wo});
    std::vector<S> tmp(static_cast<std::size_t>(H * Wo));
    for (std::int64_t nc = 0; nc < N * C; ++nc) {
        detail::blur_rows(x.data.data() + nc * H * W, tmp.data(), H, W, g);
        detail::blur_cols(tmp.data(), out.data.data() + nc * Ho * Wo, H, Wo, g);
    }

    if (GradTapeT<S>* tape = tape_of<S>({&x})) {
        int nx = x.node;
        out.tape = tape;
        out.node = tape->record(out.shape, [nx, N, C, H, W, Ho, Wo, g](GradTapeT<S>& t, const std::vector<S>& up) {
            // transpose of each valid pass is a scatter with the same window
            std::vector<S> g_mid(static_cast<std::size_t>(H * Wo));
            std::vector<S>* gx = t.grad_buffer(nx);
            if (!gx) return;
            for (std::int64_t nc = 0; nc < N * C; ++nc) {
                std::fill(g_mid.begin(), g_mid.end(), S(0));
                const S* us = up.data() + nc * Ho * Wo;
                for (std::int64_t i = 0; i < Ho; ++i)
                    for (std::int64_t w = 0; w < Wo; ++w) {
                        const double u = static_cast<double>(us[i * Wo + w]);
                        for (std::size_t tt = 0; tt < g.size(); ++tt)
                            g_mid[(i + static_cast<std::int64_t>(tt)) * Wo + w] += static_cast<S>(g[tt] * u);
                    }
                S* gp = gx->data() + nc * H * W;
                for (std::int64_t h = 0; h < H; ++h)
                    for (std::int64_t j = 0; j < Wo; ++j) {
                        const double u = static_cast<double>(g_mid[h * Wo + j]);
                        for (std::size_t tt = 0; tt < g.size(); ++tt)
                            gp[h * W + j + static_cast<std::int64_t>(tt)] += static_cast<S>(g[tt] * u);
                    }
            }
        });
    }
    return out;
}

// metric/IO helper, intentionally outside the autodiff graph
template <class S>
TensorT<S> clamp01(const TensorT<S>& x) {
    TensorT<S> out = x.detached();
    for (auto& v : out.data) v = std::min(S(1), std::max(S(0), v));
    return out;
}

}  // namespace dpfnet
