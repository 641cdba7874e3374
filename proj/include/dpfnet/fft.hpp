#pragma once

#include <complex>
#include <cstdint>
#include <map>
#include <memory>
#include <vector>

#include "dpfnet/ops.hpp"
#include "dpfnet/tape.hpp"
#include "dpfnet/tensor.hpp"

// 2-D discrete Fourier machinery: forward transform is the unnormalized
// sum, the inverse carries 1/(MN). Lengths factorable into {2,3,5} take the
// mixed-radix path; anything else goes through the Bluestein chirp
// transform. All internal arithmetic is double regardless of the tensor
// scalar type.

namespace dpfnet {

namespace fftdetail {

using cd = std::complex<double>;
inline constexpr double kPi = 3.14159265358979323846;

inline bool smooth235(std::int64_t n) {
    for (std::int64_t f : {2, 3, 5})
        while (n % f == 0) n /= f;
    return n == 1;
}

inline std::int64_t next_pow2(std::int64_t n) {
    std::int64_t m = 1;
    while (m < n) m <<= 1;
    return m;
}

// forward twiddles W_n^k = exp(-2*pi*i*k/n), cached per length
inline const std::vector<cd>& twiddles(std::int64_t n) {
    thread_local std::map<std::int64_t, std::vector<cd>> cache;
    auto it = cache.find(n);
    if (it != cache.end()) return it->second;
    std::vector<cd> tw(static_cast<std::size_t>(n));
    for (std::int64_t k = 0; k < n; ++k) tw[static_cast<std::size_t>(k)] = std::polar(1.0, -2.0 * kPi * static_cast<double>(k) / static_cast<double>(n));
    return cache.emplace(n, std::move(tw)).first->second;
}

// recursive mixed-radix Cooley-Tukey over factors {2,3,5};
// `tw` is the twiddle table of the top-level length, `tw_stride` maps the
// current sub-length onto it. inverse uses conjugated twiddles.
inline void fft_rec(const cd* in, std::int64_t in_stride, cd* out, std::int64_t n, const std::vector<cd>& tw,
                    std::int64_t tw_stride, bool inverse) {
    if (n == 1) {
        out[0] = in[0];
        return;
    }
    std::int64_t r = (n % 2 == 0) ? 2 : (n % 3 == 0) ? 3 : 5;
    const std::int64_t m = n / r;
    for (std::int64_t q = 0; q < r; ++q)
        fft_rec(in + q * in_stride, in_stride * r, out + q * m, m, tw, tw_stride * r, inverse);

    const std::int64_t n_top = static_cast<std::int64_t>(tw.size());
    cd t[5], res[5];
    for (std::int64_t k = 0; k < m; ++k) {
        for (std::int64_t q = 0; q < r; ++q) {
            cd w = tw[static_cast<std::size_t>((q * k * tw_stride) % n_top)];
            if (inverse) w = std::conj(w);
            t[q] = out[q * m + k] * w;
        }
        for (std::int64_t s = 0; s < r; ++s) {
            cd acc = t[0];
            for (std::int64_t q = 1; q < r; ++q) {
                cd wr = tw[static_cast<std::size_t>((((q * s) % r) * (n_top / r)) % n_top)];
                if (inverse) wr = std::conj(wr);
                acc += t[q] * wr;
            }
            res[s] = acc;
        }
        for (std::int64_t s = 0; s < r; ++s) out[s * m + k] = res[s];
    }
}

// unnormalized transform of a smooth-length buffer
inline void fft_smooth(std::vector<cd>& a, bool inverse) {
    const std::int64_t n = static_cast<std::int64_t>(a.size());
    if (n == 1) return;
    std::vector<cd> out(a.size());
    fft_rec(a.data(), 1, out.data(), n, twiddles(n), 1, inverse);
    a.swap(out);
}

struct BluesteinPlan {
    std::int64_t n, m;
    std::vector<cd> chirp;    // exp(-i*pi*k^2/n), k < n
    std::vector<cd> kernel_f; // forward fft of the padded conjugate chirp
};

inline const BluesteinPlan& bluestein_plan(std::int64_t n) {
    thread_local std::map<std::int64_t, BluesteinPlan> cache;
    auto it = cache.find(n);
    if (it != cache.end()) return it->second;

    BluesteinPlan plan;
    plan.n = n;
    plan.m = next_pow2(2 * n - 1);
    plan.chirp.resize(static_cast<std::size_t>(n));
    for (std::int64_t k = 0; k < n; ++k) {
        // k^2 mod 2n keeps the phase argument small and exact
        const std::int64_t k2 = (k * k) % (2 * n);
        plan.chirp[static_cast<std::size_t>(k)] = std::polar(1.0, -kPi * static_cast<double>(k2) / static_cast<double>(n));
    }
    std::vector<cd> b(static_cast<std::size_t>(plan.m), cd(0.0, 0.0));
    for (std::int64_t k = 0; k < n; ++k) {
        const cd v = std::conj(plan.chirp[static_cast<std::size_t>(k)]);
        b[static_cast<std::size_t>(k)] = v;
        if (k > 0) b[static_cast<std::size_t>(plan.m - k)] = v;
    }
    fft_smooth(b, false);
    plan.kernel_f = std::move(b);
    return cache.emplace(n, std::move(plan)).first->second;
}

// unnormalized transform of arbitrary length via chirp convolution
inline void fft_bluestein(std::vector<cd>& a, bool inverse) {
    const std::int64_t n = static_cast<std::int64_t>(a.size());
    const BluesteinPlan& plan = bluestein_plan(n);
    std::vector<cd> buf(static_cast<std::size_t>(plan.m), cd(0.0, 0.0));
    for (std::int64_t k = 0; k < n; ++k) {
        cd c = plan.chirp[static_cast<std::size_t>(k)];
        if (inverse) c = std::conj(c);
        buf[static_cast<std::size_t>(k)] = a[static_cast<std::size_t>(k)] * c;
    }
    fft_smooth(buf, false);
    if (!inverse)
        for (std::int64_t k = 0; k < plan.m; ++k) buf[static_cast<std::size_t>(k)] *= plan.kernel_f[static_cast<std::size_t>(k)];
    else
        for (std::int64_t k = 0; k < plan.m; ++k) buf[static_cast<std::size_t>(k)] *= std::conj(plan.kernel_f[static_cast<std::size_t>(k)]);
    fft_smooth(buf, true);
    const double inv_m = 1.0 / static_cast<double>(plan.m);
    for (std::int64_t k = 0; k < n; ++k) {
        cd c = plan.chirp[static_cast<std::size_t>(k)];
        if (inverse) c = std::conj(c);
        a[static_cast<std::size_t>(k)] = buf[static_cast<std::size_t>(k)] * inv_m * c;
    }
}

inline void fft_any(std::vector<cd>& a, bool inverse) {
    if (a.size() <= 1) return;
    if (smooth235(static_cast<std::int64_t>(a.size())))
        fft_smooth(a, inverse);
    else
        fft_bluestein(a, inverse);
}

// unnormalized 2-D transform of a row-major H x W plane
inline void dft2_plane(std::vector<cd>& plane, std::int64_t H, std::int64_t W, bool inverse) {
    std::vector<cd> row(static_cast<std::size_t>(W));
    for (std::int64_t h = 0; h < H; ++h) {
        std::copy_n(plane.data() + h * W, W, row.data());
        fft_any(row, inverse);
        std::copy_n(row.data(), W, plane.data() + h * W);
    }
    std::vector<cd> col(static_cast<std::size_t>(H));
    for (std::int64_t w = 0; w < W; ++w) {
        for (std::int64_t h = 0; h < H; ++h) col[static_cast<std::size_t>(h)] = plane[static_cast<std::size_t>(h * W + w)];
        fft_any(col, inverse);
        for (std::int64_t h = 0; h < H; ++h) plane[static_cast<std::size_t>(h * W + w)] = col[static_cast<std::size_t>(h)];
    }
}

// per-plane transform over [N,C,H,W] tensors held as separate re/im arrays
template <class S, class T>
void dft2_batched(const S* re, const S* im, T* out_re, T* out_im, std::int64_t planes, std::int64_t H, std::int64_t W,
                  bool inverse, double scale) {
    std::vector<cd> plane(static_cast<std::size_t>(H * W));
    for (std::int64_t p = 0; p < planes; ++p) {
        const std::int64_t off = p * H * W;
        for (std::int64_t i = 0; i < H * W; ++i)
            plane[static_cast<std::size_t>(i)] = cd(re ? static_cast<double>(re[off + i]) : 0.0,
                                                    im ? static_cast<double>(im[off + i]) : 0.0);
        dft2_plane(plane, H, W, inverse);
        for (std::int64_t i = 0; i < H * W; ++i) {
            if (out_re) out_re[off + i] = static_cast<T>(plane[static_cast<std::size_t>(i)].real() * scale);
            if (out_im) out_im[off + i] = static_cast<T>(plane[static_cast<std::size_t>(i)].imag() * scale);
        }
    }
}

}  // namespace fftdetail

// paired real/imaginary planes of identical shape
template <class S>
struct ComplexTensorT {
    TensorT<S> re, im;
};
using ComplexTensor = ComplexTensorT<float>;

// polar view of a spectrum: amplitude |F| and phase atan2(im, re)
template <class S>
struct SpectrumT {
    TensorT<S> amplitude, phase;
};
using Spectrum = SpectrumT<float>;

// gradient guard at the |z| -> 0 singularity of amplitude/phase
inline constexpr double kPolarEpsGuard = 1e-8;

// Unnormalized forward 2-D DFT of a real [N,C,H,W] tensor, one transform
// per batch/channel plane.
template <class S>
ComplexTensorT<S> fft2(const TensorT<S>& x) {
    require_rank(x, 4, "fft2");
    const std::int64_t planes = x.shape[0] * x.shape[1], H = x.shape[2], W = x.shape[3];
    ComplexTensorT<S> out{TensorT<S>(x.shape), TensorT<S>(x.shape)};
    fftdetail::dft2_batched(x.data.data(), static_cast<const S*>(nullptr), out.re.data.data(), out.im.data.data(),
                            planes, H, W, false, 1.0);

    if (GradTapeT<S>* tape = tape_of<S>({&x})) {
        int nx = x.node;
        auto adjoint = [nx, planes, H, W](bool upstream_is_imag) {
            return [nx, planes, H, W, upstream_is_imag](GradTapeT<S>& t, const std::vector<S>& up) {
                // adjoint of the unnormalized forward DFT is the unnormalized
                // inverse transform; real input keeps only the real plane
                std::vector<S> g(up.size());
                const S* re = upstream_is_imag ? nullptr : up.data();
                const S* im = upstream_is_imag ? up.data() : nullptr;
                fftdetail::dft2_batched(re, im, g.data(), static_cast<S*>(nullptr), planes, H, W, true, 1.0);
                t.accumulate(nx, g);
            };
        };
        out.re.tape = tape;
        out.re.node = tape->record(out.re.shape, adjoint(false));
        out.im.tape = tape;
        out.im.node = tape->record(out.im.shape, adjoint(true));
    }
    return out;
}

// Inverse 2-D DFT with 1/(MN) normalization. Callers expecting a real image
// take `.re` and may inspect `.im` as a residual diagnostic.
template <class S>
ComplexTensorT<S> ifft2(const ComplexTensorT<S>& z) {
    require_same_shape(z.re, z.im, "ifft2");
    require_rank(z.re, 4, "ifft2");
    const std::int64_t planes = z.re.shape[0] * z.re.shape[1], H = z.re.shape[2], W = z.re.shape[3];
    const double scale = 1.0 / static_cast<double>(H * W);
    ComplexTensorT<S> out{TensorT<S>(z.re.shape), TensorT<S>(z.re.shape)};
    fftdetail::dft2_batched(z.re.data.data(), z.im.data.data(), out.re.data.data(), out.im.data.data(), planes, H, W,
                            true, scale);

    if (GradTapeT<S>* tape = tape_of<S>({&z.re, &z.im})) {
        int nre = node_of(z.re, tape), nim = node_of(z.im, tape);
        auto adjoint = [nre, nim, planes, H, W, scale](bool upstream_is_imag) {
            return [nre, nim, planes, H, W, scale, upstream_is_imag](GradTapeT<S>& t, const std::vector<S>& up) {
                // adjoint of the normalized inverse is the forward DFT
                // carrying the same 1/(MN)
                std::vector<S> gre(up.size()), gim(up.size());
                const S* re = upstream_is_imag ? nullptr : up.data();
                const S* im = upstream_is_imag ? up.data() : nullptr;
                fftdetail::dft2_batched(re, im, gre.data(), gim.data(), planes, H, W, false, scale);
                t.accumulate(nre, gre);
                t.accumulate(nim, gim);
            };
        };
        out.re.tape = tape;
        out.re.node = tape->record(out.re.shape, adjoint(false));
        out.im.tape = tape;
        out.im.node = tape->record(out.im.shape, adjoint(true));
    }
    return out;
}

// amplitude = sqrt(re^2 + im^2 + eps^2), phase = atan2(im, re)
template <class S>
SpectrumT<S> polar_decompose(const ComplexTensorT<S>& z) {
    require_same_shape(z.re, z.im, "polar_decompose");
    const std::size_t n = z.re.data.size();
    SpectrumT<S> out{TensorT<S>(z.re.shape), TensorT<S>(z.re.shape)};
    const double eps2 = kPolarEpsGuard * kPolarEpsGuard;
    for (std::size_t i = 0; i < n; ++i) {
        const double re = static_cast<double>(z.re.data[i]), im = static_cast<double>(z.im.data[i]);
        out.amplitude.data[i] = static_cast<S>(std::sqrt(re * re + im * im + eps2));
        out.phase.data[i] = static_cast<S>(std::atan2(im, re));
    }

    if (GradTapeT<S>* tape = tape_of<S>({&z.re, &z.im})) {
        int nre = node_of(z.re, tape), nim = node_of(z.im, tape);
        std::vector<S> rev = z.re.data, imv = z.im.data;
        auto shared_re = std::make_shared<std::vector<S>>(std::move(rev));
        auto shared_im = std::make_shared<std::vector<S>>(std::move(imv));

        out.amplitude.tape = tape;
        out.amplitude.node =
            tape->record(out.amplitude.shape, [nre, nim, shared_re, shared_im, eps2](GradTapeT<S>& t, const std::vector<S>& up) {
                std::vector<S> gre(up.size()), gim(up.size());
                for (std::size_t i = 0; i < up.size(); ++i) {
                    const double re = static_cast<double>((*shared_re)[i]), im = static_cast<double>((*shared_im)[i]);
                    const double a = std::sqrt(re * re + im * im + eps2);
                    gre[i] = static_cast<S>(static_cast<double>(up[i]) * re / a);
                    gim[i] = static_cast<S>(static_cast<double>(up[i]) * im / a);
                }
                t.accumulate(nre, gre);
                t.accumulate(nim, gim);
            });
        out.phase.tape = tape;
        out.phase.node =
            tape->record(out.phase.shape, [nre, nim, shared_re, shared_im, eps2](GradTapeT<S>& t, const std::vector<S>& up) {
                std::vector<S> gre(up.size()), gim(up.size());
                for (std::size_t i = 0; i < up.size(); ++i) {
                    const double re = static_cast<double>((*shared_re)[i]), im = static_cast<double>((*shared_im)[i]);
                    const double d = re * re + im * im + eps2;
                    gre[i] = static_cast<S>(-static_cast<double>(up[i]) * im / d);
                    gim[i] = static_cast<S>(static_cast<double>(up[i]) * re / d);
                }
                t.accumulate(nre, gre);
                t.accumulate(nim, gim);
            });
    }
    return out;
}

// literal recombination A + jP: the amplitude plane becomes the real part
// and the phase plane the imaginary part
template <class S>
ComplexTensorT<S> cartesian_compose(const TensorT<S>& a, const TensorT<S>& p) {
    require_same_shape(a, p, "cartesian_compose");
    return ComplexTensorT<S>{a, p};
}

// true polar recomposition, used by round-trip checks
template <class S>
ComplexTensorT<S> polar_compose(const SpectrumT<S>& s) {
    require_same_shape(s.amplitude, s.phase, "polar_compose");
    ComplexTensorT<S> out{TensorT<S>(s.amplitude.shape), TensorT<S>(s.amplitude.shape)};
    for (std::size_t i = 0; i < out.re.data.size(); ++i) {
        const double a = static_cast<double>(s.amplitude.data[i]), p = static_cast<double>(s.phase.data[i]);
        out.re.data[i] = static_cast<S>(a * std::cos(p));
        out.im.data[i] = static_cast<S>(a * std::sin(p));
    }
    return out;
}

}  // namespace dpfnet
