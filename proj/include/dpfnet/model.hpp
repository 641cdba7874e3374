#pragma once

#include <array>
#include <cmath>
#include <optional>
#include <string>

#include "dpfnet/fft.hpp"
#include "dpfnet/ops.hpp"
#include "dpfnet/rng.hpp"

// The dual-branch enhancement network: a Fourier-domain branch driven by
// weight-shared complex convolutions over (amplitude, phase) planes, a
// spatial branch of cascaded dilated convolutions, and an adaptive per-pixel
// fusion head with residual refinement.

namespace dpfnet {

enum class Ablation { mdcm_only, mdcm_pfm, full };

inline const char* ablation_name(Ablation a) {
    switch (a) {
        case Ablation::mdcm_only: return "mdcm_only";
        case Ablation::mdcm_pfm: return "mdcm_pfm";
        case Ablation::full: return "full";
    }
    return "?";
}

inline Ablation ablation_from_name(const std::string& s) {
    if (s == "mdcm_only") return Ablation::mdcm_only;
    if (s == "mdcm_pfm") return Ablation::mdcm_pfm;
    if (s == "full") return Ablation::full;
    throw std::invalid_argument("unknown ablation '" + s + "' (expected mdcm_only|mdcm_pfm|full)");
}

struct ModelConfig {
    int pfm_width = 16;      // complex feature channels inside PFM blocks
    int mdcm_width = 32;     // spatial feature channels
    int mdcm_dilation = 2;   // first dilation block rate; second uses +2
    int afm_width = 16;      // refinement feature channels
    float leaky_slope = 0.2f;
    bool afm_leaky = false;  // residual blocks use ReLU unless set
    Ablation ablation = Ablation::full;
};

template <class S>
struct ConvParamT {
    TensorT<S> w;  // [O,C,kh,kw]
    TensorT<S> b;  // [O]
};

template <class S>
ConvParamT<S> make_conv(std::int64_t out_ch, std::int64_t in_ch, std::int64_t k, Rng& rng) {
    ConvParamT<S> p;
    p.w = TensorT<S>(Shape{out_ch, in_ch, k, k});
    p.b = TensorT<S>(Shape{out_ch});
    const double bound = 1.0 / std::sqrt(static_cast<double>(in_ch * k * k));
    for (auto& v : p.w.data) v = static_cast<S>(rng.uniform(-bound, bound));
    return p;
}

// one complex kernel phi + j*psi; the same pair filters both planes
template <class S>
struct ComplexConvLayerT {
    ConvParamT<S> phi, psi;
};

template <class S>
struct PfmBlockT {
    std::array<ComplexConvLayerT<S>, 3> layers;
};

template <class S>
struct PfmParamsT {
    std::array<PfmBlockT<S>, 3> blocks;
};

template <class S>
struct DilationBlockT {
    ConvParamT<S> conv_d;   // rate d
    ConvParamT<S> conv_d1;  // rate d+1, the anti-grid companion
    int d = 2;
};

template <class S>
struct MdcmParamsT {
    std::array<ConvParamT<S>, 3> head;
    DilationBlockT<S> db_a, db_b;
    ConvParamT<S> fuse;  // 1x1, 3*width -> 3
};

template <class S>
struct ResBlockT {
    ConvParamT<S> c1, c2;
};

template <class S>
struct AfmParamsT {
    std::optional<ConvParamT<S>> weight_conv;  // gating; only in the full model
    ConvParamT<S> lift;
    ResBlockT<S> rb1, rb2;
    ConvParamT<S> proj;
};

template <class S>
struct DpfnetParamsT {
    ModelConfig cfg;
    std::optional<PfmParamsT<S>> pfm;
    MdcmParamsT<S> mdcm;
    AfmParamsT<S> afm;
};

using DpfnetParams = DpfnetParamsT<float>;

template <class S>
DpfnetParamsT<S> init_model(const ModelConfig& cfg, std::uint64_t seed) {
    Rng rng(Rng::mix(seed, 0x6d6f64656cULL));
    DpfnetParamsT<S> m;
    m.cfg = cfg;
    const std::int64_t pw = cfg.pfm_width, mw = cfg.mdcm_width, aw = cfg.afm_width;

    if (cfg.ablation != Ablation::mdcm_only) {
        PfmParamsT<S> pfm;
        for (int b = 0; b < 3; ++b)
            for (int c = 0; c < 3; ++c) {
                const std::int64_t in = (b == 0 && c == 0) ? 3 : pw;
                const std::int64_t out = (b == 2 && c == 2) ? 3 : pw;
                pfm.blocks[b].layers[c].phi = make_conv<S>(out, in, 3, rng);
                pfm.blocks[b].layers[c].psi = make_conv<S>(out, in, 3, rng);
            }
        m.pfm = std::move(pfm);
    }

    m.mdcm.head[0] = make_conv<S>(mw, 3, 3, rng);
    m.mdcm.head[1] = make_conv<S>(mw, mw, 3, rng);
    m.mdcm.head[2] = make_conv<S>(mw, mw, 3, rng);
    m.mdcm.db_a = DilationBlockT<S>{make_conv<S>(mw, mw, 3, rng), make_conv<S>(mw, mw, 3, rng), cfg.mdcm_dilation};
    m.mdcm.db_b = DilationBlockT<S>{make_conv<S>(mw, mw, 3, rng), make_conv<S>(mw, mw, 3, rng), cfg.mdcm_dilation + 2};
    m.mdcm.fuse = make_conv<S>(3, 3 * mw, 1, rng);

    if (cfg.ablation == Ablation::full) m.afm.weight_conv = make_conv<S>(2, 6, 3, rng);
    m.afm.lift = make_conv<S>(aw, 3, 3, rng);
    m.afm.rb1 = ResBlockT<S>{make_conv<S>(aw, aw, 3, rng), make_conv<S>(aw, aw, 3, rng)};
    m.afm.rb2 = ResBlockT<S>{make_conv<S>(aw, aw, 3, rng), make_conv<S>(aw, aw, 3, rng)};
    m.afm.proj = make_conv<S>(3, aw, 3, rng);
    return m;
}

// fixed enumeration order; checkpoints, Adam state and watch() all key off
// these names
template <class S, class F>
void visit_params(DpfnetParamsT<S>& m, F&& f) {
    auto conv = [&](const std::string& name, ConvParamT<S>& c) {
        f(name + ".w", c.w);
        f(name + ".b", c.b);
    };
    if (m.pfm) {
        for (int b = 0; b < 3; ++b)
            for (int c = 0; c < 3; ++c) {
                const std::string base = "pfm.b" + std::to_string(b) + ".c" + std::to_string(c);
                conv(base + ".phi", m.pfm->blocks[b].layers[c].phi);
                conv(base + ".psi", m.pfm->blocks[b].layers[c].psi);
            }
    }
    for (int i = 0; i < 3; ++i) conv("mdcm.head" + std::to_string(i), m.mdcm.head[i]);
    conv("mdcm.db_a.conv_d", m.mdcm.db_a.conv_d);
    conv("mdcm.db_a.conv_d1", m.mdcm.db_a.conv_d1);
    conv("mdcm.db_b.conv_d", m.mdcm.db_b.conv_d);
    conv("mdcm.db_b.conv_d1", m.mdcm.db_b.conv_d1);
    conv("mdcm.fuse", m.mdcm.fuse);
    if (m.afm.weight_conv) conv("afm.gate", *m.afm.weight_conv);
    conv("afm.lift", m.afm.lift);
    conv("afm.rb1.c1", m.afm.rb1.c1);
    conv("afm.rb1.c2", m.afm.rb1.c2);
    conv("afm.rb2.c1", m.afm.rb2.c1);
    conv("afm.rb2.c2", m.afm.rb2.c2);
    conv("afm.proj", m.afm.proj);
}

template <class S>
void watch_params(DpfnetParamsT<S>& m, GradTapeT<S>& tape) {
    visit_params(m, [&](const std::string& name, TensorT<S>& t) { tape.watch(t, name); });
}

// ---------------------------------------------------------------------------
// PFM branch

// Joint update of the two planes from their pre-update values:
//   P' = phi(P) + psi(A) + b_psi,  A' = phi(A) - psi(P) + b_phi
// which is exactly Re/Im of the complex product (phi + j*psi) * (A + j*P)
// plus the complex bias b_phi + j*b_psi. The same phi/psi pair filters both
// planes; each bias enters its own plane once.
template <class S>
std::pair<TensorT<S>, TensorT<S>> complex_conv(const TensorT<S>& A, const TensorT<S>& P,
                                               const ComplexConvLayerT<S>& layer) {
    require_same_shape(A, P, "complex_conv");
    const TensorT<S> no_bias(Shape{layer.phi.w.shape[0]});
    TensorT<S> phiA = conv2d(A, layer.phi.w, layer.phi.b);
    TensorT<S> phiP = conv2d(P, layer.phi.w, no_bias);
    TensorT<S> psiA = conv2d(A, layer.psi.w, layer.psi.b);
    TensorT<S> psiP = conv2d(P, layer.psi.w, no_bias);
    return {sub(phiA, psiP), add(phiP, psiA)};
}

template <class S>
std::pair<TensorT<S>, TensorT<S>> pfm_block(TensorT<S> A, TensorT<S> P, const PfmBlockT<S>& block, S slope,
                                            bool activations = true) {
    for (const auto& layer : block.layers) {
        auto [a2, p2] = complex_conv(A, P, layer);
        if (activations) {
            A = leaky_relu(a2, slope);
            P = leaky_relu(p2, slope);
        } else {
            A = std::move(a2);
            P = std::move(p2);
        }
    }
    return {std::move(A), std::move(P)};
}

struct PfmStats {
    double imag_rms = 0.0;  // energy of the discarded imaginary plane
};

template <class S>
TensorT<S> pfm_forward(const TensorT<S>& x, const PfmParamsT<S>& params, S slope, bool activations = true,
                       PfmStats* stats = nullptr) {
    require_rank(x, 4, "pfm_forward");
    ComplexTensorT<S> z = fft2(x);
    SpectrumT<S> sp = polar_decompose(z);
    TensorT<S> A = std::move(sp.amplitude), P = std::move(sp.phase);
    for (const auto& block : params.blocks) {
        auto [a2, p2] = pfm_block(std::move(A), std::move(P), block, slope, activations);
        A = std::move(a2);
        P = std::move(p2);
    }
    ComplexTensorT<S> rec = ifft2(cartesian_compose(A, P));
    if (stats) {
        double acc = 0.0;
        for (S v : rec.im.data) acc += static_cast<double>(v) * static_cast<double>(v);
        stats->imag_rms = std::sqrt(acc / static_cast<double>(rec.im.numel()));
    }
    return rec.re;
}

// ---------------------------------------------------------------------------
// MDCM branch

template <class S>
TensorT<S> local_head(const TensorT<S>& x, const MdcmParamsT<S>& params, S slope) {
    TensorT<S> f = x;
    for (const auto& c : params.head) f = leaky_relu(conv2d(f, c.w, c.b), slope);
    return f;
}

template <class S>
TensorT<S> dilation_block(const TensorT<S>& f, const DilationBlockT<S>& db, S slope) {
    TensorT<S> t = leaky_relu(conv2d(f, db.conv_d.w, db.conv_d.b, db.d), slope);
    return leaky_relu(conv2d(t, db.conv_d1.w, db.conv_d1.b, db.d + 1), slope);
}

template <class S>
TensorT<S> mdcm_forward(const TensorT<S>& x, const MdcmParamsT<S>& params, S slope) {
    require_rank(x, 4, "mdcm_forward");
    TensorT<S> f_local = local_head(x, params, slope);
    TensorT<S> t1 = dilation_block(f_local, params.db_a, slope);
    TensorT<S> t2 = dilation_block(t1, params.db_b, slope);
    TensorT<S> cat = concat_channels<S>({&t2, &t1, &f_local});
    return add(conv2d(cat, params.fuse.w, params.fuse.b), x);
}

// ---------------------------------------------------------------------------
// fusion head

template <class S>
std::pair<TensorT<S>, TensorT<S>> afm_weights(const TensorT<S>& f_f, const TensorT<S>& f_s,
                                              const ConvParamT<S>& weight_conv) {
    require_same_shape(f_f, f_s, "afm_weights");
    TensorT<S> cat = concat_channels<S>({&f_f, &f_s});
    TensorT<S> logits = conv2d(cat, weight_conv.w, weight_conv.b);
    TensorT<S> s = softmax_channels(logits);
    return {slice_channels(s, 0, 1), slice_channels(s, 1, 2)};
}

template <class S>
TensorT<S> res_block(const TensorT<S>& x, const ResBlockT<S>& rb, S slope, bool leaky) {
    TensorT<S> h = conv2d(x, rb.c1.w, rb.c1.b);
    h = leaky ? leaky_relu(h, slope) : relu(h);
    return add(x, conv2d(h, rb.c2.w, rb.c2.b));
}

template <class S>
TensorT<S> afm_refine(const TensorT<S>& fused, const AfmParamsT<S>& afm, S slope, bool leaky) {
    TensorT<S> h = conv2d(fused, afm.lift.w, afm.lift.b);
    h = res_block(h, afm.rb1, slope, leaky);
    h = res_block(h, afm.rb2, slope, leaky);
    return conv2d(h, afm.proj.w, afm.proj.b);
}

template <class S>
TensorT<S> afm_fuse_refine(const TensorT<S>& f_f, const TensorT<S>& f_s, const AfmParamsT<S>& afm, S slope,
                           bool leaky) {
    if (!afm.weight_conv) throw std::logic_error("afm_fuse_refine: gating weights absent (ablation)");
    auto [w_f, w_s] = afm_weights(f_f, f_s, *afm.weight_conv);
    TensorT<S> fused = add(broadcast_mul(f_f, w_f), broadcast_mul(f_s, w_s));
    return afm_refine(fused, afm, slope, leaky);
}

// ---------------------------------------------------------------------------
// full network

// No output activation: the losses act on the raw output and values are
// clamped to [0,1] only at image-writing and metric time.
template <class S>
TensorT<S> dpfnet_forward(const TensorT<S>& x, const DpfnetParamsT<S>& m, PfmStats* stats = nullptr) {
    const S slope = static_cast<S>(m.cfg.leaky_slope);
    TensorT<S> f_s = mdcm_forward(x, m.mdcm, slope);
    switch (m.cfg.ablation) {
        case Ablation::mdcm_only:
            return afm_refine(f_s, m.afm, slope, m.cfg.afm_leaky);
        case Ablation::mdcm_pfm: {
            TensorT<S> f_f = pfm_forward(x, *m.pfm, slope, true, stats);
            TensorT<S> fused = mul_scalar(add(f_f, f_s), static_cast<S>(0.5));
            return afm_refine(fused, m.afm, slope, m.cfg.afm_leaky);
        }
        case Ablation::full: {
            TensorT<S> f_f = pfm_forward(x, *m.pfm, slope, true, stats);
            return afm_fuse_refine(f_f, f_s, m.afm, slope, m.cfg.afm_leaky);
        }
    }
    throw std::logic_error("dpfnet_forward: bad ablation");
}

}  // namespace dpfnet
