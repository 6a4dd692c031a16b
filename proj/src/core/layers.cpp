#include "airtemp/core/layers.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "airtemp/core/parallel.hpp"

namespace airtemp {

namespace {

// Dot product with eight independent accumulator chains; fixed summation
// order keeps results bit-identical while still vectorizing under strict
// floating-point semantics.
inline float dot_strict(const float* a, const float* b, int n) {
    float s0 = 0.f, s1 = 0.f, s2 = 0.f, s3 = 0.f, s4 = 0.f, s5 = 0.f, s6 = 0.f, s7 = 0.f;
    int i = 0;
    for (; i + 8 <= n; i += 8) {
        s0 += a[i] * b[i];
        s1 += a[i + 1] * b[i + 1];
        s2 += a[i + 2] * b[i + 2];
        s3 += a[i + 3] * b[i + 3];
        s4 += a[i + 4] * b[i + 4];
        s5 += a[i + 5] * b[i + 5];
        s6 += a[i + 6] * b[i + 6];
        s7 += a[i + 7] * b[i + 7];
    }
    float tail = 0.f;
    for (; i < n; ++i) tail += a[i] * b[i];
    return (((s0 + s1) + (s2 + s3)) + ((s4 + s5) + (s6 + s7))) + tail;
}

// Copies every channel plane into a zero-padded (h+2) x (w+2) buffer so the
// stencil loops below run branch-free over full rows.
std::vector<float> pad_planes(const float* in, int channels, int h, int w) {
    const int ph = h + 2, pw = w + 2;
    std::vector<float> padded(static_cast<std::size_t>(channels) * ph * pw, 0.f);
    for (int c = 0; c < channels; ++c) {
        for (int y = 0; y < h; ++y) {
            std::memcpy(padded.data() + (static_cast<std::size_t>(c) * ph + y + 1) * pw + 1,
                        in + (static_cast<std::size_t>(c) * h + y) * w,
                        static_cast<std::size_t>(w) * sizeof(float));
        }
    }
    return padded;
}

// Adds one padded channel's 9-tap stencil into an output plane; the inner
// loop is a single fused pass of nine multiply-adds over a full row.
void stencil_accumulate(const float* w9, const float* padded_c, int h, int w,
                        float* __restrict out_o) {
    const int pw = w + 2;
    for (int y = 0; y < h; ++y) {
        const float* __restrict r0 = padded_c + static_cast<std::size_t>(y) * pw;
        const float* __restrict r1 = r0 + pw;
        const float* __restrict r2 = r1 + pw;
        float* __restrict q = out_o + static_cast<std::size_t>(y) * w;
        for (int x = 0; x < w; ++x) {
            q[x] += w9[0] * r0[x] + w9[1] * r0[x + 1] + w9[2] * r0[x + 2] + w9[3] * r1[x] +
                    w9[4] * r1[x + 1] + w9[5] * r1[x + 2] + w9[6] * r2[x] + w9[7] * r2[x + 1] +
                    w9[8] * r2[x + 2];
        }
    }
}

// Correlation of a plane with one padded-plane tap offset; eight accumulator
// chains persist across rows so the horizontal reduction happens once.
float plane_dot_tap(const float* a, const float* padded_b, int h, int w, int ky, int kx) {
    float s0 = 0.f, s1 = 0.f, s2 = 0.f, s3 = 0.f, s4 = 0.f, s5 = 0.f, s6 = 0.f, s7 = 0.f;
    float tail = 0.f;
    const int pw = w + 2;
    for (int y = 0; y < h; ++y) {
        const float* ar = a + static_cast<std::size_t>(y) * w;
        const float* br = padded_b + (static_cast<std::size_t>(y) + ky) * pw + kx;
        int i = 0;
        for (; i + 8 <= w; i += 8) {
            s0 += ar[i] * br[i];
            s1 += ar[i + 1] * br[i + 1];
            s2 += ar[i + 2] * br[i + 2];
            s3 += ar[i + 3] * br[i + 3];
            s4 += ar[i + 4] * br[i + 4];
            s5 += ar[i + 5] * br[i + 5];
            s6 += ar[i + 6] * br[i + 6];
            s7 += ar[i + 7] * br[i + 7];
        }
        for (; i < w; ++i) tail += ar[i] * br[i];
    }
    return (((s0 + s1) + (s2 + s3)) + ((s4 + s5) + (s6 + s7))) + tail;
}

void conv3x3_fwd(const float* in, int cin, int h, int w, const float* wgt, const float* bias,
                 int cout, float* out) {
    const std::size_t plane = static_cast<std::size_t>(h) * w;
    const std::size_t pplane = static_cast<std::size_t>(h + 2) * (w + 2);
    const std::vector<float> padded = pad_planes(in, cin, h, w);
    parallel_for(cout, [&](std::int64_t o0, std::int64_t o1) {
        for (int o = static_cast<int>(o0); o < o1; ++o) {
            float* out_o = out + static_cast<std::size_t>(o) * plane;
            const float b = bias[o];
            for (std::size_t i = 0; i < plane; ++i) out_o[i] = b;
            for (int c = 0; c < cin; ++c) {
                stencil_accumulate(wgt + (static_cast<std::size_t>(o) * cin + c) * 9,
                                   padded.data() + static_cast<std::size_t>(c) * pplane, h, w, out_o);
            }
        }
    });
}

void conv3x3_bwd_input(const float* gout, int cout, int h, int w, const float* wgt, int cin,
                       float* gin) {
    const std::size_t plane = static_cast<std::size_t>(h) * w;
    const std::size_t pplane = static_cast<std::size_t>(h + 2) * (w + 2);
    const std::vector<float> padded = pad_planes(gout, cout, h, w);
    parallel_for(cin, [&](std::int64_t c0, std::int64_t c1) {
        for (int c = static_cast<int>(c0); c < c1; ++c) {
            float* g_c = gin + static_cast<std::size_t>(c) * plane;
            std::memset(g_c, 0, plane * sizeof(float));
            for (int o = 0; o < cout; ++o) {
                const float* w9 = wgt + (static_cast<std::size_t>(o) * cin + c) * 9;
                // The input gradient is the correlation with the
                // 180-degree-rotated kernel.
                const float rot[9] = {w9[8], w9[7], w9[6], w9[5], w9[4], w9[3], w9[2], w9[1], w9[0]};
                stencil_accumulate(rot, padded.data() + static_cast<std::size_t>(o) * pplane, h, w,
                                   g_c);
            }
        }
    });
}

void conv3x3_bwd_params(const float* in, int cin, int h, int w, const float* gout, int cout,
                        float* gw, float* gb) {
    const std::size_t plane = static_cast<std::size_t>(h) * w;
    const std::size_t pplane = static_cast<std::size_t>(h + 2) * (w + 2);
    const std::vector<float> padded = pad_planes(in, cin, h, w);
    parallel_for(cout, [&](std::int64_t o0, std::int64_t o1) {
        for (int o = static_cast<int>(o0); o < o1; ++o) {
            const float* go = gout + static_cast<std::size_t>(o) * plane;
            float bsum = 0.f;
            for (std::size_t i = 0; i < plane; ++i) bsum += go[i];
            gb[o] += bsum;
            for (int c = 0; c < cin; ++c) {
                const float* padded_c = padded.data() + static_cast<std::size_t>(c) * pplane;
                float* w9 = gw + (static_cast<std::size_t>(o) * cin + c) * 9;
                for (int ky = 0; ky < 3; ++ky) {
                    for (int kx = 0; kx < 3; ++kx) {
                        w9[ky * 3 + kx] += plane_dot_tap(go, padded_c, h, w, ky, kx);
                    }
                }
            }
        }
    });
}

void conv1x1_fwd(const float* in, int cin, std::size_t plane, const float* wgt, const float* bias,
                 int cout, float* out) {
    parallel_for(cout, [&](std::int64_t o0, std::int64_t o1) {
        for (int o = static_cast<int>(o0); o < o1; ++o) {
            float* out_o = out + static_cast<std::size_t>(o) * plane;
            const float b = bias[o];
            for (std::size_t i = 0; i < plane; ++i) out_o[i] = b;
            for (int c = 0; c < cin; ++c) {
                const float wv = wgt[static_cast<std::size_t>(o) * cin + c];
                const float* in_c = in + static_cast<std::size_t>(c) * plane;
                for (std::size_t i = 0; i < plane; ++i) out_o[i] += wv * in_c[i];
            }
        }
    });
}

void dense_fwd(const float* x, int batch, int fin, const float* wgt, const float* bias, int fout,
               float* y) {
    parallel_for(batch, [&](std::int64_t b0, std::int64_t b1) {
        for (std::int64_t b = b0; b < b1; ++b) {
            const float* xr = x + static_cast<std::size_t>(b) * fin;
            float* yr = y + static_cast<std::size_t>(b) * fout;
            for (int o = 0; o < fout; ++o) {
                yr[o] = bias[o] + dot_strict(xr, wgt + static_cast<std::size_t>(o) * fin, fin);
            }
        }
    });
}

} // namespace

// ---------------------------------------------------------------------------
// Spec-level ops
// ---------------------------------------------------------------------------

Tensor conv2d_forward(const Tensor& input, const Tensor& weights, const Tensor& bias) {
    if (input.rank() != 3) throw DimensionError("conv2d input must be CxHxW, got " + input.shape_str());
    if (weights.rank() != 4 || weights.dim(2) != 3 || weights.dim(3) != 3) {
        throw DimensionError("conv2d weights must be C_out x C_in x 3 x 3, got " + weights.shape_str());
    }
    if (weights.dim(1) != input.dim(0)) {
        throw DimensionError("conv2d channel mismatch: weights expect " + std::to_string(weights.dim(1)) +
                             " input channels, got " + std::to_string(input.dim(0)));
    }
    const int cout = weights.dim(0);
    require_shape(bias, {cout}, "conv2d bias");
    Tensor out = Tensor::zeros({cout, input.dim(1), input.dim(2)});
    conv3x3_fwd(input.data.data(), input.dim(0), input.dim(1), input.dim(2), weights.data.data(),
                bias.data.data(), cout, out.data.data());
    return out;
}

Tensor dense_forward(const Tensor& input, const Tensor& weights, const Tensor& bias) {
    if (input.rank() != 2) throw DimensionError("dense input must be B x F_in, got " + input.shape_str());
    if (weights.rank() != 2) throw DimensionError("dense weights must be F_out x F_in, got " + weights.shape_str());
    if (weights.dim(1) != input.dim(1)) {
        throw DimensionError("dense feature mismatch: weights expect " + std::to_string(weights.dim(1)) +
                             ", got " + std::to_string(input.dim(1)));
    }
    const int fout = weights.dim(0);
    require_shape(bias, {fout}, "dense bias");
    Tensor out = Tensor::zeros({input.dim(0), fout});
    dense_fwd(input.data.data(), input.dim(0), input.dim(1), weights.data.data(), bias.data.data(),
              fout, out.data.data());
    return out;
}

Tensor relu_forward(const Tensor& input) {
    Tensor out = input;
    for (float& v : out.data) v = v > 0.f ? v : 0.f;
    return out;
}

namespace {

// Per-row attention over 8 tokens x 8 dims. Caches Q, K, V (b x 64) and the
// softmax probabilities P (b x 8 x 8) when requested.
void attention_fwd(const float* x, int batch, const float* wq, const float* wk, const float* wv,
                   float* out, float* q_all, float* k_all, float* v_all, float* p_all) {
    constexpr int T = SelfAttentionLayer::kTokens;
    constexpr int D = SelfAttentionLayer::kDims;
    const float scale = 1.0f / std::sqrt(static_cast<float>(D));
    parallel_for(batch, [&](std::int64_t b0, std::int64_t b1) {
        for (std::int64_t b = b0; b < b1; ++b) {
            const float* xr = x + b * (T * D);
            float q[T * D], k[T * D], v[T * D], p[T * T];
            for (int t = 0; t < T; ++t) {
                const float* xt = xr + t * D;
                for (int j = 0; j < D; ++j) {
                    float sq = 0.f, sk = 0.f, sv = 0.f;
                    for (int i = 0; i < D; ++i) {
                        sq += xt[i] * wq[i * D + j];
                        sk += xt[i] * wk[i * D + j];
                        sv += xt[i] * wv[i * D + j];
                    }
                    q[t * D + j] = sq;
                    k[t * D + j] = sk;
                    v[t * D + j] = sv;
                }
            }
            for (int t = 0; t < T; ++t) {
                float row[T];
                float mx = -1e30f;
                for (int u = 0; u < T; ++u) {
                    float s = 0.f;
                    for (int j = 0; j < D; ++j) s += q[t * D + j] * k[u * D + j];
                    row[u] = s * scale;
                    mx = std::max(mx, row[u]);
                }
                float denom = 0.f;
                for (int u = 0; u < T; ++u) {
                    row[u] = std::exp(row[u] - mx);
                    denom += row[u];
                }
                for (int u = 0; u < T; ++u) row[u] /= denom;
                float* yt = out + b * (T * D) + t * D;
                const float* xt = xr + t * D;
                for (int j = 0; j < D; ++j) {
                    float s = 0.f;
                    for (int u = 0; u < T; ++u) s += row[u] * v[u * D + j];
                    yt[j] = xt[j] + s;
                }
                if (p_all) std::memcpy(p_all + b * (T * T) + t * T, row, sizeof(row));
            }
            if (q_all) std::memcpy(q_all + b * (T * D), q, sizeof(q));
            if (k_all) std::memcpy(k_all + b * (T * D), k, sizeof(k));
            if (v_all) std::memcpy(v_all + b * (T * D), v, sizeof(v));
        }
    });
}

} // namespace

Tensor self_attention_forward(const Tensor& input, const ParamStore& params) {
    if (input.rank() != 2 || input.dim(1) != SelfAttentionLayer::kWidth) {
        throw DimensionError("self-attention expects B x 64 input, got " + input.shape_str());
    }
    const Tensor& wq = params.param("wq");
    const Tensor& wk = params.param("wk");
    const Tensor& wv = params.param("wv");
    require_shape(wq, {8, 8}, "attention wq");
    require_shape(wk, {8, 8}, "attention wk");
    require_shape(wv, {8, 8}, "attention wv");
    Tensor out = Tensor::zeros(input.shape);
    attention_fwd(input.data.data(), input.dim(0), wq.data.data(), wk.data.data(), wv.data.data(),
                  out.data.data(), nullptr, nullptr, nullptr, nullptr);
    return out;
}

void glorot_fill(Tensor& t, int fan_in, int fan_out, Rng& rng) {
    const double bound = std::sqrt(6.0 / (fan_in + fan_out));
    for (float& v : t.data) v = static_cast<float>(rng.uniform(-bound, bound));
}

void require_finite(const Tensor& t, const std::string& what) {
    if (!t.all_finite()) throw Error(what + ": non-finite values");
}

// ---------------------------------------------------------------------------
// DenseLayer
// ---------------------------------------------------------------------------

DenseLayer::DenseLayer(std::string name, int in_features, int out_features)
    : wname_(name + ".w"), bname_(name + ".b"), fin_(in_features), fout_(out_features) {
    if (fin_ <= 0 || fout_ <= 0) throw DimensionError("dense layer dims must be positive");
}

void DenseLayer::register_params(ParamStore& ps) const {
    ps.create(wname_, {fout_, fin_});
    ps.create(bname_, {fout_});
}

void DenseLayer::init_params(ParamStore& ps, Rng& rng) const {
    glorot_fill(ps.param(wname_), fin_, fout_, rng);
    ps.param(bname_).fill(0.f);
}

Tensor DenseLayer::forward(const ParamStore& ps, const Tensor& x) const {
    return dense_forward(x, ps.param(wname_), ps.param(bname_));
}

Tensor DenseLayer::train_forward(ParamStore& ps, const Tensor& x) {
    cached_input_ = x;
    has_cache_ = true;
    return forward(ps, x);
}

Tensor DenseLayer::backward(ParamStore& ps, const Tensor& gy) {
    if (!has_cache_) throw StateError("dense backward without recorded forward");
    const Tensor& x = cached_input_;
    if (gy.rank() != 2 || gy.dim(0) != x.dim(0) || gy.dim(1) != fout_) {
        throw DimensionError("dense backward gradient shape mismatch: " + gy.shape_str());
    }
    Tensor& gw = ps.grad(wname_);
    Tensor& gb = ps.grad(bname_);
    const int batch = x.dim(0);
    for (int b = 0; b < batch; ++b) {
        const float* xr = x.data.data() + static_cast<std::size_t>(b) * fin_;
        const float* gr = gy.data.data() + static_cast<std::size_t>(b) * fout_;
        for (int o = 0; o < fout_; ++o) {
            const float g = gr[o];
            gb.data[o] += g;
            float* gwr = gw.data.data() + static_cast<std::size_t>(o) * fin_;
            for (int i = 0; i < fin_; ++i) gwr[i] += g * xr[i];
        }
    }
    Tensor gx = Tensor::zeros(x.shape);
    const Tensor& w = ps.param(wname_);
    parallel_for(batch, [&](std::int64_t b0, std::int64_t b1) {
        for (std::int64_t b = b0; b < b1; ++b) {
            const float* gr = gy.data.data() + static_cast<std::size_t>(b) * fout_;
            float* gxr = gx.data.data() + static_cast<std::size_t>(b) * fin_;
            for (int o = 0; o < fout_; ++o) {
                const float g = gr[o];
                const float* wr = w.data.data() + static_cast<std::size_t>(o) * fin_;
                for (int i = 0; i < fin_; ++i) gxr[i] += g * wr[i];
            }
        }
    });
    has_cache_ = false;
    return gx;
}

// ---------------------------------------------------------------------------
// ReluLayer
// ---------------------------------------------------------------------------

Tensor ReluLayer::forward(const ParamStore&, const Tensor& x) const {
    return relu_forward(x);
}

Tensor ReluLayer::train_forward(ParamStore& ps, const Tensor& x) {
    cached_input_ = x;
    has_cache_ = true;
    return forward(ps, x);
}

Tensor ReluLayer::backward(ParamStore&, const Tensor& gy) {
    if (!has_cache_) throw StateError("relu backward without recorded forward");
    if (!gy.same_shape(cached_input_)) throw DimensionError("relu backward shape mismatch");
    Tensor gx = gy;
    for (std::size_t i = 0; i < gx.data.size(); ++i) {
        if (cached_input_.data[i] <= 0.f) gx.data[i] = 0.f;
    }
    has_cache_ = false;
    return gx;
}

// ---------------------------------------------------------------------------
// Conv3x3Layer
// ---------------------------------------------------------------------------

Conv3x3Layer::Conv3x3Layer(std::string name, int in_channels, int out_channels)
    : wname_(name + ".w"), bname_(name + ".b"), cin_(in_channels), cout_(out_channels) {
    if (cin_ <= 0 || cout_ <= 0) throw DimensionError("conv layer channels must be positive");
}

void Conv3x3Layer::register_params(ParamStore& ps) const {
    ps.create(wname_, {cout_, cin_, 3, 3});
    ps.create(bname_, {cout_});
}

void Conv3x3Layer::init_params(ParamStore& ps, Rng& rng) const {
    glorot_fill(ps.param(wname_), cin_ * 9, cout_ * 9, rng);
    ps.param(bname_).fill(0.f);
}

void Conv3x3Layer::zero_params(ParamStore& ps) const {
    ps.param(wname_).fill(0.f);
    ps.param(bname_).fill(0.f);
}

Tensor Conv3x3Layer::forward(const ParamStore& ps, const Tensor& x) const {
    return conv2d_forward(x, ps.param(wname_), ps.param(bname_));
}

Tensor Conv3x3Layer::train_forward(ParamStore& ps, const Tensor& x) {
    cached_input_ = x;
    has_cache_ = true;
    return forward(ps, x);
}

Tensor Conv3x3Layer::backward(ParamStore& ps, const Tensor& gy) {
    if (!has_cache_) throw StateError("conv backward without recorded forward");
    const Tensor& x = cached_input_;
    require_shape(gy, {cout_, x.dim(1), x.dim(2)}, "conv backward gradient");
    Tensor& gw = ps.grad(wname_);
    Tensor& gb = ps.grad(bname_);
    conv3x3_bwd_params(x.data.data(), cin_, x.dim(1), x.dim(2), gy.data.data(), cout_,
                       gw.data.data(), gb.data.data());
    Tensor gx = Tensor::zeros(x.shape);
    conv3x3_bwd_input(gy.data.data(), cout_, x.dim(1), x.dim(2), ps.param(wname_).data.data(),
                      cin_, gx.data.data());
    has_cache_ = false;
    return gx;
}

// ---------------------------------------------------------------------------
// Conv1x1Layer
// ---------------------------------------------------------------------------

Conv1x1Layer::Conv1x1Layer(std::string name, int in_channels, int out_channels)
    : wname_(name + ".w"), bname_(name + ".b"), cin_(in_channels), cout_(out_channels) {}

void Conv1x1Layer::register_params(ParamStore& ps) const {
    ps.create(wname_, {cout_, cin_});
    ps.create(bname_, {cout_});
}

void Conv1x1Layer::init_params(ParamStore& ps, Rng& rng) const {
    glorot_fill(ps.param(wname_), cin_, cout_, rng);
    ps.param(bname_).fill(0.f);
}

void Conv1x1Layer::zero_params(ParamStore& ps) const {
    ps.param(wname_).fill(0.f);
    ps.param(bname_).fill(0.f);
}

Tensor Conv1x1Layer::forward(const ParamStore& ps, const Tensor& x) const {
    if (x.rank() != 3 || x.dim(0) != cin_) {
        throw DimensionError("conv1x1 expects " + std::to_string(cin_) + " input channels, got " + x.shape_str());
    }
    Tensor out = Tensor::zeros({cout_, x.dim(1), x.dim(2)});
    conv1x1_fwd(x.data.data(), cin_, static_cast<std::size_t>(x.dim(1)) * x.dim(2),
                ps.param(wname_).data.data(), ps.param(bname_).data.data(), cout_, out.data.data());
    return out;
}

Tensor Conv1x1Layer::train_forward(ParamStore& ps, const Tensor& x) {
    cached_input_ = x;
    has_cache_ = true;
    return forward(ps, x);
}

Tensor Conv1x1Layer::backward(ParamStore& ps, const Tensor& gy) {
    if (!has_cache_) throw StateError("conv1x1 backward without recorded forward");
    const Tensor& x = cached_input_;
    require_shape(gy, {cout_, x.dim(1), x.dim(2)}, "conv1x1 backward gradient");
    const std::size_t plane = static_cast<std::size_t>(x.dim(1)) * x.dim(2);
    Tensor& gw = ps.grad(wname_);
    Tensor& gb = ps.grad(bname_);
    for (int o = 0; o < cout_; ++o) {
        const float* go = gy.data.data() + static_cast<std::size_t>(o) * plane;
        float bsum = 0.f;
        for (std::size_t i = 0; i < plane; ++i) bsum += go[i];
        gb.data[o] += bsum;
        for (int c = 0; c < cin_; ++c) {
            gw.data[static_cast<std::size_t>(o) * cin_ + c] +=
                dot_strict(go, x.data.data() + static_cast<std::size_t>(c) * plane, static_cast<int>(plane));
        }
    }
    Tensor gx = Tensor::zeros(x.shape);
    const Tensor& w = ps.param(wname_);
    for (int c = 0; c < cin_; ++c) {
        float* g_c = gx.data.data() + static_cast<std::size_t>(c) * plane;
        for (int o = 0; o < cout_; ++o) {
            const float wv = w.data[static_cast<std::size_t>(o) * cin_ + c];
            const float* go = gy.data.data() + static_cast<std::size_t>(o) * plane;
            for (std::size_t i = 0; i < plane; ++i) g_c[i] += wv * go[i];
        }
    }
    has_cache_ = false;
    return gx;
}

// ---------------------------------------------------------------------------
// SelfAttentionLayer
// ---------------------------------------------------------------------------

SelfAttentionLayer::SelfAttentionLayer(std::string name)
    : qname_(name + ".wq"), kname_(name + ".wk"), vname_(name + ".wv") {}

void SelfAttentionLayer::register_params(ParamStore& ps) const {
    ps.create(qname_, {kDims, kDims});
    ps.create(kname_, {kDims, kDims});
    ps.create(vname_, {kDims, kDims});
}

void SelfAttentionLayer::init_params(ParamStore& ps, Rng& rng) const {
    glorot_fill(ps.param(qname_), kDims, kDims, rng);
    glorot_fill(ps.param(kname_), kDims, kDims, rng);
    glorot_fill(ps.param(vname_), kDims, kDims, rng);
}

Tensor SelfAttentionLayer::forward(const ParamStore& ps, const Tensor& x) const {
    if (x.rank() != 2 || x.dim(1) != kWidth) {
        throw DimensionError("self-attention expects B x 64 input, got " + x.shape_str());
    }
    Tensor out = Tensor::zeros(x.shape);
    attention_fwd(x.data.data(), x.dim(0), ps.param(qname_).data.data(), ps.param(kname_).data.data(),
                  ps.param(vname_).data.data(), out.data.data(), nullptr, nullptr, nullptr, nullptr);
    return out;
}

Tensor SelfAttentionLayer::train_forward(ParamStore& ps, const Tensor& x) {
    if (x.rank() != 2 || x.dim(1) != kWidth) {
        throw DimensionError("self-attention expects B x 64 input, got " + x.shape_str());
    }
    const int batch = x.dim(0);
    cached_input_ = x;
    cached_q_ = Tensor::zeros({batch, kWidth});
    cached_k_ = Tensor::zeros({batch, kWidth});
    cached_v_ = Tensor::zeros({batch, kWidth});
    cached_p_ = Tensor::zeros({batch, kTokens, kTokens});
    Tensor out = Tensor::zeros(x.shape);
    attention_fwd(x.data.data(), batch, ps.param(qname_).data.data(), ps.param(kname_).data.data(),
                  ps.param(vname_).data.data(), out.data.data(), cached_q_.data.data(),
                  cached_k_.data.data(), cached_v_.data.data(), cached_p_.data.data());
    has_cache_ = true;
    return out;
}

Tensor SelfAttentionLayer::backward(ParamStore& ps, const Tensor& gy) {
    if (!has_cache_) throw StateError("self-attention backward without recorded forward");
    if (!gy.same_shape(cached_input_)) throw DimensionError("self-attention backward shape mismatch");
    constexpr int T = kTokens, D = kDims;
    const float scale = 1.0f / std::sqrt(static_cast<float>(D));
    const int batch = cached_input_.dim(0);
    const Tensor& wq = ps.param(qname_);
    const Tensor& wk = ps.param(kname_);
    const Tensor& wv = ps.param(vname_);
    Tensor gx = gy; // residual path
    Tensor gwq = Tensor::zeros({D, D}), gwk = Tensor::zeros({D, D}), gwv = Tensor::zeros({D, D});
    for (int b = 0; b < batch; ++b) {
        const float* xr = cached_input_.data.data() + static_cast<std::size_t>(b) * kWidth;
        const float* q = cached_q_.data.data() + static_cast<std::size_t>(b) * kWidth;
        const float* k = cached_k_.data.data() + static_cast<std::size_t>(b) * kWidth;
        const float* v = cached_v_.data.data() + static_cast<std::size_t>(b) * kWidth;
        const float* p = cached_p_.data.data() + static_cast<std::size_t>(b) * T * T;
        const float* gyr = gy.data.data() + static_cast<std::size_t>(b) * kWidth;
        float dq[T * D] = {0}, dk[T * D] = {0}, dv[T * D] = {0}, ds[T * T];
        // dP and dV
        for (int t = 0; t < T; ++t) {
            const float* gyt = gyr + t * D;
            float dp[T];
            for (int u = 0; u < T; ++u) {
                float s = 0.f;
                for (int j = 0; j < D; ++j) s += gyt[j] * v[u * D + j];
                dp[u] = s;
                const float pu = p[t * T + u];
                for (int j = 0; j < D; ++j) dv[u * D + j] += pu * gyt[j];
            }
            // softmax jacobian: ds = p .* (dp - sum(dp .* p))
            float dot = 0.f;
            for (int u = 0; u < T; ++u) dot += dp[u] * p[t * T + u];
            for (int u = 0; u < T; ++u) ds[t * T + u] = p[t * T + u] * (dp[u] - dot);
        }
        // dQ = dS K * scale, dK = dS^T Q * scale
        for (int t = 0; t < T; ++t) {
            for (int j = 0; j < D; ++j) {
                float sq = 0.f;
                for (int u = 0; u < T; ++u) sq += ds[t * T + u] * k[u * D + j];
                dq[t * D + j] = sq * scale;
            }
        }
        for (int u = 0; u < T; ++u) {
            for (int j = 0; j < D; ++j) {
                float sk = 0.f;
                for (int t = 0; t < T; ++t) sk += ds[t * T + u] * q[t * D + j];
                dk[u * D + j] = sk * scale;
            }
        }
        // accumulate weight grads and input grads
        float* gxr = gx.data.data() + static_cast<std::size_t>(b) * kWidth;
        for (int t = 0; t < T; ++t) {
            const float* xt = xr + t * D;
            for (int i = 0; i < D; ++i) {
                float acc = 0.f;
                for (int j = 0; j < D; ++j) {
                    gwq.data[i * D + j] += xt[i] * dq[t * D + j];
                    gwk.data[i * D + j] += xt[i] * dk[t * D + j];
                    gwv.data[i * D + j] += xt[i] * dv[t * D + j];
                    acc += dq[t * D + j] * wq.data[i * D + j] + dk[t * D + j] * wk.data[i * D + j] +
                           dv[t * D + j] * wv.data[i * D + j];
                }
                gxr[t * D + i] += acc;
            }
        }
    }
    for (int i = 0; i < D * D; ++i) {
        ps.grad(qname_).data[i] += gwq.data[i];
        ps.grad(kname_).data[i] += gwk.data[i];
        ps.grad(vname_).data[i] += gwv.data[i];
    }
    has_cache_ = false;
    return gx;
}

// ---------------------------------------------------------------------------
// ResidualConvBlock
// ---------------------------------------------------------------------------

ResidualConvBlock::ResidualConvBlock(std::string name, int in_channels, int out_channels, bool final_relu)
    : cin_(in_channels), cout_(out_channels), final_relu_(final_relu),
      projected_(in_channels != out_channels),
      conv1_(name + ".c1", in_channels, out_channels),
      conv2_(name + ".c2", out_channels, out_channels) {
    if (projected_) proj_ = std::make_unique<Conv1x1Layer>(name + ".proj", in_channels, out_channels);
}

void ResidualConvBlock::register_params(ParamStore& ps) const {
    conv1_.register_params(ps);
    conv2_.register_params(ps);
    if (proj_) proj_->register_params(ps);
}

void ResidualConvBlock::init_params(ParamStore& ps, Rng& rng) const {
    conv1_.init_params(ps, rng);
    conv2_.init_params(ps, rng);
    if (proj_) proj_->init_params(ps, rng);
}

void ResidualConvBlock::zero_output_init(ParamStore& ps) const {
    conv2_.zero_params(ps);
    if (proj_) proj_->zero_params(ps);
}

Tensor ResidualConvBlock::forward(const ParamStore& ps, const Tensor& x) const {
    Tensor h = conv1_.forward(ps, x);
    h = relu_forward(h);
    h = conv2_.forward(ps, h);
    Tensor skip = proj_ ? proj_->forward(ps, x) : x;
    for (std::size_t i = 0; i < h.data.size(); ++i) h.data[i] += skip.data[i];
    if (final_relu_) h = relu_forward(h);
    return h;
}

Tensor ResidualConvBlock::train_forward(ParamStore& ps, const Tensor& x) {
    cached_input_ = x;
    Tensor h = conv1_.train_forward(ps, x);
    h = relu_mid_.train_forward(ps, h);
    h = conv2_.train_forward(ps, h);
    Tensor skip = proj_ ? proj_->train_forward(ps, x) : x;
    for (std::size_t i = 0; i < h.data.size(); ++i) h.data[i] += skip.data[i];
    cached_sum_ = h;
    has_cache_ = true;
    if (final_relu_) return relu_forward(h);
    return h;
}

Tensor ResidualConvBlock::backward(ParamStore& ps, const Tensor& gy) {
    if (!has_cache_) throw StateError("residual block backward without recorded forward");
    Tensor g = gy;
    if (final_relu_) {
        for (std::size_t i = 0; i < g.data.size(); ++i) {
            if (cached_sum_.data[i] <= 0.f) g.data[i] = 0.f;
        }
    }
    Tensor g_main = conv2_.backward(ps, g);
    g_main = relu_mid_.backward(ps, g_main);
    g_main = conv1_.backward(ps, g_main);
    Tensor g_skip = proj_ ? proj_->backward(ps, g) : g;
    for (std::size_t i = 0; i < g_main.data.size(); ++i) g_main.data[i] += g_skip.data[i];
    has_cache_ = false;
    return g_main;
}

// ---------------------------------------------------------------------------
// ResidualDenseBlock
// ---------------------------------------------------------------------------

ResidualDenseBlock::ResidualDenseBlock(std::string name, int width)
    : width_(width), fc1_(name + ".f1", width, width), fc2_(name + ".f2", width, width) {}

void ResidualDenseBlock::register_params(ParamStore& ps) const {
    fc1_.register_params(ps);
    fc2_.register_params(ps);
}

void ResidualDenseBlock::init_params(ParamStore& ps, Rng& rng) const {
    fc1_.init_params(ps, rng);
    fc2_.init_params(ps, rng);
}

Tensor ResidualDenseBlock::forward(const ParamStore& ps, const Tensor& x) const {
    Tensor h = fc1_.forward(ps, x);
    h = relu_forward(h);
    h = fc2_.forward(ps, h);
    for (std::size_t i = 0; i < h.data.size(); ++i) h.data[i] += x.data[i];
    return relu_forward(h);
}

Tensor ResidualDenseBlock::train_forward(ParamStore& ps, const Tensor& x) {
    cached_input_ = x;
    Tensor h = fc1_.train_forward(ps, x);
    h = relu_mid_.train_forward(ps, h);
    h = fc2_.train_forward(ps, h);
    for (std::size_t i = 0; i < h.data.size(); ++i) h.data[i] += x.data[i];
    cached_sum_ = h;
    has_cache_ = true;
    return relu_forward(h);
}

Tensor ResidualDenseBlock::backward(ParamStore& ps, const Tensor& gy) {
    if (!has_cache_) throw StateError("residual dense block backward without recorded forward");
    Tensor g = gy;
    for (std::size_t i = 0; i < g.data.size(); ++i) {
        if (cached_sum_.data[i] <= 0.f) g.data[i] = 0.f;
    }
    Tensor g_main = fc2_.backward(ps, g);
    g_main = relu_mid_.backward(ps, g_main);
    g_main = fc1_.backward(ps, g_main);
    for (std::size_t i = 0; i < g_main.data.size(); ++i) g_main.data[i] += g.data[i];
    has_cache_ = false;
    return g_main;
}

} // namespace airtemp
