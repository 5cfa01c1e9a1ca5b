#pragma once

#include <cmath>
#include <cstring>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "automap/io.hpp"
#include "automap/rng.hpp"
#include "automap/types.hpp"

namespace automap {

// Feed-forward reconstruction network:
//   sensor vector -> FC (tanh) -> FC (tanh) -> reshape n x n
//   -> conv 64@5x5 (relu) -> conv 64@5x5 (relu) -> transposed conv 64@7x7 -> image
// All convolutions are stride 1 with zero same-padding so every feature map
// stays n x n. The output layer is linear.

inline constexpr int kChannels = 64;
inline constexpr int kConvSize = 5;   // C1/C2 kernels
inline constexpr int kTconvSize = 7;  // output kernels

struct NetParams {
    int d_in = 0;
    int n = 0;
    std::vector<double> W1, b1;  // n^2 x d_in, n^2
    std::vector<double> W2, b2;  // n^2 x n^2, n^2
    std::vector<double> K1, k1b;  // 64 x 1 x 5 x 5, 64
    std::vector<double> K2, k2b;  // 64 x 64 x 5 x 5, 64
    std::vector<double> KT, ktb;  // 64 x 7 x 7 (64 channels -> 1), 1

    int units() const { return n * n; }
};

struct ParamBlock {
    const char* name;
    std::vector<double> NetParams::*member;
};

// Fixed block order; serialization, optimizer state and reductions all use it.
inline constexpr std::array<ParamBlock, 10> kParamBlocks = {{
    {"W1", &NetParams::W1},
    {"b1", &NetParams::b1},
    {"W2", &NetParams::W2},
    {"b2", &NetParams::b2},
    {"K1", &NetParams::K1},
    {"k1b", &NetParams::k1b},
    {"K2", &NetParams::K2},
    {"k2b", &NetParams::k2b},
    {"KT", &NetParams::KT},
    {"ktb", &NetParams::ktb},
}};

inline void shape_like(NetParams& p, int d_in, int n) {
    p.d_in = d_in;
    p.n = n;
    size_t u = size_t(n) * n;
    p.W1.assign(u * d_in, 0.0);
    p.b1.assign(u, 0.0);
    p.W2.assign(u * u, 0.0);
    p.b2.assign(u, 0.0);
    p.K1.assign(size_t(kChannels) * kConvSize * kConvSize, 0.0);
    p.k1b.assign(kChannels, 0.0);
    p.K2.assign(size_t(kChannels) * kChannels * kConvSize * kConvSize, 0.0);
    p.k2b.assign(kChannels, 0.0);
    p.KT.assign(size_t(kChannels) * kTconvSize * kTconvSize, 0.0);
    p.ktb.assign(1, 0.0);
}

using Gradients = NetParams;  // shape-congruent, one array per parameter array

inline bool same_shape(const NetParams& a, const NetParams& b) {
    if (a.d_in != b.d_in || a.n != b.n) return false;
    for (const auto& blk : kParamBlocks)
        if ((a.*blk.member).size() != (b.*blk.member).size()) return false;
    return true;
}

// Glorot-style uniform init, biases zero, deterministic per seed. Blocks are
// drawn in the fixed block order from a single "init" stream.
inline NetParams init_params(int d_in, int n, uint64_t seed) {
    if (d_in < 1) throw ConfigError("init_params: d_in must be >= 1");
    if (n < 4) throw ConfigError("init_params: n must be >= 4");
    NetParams p;
    shape_like(p, d_in, n);
    Rng rng(derive_seed(seed, "init"));
    auto fill = [&rng](std::vector<double>& w, double fan_in, double fan_out) {
        double bound = std::sqrt(6.0 / (fan_in + fan_out));
        for (double& x : w) x = rng.uniform(-bound, bound);
    };
    double u = double(n) * n;
    double kk = double(kConvSize) * kConvSize;
    double tt = double(kTconvSize) * kTconvSize;
    fill(p.W1, double(d_in), u);
    fill(p.W2, u, u);
    fill(p.K1, kk, kChannels * kk);
    fill(p.K2, kChannels * kk, kChannels * kk);
    fill(p.KT, kChannels * tt, tt);
    return p;
}

// Post-activation intermediates captured during a forward pass.
struct ForwardTrace {
    std::vector<double> fc2_act, fc3_act;  // n^2 each, in (-1, 1)
    std::vector<double> c1_act, c2_act;    // 64*n^2 each, >= 0
    std::vector<double> output;            // n^2
};

namespace detail {

inline void check_finite(const std::vector<double>& v, const char* layer) {
    for (double x : v)
        if (!std::isfinite(x)) throw NumericError(std::string("non-finite value in layer ") + layer);
}

// y = tanh(W x + b), W is rows x cols row-major.
inline void fc_tanh(const double* __restrict W, const double* __restrict b,
                    const double* __restrict x, double* __restrict y, int rows, int cols) {
    for (int i = 0; i < rows; ++i) {
        const double* row = W + size_t(i) * cols;
        double acc = b[i];
        for (int j = 0; j < cols; ++j) acc += row[j] * x[j];
        y[i] = std::tanh(acc);
    }
}

// Zero-pad an n x n map into an (n + 2*pad)^2 buffer.
inline void pad_map(const double* src, double* dst, int n, int pad) {
    int w = n + 2 * pad;
    std::memset(dst, 0, sizeof(double) * size_t(w) * w);
    for (int i = 0; i < n; ++i)
        std::memcpy(dst + size_t(i + pad) * w + pad, src + size_t(i) * n, sizeof(double) * n);
}

inline constexpr int kMaxSide = 256;  // row-accumulator stack bound

// Dot product with four independent partial sums; the fixed grouping keeps it
// deterministic while letting the compiler vectorize the reduction.
inline double dot_rows(const double* __restrict a, const double* __restrict b, int n) {
    double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
    int j = 0;
    for (; j + 4 <= n; j += 4) {
        s0 += a[j] * b[j];
        s1 += a[j + 1] * b[j + 1];
        s2 += a[j + 2] * b[j + 2];
        s3 += a[j + 3] * b[j + 3];
    }
    for (; j < n; ++j) s0 += a[j] * b[j];
    return (s0 + s1) + (s2 + s3);
}

// Same-padded 5x5 convolution: out[o] = bias[o] + sum_c in_pad[c] (*) K[o][c].
// in_pad holds in_ch padded maps of width n+4; out holds out_ch n x n maps.
inline void conv5(const double* __restrict in_pad, const double* __restrict K,
                  const double* __restrict bias, double* __restrict out, int n, int in_ch,
                  int out_ch) {
    int w = n + 4;
    size_t pad_sz = size_t(w) * w;
    double acc[kMaxSide];
    for (int o = 0; o < out_ch; ++o) {
        double* om = out + size_t(o) * n * n;
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) acc[j] = bias[o];
            for (int c = 0; c < in_ch; ++c) {
                const double* pm = in_pad + size_t(c) * pad_sz;
                const double* kr = K + (size_t(o) * in_ch + c) * kConvSize * kConvSize;
                for (int a = 0; a < kConvSize; ++a) {
                    const double* __restrict row = pm + size_t(i + a) * w;
                    double k0 = kr[a * kConvSize], k1 = kr[a * kConvSize + 1],
                           k2 = kr[a * kConvSize + 2], k3 = kr[a * kConvSize + 3],
                           k4 = kr[a * kConvSize + 4];
                    for (int j = 0; j < n; ++j)
                        acc[j] += k0 * row[j] + k1 * row[j + 1] + k2 * row[j + 2] +
                                  k3 * row[j + 3] + k4 * row[j + 4];
                }
            }
            std::memcpy(om + size_t(i) * n, acc, sizeof(double) * n);
        }
    }
}

// Stride-1 transposed convolution 64 -> 1 via scatter into a pad-3 output
// buffer (width n+6); the center n x n window is the result.
inline void tconv7(const double* __restrict in, const double* __restrict KT, double ktb,
                   double* __restrict out_pad, double* __restrict out, int n) {
    int w = n + 6;
    std::memset(out_pad, 0, sizeof(double) * size_t(w) * w);
    for (int c = 0; c < kChannels; ++c) {
        const double* im = in + size_t(c) * n * n;
        const double* kr = KT + size_t(c) * kTconvSize * kTconvSize;
        for (int i = 0; i < n; ++i) {
            const double* __restrict src = im + size_t(i) * n;
            for (int a = 0; a < kTconvSize; ++a) {
                double* __restrict dst = out_pad + size_t(i + a) * w;
                const double* k = kr + a * kTconvSize;
                for (int j = 0; j < n; ++j) {
                    double v = src[j];
                    dst[j] += k[0] * v;
                    dst[j + 1] += k[1] * v;
                    dst[j + 2] += k[2] * v;
                    dst[j + 3] += k[3] * v;
                    dst[j + 4] += k[4] * v;
                    dst[j + 5] += k[5] * v;
                    dst[j + 6] += k[6] * v;
                }
            }
        }
    }
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) out[size_t(i) * n + j] = out_pad[size_t(i + 3) * w + (j + 3)] + ktb;
}

}  // namespace detail

// Reusable buffers for forward/backward; one per thread in hot paths.
struct NetWorkspace {
    std::vector<double> fc2, fc3;        // post-tanh
    std::vector<double> z1, c1, z2, c2;  // pre/post-relu conv maps
    std::vector<double> y;               // output
    std::vector<double> p3, pc1;         // pad-2 inputs to C1/C2
    std::vector<double> ypad;            // pad-3 tconv scatter buffer
    std::vector<double> dy_pad, dz2, dz1, dz2pad, dz1pad, dfc3, dfc2;

    void resize(int d_in, int n) {
        (void)d_in;
        size_t u = size_t(n) * n;
        size_t w4 = size_t(n + 4) * (n + 4);
        size_t w6 = size_t(n + 6) * (n + 6);
        fc2.resize(u);
        fc3.resize(u);
        z1.resize(kChannels * u);
        c1.resize(kChannels * u);
        z2.resize(kChannels * u);
        c2.resize(kChannels * u);
        y.resize(u);
        p3.resize(w4);
        pc1.resize(kChannels * w4);
        ypad.resize(w6);
        dy_pad.resize(w6);
        dz2.resize(kChannels * u);
        dz1.resize(kChannels * u);
        dz2pad.resize(kChannels * w4);
        dz1pad.resize(kChannels * w4);
        dfc3.resize(u);
        dfc2.resize(u);
    }
};

// Forward pass; intermediates land in the workspace (ws.y is the output).
inline void forward(const NetParams& p, const std::vector<double>& x, NetWorkspace& ws,
                    bool check = true) {
    if (int(x.size()) != p.d_in) throw DimensionError("forward: input length does not match d_in");
    if (p.n > detail::kMaxSide) throw DimensionError("forward: side exceeds the compiled bound");
    int n = p.n;
    int u = n * n;
    ws.resize(p.d_in, n);

    detail::fc_tanh(p.W1.data(), p.b1.data(), x.data(), ws.fc2.data(), u, p.d_in);
    if (check) detail::check_finite(ws.fc2, "FC2");
    detail::fc_tanh(p.W2.data(), p.b2.data(), ws.fc2.data(), ws.fc3.data(), u, u);
    if (check) detail::check_finite(ws.fc3, "FC3");

    detail::pad_map(ws.fc3.data(), ws.p3.data(), n, 2);
    detail::conv5(ws.p3.data(), p.K1.data(), p.k1b.data(), ws.z1.data(), n, 1, kChannels);
    for (size_t i = 0; i < ws.z1.size(); ++i) ws.c1[i] = ws.z1[i] > 0.0 ? ws.z1[i] : 0.0;
    if (check) detail::check_finite(ws.c1, "C1");

    size_t w4 = size_t(n + 4) * (n + 4);
    for (int c = 0; c < kChannels; ++c)
        detail::pad_map(ws.c1.data() + size_t(c) * u, ws.pc1.data() + size_t(c) * w4, n, 2);
    detail::conv5(ws.pc1.data(), p.K2.data(), p.k2b.data(), ws.z2.data(), n, kChannels, kChannels);
    for (size_t i = 0; i < ws.z2.size(); ++i) ws.c2[i] = ws.z2[i] > 0.0 ? ws.z2[i] : 0.0;
    if (check) detail::check_finite(ws.c2, "C2");

    detail::tconv7(ws.c2.data(), p.KT.data(), p.ktb[0], ws.ypad.data(), ws.y.data(), n);
    if (check) detail::check_finite(ws.y, "output");
}

inline std::vector<double> forward(const NetParams& p, const std::vector<double>& x,
                                   ForwardTrace* trace = nullptr) {
    NetWorkspace ws;
    forward(p, x, ws);
    if (trace) {
        trace->fc2_act = ws.fc2;
        trace->fc3_act = ws.fc3;
        trace->c1_act = ws.c1;
        trace->c2_act = ws.c2;
        trace->output = ws.y;
    }
    return ws.y;
}

// Training loss: mean squared error plus an L1 penalty on the C2 feature-map
// activations (lambda default 1e-4).
inline double loss(const std::vector<double>& output, const std::vector<double>& target,
                   const std::vector<double>& c2_act, double lambda) {
    if (output.size() != target.size()) throw DimensionError("loss: output/target length mismatch");
    double sq = 0.0;
    for (size_t i = 0; i < output.size(); ++i) {
        double d = output[i] - target[i];
        sq += d * d;
    }
    sq /= double(output.size());
    double l1 = 0.0;
    if (lambda != 0.0 && !c2_act.empty()) {
        for (double v : c2_act) l1 += std::abs(v);
        l1 = lambda * l1 / double(c2_act.size());
    }
    return sq + l1;
}

// Analytic gradients of loss() composed with forward(); returns the loss of
// the unperturbed pass (bit-identical to calling forward + loss).
inline double backward(const NetParams& p, const std::vector<double>& x,
                       const std::vector<double>& target, double lambda, NetWorkspace& ws,
                       Gradients& g) {
    int n = p.n;
    int u = n * n;
    if (int(target.size()) != u) throw DimensionError("backward: target length must be n^2");
    if (!same_shape(p, g)) shape_like(g, p.d_in, n);
    forward(p, x, ws);
    double L = loss(ws.y, target, ws.c2, lambda);

    int w4 = n + 4, w6 = n + 6;
    size_t pad4 = size_t(w4) * w4;

    // dL/dy and the tconv backward (scatter form adjoint).
    std::memset(ws.dy_pad.data(), 0, sizeof(double) * ws.dy_pad.size());
    double dktb = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            double d = 2.0 * (ws.y[size_t(i) * n + j] - target[size_t(i) * n + j]) / double(u);
            ws.dy_pad[size_t(i + 3) * w6 + (j + 3)] = d;
            dktb += d;
        }
    g.ktb[0] = dktb;

    double l1_coef = lambda / double(kChannels * u);
    for (int c = 0; c < kChannels; ++c) {
        const double* cm = ws.c2.data() + size_t(c) * u;
        const double* km = p.KT.data() + size_t(c) * kTconvSize * kTconvSize;
        double* gk = g.KT.data() + size_t(c) * kTconvSize * kTconvSize;
        double* dz = ws.dz2.data() + size_t(c) * u;
        for (int a = 0; a < kTconvSize; ++a)
            for (int b = 0; b < kTconvSize; ++b) {
                double acc = 0.0;
                for (int i = 0; i < n; ++i)
                    acc += detail::dot_rows(cm + size_t(i) * n,
                                            ws.dy_pad.data() + size_t(i + a) * w6 + b, n);
                gk[a * kTconvSize + b] = acc;
            }
        for (int i = 0; i < n; ++i) {
            double* __restrict dzr = dz + size_t(i) * n;
            std::memset(dzr, 0, sizeof(double) * n);
            for (int a = 0; a < kTconvSize; ++a) {
                const double* __restrict dyr = ws.dy_pad.data() + size_t(i + a) * w6;
                const double* k = km + a * kTconvSize;
                for (int j = 0; j < n; ++j)
                    dzr[j] += k[0] * dyr[j] + k[1] * dyr[j + 1] + k[2] * dyr[j + 2] +
                              k[3] * dyr[j + 3] + k[4] * dyr[j + 4] + k[5] * dyr[j + 5] +
                              k[6] * dyr[j + 6];
            }
        }
        // L1 on c2, then the relu mask (z2 > 0 iff c2 > 0).
        const double* zm = ws.z2.data() + size_t(c) * u;
        for (int i = 0; i < u; ++i) {
            double dv = dz[i] + (cm[i] > 0.0 ? l1_coef : 0.0);
            dz[i] = zm[i] > 0.0 ? dv : 0.0;
        }
    }

    // conv2 backward: kernel/bias gradients, then the input gradient as a
    // gather convolution of the padded dz2 with the flipped kernels.
    for (int o = 0; o < kChannels; ++o) {
        const double* dz = ws.dz2.data() + size_t(o) * u;
        double bacc = 0.0;
        for (int i = 0; i < u; ++i) bacc += dz[i];
        g.k2b[o] = bacc;
        detail::pad_map(dz, ws.dz2pad.data() + size_t(o) * pad4, n, 2);
        for (int c = 0; c < kChannels; ++c) {
            const double* pm = ws.pc1.data() + size_t(c) * pad4;
            double* gk = g.K2.data() + (size_t(o) * kChannels + c) * kConvSize * kConvSize;
            for (int a = 0; a < kConvSize; ++a)
                for (int b = 0; b < kConvSize; ++b) {
                    double acc = 0.0;
                    for (int i = 0; i < n; ++i)
                        acc += detail::dot_rows(dz + size_t(i) * n,
                                                pm + size_t(i + a) * w4 + b, n);
                    gk[a * kConvSize + b] = acc;
                }
        }
    }
    for (int c = 0; c < kChannels; ++c) {
        const double* zm = ws.z1.data() + size_t(c) * u;
        double* dz1 = ws.dz1.data() + size_t(c) * u;
        double row[detail::kMaxSide];
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) row[j] = 0.0;
            for (int o = 0; o < kChannels; ++o) {
                const double* dpm = ws.dz2pad.data() + size_t(o) * pad4;
                const double* km = p.K2.data() + (size_t(o) * kChannels + c) * kConvSize * kConvSize;
                for (int a = 0; a < kConvSize; ++a) {
                    const double* __restrict dr = dpm + size_t(i + a) * w4;
                    const double* kf = km + (kConvSize - 1 - a) * kConvSize;
                    double k0 = kf[4], k1 = kf[3], k2 = kf[2], k3 = kf[1], k4 = kf[0];
                    for (int j = 0; j < n; ++j)
                        row[j] += k0 * dr[j] + k1 * dr[j + 1] + k2 * dr[j + 2] +
                                  k3 * dr[j + 3] + k4 * dr[j + 4];
                }
            }
            for (int j = 0; j < n; ++j) {
                size_t at = size_t(i) * n + j;
                dz1[at] = zm[at] > 0.0 ? row[j] : 0.0;
            }
        }
    }

    // conv1 backward (single input channel: the reshaped FC3 map)
    for (int o = 0; o < kChannels; ++o) {
        const double* dz = ws.dz1.data() + size_t(o) * u;
        double bacc = 0.0;
        for (int i = 0; i < u; ++i) bacc += dz[i];
        g.k1b[o] = bacc;
        detail::pad_map(dz, ws.dz1pad.data() + size_t(o) * pad4, n, 2);
        double* gk = g.K1.data() + size_t(o) * kConvSize * kConvSize;
        for (int a = 0; a < kConvSize; ++a)
            for (int b = 0; b < kConvSize; ++b) {
                double acc = 0.0;
                for (int i = 0; i < n; ++i)
                    acc += detail::dot_rows(dz + size_t(i) * n,
                                            ws.p3.data() + size_t(i + a) * w4 + b, n);
                gk[a * kConvSize + b] = acc;
            }
    }
    double fc3row[detail::kMaxSide];
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) fc3row[j] = 0.0;
        for (int o = 0; o < kChannels; ++o) {
            const double* dpm = ws.dz1pad.data() + size_t(o) * pad4;
            const double* km = p.K1.data() + size_t(o) * kConvSize * kConvSize;
            for (int a = 0; a < kConvSize; ++a) {
                const double* __restrict dr = dpm + size_t(i + a) * w4;
                const double* kf = km + (kConvSize - 1 - a) * kConvSize;
                double k0 = kf[4], k1 = kf[3], k2 = kf[2], k3 = kf[1], k4 = kf[0];
                for (int j = 0; j < n; ++j)
                    fc3row[j] += k0 * dr[j] + k1 * dr[j + 1] + k2 * dr[j + 2] +
                                 k3 * dr[j + 3] + k4 * dr[j + 4];
            }
        }
        for (int j = 0; j < n; ++j) {
            double f = ws.fc3[size_t(i) * n + j];
            ws.dfc3[size_t(i) * n + j] = fc3row[j] * (1.0 - f * f);  // tanh'
        }
    }

    // FC backward
    std::memset(ws.dfc2.data(), 0, sizeof(double) * ws.dfc2.size());
    for (int i = 0; i < u; ++i) {
        double d = ws.dfc3[i];
        g.b2[i] = d;
        double* gw = g.W2.data() + size_t(i) * u;
        const double* w = p.W2.data() + size_t(i) * u;
        for (int j = 0; j < u; ++j) {
            gw[j] = d * ws.fc2[j];
            ws.dfc2[j] += d * w[j];
        }
    }
    for (int i = 0; i < u; ++i) {
        double f = ws.fc2[i];
        double d = ws.dfc2[i] * (1.0 - f * f);
        g.b1[i] = d;
        double* gw = g.W1.data() + size_t(i) * p.d_in;
        for (int j = 0; j < p.d_in; ++j) gw[j] = d * x[j];
    }
    return L;
}

inline std::pair<double, Gradients> backward(const NetParams& p, const std::vector<double>& x,
                                             const std::vector<double>& target, double lambda) {
    NetWorkspace ws;
    Gradients g;
    shape_like(g, p.d_in, p.n);
    double L = backward(p, x, target, lambda, ws, g);
    return {L, std::move(g)};
}

// ---- checkpoint file ("AMAP") ---------------------------------------------------

inline void save_checkpoint(const std::string& path, const NetParams& p,
                            nlohmann::json extra_meta = {}) {
    nlohmann::json meta = std::move(extra_meta);
    meta["d_in"] = p.d_in;
    meta["n"] = p.n;
    nlohmann::json shapes;
    for (const auto& blk : kParamBlocks) shapes[blk.name] = (p.*blk.member).size();
    meta["shapes"] = shapes;
    std::string json = meta.dump();

    std::string out = "AMAP";
    put_u32_le(out, 1);
    put_u64_le(out, json.size());
    out += json;
    for (const auto& blk : kParamBlocks) put_f64_le(out, p.*blk.member);
    write_file_atomic(path, out);
}

inline std::pair<NetParams, nlohmann::json> load_checkpoint(const std::string& path) {
    std::string data = read_file(path);
    ByteReader r{data};
    if (r.bytes(4) != "AMAP") throw IoError("not a checkpoint file: " + path);
    uint32_t version = r.u32();
    if (version != 1) throw IoError("unsupported checkpoint version in " + path);
    auto meta = nlohmann::json::parse(r.bytes(r.u64()));
    NetParams p;
    shape_like(p, meta.at("d_in").get<int>(), meta.at("n").get<int>());
    for (const auto& blk : kParamBlocks) {
        auto& vec = p.*blk.member;
        size_t want = meta.at("shapes").at(blk.name).get<size_t>();
        if (want != vec.size()) throw IoError("checkpoint shape mismatch for block " + std::string(blk.name));
        r.f64(vec, want);
    }
    return {std::move(p), std::move(meta)};
}

}  // namespace automap
