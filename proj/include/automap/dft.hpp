#pragma once

#include <cmath>
#include <complex>
#include <utility>
#include <vector>

#include "automap/types.hpp"

namespace automap {

namespace detail {

// Twiddle table w[t] = exp(-2*pi*i*t/n). Indexing by (j*k) % n keeps the trig
// argument small, so coefficients stay accurate for any n.
struct Twiddles {
    std::vector<double> c, s;
    explicit Twiddles(int n) : c(n), s(n) {
        for (int t = 0; t < n; ++t) {
            double a = -kTwoPi * t / n;
            c[t] = std::cos(a);
            s[t] = std::sin(a);
        }
    }
};

// Unitary 1D DFT along rows of an n x n complex array (in-place); `sign` +1
// applies the forward kernel exp(-i...), -1 the inverse. Scale 1/sqrt(n).
inline void dft1_rows(std::vector<double>& re, std::vector<double>& im, int n,
                      const Twiddles& w, int sign) {
    std::vector<double> tr(n), ti(n);
    double scale = 1.0 / std::sqrt(double(n));
    for (int row = 0; row < n; ++row) {
        double* rr = re.data() + size_t(row) * n;
        double* ri = im.data() + size_t(row) * n;
        for (int k = 0; k < n; ++k) {
            double sr = 0.0, si = 0.0;
            for (int j = 0; j < n; ++j) {
                int t = int((int64_t(j) * k) % n);
                double wr = w.c[t];
                double wi = sign > 0 ? w.s[t] : -w.s[t];
                sr += rr[j] * wr - ri[j] * wi;
                si += rr[j] * wi + ri[j] * wr;
            }
            tr[k] = sr * scale;
            ti[k] = si * scale;
        }
        for (int k = 0; k < n; ++k) {
            rr[k] = tr[k];
            ri[k] = ti[k];
        }
    }
}

inline void transpose(std::vector<double>& a, int n) {
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) std::swap(a[size_t(i) * n + j], a[size_t(j) * n + i]);
}

}  // namespace detail

// Unitary 2D DFT: F[k] = (1/n) * sum_{u,v} x[u,v] exp(-2*pi*i*(k_r*u + k_c*v)/n).
// The 1/n scale makes the transform an isometry (Parseval holds exactly).
inline ComplexGrid dft2(const Image& img_re, const Image& img_im) {
    check_image(img_re, "dft2 real part");
    check_image(img_im, "dft2 imaginary part");
    if (img_re.n != img_im.n) throw DimensionError("dft2: real/imaginary side mismatch");
    int n = img_re.n;
    detail::Twiddles w(n);
    ComplexGrid g(n);
    g.re = img_re.pix;
    g.im = img_im.pix;
    detail::dft1_rows(g.re, g.im, n, w, +1);  // transform along v (columns index)
    detail::transpose(g.re, n);
    detail::transpose(g.im, n);
    detail::dft1_rows(g.re, g.im, n, w, +1);  // transform along u
    detail::transpose(g.re, n);
    detail::transpose(g.im, n);
    return g;
}

// Exact inverse of dft2 (conjugate transform, same unitary scale).
inline std::pair<Image, Image> idft2(const ComplexGrid& grid) {
    check_grid(grid);
    int n = grid.n;
    detail::Twiddles w(n);
    std::vector<double> re = grid.re, im = grid.im;
    detail::dft1_rows(re, im, n, w, -1);
    detail::transpose(re, n);
    detail::transpose(im, n);
    detail::dft1_rows(re, im, n, w, -1);
    detail::transpose(re, n);
    detail::transpose(im, n);
    Image out_re(n), out_im(n);
    out_re.pix = std::move(re);
    out_im.pix = std::move(im);
    return {std::move(out_re), std::move(out_im)};
}

inline void check_trajectory(const KTrajectory& traj, int n) {
    if (traj.points.empty()) throw DomainError("trajectory is empty");
    double half = n / 2.0;
    for (const auto& p : traj.points) {
        if (!std::isfinite(p[0]) || !std::isfinite(p[1]) || p[0] < -half || p[0] >= half ||
            p[1] < -half || p[1] >= half)
            throw DomainError("trajectory coordinate outside [-n/2, n/2)");
    }
}

// Exact (non-fast) non-uniform DFT:
//   s(k) = (1/n) * sum_{u,v} x[u,v] exp(-2*pi*i*(k_u*u + k_v*v)/n).
// On the integer Cartesian grid this matches dft2. k_u pairs with the row
// index u and k_v with the column index v.
inline std::vector<std::complex<double>> nudft(const Image& img_re, const Image& img_im,
                                               const KTrajectory& traj) {
    check_image(img_re, "nudft real part");
    check_image(img_im, "nudft imaginary part");
    if (img_re.n != img_im.n) throw DimensionError("nudft: real/imaginary side mismatch");
    int n = img_re.n;
    check_trajectory(traj, n);

    std::vector<std::complex<double>> out(traj.points.size());
    std::vector<double> rc(n), rs(n), cc(n), cs(n);
    for (size_t s = 0; s < traj.points.size(); ++s) {
        double ku = traj.points[s][0], kv = traj.points[s][1];
        for (int u = 0; u < n; ++u) {
            double a = -kTwoPi * ku * u / n;
            rc[u] = std::cos(a);
            rs[u] = std::sin(a);
        }
        for (int v = 0; v < n; ++v) {
            double a = -kTwoPi * kv * v / n;
            cc[v] = std::cos(a);
            cs[v] = std::sin(a);
        }
        double acc_re = 0.0, acc_im = 0.0;
        for (int u = 0; u < n; ++u) {
            double row_re = 0.0, row_im = 0.0;
            const double* xr = img_re.pix.data() + size_t(u) * n;
            const double* xi = img_im.pix.data() + size_t(u) * n;
            for (int v = 0; v < n; ++v) {
                row_re += xr[v] * cc[v] - xi[v] * cs[v];
                row_im += xr[v] * cs[v] + xi[v] * cc[v];
            }
            acc_re += row_re * rc[u] - row_im * rs[u];
            acc_im += row_re * rs[u] + row_im * rc[u];
        }
        out[s] = {acc_re / n, acc_im / n};
    }
    return out;
}

// Exact adjoint of nudft under the standard complex inner product:
//   x[u,v] = (1/n) * sum_k s(k) exp(+2*pi*i*(k_u*u + k_v*v)/n).
inline std::pair<Image, Image> nudft_adjoint(const std::vector<std::complex<double>>& samples,
                                             const KTrajectory& traj, int n) {
    if (samples.size() != traj.points.size())
        throw DimensionError("nudft_adjoint: sample/trajectory length mismatch");
    check_trajectory(traj, n);

    Image out_re(n), out_im(n);
    std::vector<double> rc(n), rs(n), cc(n), cs(n);
    for (size_t s = 0; s < samples.size(); ++s) {
        double ku = traj.points[s][0], kv = traj.points[s][1];
        for (int u = 0; u < n; ++u) {
            double a = kTwoPi * ku * u / n;
            rc[u] = std::cos(a);
            rs[u] = std::sin(a);
        }
        for (int v = 0; v < n; ++v) {
            double a = kTwoPi * kv * v / n;
            cc[v] = std::cos(a);
            cs[v] = std::sin(a);
        }
        double sr = samples[s].real() / n, si = samples[s].imag() / n;
        for (int u = 0; u < n; ++u) {
            double ur = sr * rc[u] - si * rs[u];
            double ui = sr * rs[u] + si * rc[u];
            double* xr = out_re.pix.data() + size_t(u) * n;
            double* xi = out_im.pix.data() + size_t(u) * n;
            for (int v = 0; v < n; ++v) {
                xr[v] += ur * cc[v] - ui * cs[v];
                xi[v] += ur * cs[v] + ui * cc[v];
            }
        }
    }
    return {std::move(out_re), std::move(out_im)};
}

// Integer Cartesian grid as a trajectory, row-major over (k_row, k_col),
// frequencies folded into [-n/2, n/2).
inline KTrajectory cartesian_trajectory(int n) {
    KTrajectory t;
    t.points.reserve(size_t(n) * n);
    for (int kr = 0; kr < n; ++kr)
        for (int kc = 0; kc < n; ++kc) {
            double ku = kr < (n + 1) / 2 ? kr : kr - n;
            double kv = kc < (n + 1) / 2 ? kc : kc - n;
            t.points.push_back({ku, kv});
        }
    return t;
}

}  // namespace automap
