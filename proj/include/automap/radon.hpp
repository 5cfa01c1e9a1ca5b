#pragma once

#include <cmath>
#include <vector>

#include "automap/types.hpp"

namespace automap {

// Parallel-beam discrete Radon transform with exact line-pixel intersection
// lengths. Pixel (u, v) of an n x n image is the unit square centered at
// (x, y) = (v - (n-1)/2, (n-1)/2 - u); projection angle theta_j = j*pi/n_angles
// has ray normal (cos t, sin t) and integer-spaced offsets centered on the
// image center. Pixel squares are half-open ([x0, x1) x [y0, y1)) so a ray
// lying exactly on a shared pixel edge is counted once.
class RadonOperator {
public:
    struct Entry {
        int pixel;
        double length;
    };

    RadonOperator(int n, int n_angles, int n_rays) : n_(n), n_angles_(n_angles), n_rays_(n_rays) {
        if (n < 4) throw ConfigError("radon: image side must be >= 4");
        if (n_angles < 1) throw ConfigError("radon: need at least one projection angle");
        if (n_rays % 2 == 0) throw ConfigError("radon: ray count must be odd");
        if (n_rays < int(std::ceil(n * std::sqrt(2.0))))
            throw ConfigError("radon: ray count must cover the image diagonal");
        build();
    }

    int n() const { return n_; }
    int n_angles() const { return n_angles_; }
    int n_rays() const { return n_rays_; }
    int row_count() const { return n_angles_ * n_rays_; }

    const std::vector<Entry>& row(int r) const { return rows_[r]; }
    double row_norm_sq(int r) const { return row_norm_sq_[r]; }

    Sinogram forward(const Image& img) const {
        check_image(img, "radon input");
        if (img.n != n_) throw DimensionError("radon: image side does not match operator");
        Sinogram sino(n_angles_, n_rays_);
        for (int r = 0; r < row_count(); ++r) {
            double acc = 0.0;
            for (const Entry& e : rows_[r]) acc += img.pix[e.pixel] * e.length;
            sino.values[r] = acc;
        }
        return sino;
    }

    Image adjoint(const Sinogram& sino) const {
        if (sino.n_angles != n_angles_ || sino.n_rays != n_rays_ ||
            sino.values.size() != size_t(row_count()))
            throw DimensionError("radon adjoint: sinogram does not match operator geometry");
        Image img(n_);
        for (int r = 0; r < row_count(); ++r) {
            double w = sino.values[r];
            if (w == 0.0) continue;
            for (const Entry& e : rows_[r]) img.pix[e.pixel] += w * e.length;
        }
        return img;
    }

private:
    void build() {
        rows_.resize(size_t(row_count()));
        row_norm_sq_.assign(size_t(row_count()), 0.0);
        double c0 = (n_ - 1) / 2.0;          // pixel-center offset
        double t0 = (n_rays_ - 1) / 2.0;     // central ray index
        double reach = std::sqrt(0.5) + 1e-12;  // pixel circumradius

        for (int a = 0; a < n_angles_; ++a) {
            double theta = kPi * a / n_angles_;
            double wx = std::cos(theta), wy = std::sin(theta);
            for (int r = 0; r < n_rays_; ++r) {
                double t = r - t0;
                auto& row = rows_[size_t(a) * n_rays_ + r];
                for (int u = 0; u < n_; ++u) {
                    double cy = c0 - u;
                    for (int v = 0; v < n_; ++v) {
                        double cx = v - c0;
                        if (std::abs(cx * wx + cy * wy - t) > reach) continue;
                        double len = segment_length(cx, cy, wx, wy, t);
                        if (len > 0.0) row.push_back({u * n_ + v, len});
                    }
                }
                double& nsq = row_norm_sq_[size_t(a) * n_rays_ + r];
                for (const Entry& e : row) nsq += e.length * e.length;
            }
        }
    }

    // Length of {p : p.w = t} inside the half-open unit square centered (cx, cy).
    // Parameterize p(s) = t*w + s*d with d = (-wy, wx).
    static double segment_length(double cx, double cy, double wx, double wy, double t) {
        double ox = t * wx, oy = t * wy;
        double dx = -wy, dy = wx;
        double x0 = cx - 0.5, x1 = cx + 0.5;
        double y0 = cy - 0.5, y1 = cy + 0.5;
        double lo = -1e30, hi = 1e30;

        if (std::abs(dx) < 1e-14) {
            if (!(ox >= x0 && ox < x1)) return 0.0;  // half-open edge rule
        } else {
            double s1 = (x0 - ox) / dx, s2 = (x1 - ox) / dx;
            if (s1 > s2) std::swap(s1, s2);
            lo = std::max(lo, s1);
            hi = std::min(hi, s2);
        }
        if (std::abs(dy) < 1e-14) {
            if (!(oy >= y0 && oy < y1)) return 0.0;
        } else {
            double s1 = (y0 - oy) / dy, s2 = (y1 - oy) / dy;
            if (s1 > s2) std::swap(s1, s2);
            lo = std::max(lo, s1);
            hi = std::min(hi, s2);
        }
        return hi > lo ? hi - lo : 0.0;
    }

    int n_, n_angles_, n_rays_;
    std::vector<std::vector<Entry>> rows_;
    std::vector<double> row_norm_sq_;
};

// Desk-scale geometry defaults; at n = 128 the ray rule lands on 185 rays.
inline int default_radon_angles(int n) { return std::max(60, n); }

inline int default_radon_rays(int n) {
    int r = int(std::ceil(n * std::sqrt(2.0))) + 2;
    return r % 2 == 0 ? r + 1 : r;
}

inline Sinogram radon_forward(const Image& img, int n_angles, int n_rays) {
    return RadonOperator(img.n, n_angles, n_rays).forward(img);
}

inline Image radon_adjoint(const Sinogram& sino, int n) {
    return RadonOperator(n, sino.n_angles, sino.n_rays).adjoint(sino);
}

}  // namespace automap
