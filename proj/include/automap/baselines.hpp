#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "automap/dft.hpp"
#include "automap/encode.hpp"
#include "automap/radon.hpp"
#include "automap/types.hpp"

namespace automap {

struct BaselineResult {
    Image image;
    std::string method;
    int iterations = 0;                    // ART only
    std::vector<double> residual_history;  // ART only, ||Ax - b|| after each sweep
};

namespace detail {

inline Image magnitude_of(const Image& re, const Image& im) {
    Image out(re.n);
    for (size_t i = 0; i < out.pix.size(); ++i) out.pix[i] = std::hypot(re.pix[i], im.pix[i]);
    return out;
}

inline ComplexGrid grid_from_full_vec(const SensorVec& sv, int n) {
    ComplexGrid g(n);
    size_t m = size_t(n) * n;
    std::copy(sv.values.begin(), sv.values.begin() + m, g.re.begin());
    std::copy(sv.values.begin() + m, sv.values.end(), g.im.begin());
    return g;
}

}  // namespace detail

// Magnitude of the inverse DFT of a full-grid complex sensor vector
// (cartesian or misaligned layout).
inline Image ifft_recon(const SensorVec& sv) {
    if (!sv.layout.complex_pair ||
        (sv.layout.kind != EncodingKind::cartesian && sv.layout.kind != EncodingKind::misaligned))
        throw UsageError("ifft_recon: expects a full-grid complex layout");
    int n = int(std::lround(std::sqrt(double(sv.layout.m))));
    if (n * n != sv.layout.m || sv.values.size() != 2 * size_t(sv.layout.m))
        throw UsageError("ifft_recon: malformed full-grid vector");
    auto [re, im] = idft2(detail::grid_from_full_vec(sv, n));
    return detail::magnitude_of(re, im);
}

// Scatter Poisson-disc samples onto the grid (zeros elsewhere), inverse DFT,
// magnitude.
inline Image zero_fill_recon(const SensorVec& sv, const EncodingOperator& op) {
    if (op.kind != EncodingKind::poisson_disc)
        throw UsageError("zero_fill_recon: encoding is not poisson_disc");
    int m = op.mask_count();
    if (int(sv.values.size()) != 2 * m)
        throw DimensionError("zero_fill_recon: vector length does not match mask");
    ComplexGrid g(op.n);
    int s = 0;
    for (size_t i = 0; i < op.mask.size(); ++i) {
        if (op.mask[i]) {
            g.re[i] = sv.values[s];
            g.im[i] = sv.values[size_t(m) + s];
            ++s;
        }
    }
    auto [re, im] = idft2(g);
    return detail::magnitude_of(re, im);
}

// Adjoint-NUDFT gridding, scaled by n^2/m so a full Cartesian trajectory
// reproduces the inverse DFT exactly.
inline Image gridding_recon(const std::vector<std::complex<double>>& samples,
                            const KTrajectory& traj, int n) {
    if (samples.size() != traj.points.size())
        throw DimensionError("gridding_recon: sample/trajectory length mismatch");
    auto [re, im] = nudft_adjoint(samples, traj, n);
    Image out = detail::magnitude_of(re, im);
    double scale = double(n) * n / double(samples.size());
    for (double& v : out.pix) v *= scale;
    return out;
}

inline Image gridding_recon(const SensorVec& sv, const EncodingOperator& op) {
    if (op.kind != EncodingKind::spiral) throw UsageError("gridding_recon: encoding is not spiral");
    size_t m = op.traj.size();
    if (sv.values.size() != 2 * m)
        throw DimensionError("gridding_recon: vector length does not match trajectory");
    std::vector<std::complex<double>> samples(m);
    for (size_t i = 0; i < m; ++i) samples[i] = {sv.values[i], sv.values[m + i]};
    return gridding_recon(samples, op.traj, op.n);
}

// Kaczmarz ART: x <- x + relax*(b_r - <a_r, x>)/||a_r||^2 * a_r over rows in
// natural sinogram order, starting from zero. One iteration = one full sweep;
// rows with zero norm are skipped.
inline BaselineResult kaczmarz_art(const Sinogram& sino, int n, int sweeps = 10,
                                   double relax = 1.0) {
    if (sweeps < 1) throw ConfigError("kaczmarz_art: sweeps must be >= 1");
    RadonOperator op(n, sino.n_angles, sino.n_rays);
    if (sino.values.size() != size_t(op.row_count()))
        throw DimensionError("kaczmarz_art: sinogram size does not match geometry");

    BaselineResult result;
    result.method = "art";
    result.iterations = sweeps;
    result.image = Image(n);
    std::vector<double>& x = result.image.pix;

    for (int sweep = 0; sweep < sweeps; ++sweep) {
        for (int r = 0; r < op.row_count(); ++r) {
            double nsq = op.row_norm_sq(r);
            if (nsq == 0.0) continue;
            double dot = 0.0;
            for (const auto& e : op.row(r)) dot += x[e.pixel] * e.length;
            double step = relax * (sino.values[r] - dot) / nsq;
            for (const auto& e : op.row(r)) x[e.pixel] += step * e.length;
        }
        double res = 0.0;
        for (int r = 0; r < op.row_count(); ++r) {
            double dot = 0.0;
            for (const auto& e : op.row(r)) dot += x[e.pixel] * e.length;
            double d = dot - sino.values[r];
            res += d * d;
        }
        result.residual_history.push_back(std::sqrt(res));
    }
    return result;
}

}  // namespace automap
