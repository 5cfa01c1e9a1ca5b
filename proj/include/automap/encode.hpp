#pragma once

#include <cmath>
#include <cstdint>
#include <memory>
#include <numeric>
#include <string>
#include <vector>

#include <json.hpp>

#include "automap/dft.hpp"
#include "automap/io.hpp"
#include "automap/radon.hpp"
#include "automap/rng.hpp"
#include "automap/types.hpp"

namespace automap {

enum class EncodingKind { cartesian, poisson_disc, spiral, radon, misaligned };

inline const char* to_string(EncodingKind k) {
    switch (k) {
        case EncodingKind::cartesian: return "cartesian";
        case EncodingKind::poisson_disc: return "poisson_disc";
        case EncodingKind::spiral: return "spiral";
        case EncodingKind::radon: return "radon";
        case EncodingKind::misaligned: return "misaligned";
    }
    return "?";
}

inline EncodingKind encoding_kind_from(const std::string& s) {
    if (s == "cartesian") return EncodingKind::cartesian;
    if (s == "poisson_disc" || s == "poisson") return EncodingKind::poisson_disc;
    if (s == "spiral") return EncodingKind::spiral;
    if (s == "radon") return EncodingKind::radon;
    if (s == "misaligned") return EncodingKind::misaligned;
    throw ConfigError("unknown encoding kind: " + s);
}

// Describes how a sensor vector is laid out. Complex encodings flatten as
// [all re || all im]; the ordering within each half is frozen per kind
// (grid row-major, mask row-major, trajectory order, sinogram row-major).
struct SensorLayout {
    EncodingKind kind = EncodingKind::cartesian;
    bool complex_pair = true;
    int m = 0;  // sample count (pairs for complex encodings)

    int vec_len() const { return complex_pair ? 2 * m : m; }
    bool operator==(const SensorLayout&) const = default;
};

struct SensorVec {
    SensorLayout layout;
    std::vector<double> values;
};

// Synthetic phase map, values in [0, 2*pi].
struct PhaseMap {
    int n = 0;
    std::vector<double> phase;
};

// A frozen forward model. All sampling geometry is fixed at construction and
// serializable; instances are immutable and safe to share between threads.
struct EncodingOperator {
    EncodingKind kind = EncodingKind::cartesian;
    int n = 0;
    uint64_t seed = 0;

    // poisson_disc
    std::vector<uint8_t> mask;  // n*n row-major over (k_row, k_col), 0/1
    double target_fraction = 0.0;
    // spiral
    KTrajectory traj;
    // radon
    int n_angles = 0, n_rays = 0;
    std::shared_ptr<const RadonOperator> radon;  // rebuilt on load, not serialized
    // misaligned
    int max_shift = 0;

    int mask_count() const {
        return int(std::accumulate(mask.begin(), mask.end(), size_t(0)));
    }

    SensorLayout layout() const {
        switch (kind) {
            case EncodingKind::cartesian:
            case EncodingKind::misaligned:
                return {kind, true, n * n};
            case EncodingKind::poisson_disc:
                return {kind, true, mask_count()};
            case EncodingKind::spiral:
                return {kind, true, int(traj.size())};
            case EncodingKind::radon:
                return {kind, false, n_angles * n_rays};
        }
        return {};
    }
};

inline int default_max_shift(int n) { return std::max(1, int(std::lround(3.0 * n / 128.0))); }

namespace detail {

// Dart throwing over the index grid: walk a seeded permutation of all cells,
// accept a cell when no accepted cell lies closer than `radius`, stop at
// `target_count`. The DC cell (0,0) is always accepted first.
inline std::vector<uint8_t> dart_throw_mask(int n, double radius, int target_count,
                                            const std::vector<int>& perm) {
    std::vector<uint8_t> mask(size_t(n) * n, 0);
    std::vector<std::pair<int, int>> accepted;
    accepted.reserve(target_count);
    double r2 = radius * radius;
    auto far_enough = [&](int u, int v) {
        for (const auto& [au, av] : accepted) {
            double du = au - u, dv = av - v;
            if (du * du + dv * dv < r2) return false;
        }
        return true;
    };
    mask[0] = 1;
    accepted.push_back({0, 0});
    for (int idx : perm) {
        if (int(accepted.size()) >= target_count) break;
        if (idx == 0) continue;
        int u = idx / n, v = idx % n;
        if (far_enough(u, v)) {
            mask[idx] = 1;
            accepted.push_back({u, v});
        }
    }
    return mask;
}

}  // namespace detail

// Poisson-disc mask: bisection on the minimum-distance radius keeps the
// largest radius that still reaches the target sampled fraction.
inline std::vector<uint8_t> make_poisson_mask(int n, double fraction, uint64_t seed) {
    if (fraction <= 0.0 || fraction > 1.0)
        throw ConfigError("poisson_disc: fraction must be in (0, 1]");
    int cells = n * n;
    int target_count = std::max(1, int(std::lround(fraction * cells)));

    Rng rng(derive_seed(seed, "poisson_mask"));
    std::vector<int> perm(cells);
    std::iota(perm.begin(), perm.end(), 0);
    rng.shuffle(perm);

    auto fraction_of = [&](const std::vector<uint8_t>& m) {
        return double(std::accumulate(m.begin(), m.end(), size_t(0))) / cells;
    };

    double lo = 0.5;             // no exclusion: plain random keep
    double hi = n * std::sqrt(2.0);  // excludes everything but DC
    std::vector<uint8_t> best = detail::dart_throw_mask(n, lo, target_count, perm);
    for (int round = 0; round < 50; ++round) {
        double mid = 0.5 * (lo + hi);
        auto mask = detail::dart_throw_mask(n, mid, target_count, perm);
        if (fraction_of(mask) + 0.01 >= fraction) {
            lo = mid;
            best = std::move(mask);
        } else {
            hi = mid;
        }
    }
    if (std::abs(fraction_of(best) - fraction) > 0.01)
        throw ConfigError("poisson_disc: target fraction unreachable after 50 bisection rounds");
    return best;
}

// 10-interleave Archimedean spiral r(tau) = tau*(n/2) with tau in [0, 1),
// interleave j rotated by 2*pi*j/10; samples equispaced in tau so the total
// count is round(n^2 / 1.2). Angular rate: n/20 turns per interleave, which
// spaces adjacent arms of the interleave set one cycle/FOV apart.
inline KTrajectory make_spiral_trajectory(int n) {
    const int interleaves = 10;
    int total = int(std::lround(double(n) * n / 1.2));
    KTrajectory traj;
    traj.points.reserve(total);
    double turns = n / 20.0;
    for (int j = 0; j < interleaves; ++j) {
        int count = total / interleaves + (j < total % interleaves ? 1 : 0);
        double rot = kTwoPi * j / interleaves;
        for (int i = 0; i < count; ++i) {
            double tau = double(i) / count;
            double r = tau * (n / 2.0);
            double phi = kTwoPi * turns * tau + rot;
            traj.points.push_back({r * std::cos(phi), r * std::sin(phi)});
        }
    }
    return traj;
}

struct EncodingParams {
    double target_fraction = 0.40;  // poisson_disc
    int n_angles = 0, n_rays = 0;   // radon (0 -> desk defaults)
    int max_shift = -1;             // misaligned (-1 -> default rule)
};

inline EncodingOperator make_encoding(EncodingKind kind, int n, uint64_t seed,
                                      const EncodingParams& params = {}) {
    if (n < 4) throw ConfigError("make_encoding: image side must be >= 4");
    EncodingOperator op;
    op.kind = kind;
    op.n = n;
    op.seed = seed;
    switch (kind) {
        case EncodingKind::cartesian:
            break;
        case EncodingKind::poisson_disc:
            op.target_fraction = params.target_fraction;
            op.mask = make_poisson_mask(n, params.target_fraction, seed);
            break;
        case EncodingKind::spiral:
            op.traj = make_spiral_trajectory(n);
            break;
        case EncodingKind::radon:
            op.n_angles = params.n_angles > 0 ? params.n_angles : default_radon_angles(n);
            op.n_rays = params.n_rays > 0 ? params.n_rays : default_radon_rays(n);
            op.radon = std::make_shared<RadonOperator>(n, op.n_angles, op.n_rays);
            break;
        case EncodingKind::misaligned:
            op.max_shift = params.max_shift >= 0 ? params.max_shift : default_max_shift(n);
            break;
    }
    return op;
}

namespace detail {

inline SensorVec flatten_complex(const EncodingOperator& op, std::vector<double> re,
                                 std::vector<double> im) {
    SensorVec sv;
    sv.layout = op.layout();
    sv.values = std::move(re);
    sv.values.insert(sv.values.end(), im.begin(), im.end());
    return sv;
}

}  // namespace detail

// Apply the frozen forward model to a complex image. `rng` is consulted only
// by the misaligned encoding, which draws fresh per-row shifts on every call.
inline SensorVec encode(const EncodingOperator& op, const Image& img_re, const Image& img_im,
                        Rng* rng = nullptr) {
    check_image(img_re, "encode real part");
    check_image(img_im, "encode imaginary part");
    if (img_re.n != op.n || img_im.n != op.n)
        throw DimensionError("encode: image side does not match encoding");

    switch (op.kind) {
        case EncodingKind::cartesian: {
            ComplexGrid g = dft2(img_re, img_im);
            return detail::flatten_complex(op, std::move(g.re), std::move(g.im));
        }
        case EncodingKind::poisson_disc: {
            ComplexGrid g = dft2(img_re, img_im);
            std::vector<double> re, im;
            re.reserve(op.mask_count());
            im.reserve(op.mask_count());
            for (size_t i = 0; i < op.mask.size(); ++i) {
                if (op.mask[i]) {
                    re.push_back(g.re[i]);
                    im.push_back(g.im[i]);
                }
            }
            return detail::flatten_complex(op, std::move(re), std::move(im));
        }
        case EncodingKind::spiral: {
            auto samples = nudft(img_re, img_im, op.traj);
            std::vector<double> re(samples.size()), im(samples.size());
            for (size_t i = 0; i < samples.size(); ++i) {
                re[i] = samples[i].real();
                im[i] = samples[i].imag();
            }
            return detail::flatten_complex(op, std::move(re), std::move(im));
        }
        case EncodingKind::radon: {
            Sinogram sino = op.radon ? op.radon->forward(img_re)
                                     : radon_forward(img_re, op.n_angles, op.n_rays);
            SensorVec sv;
            sv.layout = op.layout();
            sv.values = std::move(sino.values);
            return sv;
        }
        case EncodingKind::misaligned: {
            if (rng == nullptr)
                throw UsageError("encode: misaligned encoding requires an rng for row shifts");
            ComplexGrid g = dft2(img_re, img_im);
            int n = op.n;
            std::vector<double> re(g.re.size(), 0.0), im(g.im.size(), 0.0);
            for (int row = 0; row < n; ++row) {
                int shift = rng->uniform_int(-op.max_shift, op.max_shift);
                for (int col = 0; col < n; ++col) {
                    int src = col - shift;
                    if (src < 0 || src >= n) continue;  // vacated entries stay zero
                    re[size_t(row) * n + col] = g.re[size_t(row) * n + src];
                    im[size_t(row) * n + col] = g.im[size_t(row) * n + src];
                }
            }
            return detail::flatten_complex(op, std::move(re), std::move(im));
        }
    }
    throw ConfigError("encode: unhandled encoding kind");
}

// Test hook: fixed sinusoid parameters. A constant pre-rescale map (for
// example f1 = f2 = 0) maps to the flat pi map.
inline PhaseMap synthesize_phase_map_with(int n, double f1, double f2, double theta) {
    if (n < 4) throw ConfigError("phase map: side must be >= 4");
    PhaseMap pm;
    pm.n = n;
    pm.phase.resize(size_t(n) * n);
    double c = (n - 1) / 2.0;
    double ct = std::cos(theta), st = std::sin(theta);
    for (int u = 0; u < n; ++u) {
        for (int v = 0; v < n; ++v) {
            double du = u - c, dv = v - c;
            double ur = c + ct * du - st * dv;
            double vr = c + st * du + ct * dv;
            pm.phase[size_t(u) * n + v] =
                std::sin(kTwoPi * f1 * ur / n) * std::sin(kTwoPi * f2 * vr / n);
        }
    }
    double lo = pm.phase[0], hi = pm.phase[0];
    for (double p : pm.phase) {
        lo = std::min(lo, p);
        hi = std::max(hi, p);
    }
    if (hi - lo < 1e-15) {
        std::fill(pm.phase.begin(), pm.phase.end(), kPi);
        return pm;
    }
    double s = kTwoPi / (hi - lo);
    for (double& p : pm.phase) p = (p - lo) * s;
    return pm;
}

// Product of 2D sinusoids with frequencies independent along each rotated
// axis, affinely rescaled to [0, 2*pi].
inline PhaseMap synthesize_phase_map(int n, uint64_t seed) {
    Rng rng(derive_seed(seed, "phase_map"));
    double f_max = n / 8.0;
    double f1 = rng.uniform(0.5, f_max);
    double f2 = rng.uniform(0.5, f_max);
    double theta = rng.uniform(0.0, kPi);
    return synthesize_phase_map_with(n, f1, f2, theta);
}

// Modulate a magnitude image: (img*cos(pm), img*sin(pm)).
inline std::pair<Image, Image> apply_phase(const Image& img, const PhaseMap& pm) {
    check_image(img, "apply_phase image");
    if (pm.n != img.n || pm.phase.size() != img.pix.size())
        throw DimensionError("apply_phase: phase map side mismatch");
    Image re(img.n), im(img.n);
    for (size_t i = 0; i < img.pix.size(); ++i) {
        re.pix[i] = img.pix[i] * std::cos(pm.phase[i]);
        im.pix[i] = img.pix[i] * std::sin(pm.phase[i]);
    }
    return {std::move(re), std::move(im)};
}

// ---- serialization ------------------------------------------------------------

inline std::vector<uint8_t> pack_bits(const std::vector<uint8_t>& mask) {
    std::vector<uint8_t> bytes((mask.size() + 7) / 8, 0);
    for (size_t i = 0; i < mask.size(); ++i)
        if (mask[i]) bytes[i / 8] |= uint8_t(1u << (i % 8));
    return bytes;
}

inline std::vector<uint8_t> unpack_bits(const std::vector<uint8_t>& bytes, size_t count) {
    std::vector<uint8_t> mask(count, 0);
    for (size_t i = 0; i < count; ++i)
        mask[i] = (bytes[i / 8] >> (i % 8)) & 1u;
    return mask;
}

inline nlohmann::json encoding_to_json(const EncodingOperator& op) {
    nlohmann::json j;
    j["kind"] = to_string(op.kind);
    j["n"] = op.n;
    j["seed"] = op.seed;
    nlohmann::json params = nlohmann::json::object();
    nlohmann::json geometry = nlohmann::json::object();
    switch (op.kind) {
        case EncodingKind::cartesian:
            break;
        case EncodingKind::poisson_disc:
            params["target_fraction"] = op.target_fraction;
            geometry["mask_b64"] = base64_encode(pack_bits(op.mask));
            break;
        case EncodingKind::spiral: {
            std::vector<double> flat;
            flat.reserve(op.traj.size() * 2);
            for (const auto& p : op.traj.points) {
                flat.push_back(p[0]);
                flat.push_back(p[1]);
            }
            geometry["trajectory"] = flat;
            break;
        }
        case EncodingKind::radon:
            geometry["n_angles"] = op.n_angles;
            geometry["n_rays"] = op.n_rays;
            break;
        case EncodingKind::misaligned:
            params["max_shift"] = op.max_shift;
            break;
    }
    j["params"] = params;
    j["geometry"] = geometry;
    return j;
}

inline EncodingOperator encoding_from_json(const nlohmann::json& j) {
    EncodingOperator op;
    op.kind = encoding_kind_from(j.at("kind").get<std::string>());
    op.n = j.at("n").get<int>();
    op.seed = j.at("seed").get<uint64_t>();
    const auto& params = j.at("params");
    const auto& geometry = j.at("geometry");
    switch (op.kind) {
        case EncodingKind::cartesian:
            break;
        case EncodingKind::poisson_disc: {
            op.target_fraction = params.at("target_fraction").get<double>();
            auto bytes = base64_decode(geometry.at("mask_b64").get<std::string>());
            op.mask = unpack_bits(bytes, size_t(op.n) * op.n);
            break;
        }
        case EncodingKind::spiral: {
            auto flat = geometry.at("trajectory").get<std::vector<double>>();
            if (flat.size() % 2 != 0) throw IoError("spiral trajectory array has odd length");
            op.traj.points.resize(flat.size() / 2);
            for (size_t i = 0; i < op.traj.points.size(); ++i)
                op.traj.points[i] = {flat[2 * i], flat[2 * i + 1]};
            break;
        }
        case EncodingKind::radon:
            op.n_angles = geometry.at("n_angles").get<int>();
            op.n_rays = geometry.at("n_rays").get<int>();
            op.radon = std::make_shared<RadonOperator>(op.n, op.n_angles, op.n_rays);
            break;
        case EncodingKind::misaligned:
            op.max_shift = params.at("max_shift").get<int>();
            break;
    }
    return op;
}

inline std::string serialize_encoding(const EncodingOperator& op) {
    return encoding_to_json(op).dump();
}

inline EncodingOperator parse_encoding(const std::string& text) {
    return encoding_from_json(nlohmann::json::parse(text));
}

}  // namespace automap
