#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace automap {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;

// Error taxonomy. The CLI maps these onto stable exit codes
// (usage/config -> 2, io -> 3, numeric -> 4, mismatch -> 5).
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct DimensionError : Error {
    using Error::Error;
};
struct DomainError : Error {
    using Error::Error;
};
struct ConfigError : Error {
    using Error::Error;
};
struct UsageError : Error {
    using Error::Error;
};
struct NumericError : Error {
    using Error::Error;
};
struct IoError : Error {
    using Error::Error;
};
struct MismatchError : Error {
    using Error::Error;
};

// Real-valued n x n pixel grid, row-major.
struct Image {
    int n = 0;
    std::vector<double> pix;

    Image() = default;
    explicit Image(int side, double fill = 0.0) : n(side), pix(size_t(side) * side, fill) {}

    double& at(int u, int v) { return pix[size_t(u) * n + v]; }
    double at(int u, int v) const { return pix[size_t(u) * n + v]; }
    size_t size() const { return pix.size(); }
};

// Complex n x n grid, row-major over (k_row, k_col), DC at index (0,0).
struct ComplexGrid {
    int n = 0;
    std::vector<double> re, im;

    ComplexGrid() = default;
    explicit ComplexGrid(int side)
        : n(side), re(size_t(side) * side, 0.0), im(size_t(side) * side, 0.0) {}

    size_t size() const { return re.size(); }
};

// Non-uniform k-space sample locations in cycles per field of view,
// each coordinate in [-n/2, n/2).
struct KTrajectory {
    std::vector<std::array<double, 2>> points;  // (k_u, k_v)

    size_t size() const { return points.size(); }
};

// Stack of parallel-ray projections, row-major with angle as the major index.
struct Sinogram {
    int n_angles = 0;
    int n_rays = 0;
    std::vector<double> values;

    Sinogram() = default;
    Sinogram(int angles, int rays)
        : n_angles(angles), n_rays(rays), values(size_t(angles) * rays, 0.0) {}

    double& at(int a, int r) { return values[size_t(a) * n_rays + r]; }
    double at(int a, int r) const { return values[size_t(a) * n_rays + r]; }
};

inline bool all_finite(const std::vector<double>& v) {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

inline void check_image(const Image& img, const char* what = "image") {
    if (img.n < 4) throw DimensionError(std::string(what) + ": side length must be >= 4");
    if (img.pix.size() != size_t(img.n) * img.n)
        throw DimensionError(std::string(what) + ": pixel count does not match side length");
}

inline void check_same_side(const Image& a, const Image& b) {
    if (a.n != b.n) throw DimensionError("image side lengths differ");
}

inline void check_grid(const ComplexGrid& g) {
    size_t want = size_t(g.n) * g.n;
    if (g.re.size() != want || g.im.size() != want)
        throw DimensionError("complex grid arrays do not match side length");
}

}  // namespace automap
