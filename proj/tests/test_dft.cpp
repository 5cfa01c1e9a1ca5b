#include <doctest.h>

#include <complex>
#include <vector>

#include "automap/dft.hpp"
#include "automap/rng.hpp"

using namespace automap;

namespace {

Image random_image(int n, Rng& rng, double lo = -1.0, double hi = 1.0) {
    Image img(n);
    for (double& v : img.pix) v = rng.uniform(lo, hi);
    return img;
}

double l2(const std::vector<double>& re, const std::vector<double>& im) {
    double s = 0.0;
    for (size_t i = 0; i < re.size(); ++i) s += re[i] * re[i] + im[i] * im[i];
    return std::sqrt(s);
}

}  // namespace

TEST_SUITE("dft") {
    TEST_CASE("constant image maps to a single DC coefficient") {
        int n = 8;
        double c = 0.37;
        Image re(n, c), im(n);
        ComplexGrid g = dft2(re, im);
        CHECK(g.re[0] == doctest::Approx(c * n).epsilon(1e-12));
        CHECK(std::abs(g.im[0]) < 1e-12);
        for (size_t i = 1; i < g.size(); ++i) {
            CHECK(std::abs(g.re[i]) < 1e-12);
            CHECK(std::abs(g.im[i]) < 1e-12);
        }
    }

    TEST_CASE("delta at the origin has a flat spectrum of 1/n") {
        int n = 8;
        Image re(n), im(n);
        re.at(0, 0) = 1.0;
        ComplexGrid g = dft2(re, im);
        for (size_t i = 0; i < g.size(); ++i) {
            CHECK(g.re[i] == doctest::Approx(1.0 / n).epsilon(1e-12));
            CHECK(std::abs(g.im[i]) < 1e-12);
        }
    }

    TEST_CASE("unitarity: ||F x|| == ||x|| to 1e-12") {
        Rng rng(11);
        for (int trial = 0; trial < 20; ++trial) {
            Image re = random_image(8, rng), im = random_image(8, rng);
            ComplexGrid g = dft2(re, im);
            double in_norm = l2(re.pix, im.pix);
            double out_norm = l2(g.re, g.im);
            CHECK(std::abs(in_norm - out_norm) < 1e-12 * std::max(1.0, in_norm));
        }
    }

    TEST_CASE("idft2 inverts dft2 to 1e-10") {
        Rng rng(5);
        Image re = random_image(16, rng), im = random_image(16, rng);
        auto [rre, rim] = idft2(dft2(re, im));
        for (size_t i = 0; i < re.pix.size(); ++i) {
            CHECK(std::abs(rre.pix[i] - re.pix[i]) < 1e-10);
            CHECK(std::abs(rim.pix[i] - im.pix[i]) < 1e-10);
        }
    }

    TEST_CASE("all-zero grid inverts to zero images") {
        auto [re, im] = idft2(ComplexGrid(8));
        for (double v : re.pix) CHECK(v == 0.0);
        for (double v : im.pix) CHECK(v == 0.0);
    }

    TEST_CASE("grid with only DC = n inverts to a constant image of ones") {
        int n = 8;
        ComplexGrid g(n);
        g.re[0] = n;
        auto [re, im] = idft2(g);
        for (double v : re.pix) CHECK(v == doctest::Approx(1.0).epsilon(1e-12));
        for (double v : im.pix) CHECK(std::abs(v) < 1e-12);
    }

    TEST_CASE("side-length mismatch raises a dimension error") {
        CHECK_THROWS_AS(dft2(Image(8), Image(16)), DimensionError);
    }

    TEST_CASE("nudft on the integer grid matches dft2 to 1e-10") {
        Rng rng(7);
        int n = 8;
        Image re = random_image(n, rng), im = random_image(n, rng);
        ComplexGrid g = dft2(re, im);
        auto samples = nudft(re, im, cartesian_trajectory(n));
        REQUIRE(samples.size() == g.size());
        for (size_t i = 0; i < samples.size(); ++i) {
            CHECK(std::abs(samples[i].real() - g.re[i]) < 1e-10);
            CHECK(std::abs(samples[i].imag() - g.im[i]) < 1e-10);
        }
    }

    TEST_CASE("nudft of a constant image matches direct summation at off-grid points") {
        int n = 8;
        double c = 0.81;
        Image re(n, c), im(n);
        KTrajectory traj;
        traj.points = {{0.5, 1.25}, {-2.3, 3.1}, {3.99, -3.99}, {0.0, 2.5}};
        auto samples = nudft(re, im, traj);
        for (size_t s = 0; s < traj.points.size(); ++s) {
            // independent direct double-loop summation
            std::complex<double> acc = 0.0;
            for (int u = 0; u < n; ++u)
                for (int v = 0; v < n; ++v)
                    acc += c * std::exp(std::complex<double>(
                               0.0, -kTwoPi * (traj.points[s][0] * u + traj.points[s][1] * v) / n));
            acc /= double(n);
            CHECK(std::abs(samples[s] - acc) < 1e-12);
        }
    }

    TEST_CASE("nudft of a zero image is zero") {
        KTrajectory traj;
        traj.points = {{0.7, -1.3}, {2.2, 2.9}};
        auto samples = nudft(Image(8), Image(8), traj);
        for (auto s : samples) CHECK(std::abs(s) == 0.0);
    }

    TEST_CASE("out-of-range trajectory point raises a domain error") {
        KTrajectory traj;
        traj.points = {{4.0, 0.0}};  // n/2 itself is excluded
        CHECK_THROWS_AS(nudft(Image(8), Image(8), traj), DomainError);
    }

    TEST_CASE("nudft adjoint identity holds to 1e-10 relative") {
        Rng rng(23);
        int n = 8;
        for (int trial = 0; trial < 20; ++trial) {
            KTrajectory traj;
            for (int i = 0; i < 50; ++i)
                traj.points.push_back({rng.uniform(-n / 2.0, n / 2.0 - 1e-9),
                                       rng.uniform(-n / 2.0, n / 2.0 - 1e-9)});
            Image xr = random_image(n, rng), xi = random_image(n, rng);
            std::vector<std::complex<double>> y(traj.size());
            for (auto& v : y) v = {rng.uniform(-1, 1), rng.uniform(-1, 1)};

            auto ax = nudft(xr, xi, traj);
            auto [ahr, ahi] = nudft_adjoint(y, traj, n);

            std::complex<double> lhs = 0.0, rhs = 0.0;
            for (size_t i = 0; i < y.size(); ++i) lhs += ax[i] * std::conj(y[i]);
            for (size_t i = 0; i < xr.pix.size(); ++i)
                rhs += std::complex<double>(xr.pix[i], xi.pix[i]) *
                       std::conj(std::complex<double>(ahr.pix[i], ahi.pix[i]));
            CHECK(std::abs(lhs - rhs) < 1e-10 * std::max(1.0, std::abs(lhs)));
        }
    }

    TEST_CASE("adjoint of zero samples is a zero image") {
        KTrajectory traj;
        traj.points = {{0.4, 0.2}, {1.0, -2.0}};
        auto [re, im] = nudft_adjoint({{0.0, 0.0}, {0.0, 0.0}}, traj, 8);
        for (double v : re.pix) CHECK(v == 0.0);
        for (double v : im.pix) CHECK(v == 0.0);
    }

    TEST_CASE("adjoint over the full Cartesian grid equals idft2") {
        Rng rng(31);
        int n = 8;
        Image re = random_image(n, rng), im = random_image(n, rng);
        ComplexGrid g = dft2(re, im);
        std::vector<std::complex<double>> samples(g.size());
        for (size_t i = 0; i < g.size(); ++i) samples[i] = {g.re[i], g.im[i]};
        auto [ar, ai] = nudft_adjoint(samples, cartesian_trajectory(n), n);
        auto [ir, ii] = idft2(g);
        for (size_t i = 0; i < ar.pix.size(); ++i) {
            CHECK(std::abs(ar.pix[i] - ir.pix[i]) < 1e-10);
            CHECK(std::abs(ai.pix[i] - ii.pix[i]) < 1e-10);
        }
    }

    TEST_CASE("adjoint sample/trajectory length mismatch raises") {
        KTrajectory traj;
        traj.points = {{0.0, 0.0}};
        CHECK_THROWS_AS(nudft_adjoint({{1.0, 0.0}, {2.0, 0.0}}, traj, 8), DimensionError);
    }
}
