#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <unistd.h>

#include "automap/analysis.hpp"
#include "automap/rng.hpp"

using namespace automap;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir(const std::string& tag) {
        path = fs::temp_directory_path() / ("automap_an_" + tag + "_" + std::to_string(::getpid()));
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string str() const { return path.string(); }
};

}  // namespace

TEST_SUITE("analysis") {
    TEST_CASE("zero network: all activations zero, sparsity exactly 1") {
        NetParams p;
        shape_like(p, 16, 8);
        std::vector<std::vector<double>> inputs = {std::vector<double>(16, 0.5)};
        ActivationStats s = capture_stats(p, inputs);
        CHECK(s.sparsity_fraction == 1.0);
        CHECK(s.l1_mean == 0.0);
    }

    TEST_CASE("histogram counts conserve: n^2 per reconstruction") {
        NetParams p = init_params(16, 8, 1);
        Rng rng(2);
        std::vector<std::vector<double>> inputs;
        for (int i = 0; i < 3; ++i) {
            std::vector<double> x(16);
            for (double& v : x) v = rng.uniform(-1, 1);
            inputs.push_back(std::move(x));
        }
        ActivationStats s = capture_stats(p, inputs);
        uint64_t total = 0;
        for (uint64_t c : s.counts) total += c;
        CHECK(total == 3u * 64u);
        CHECK(s.bin_edges.size() == 102);
        CHECK(s.bin_edges.front() == -1.0);
        CHECK(s.bin_edges.back() == 1.0);
    }

    TEST_CASE("capture is read-only over the parameters") {
        NetParams p = init_params(16, 8, 3);
        NetParams before = p;
        std::vector<std::vector<double>> inputs = {std::vector<double>(16, 0.1)};
        capture_stats(p, inputs);
        for (const auto& blk : kParamBlocks) CHECK((p.*blk.member) == (before.*blk.member));
    }

    TEST_CASE("layout mismatch raises") {
        NetParams p = init_params(16, 8, 4);
        std::vector<std::vector<double>> inputs = {std::vector<double>(15, 0.0)};
        CHECK_THROWS_AS(capture_stats(p, inputs), DimensionError);
    }

    TEST_CASE("fc weight export: shape, exact round-trip") {
        TempDir dir("w");
        NetParams p = init_params(10, 8, 5);
        std::string path = dir.str() + "/w.csv";
        export_fc_weights(p, path);

        std::ifstream f(path);
        std::string line;
        int rows = 0;
        int u = 64;
        while (std::getline(f, line)) {
            std::stringstream ss(line);
            std::string cell;
            std::vector<std::string> cells;
            while (std::getline(ss, cell, ',')) cells.push_back(cell);
            REQUIRE(int(cells.size()) == u + 1);
            CHECK(std::stoi(cells[0]) == rows);
            for (int j = 0; j < u; ++j) {
                double parsed = std::stod(cells[j + 1]);
                CHECK(parsed == p.W2[size_t(rows) * u + j]);  // bit-exact via %.17g
            }
            ++rows;
        }
        CHECK(rows == u);
    }

    TEST_CASE("kernel gallery: 64 tiles plus a 63x63 montage") {
        TempDir dir("k");
        NetParams p;
        shape_like(p, 16, 8);  // zero kernels -> uniform tiles
        auto paths = kernel_gallery(p, dir.str());
        CHECK(paths.size() == 65);
        PgmImage tile = read_pgm(dir.str() + "/kernel_0.pgm");
        CHECK(tile.width == 7);
        CHECK(tile.height == 7);
        for (uint8_t v : tile.gray) CHECK(v == tile.gray[0]);
        PgmImage montage = read_pgm(dir.str() + "/montage.pgm");
        CHECK(montage.width == 63);
        CHECK(montage.height == 63);
    }

    TEST_CASE("kernel count is the architecture constant, independent of n") {
        TempDir dir("k2");
        NetParams p = init_params(10, 12, 6);
        auto paths = kernel_gallery(p, dir.str());
        CHECK(paths.size() == 65);
    }
}
