#pragma once

#include <cmath>
#include <string>
#include <vector>

#include <json.hpp>

#include "automap/io.hpp"
#include "automap/network.hpp"
#include "automap/types.hpp"

namespace automap {

// FC2 hidden-layer activation statistics accumulated over reconstructions.
// tanh outputs lie in (-1, 1), so the fixed [-1, 1] histogram never clips.
struct ActivationStats {
    static constexpr int kBins = 101;
    std::vector<double> bin_edges;   // kBins + 1 edges over [-1, 1]
    std::vector<uint64_t> counts;    // kBins
    double sparsity_fraction = 0.0;  // fraction with |a| < tau
    double l1_mean = 0.0;
    double tau = 0.01;
    std::string source;
};

inline ActivationStats capture_stats(const NetParams& p, const std::vector<std::vector<double>>& inputs,
                                     double tau = 0.01, const std::string& source = "") {
    ActivationStats stats;
    stats.tau = tau;
    stats.source = source;
    stats.bin_edges.resize(ActivationStats::kBins + 1);
    for (int b = 0; b <= ActivationStats::kBins; ++b)
        stats.bin_edges[b] = -1.0 + 2.0 * b / ActivationStats::kBins;
    stats.counts.assign(ActivationStats::kBins, 0);

    NetWorkspace ws;
    uint64_t total = 0;
    double l1 = 0.0;
    uint64_t sparse = 0;
    for (const auto& x : inputs) {
        if (int(x.size()) != p.d_in)
            throw DimensionError("capture_stats: input length does not match d_in");
        forward(p, x, ws);
        for (double a : ws.fc2) {
            int bin = int((a + 1.0) * 0.5 * ActivationStats::kBins);
            bin = std::min(std::max(bin, 0), ActivationStats::kBins - 1);
            ++stats.counts[bin];
            l1 += std::abs(a);
            if (std::abs(a) < tau) ++sparse;
            ++total;
        }
    }
    if (total > 0) {
        stats.l1_mean = l1 / double(total);
        stats.sparsity_fraction = double(sparse) / double(total);
    }
    return stats;
}

inline nlohmann::json stats_to_json(const ActivationStats& s) {
    return {{"bin_edges", s.bin_edges}, {"counts", s.counts},
            {"sparsity_fraction", s.sparsity_fraction}, {"l1_mean", s.l1_mean},
            {"tau", s.tau}, {"source", s.source}};
}

// Export the FC2 -> FC3 weight matrix, one row per FC3 unit: the pixel index
// (the embedding color label) followed by that unit's n^2 incoming weights.
// %.17g columns parse back bit-exactly.
inline void export_fc_weights(const NetParams& p, const std::string& path) {
    int u = p.units();
    std::string out;
    out.reserve(size_t(u) * u * 12);
    for (int i = 0; i < u; ++i) {
        out += std::to_string(i);
        const double* row = p.W2.data() + size_t(i) * u;
        for (int j = 0; j < u; ++j) {
            out += ',';
            out += fmt_g17(row[j]);
        }
        out += '\n';
    }
    write_file_atomic(path, out);
}

// Each of the 64 output-stage kernels as a 7x7 PGM tile (per-kernel min-max
// scaled) plus an 8x8 montage with 1-px separators (63x63 px).
inline std::vector<std::string> kernel_gallery(const NetParams& p, const std::string& dir) {
    std::vector<std::string> paths;
    const int k = kTconvSize;
    std::vector<uint8_t> montage((k * 8 + 7) * (k * 8 + 7), 255);
    int mw = k * 8 + 7;
    for (int c = 0; c < kChannels; ++c) {
        const double* kernel = p.KT.data() + size_t(c) * k * k;
        double lo = kernel[0], hi = kernel[0];
        for (int i = 1; i < k * k; ++i) {
            lo = std::min(lo, kernel[i]);
            hi = std::max(hi, kernel[i]);
        }
        std::vector<uint8_t> tile(size_t(k) * k, 0);
        if (hi > lo)
            for (int i = 0; i < k * k; ++i)
                tile[i] = uint8_t(std::lround((kernel[i] - lo) * 255.0 / (hi - lo)));
        std::string path = dir + "/kernel_" + std::to_string(c) + ".pgm";
        write_pgm(path, k, k, tile);
        paths.push_back(path);
        int tu = (c / 8) * (k + 1), tv = (c % 8) * (k + 1);
        for (int a = 0; a < k; ++a)
            for (int b = 0; b < k; ++b) montage[size_t(tu + a) * mw + (tv + b)] = tile[a * k + b];
    }
    std::string mpath = dir + "/montage.pgm";
    write_pgm(mpath, mw, mw, montage);
    paths.push_back(mpath);
    return paths;
}

}  // namespace automap
