#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "automap/io.hpp"
#include "automap/rng.hpp"
#include "automap/types.hpp"

namespace automap {

// A preprocessed image collection: every member is mean-subtracted and the
// whole set is scaled so its max absolute intensity is exactly 1.
struct Corpus {
    std::vector<Image> images;
    std::string provenance;
    double normalization_scale = 1.0;

    int n() const { return images.empty() ? 0 : images.front().n; }
    size_t size() const { return images.size(); }
};

// Mean-subtract each image, then scale the whole set by its max |value|.
inline void preprocess_corpus(Corpus& corpus) {
    if (corpus.images.empty()) throw ConfigError("corpus is empty");
    for (Image& img : corpus.images) {
        double mean = 0.0;
        for (double v : img.pix) mean += v;
        mean /= double(img.pix.size());
        for (double& v : img.pix) v -= mean;
    }
    double peak = 0.0;
    for (const Image& img : corpus.images)
        for (double v : img.pix) peak = std::max(peak, std::abs(v));
    corpus.normalization_scale = peak;
    if (peak > 0.0)
        for (Image& img : corpus.images)
            for (double& v : img.pix) v /= peak;
}

namespace detail {

// Coverage fraction of a pixel by a shape, 3x3 supersampled.
template <typename Inside>
double coverage(int u, int v, Inside&& inside) {
    int hits = 0;
    for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b)
            if (inside(u + (a + 0.5) / 3.0, v + (b + 0.5) / 3.0)) ++hits;
    return hits / 9.0;
}

inline void paint_synth_image(Image& img, Rng& rng) {
    int n = img.n;
    int shapes = rng.uniform_int(3, 10);
    for (int s = 0; s < shapes; ++s) {
        int type = rng.uniform_int(0, 2);
        double intensity = rng.uniform(0.25, 1.0) * (rng.uniform() < 0.5 ? -1.0 : 1.0);
        if (type == 0 || type == 1) {
            double cu = rng.uniform(0.15 * n, 0.85 * n);
            double cv = rng.uniform(0.15 * n, 0.85 * n);
            double ru = rng.uniform(0.08 * n, 0.35 * n);
            double rv = rng.uniform(0.08 * n, 0.35 * n);
            double th = rng.uniform(0.0, kPi);
            double ct = std::cos(th), st = std::sin(th);
            auto local = [&](double u, double v, double& x, double& y) {
                double du = u - cu, dv = v - cv;
                x = (ct * du + st * dv) / ru;
                y = (-st * du + ct * dv) / rv;
            };
            for (int u = 0; u < n; ++u)
                for (int v = 0; v < n; ++v) {
                    double cov = coverage(u, v, [&](double uu, double vv) {
                        double x, y;
                        local(uu, vv, x, y);
                        return type == 0 ? (x * x + y * y <= 1.0)
                                         : (std::abs(x) <= 1.0 && std::abs(y) <= 1.0);
                    });
                    if (cov > 0.0) {
                        double& p = img.at(u, v);
                        p = p * (1.0 - cov) + intensity * cov;
                    }
                }
        } else {
            // smooth linear gradient blended over the full frame
            double phi = rng.uniform(0.0, kTwoPi);
            double alpha = rng.uniform(0.2, 0.6);
            double gx = std::cos(phi), gy = std::sin(phi);
            for (int u = 0; u < n; ++u)
                for (int v = 0; v < n; ++v) {
                    double g = intensity * ((u * gx + v * gy) / n + 0.5);
                    double& p = img.at(u, v);
                    p = p * (1.0 - alpha) + g * alpha;
                }
        }
    }
}

}  // namespace detail

// Procedural grayscale corpus: random anti-aliased ellipses, rectangles and
// smooth gradients, then the standard preprocessing. Deterministic per seed.
inline Corpus synth_corpus(int count, int n, uint64_t seed) {
    if (count < 1) throw ConfigError("synth_corpus: count must be >= 1");
    if (n < 4) throw ConfigError("synth_corpus: side must be >= 4");
    Corpus corpus;
    corpus.provenance = "synth";
    corpus.images.reserve(count);
    for (int i = 0; i < count; ++i) {
        Rng rng(derive_seed(seed, "synth_image", uint64_t(i)));
        Image img(n);
        detail::paint_synth_image(img, rng);
        corpus.images.push_back(std::move(img));
    }
    preprocess_corpus(corpus);
    return corpus;
}

// i.i.d. Gaussian pixels with the same preprocessing; no real-world structure.
inline Corpus noise_corpus(int count, int n, uint64_t seed) {
    if (count < 1) throw ConfigError("noise_corpus: count must be >= 1");
    Corpus corpus;
    corpus.provenance = "noise";
    corpus.images.reserve(count);
    for (int i = 0; i < count; ++i) {
        Rng rng(derive_seed(seed, "noise_image", uint64_t(i)));
        Image img(n);
        for (double& v : img.pix) v = rng.normal();
        corpus.images.push_back(std::move(img));
    }
    preprocess_corpus(corpus);
    return corpus;
}

// Area-weighted box filter from side s down to side n (s >= n).
inline Image box_subsample(const std::vector<double>& src, int s, int n) {
    Image out(n);
    double ratio = double(s) / n;
    for (int u = 0; u < n; ++u) {
        double y0 = u * ratio, y1 = (u + 1) * ratio;
        for (int v = 0; v < n; ++v) {
            double x0 = v * ratio, x1 = (v + 1) * ratio;
            double acc = 0.0;
            for (int i = int(y0); i < int(std::ceil(y1)); ++i) {
                double wy = std::min<double>(i + 1, y1) - std::max<double>(i, y0);
                if (wy <= 0.0) continue;
                for (int j = int(x0); j < int(std::ceil(x1)); ++j) {
                    double wx = std::min<double>(j + 1, x1) - std::max<double>(j, x0);
                    if (wx <= 0.0) continue;
                    acc += wy * wx * src[size_t(i) * s + j];
                }
            }
            out.at(u, v) = acc / (ratio * ratio);
        }
    }
    return out;
}

// Load 8-bit binary PGM files from a directory (sorted by filename):
// center-crop to the largest centered square, box-filter down to n x n,
// then preprocess. Each input side must be >= 2n.
inline Corpus load_corpus(const std::string& dir, int n) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(dir)) throw IoError("corpus path is not a directory: " + dir);
    std::vector<std::string> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".pgm")
            files.push_back(entry.path().string());
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) throw IoError("no .pgm files in " + dir);

    Corpus corpus;
    corpus.provenance = dir;
    for (const std::string& path : files) {
        PgmImage pgm = read_pgm(path);
        if (pgm.width < 2 * n || pgm.height < 2 * n)
            throw IoError("image too small (need sides >= 2n): " + path);
        int side = std::min(pgm.width, pgm.height);
        int off_u = (pgm.height - side) / 2;
        int off_v = (pgm.width - side) / 2;
        std::vector<double> square(size_t(side) * side);
        for (int u = 0; u < side; ++u)
            for (int v = 0; v < side; ++v)
                square[size_t(u) * side + v] =
                    pgm.gray[size_t(u + off_u) * pgm.width + (v + off_v)] / 255.0;
        corpus.images.push_back(box_subsample(square, side, n));
    }
    preprocess_corpus(corpus);
    return corpus;
}

inline Image rot90(const Image& img) {  // 90 degrees counterclockwise
    Image out(img.n);
    int n = img.n;
    for (int u = 0; u < n; ++u)
        for (int v = 0; v < n; ++v) out.at(n - 1 - v, u) = img.at(u, v);
    return out;
}

// Each image at 0, 90, 180 and 270 degrees; output is 4x the input size.
inline Corpus augment_rot90(const Corpus& corpus) {
    Corpus out;
    out.provenance = corpus.provenance;
    out.normalization_scale = corpus.normalization_scale;
    out.images.reserve(corpus.images.size() * 4);
    for (const Image& img : corpus.images) {
        Image r1 = rot90(img);
        Image r2 = rot90(r1);
        Image r3 = rot90(r2);
        out.images.push_back(img);
        out.images.push_back(std::move(r1));
        out.images.push_back(std::move(r2));
        out.images.push_back(std::move(r3));
    }
    return out;
}

// Mirror-tile to 2n x 2n ([img, fliplr; flipud, flipud(fliplr)]) and crop a
// random n x n window with offsets uniform in [0, n].
inline Image augment_tile_crop_at(const Image& img, int off_u, int off_v) {
    check_image(img, "tile_crop");
    int n = img.n;
    auto tiled = [&](int u, int v) {
        int uu = u < n ? u : 2 * n - 1 - u;
        int vv = v < n ? v : 2 * n - 1 - v;
        return img.at(uu, vv);
    };
    Image out(n);
    for (int u = 0; u < n; ++u)
        for (int v = 0; v < n; ++v) out.at(u, v) = tiled(u + off_u, v + off_v);
    return out;
}

inline Image augment_tile_crop(const Image& img, Rng& rng) {
    int off_u = rng.uniform_int(0, img.n);
    int off_v = rng.uniform_int(0, img.n);
    return augment_tile_crop_at(img, off_u, off_v);
}

// ---- corpus container file ("AMCP") -------------------------------------------

inline void save_corpus(const std::string& path, const Corpus& corpus) {
    nlohmann::json meta;
    meta["count"] = corpus.images.size();
    meta["n"] = corpus.n();
    meta["provenance"] = corpus.provenance;
    meta["normalization_scale"] = corpus.normalization_scale;
    std::string json = meta.dump();

    std::string out = "AMCP";
    put_u32_le(out, 1);
    put_u64_le(out, json.size());
    out += json;
    for (const Image& img : corpus.images) put_f64_le(out, img.pix);
    write_file_atomic(path, out);
}

inline Corpus load_corpus_file(const std::string& path) {
    std::string data = read_file(path);
    ByteReader r{data};
    if (r.bytes(4) != "AMCP") throw IoError("not a corpus file: " + path);
    uint32_t version = r.u32();
    if (version != 1) throw IoError("unsupported corpus version in " + path);
    auto meta = nlohmann::json::parse(r.bytes(r.u64()));
    Corpus corpus;
    corpus.provenance = meta.at("provenance").get<std::string>();
    corpus.normalization_scale = meta.at("normalization_scale").get<double>();
    size_t count = meta.at("count").get<size_t>();
    int n = meta.at("n").get<int>();
    corpus.images.resize(count);
    for (auto& img : corpus.images) {
        img.n = n;
        r.f64(img.pix, size_t(n) * n);
    }
    return corpus;
}

// Either a container file or a directory of PGMs.
inline Corpus load_corpus_any(const std::string& path, int n) {
    if (std::filesystem::is_directory(path)) return load_corpus(path, n);
    Corpus c = load_corpus_file(path);
    if (n > 0 && c.n() != n)
        throw MismatchError("corpus side " + std::to_string(c.n()) + " does not match requested " +
                            std::to_string(n));
    return c;
}

}  // namespace automap
