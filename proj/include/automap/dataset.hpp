#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "automap/corpus.hpp"
#include "automap/encode.hpp"
#include "automap/io.hpp"
#include "automap/rng.hpp"
#include "automap/types.hpp"

namespace automap {

enum class TargetMode { magnitude, real, imag, phase };

inline const char* to_string(TargetMode m) {
    switch (m) {
        case TargetMode::magnitude: return "magnitude";
        case TargetMode::real: return "real";
        case TargetMode::imag: return "imag";
        case TargetMode::phase: return "phase";
    }
    return "?";
}

inline TargetMode target_mode_from(const std::string& s) {
    if (s == "magnitude") return TargetMode::magnitude;
    if (s == "real") return TargetMode::real;
    if (s == "imag") return TargetMode::imag;
    if (s == "phase") return TargetMode::phase;
    throw ConfigError("unknown target mode: " + s);
}

// The requested channel of a (possibly complex) ground-truth image.
inline std::vector<double> target_channel(const Image& re, const Image& im, TargetMode mode) {
    std::vector<double> target(re.pix.size());
    switch (mode) {
        case TargetMode::magnitude:
            for (size_t p = 0; p < target.size(); ++p)
                target[p] = std::hypot(re.pix[p], im.pix[p]);
            break;
        case TargetMode::real:
            target = re.pix;
            break;
        case TargetMode::imag:
            target = im.pix;
            break;
        case TargetMode::phase:
            for (size_t p = 0; p < target.size(); ++p)
                target[p] = std::atan2(im.pix[p], re.pix[p]);
            break;
    }
    return target;
}

// Training pairs: encoded sensor vectors (globally rescaled to max-abs 1 for
// the tanh input range) and per-image target channels (left unscaled).
struct Dataset {
    std::vector<std::vector<double>> inputs;
    std::vector<std::vector<double>> targets;
    double sensor_scale = 1.0;  // divisor applied to raw sensor values
    EncodingOperator encoding;
    TargetMode target_mode = TargetMode::magnitude;

    size_t size() const { return inputs.size(); }
    int input_len() const { return inputs.empty() ? 0 : int(inputs.front().size()); }
    int target_len() const { return targets.empty() ? 0 : int(targets.front().size()); }
};

// Assemble (SensorVec, target) pairs. When phase_seed is given each image is
// modulated with a fresh synthetic phase map before encoding; otherwise the
// corpus is treated as real-valued, which makes real/imag/phase targets
// degenerate and therefore a configuration error.
inline Dataset build_dataset(const Corpus& corpus, const EncodingOperator& encoding,
                             TargetMode target_mode, std::optional<uint64_t> phase_seed,
                             Rng& rng) {
    if (corpus.images.empty()) throw ConfigError("build_dataset: corpus is empty");
    if (corpus.n() != encoding.n)
        throw DimensionError("build_dataset: corpus side does not match encoding");
    if (!phase_seed && target_mode != TargetMode::magnitude)
        throw ConfigError("build_dataset: real/imag/phase targets require a phase seed");
    if (phase_seed && encoding.kind == EncodingKind::radon)
        throw ConfigError("build_dataset: radon encoding is real-valued; phase modulation unsupported");

    Dataset ds;
    ds.encoding = encoding;
    ds.target_mode = target_mode;
    ds.inputs.reserve(corpus.size());
    ds.targets.reserve(corpus.size());
    Image zero(corpus.n());

    for (size_t i = 0; i < corpus.images.size(); ++i) {
        const Image& img = corpus.images[i];
        Image re = img, im = zero;
        if (phase_seed) {
            PhaseMap pm = synthesize_phase_map(img.n, derive_seed(*phase_seed, "phase", i));
            std::tie(re, im) = apply_phase(img, pm);
        }
        SensorVec sv = encode(encoding, re, im, &rng);
        ds.inputs.push_back(std::move(sv.values));
        ds.targets.push_back(target_channel(re, im, target_mode));
    }

    double peak = 0.0;
    for (const auto& v : ds.inputs)
        for (double x : v) peak = std::max(peak, std::abs(x));
    ds.sensor_scale = peak > 0.0 ? peak : 1.0;
    for (auto& v : ds.inputs)
        for (double& x : v) x /= ds.sensor_scale;
    return ds;
}

// ---- dataset container file ("AMDS") -------------------------------------------

inline void save_dataset(const std::string& path, const Dataset& ds) {
    nlohmann::json meta;
    meta["count"] = ds.size();
    meta["input_len"] = ds.input_len();
    meta["target_len"] = ds.target_len();
    SensorLayout layout = ds.encoding.layout();
    meta["layout"] = {{"kind", to_string(layout.kind)},
                      {"complex", layout.complex_pair},
                      {"m", layout.m}};
    meta["encoding"] = encoding_to_json(ds.encoding);
    meta["sensor_scale"] = ds.sensor_scale;
    meta["target_mode"] = to_string(ds.target_mode);
    std::string json = meta.dump();

    std::string out = "AMDS";
    put_u32_le(out, 1);
    put_u64_le(out, json.size());
    out += json;
    for (const auto& v : ds.inputs) put_f64_le(out, v);
    for (const auto& v : ds.targets) put_f64_le(out, v);
    write_file_atomic(path, out);
}

inline Dataset load_dataset(const std::string& path) {
    std::string data = read_file(path);
    ByteReader r{data};
    if (r.bytes(4) != "AMDS") throw IoError("not a dataset file: " + path);
    uint32_t version = r.u32();
    if (version != 1) throw IoError("unsupported dataset version in " + path);
    auto meta = nlohmann::json::parse(r.bytes(r.u64()));
    Dataset ds;
    ds.encoding = encoding_from_json(meta.at("encoding"));
    ds.sensor_scale = meta.at("sensor_scale").get<double>();
    ds.target_mode = target_mode_from(meta.at("target_mode").get<std::string>());
    size_t count = meta.at("count").get<size_t>();
    size_t input_len = meta.at("input_len").get<size_t>();
    size_t target_len = meta.at("target_len").get<size_t>();
    ds.inputs.resize(count);
    ds.targets.resize(count);
    for (auto& v : ds.inputs) r.f64(v, input_len);
    for (auto& v : ds.targets) r.f64(v, target_len);
    return ds;
}

}  // namespace automap
