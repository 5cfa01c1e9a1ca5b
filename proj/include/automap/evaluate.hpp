#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "automap/baselines.hpp"
#include "automap/corpus.hpp"
#include "automap/dataset.hpp"
#include "automap/io.hpp"
#include "automap/network.hpp"
#include "automap/rng.hpp"
#include "automap/train.hpp"
#include "automap/types.hpp"

namespace automap {

// Additive white Gaussian noise at a target SNR. Signal power is the mean
// square over the whole flattened vector (real and imaginary parts pooled);
// per-element noise std is sqrt(P_s / 10^(snr/10)). std::nullopt means clean.
inline SensorVec add_awgn_snr(const SensorVec& sv, std::optional<double> snr_db, Rng& rng) {
    if (!snr_db) return sv;
    if (!std::isfinite(*snr_db)) throw ConfigError("add_awgn_snr: SNR must be finite or clean");
    double power = 0.0;
    for (double v : sv.values) power += v * v;
    power /= double(sv.values.size());
    if (power == 0.0) throw DomainError("add_awgn_snr: all-zero signal has no defined SNR");
    double sigma = std::sqrt(power / std::pow(10.0, *snr_db / 10.0));
    SensorVec out = sv;
    for (double& v : out.values) v += sigma * rng.normal();
    return out;
}

struct Metrics {
    double rmse = 0.0;
    double psnr_db = 0.0;  // +inf sentinel when rmse == 0
    std::string method;
    std::optional<double> snr_db;  // nullopt = clean
};

// RMSE against the ground truth and PSNR against peak 1.0.
inline Metrics compute_metrics(const Image& recon, const Image& truth) {
    if (recon.n != truth.n || recon.pix.size() != truth.pix.size())
        throw DimensionError("compute_metrics: image size mismatch");
    double acc = 0.0;
    for (size_t i = 0; i < recon.pix.size(); ++i) {
        double d = recon.pix[i] - truth.pix[i];
        acc += d * d;
    }
    Metrics m;
    m.rmse = std::sqrt(acc / double(recon.pix.size()));
    m.psnr_db = m.rmse == 0.0 ? std::numeric_limits<double>::infinity()
                              : 20.0 * std::log10(1.0 / m.rmse);
    return m;
}

// Apply the stored sensor normalization, run the network, reshape to an image.
inline Image automap_reconstruct(const NetParams& params, double sensor_scale,
                                 const std::vector<double>& sensor_values, NetWorkspace& ws) {
    std::vector<double> x(sensor_values.size());
    for (size_t i = 0; i < x.size(); ++i) x[i] = sensor_values[i] / sensor_scale;
    forward(params, x, ws);
    Image out(params.n);
    out.pix = ws.y;
    return out;
}

inline Image automap_reconstruct(const NetParams& params, double sensor_scale,
                                 const std::vector<double>& sensor_values) {
    NetWorkspace ws;
    return automap_reconstruct(params, sensor_scale, sensor_values, ws);
}

// Default evaluation noise per encoding; misaligned data is already perturbed
// by the sampling defect and stays clean, as does plain cartesian.
inline std::optional<double> default_eval_snr(EncodingKind kind) {
    switch (kind) {
        case EncodingKind::radon: return 40.0;
        case EncodingKind::spiral: return 25.0;
        case EncodingKind::poisson_disc: return 30.0;
        case EncodingKind::cartesian:
        case EncodingKind::misaligned: return std::nullopt;
    }
    return std::nullopt;
}

inline std::string baseline_for(EncodingKind kind) {
    switch (kind) {
        case EncodingKind::radon: return "art";
        case EncodingKind::spiral: return "gridding";
        case EncodingKind::poisson_disc: return "zero_fill";
        case EncodingKind::cartesian:
        case EncodingKind::misaligned: return "ifft";
    }
    return "ifft";
}

struct MethodSummary {
    std::string method;
    double rmse_mean = 0.0, rmse_std = 0.0;
    double psnr_mean_db = 0.0, psnr_std_db = 0.0;
};

struct ExperimentReport {
    EncodingKind kind = EncodingKind::cartesian;
    std::optional<double> snr_db;
    std::vector<std::string> methods;
    std::vector<std::vector<Metrics>> per_method;  // [method][image]
    std::vector<MethodSummary> summary;
    std::vector<std::string> paths;  // emitted image files
    std::vector<double> history;     // per-epoch training loss
    nlohmann::json config_snapshot;
};

namespace detail {

inline MethodSummary summarize(const std::string& method, const std::vector<Metrics>& ms) {
    MethodSummary s;
    s.method = method;
    double n = double(ms.size());
    for (const auto& m : ms) {
        s.rmse_mean += m.rmse;
        s.psnr_mean_db += m.psnr_db;
    }
    s.rmse_mean /= n;
    s.psnr_mean_db /= n;
    for (const auto& m : ms) {
        s.rmse_std += (m.rmse - s.rmse_mean) * (m.rmse - s.rmse_mean);
        s.psnr_std_db += (m.psnr_db - s.psnr_mean_db) * (m.psnr_db - s.psnr_mean_db);
    }
    s.rmse_std = std::sqrt(s.rmse_std / n);
    s.psnr_std_db = std::sqrt(s.psnr_std_db / n);
    return s;
}

inline nlohmann::json json_db(double v) {
    if (std::isinf(v)) return "inf";
    if (!std::isfinite(v)) return "nan";
    return v;
}

}  // namespace detail

// The evaluation half of an experiment: encode each held-out image, inject
// the experiment's noise, reconstruct with the network and with the matching
// conventional baseline, and score both against the target channel.
// ART images are compared by magnitude, like every other method.
inline ExperimentReport evaluate_networks(const NetParams& params, double sensor_scale,
                                          const EncodingOperator& op, TargetMode target_mode,
                                          const Corpus& test, std::optional<double> snr_db,
                                          uint64_t eval_seed, const std::string& out_dir = "",
                                          std::optional<uint64_t> phase_seed = std::nullopt,
                                          int art_sweeps = 10) {
    if (test.n() != op.n) throw MismatchError("evaluate: corpus side does not match encoding");
    if (params.n != op.n || params.d_in != op.layout().vec_len())
        throw MismatchError("evaluate: network shape does not match encoding layout");

    ExperimentReport report;
    report.kind = op.kind;
    report.snr_db = snr_db;
    std::string baseline = baseline_for(op.kind);
    report.methods = {"automap", baseline};
    report.per_method.resize(2);

    NetWorkspace ws;
    Image zero(op.n);
    for (size_t i = 0; i < test.images.size(); ++i) {
        Image re = test.images[i], im = zero;
        if (phase_seed) {
            PhaseMap pm = synthesize_phase_map(op.n, derive_seed(*phase_seed, "phase", i));
            std::tie(re, im) = apply_phase(test.images[i], pm);
        }
        Image truth(op.n);
        truth.pix = target_channel(re, im, target_mode);

        Rng enc_rng(derive_seed(eval_seed, "eval_misalign", i));
        SensorVec sv = encode(op, re, im, &enc_rng);
        Rng noise_rng(derive_seed(eval_seed, "eval_noise", i));
        SensorVec noisy = add_awgn_snr(sv, snr_db, noise_rng);

        Image recon = automap_reconstruct(params, sensor_scale, noisy.values, ws);

        Image base_img(op.n);
        if (baseline == "art") {
            Sinogram sino(op.n_angles, op.n_rays);
            sino.values = noisy.values;
            base_img = kaczmarz_art(sino, op.n, art_sweeps).image;
            for (double& v : base_img.pix) v = std::abs(v);
        } else if (baseline == "gridding") {
            base_img = gridding_recon(noisy, op);
        } else if (baseline == "zero_fill") {
            base_img = zero_fill_recon(noisy, op);
        } else {
            base_img = ifft_recon(noisy);
        }

        Metrics ma = compute_metrics(recon, truth);
        ma.method = "automap";
        ma.snr_db = snr_db;
        Metrics mb = compute_metrics(base_img, truth);
        mb.method = baseline;
        mb.snr_db = snr_db;
        report.per_method[0].push_back(ma);
        report.per_method[1].push_back(mb);

        if (!out_dir.empty()) {
            auto emit = [&](const Image& img, const std::string& method) {
                std::string stem = out_dir + "/" + std::to_string(i) + "." + method;
                write_pgm_scaled(stem + ".pgm", img);
                write_f64_sidecar(stem + ".f64", img.pix);
                report.paths.push_back(stem + ".pgm");
                report.paths.push_back(stem + ".f64");
            };
            emit(truth, "truth");
            emit(recon, "automap");
            emit(base_img, baseline);
        }
    }
    for (size_t k = 0; k < report.methods.size(); ++k)
        report.summary.push_back(detail::summarize(report.methods[k], report.per_method[k]));
    return report;
}

inline std::string report_csv(const ExperimentReport& report) {
    std::string out = "image_id,method,rmse,psnr_db\n";
    size_t count = report.per_method.empty() ? 0 : report.per_method[0].size();
    for (size_t i = 0; i < count; ++i)
        for (size_t k = 0; k < report.methods.size(); ++k) {
            const Metrics& m = report.per_method[k][i];
            out += std::to_string(i) + "," + report.methods[k] + "," + fmt_g17(m.rmse) + "," +
                   (std::isinf(m.psnr_db) ? "inf" : fmt_g17(m.psnr_db)) + "\n";
        }
    return out;
}

inline nlohmann::json report_json(const ExperimentReport& report) {
    nlohmann::json j;
    j["experiment"] = report.config_snapshot;
    j["experiment"]["kind"] = to_string(report.kind);
    j["experiment"]["snr_db"] = report.snr_db ? nlohmann::json(*report.snr_db) : "clean";
    nlohmann::json methods = nlohmann::json::array();
    for (const auto& s : report.summary)
        methods.push_back({{"name", s.method},
                           {"rmse_mean", s.rmse_mean},
                           {"rmse_std", s.rmse_std},
                           {"psnr_mean_db", detail::json_db(s.psnr_mean_db)},
                           {"psnr_std_db", detail::json_db(s.psnr_std_db)}});
    j["methods"] = methods;
    nlohmann::json rows = nlohmann::json::array();
    size_t count = report.per_method.empty() ? 0 : report.per_method[0].size();
    for (size_t i = 0; i < count; ++i)
        for (size_t k = 0; k < report.methods.size(); ++k) {
            const Metrics& m = report.per_method[k][i];
            rows.push_back({{"image_id", i},
                            {"method", report.methods[k]},
                            {"rmse", m.rmse},
                            {"psnr_db", detail::json_db(m.psnr_db)}});
        }
    j["per_image"] = rows;
    j["paths"] = report.paths;
    if (!report.history.empty()) j["history"] = report.history;
    return j;
}

struct ExperimentConfig {
    EncodingKind kind = EncodingKind::cartesian;
    int n = 16;
    int train_count = 512;
    int test_count = 32;
    uint64_t train_corpus_seed = 1;
    uint64_t test_corpus_seed = 2;
    uint64_t master_seed = 0;
    TrainConfig train;
    EncodingParams enc_params;
    TargetMode target_mode = TargetMode::magnitude;
    std::optional<uint64_t> phase_seed;       // modulate targets when set
    std::optional<double> snr_db_override;    // otherwise per-kind default
    bool use_default_snr = true;
    std::string out_dir;  // empty: keep everything in memory
};

// Full Fig.-2-style protocol at desk scale: build the encoding, train on one
// corpus, evaluate on a disjoint one with the encoding's noise level, and
// write images plus CSV/JSON reports.
inline ExperimentReport run_experiment(const ExperimentConfig& cfg) {
    if (cfg.train_corpus_seed == cfg.test_corpus_seed)
        throw ConfigError("run_experiment: train and test corpus seeds must differ");

    EncodingOperator op =
        make_encoding(cfg.kind, cfg.n, derive_seed(cfg.master_seed, "encoding"), cfg.enc_params);
    Corpus train_corpus = synth_corpus(cfg.train_count, cfg.n, cfg.train_corpus_seed);
    Corpus test_corpus = synth_corpus(cfg.test_count, cfg.n, cfg.test_corpus_seed);

    Rng build_rng(derive_seed(cfg.master_seed, "train_misalign"));
    Dataset ds = build_dataset(train_corpus, op, cfg.target_mode, cfg.phase_seed, build_rng);

    TrainConfig tc = cfg.train;
    tc.seed = derive_seed(cfg.master_seed, "train");
    TrainResult tr = train(ds, tc);

    std::optional<double> snr =
        cfg.use_default_snr ? default_eval_snr(cfg.kind) : cfg.snr_db_override;
    std::string img_dir = cfg.out_dir.empty()
                              ? std::string()
                              : cfg.out_dir + "/" + to_string(cfg.kind);
    ExperimentReport report =
        evaluate_networks(tr.params, ds.sensor_scale, op, cfg.target_mode, test_corpus, snr,
                          derive_seed(cfg.master_seed, "eval"), img_dir, cfg.phase_seed);
    report.history = tr.history;
    report.config_snapshot = {{"n", cfg.n},
                              {"train_count", cfg.train_count},
                              {"test_count", cfg.test_count},
                              {"seeds",
                               {{"master", cfg.master_seed},
                                {"train_corpus", cfg.train_corpus_seed},
                                {"test_corpus", cfg.test_corpus_seed}}},
                              {"target_mode", to_string(cfg.target_mode)},
                              {"config", train_config_to_json(tc)}};
    if (!cfg.out_dir.empty()) {
        write_file_atomic(img_dir + "/report.json", report_json(report).dump(2) + "\n");
        write_file_atomic(img_dir + "/metrics.csv", report_csv(report));
        write_file_atomic(img_dir + "/history.csv", history_csv(report.history));
    }
    return report;
}

}  // namespace automap
