// Command-line surface for the reconstruction toolkit. One command = one
// process; every run writes a manifest (also on failure) so experiments are
// self-describing. Exit codes: 0 success, 2 usage, 3 I/O, 4 numeric abort,
// 5 artifact mismatch.

#include <chrono>
#include <filesystem>
#include <functional>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "automap/analysis.hpp"
#include "automap/baselines.hpp"
#include "automap/corpus.hpp"
#include "automap/dataset.hpp"
#include "automap/encode.hpp"
#include "automap/evaluate.hpp"
#include "automap/io.hpp"
#include "automap/network.hpp"
#include "automap/parallel.hpp"
#include "automap/train.hpp"

namespace {

constexpr const char* kVersion = "0.1.0";

using namespace automap;

int exit_code_for(const std::exception& e) {
    if (dynamic_cast<const MismatchError*>(&e)) return 5;
    if (dynamic_cast<const DimensionError*>(&e)) return 5;
    if (dynamic_cast<const NumericError*>(&e)) return 4;
    if (dynamic_cast<const IoError*>(&e)) return 3;
    return 2;  // usage/config/domain
}

std::string join_args(int argc, char** argv) {
    std::string s;
    for (int i = 0; i < argc; ++i) {
        if (i) s += ' ';
        s += argv[i];
    }
    return s;
}

// Runs an action and writes <manifest_dir>/manifest.json on success and on
// failure; failure manifests carry the error text. The action may add fields
// to the manifest (e.g. the effective config) before it completes.
int run_with_manifest(const std::string& manifest_dir, nlohmann::json& manifest,
                      const std::function<void()>& action) {
    auto t0 = std::chrono::steady_clock::now();
    int code = 0;
    try {
        action();
        manifest["status"] = "ok";
    } catch (const std::exception& e) {
        code = exit_code_for(e);
        manifest["status"] = "error";
        manifest["error"] = e.what();
        std::cerr << "error: " << e.what() << "\n";
    }
    manifest["duration_seconds"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    try {
        write_file_atomic(manifest_dir + "/manifest.json", manifest.dump(2) + "\n");
    } catch (const std::exception& e) {
        std::cerr << "error writing manifest: " << e.what() << "\n";
        if (code == 0) code = 3;
    }
    return code;
}

std::string parent_dir_of(const std::string& path) {
    auto parent = std::filesystem::path(path).parent_path();
    return parent.empty() ? std::string(".") : parent.string();
}

struct EncodingFlags {
    std::string kind = "cartesian";
    double fraction = 0.40;
    int n_angles = 0, n_rays = 0;
    int max_shift = -1;

    void attach(CLI::App* cmd, bool with_kind = true) {
        if (with_kind)
            cmd->add_option("--encoding", kind, "cartesian|poisson|spiral|radon|misaligned")
                ->check(CLI::IsMember({"cartesian", "poisson", "poisson_disc", "spiral", "radon",
                                       "misaligned"}));
        cmd->add_option("--fraction", fraction, "poisson-disc sampled fraction");
        cmd->add_option("--n-angles", n_angles, "radon projection angles (0 = default)");
        cmd->add_option("--n-rays", n_rays, "radon parallel rays (0 = default)");
        cmd->add_option("--max-shift", max_shift, "misaligned max line shift (-1 = default)");
    }

    EncodingOperator build(int n, uint64_t seed) const {
        EncodingParams p;
        p.target_fraction = fraction;
        p.n_angles = n_angles;
        p.n_rays = n_rays;
        p.max_shift = max_shift;
        return make_encoding(encoding_kind_from(kind), n, seed, p);
    }
};

std::optional<double> parse_snr(const std::string& s) {
    if (s == "clean") return std::nullopt;
    try {
        size_t used = 0;
        double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (...) {
        throw ConfigError("--snr-db must be a number or 'clean', got: " + s);
    }
}

nlohmann::json base_manifest(int argc, char** argv, uint64_t seed, const std::string& out_dir) {
    return {{"command_line", join_args(argc, argv)},
            {"master_seed", seed},
            {"versions", {{"automap", kVersion}}},
            {"output_directory", out_dir}};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"AUTOMAP sensor-to-image reconstruction toolkit"};
    app.require_subcommand(1);
    int threads = 0;
    app.add_option("--threads", threads, "worker threads (0 = hardware)");

    // ---- gen-data -----------------------------------------------------------
    auto* gen = app.add_subcommand("gen-data", "generate or import an image corpus");
    std::string gen_kind = "synth", gen_out, gen_src;
    int gen_count = 64, gen_n = 16;
    uint64_t gen_seed = 0;
    gen->add_option("--kind", gen_kind, "synth|pgm|noise")
        ->check(CLI::IsMember({"synth", "pgm", "noise"}));
    gen->add_option("--count", gen_count)->check(CLI::PositiveNumber);
    gen->add_option("--n", gen_n)->check(CLI::PositiveNumber);
    gen->add_option("--seed", gen_seed);
    gen->add_option("--out", gen_out)->required();
    gen->add_option("--src", gen_src, "PGM directory for --kind pgm");

    // ---- train ---------------------------------------------------------------
    auto* tr = app.add_subcommand("train", "train a reconstruction network");
    std::string tr_corpus, tr_target = "magnitude", tr_config, tr_ckpt, tr_history;
    EncodingFlags tr_enc;
    int tr_n = 16;
    uint64_t tr_seed = 0;
    std::optional<uint64_t> tr_phase_seed;
    uint64_t tr_phase_seed_val = 0;
    tr->add_option("--corpus", tr_corpus)->required();
    tr_enc.attach(tr);
    tr->add_option("--n", tr_n)->check(CLI::PositiveNumber);
    auto* phase_opt = tr->add_option("--phase-seed", tr_phase_seed_val,
                                     "modulate targets with synthetic phase maps");
    tr->add_option("--target", tr_target, "magnitude|real|imag|phase")
        ->check(CLI::IsMember({"magnitude", "real", "imag", "phase"}));
    tr->add_option("--config", tr_config, "TrainConfig JSON file");
    tr->add_option("--seed", tr_seed);
    tr->add_option("--out-ckpt", tr_ckpt)->required();
    tr->add_option("--history", tr_history, "loss history CSV (default: <ckpt>.history.csv)");
    int tr_epochs = -1, tr_batch = -1, tr_ckpt_every = -1;
    double tr_lr = -1, tr_lambda = -1, tr_noise = -1;
    tr->add_option("--epochs", tr_epochs);
    tr->add_option("--batch", tr_batch);
    tr->add_option("--lr", tr_lr);
    tr->add_option("--lambda", tr_lambda);
    tr->add_option("--mult-noise", tr_noise);
    tr->add_option("--checkpoint-every", tr_ckpt_every);

    // ---- evaluate --------------------------------------------------------------
    auto* ev = app.add_subcommand("evaluate", "evaluate a checkpoint against a test corpus");
    std::string ev_ckpt, ev_corpus, ev_snr = "clean", ev_baseline = "auto", ev_out;
    uint64_t ev_seed = 0;
    int ev_art_sweeps = 10;
    ev->add_option("--ckpt", ev_ckpt)->required();
    ev->add_option("--test-corpus", ev_corpus)->required();
    ev->add_option("--snr-db", ev_snr, "number or 'clean'");
    ev->add_option("--baseline", ev_baseline)
        ->check(CLI::IsMember({"auto", "art", "ifft", "zerofill", "gridding"}));
    ev->add_option("--out-dir", ev_out)->required();
    ev->add_option("--seed", ev_seed);
    ev->add_option("--art-sweeps", ev_art_sweeps);

    // ---- analyze ----------------------------------------------------------------
    auto* an = app.add_subcommand("analyze", "hidden-layer stats and weight export");
    std::string an_ckpt, an_inputs, an_out;
    double an_tau = 0.01;
    uint64_t an_seed = 0;
    an->add_option("--ckpt", an_ckpt)->required();
    an->add_option("--inputs", an_inputs, "corpus file or PGM directory")->required();
    an->add_option("--out-dir", an_out)->required();
    an->add_option("--tau", an_tau, "sparsity threshold on |activation|");
    an->add_option("--seed", an_seed);

    // ---- baseline ------------------------------------------------------------------
    auto* bl = app.add_subcommand("baseline", "conventional reconstructions only");
    std::string bl_method, bl_corpus, bl_snr = "clean", bl_out;
    EncodingFlags bl_enc;
    int bl_n = 16, bl_sweeps = 10;
    double bl_relax = 1.0;
    uint64_t bl_seed = 0;
    bl->add_option("--method", bl_method)
        ->required()
        ->check(CLI::IsMember({"art", "ifft", "zerofill", "gridding"}));
    bl->add_option("--corpus", bl_corpus)->required();
    bl->add_option("--n", bl_n)->check(CLI::PositiveNumber);
    bl_enc.attach(bl);
    bl->add_option("--snr-db", bl_snr, "number or 'clean'");
    bl->add_option("--out-dir", bl_out)->required();
    bl->add_option("--sweeps", bl_sweeps);
    bl->add_option("--relax", bl_relax);
    bl->add_option("--seed", bl_seed);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }
    if (threads > 0) set_thread_count(threads);

    // ---- dispatch -------------------------------------------------------------------
    if (gen->parsed()) {
        auto manifest = base_manifest(argc, argv, gen_seed, parent_dir_of(gen_out));
        return run_with_manifest(parent_dir_of(gen_out), manifest, [&] {
            Corpus corpus;
            if (gen_kind == "synth")
                corpus = synth_corpus(gen_count, gen_n, gen_seed);
            else if (gen_kind == "noise")
                corpus = noise_corpus(gen_count, gen_n, gen_seed);
            else {
                if (gen_src.empty()) throw UsageError("--kind pgm requires --src");
                corpus = load_corpus(gen_src, gen_n);
            }
            save_corpus(gen_out, corpus);
        });
    }

    if (tr->parsed()) {
        if (phase_opt->count() > 0) tr_phase_seed = tr_phase_seed_val;
        nlohmann::json manifest = base_manifest(argc, argv, tr_seed, parent_dir_of(tr_ckpt));
        return run_with_manifest(parent_dir_of(tr_ckpt), manifest, [&] {
            TrainConfig cfg;
            if (!tr_config.empty())
                cfg = train_config_from_json(nlohmann::json::parse(read_file(tr_config)));
            if (tr_epochs >= 0) cfg.epochs = tr_epochs;
            if (tr_batch >= 0) cfg.batch_size = tr_batch;
            if (tr_lr >= 0) cfg.learning_rate = tr_lr;
            if (tr_lambda >= 0) cfg.lambda_l1 = tr_lambda;
            if (tr_noise >= 0) cfg.mult_noise = tr_noise;
            if (tr_ckpt_every >= 0) cfg.checkpoint_every = tr_ckpt_every;
            cfg.seed = tr_seed;
            manifest["config"] = train_config_to_json(cfg);
            if (tr_enc.kind == "radon" && tr_phase_seed)
                throw UsageError("radon encoding is real-valued; --phase-seed is unsupported");

            Corpus corpus = load_corpus_any(tr_corpus, tr_n);
            EncodingOperator op = tr_enc.build(tr_n, derive_seed(tr_seed, "encoding"));
            Rng build_rng(derive_seed(tr_seed, "train_misalign"));
            Dataset ds =
                build_dataset(corpus, op, target_mode_from(tr_target), tr_phase_seed, build_rng);

            nlohmann::json meta = {{"sensor_scale", ds.sensor_scale},
                                   {"encoding", encoding_to_json(op)},
                                   {"target_mode", tr_target},
                                   {"seeds", {{"master", tr_seed}}},
                                   {"epoch", cfg.epochs}};
            if (tr_phase_seed) meta["phase_seed"] = *tr_phase_seed;
            std::string ckpt_dir = cfg.checkpoint_every > 0 ? parent_dir_of(tr_ckpt) : "";
            TrainResult result = train(ds, cfg, ckpt_dir, meta);
            save_checkpoint(tr_ckpt, result.params, meta);
            std::string hist = tr_history.empty() ? tr_ckpt + ".history.csv" : tr_history;
            write_file_atomic(hist, history_csv(result.history));
        });
    }

    if (ev->parsed()) {
        auto manifest = base_manifest(argc, argv, ev_seed, ev_out);
        return run_with_manifest(ev_out, manifest, [&] {
            auto snr = parse_snr(ev_snr);
            auto [params, meta] = load_checkpoint(ev_ckpt);
            EncodingOperator op = encoding_from_json(meta.at("encoding"));
            if (op.n != params.n || op.layout().vec_len() != params.d_in)
                throw MismatchError("checkpoint and stored encoding disagree");
            TargetMode mode = target_mode_from(meta.at("target_mode").get<std::string>());
            double sensor_scale = meta.at("sensor_scale").get<double>();
            std::optional<uint64_t> phase_seed;
            if (meta.contains("phase_seed")) phase_seed = meta.at("phase_seed").get<uint64_t>();

            if (ev_baseline != "auto") {
                std::string want = baseline_for(op.kind);
                std::string named = ev_baseline == "zerofill" ? "zero_fill" : ev_baseline;
                if (named != want)
                    throw UsageError("baseline '" + ev_baseline + "' does not apply to a " +
                                     std::string(to_string(op.kind)) + " encoding (auto = " + want +
                                     ")");
            }
            Corpus test = load_corpus_any(ev_corpus, op.n);
            ExperimentReport report =
                evaluate_networks(params, sensor_scale, op, mode, test, snr, ev_seed,
                                  ev_out + "/images", phase_seed, ev_art_sweeps);
            report.config_snapshot = {{"checkpoint", ev_ckpt},
                                      {"test_corpus", ev_corpus},
                                      {"seed", ev_seed},
                                      {"n", op.n},
                                      {"target_mode", to_string(mode)}};
            write_file_atomic(ev_out + "/report.json", report_json(report).dump(2) + "\n");
            write_file_atomic(ev_out + "/metrics.csv", report_csv(report));
        });
    }

    if (an->parsed()) {
        auto manifest = base_manifest(argc, argv, an_seed, an_out);
        return run_with_manifest(an_out, manifest, [&] {
            auto [params, meta] = load_checkpoint(an_ckpt);
            EncodingOperator op = encoding_from_json(meta.at("encoding"));
            double sensor_scale = meta.at("sensor_scale").get<double>();
            Corpus corpus = load_corpus_any(an_inputs, op.n);
            Image zero(op.n);
            std::vector<std::vector<double>> inputs;
            inputs.reserve(corpus.size());
            for (size_t i = 0; i < corpus.images.size(); ++i) {
                Rng rng(derive_seed(an_seed, "analyze_misalign", i));
                SensorVec sv = encode(op, corpus.images[i], zero, &rng);
                for (double& v : sv.values) v /= sensor_scale;
                inputs.push_back(std::move(sv.values));
            }
            ActivationStats stats = capture_stats(params, inputs, an_tau, an_inputs);
            write_file_atomic(an_out + "/stats.json", stats_to_json(stats).dump(2) + "\n");
            export_fc_weights(params, an_out + "/fc_weights.csv");
            std::filesystem::create_directories(an_out + "/kernels");
            kernel_gallery(params, an_out + "/kernels");
        });
    }

    if (bl->parsed()) {
        auto manifest = base_manifest(argc, argv, bl_seed, bl_out);
        return run_with_manifest(bl_out, manifest, [&] {
            auto snr = parse_snr(bl_snr);
            // default encoding kind follows the method
            if (bl_enc.kind == "cartesian") {
                if (bl_method == "art") bl_enc.kind = "radon";
                if (bl_method == "zerofill") bl_enc.kind = "poisson";
                if (bl_method == "gridding") bl_enc.kind = "spiral";
            }
            EncodingOperator op = bl_enc.build(bl_n, derive_seed(bl_seed, "encoding"));
            Corpus corpus = load_corpus_any(bl_corpus, bl_n);
            Image zero(bl_n);
            std::string csv = "image_id,method,rmse,psnr_db\n";
            std::string residuals = "image_id,sweep,residual\n";
            for (size_t i = 0; i < corpus.images.size(); ++i) {
                Rng enc_rng(derive_seed(bl_seed, "eval_misalign", i));
                SensorVec sv = encode(op, corpus.images[i], zero, &enc_rng);
                Rng noise_rng(derive_seed(bl_seed, "eval_noise", i));
                SensorVec noisy = add_awgn_snr(sv, snr, noise_rng);
                Image recon(bl_n);
                if (bl_method == "art") {
                    Sinogram sino(op.n_angles, op.n_rays);
                    sino.values = noisy.values;
                    BaselineResult r = kaczmarz_art(sino, bl_n, bl_sweeps, bl_relax);
                    for (size_t s = 0; s < r.residual_history.size(); ++s)
                        residuals += std::to_string(i) + "," + std::to_string(s + 1) + "," +
                                     fmt_g17(r.residual_history[s]) + "\n";
                    recon = r.image;
                    for (double& v : recon.pix) v = std::abs(v);
                } else if (bl_method == "ifft") {
                    recon = ifft_recon(noisy);
                } else if (bl_method == "zerofill") {
                    recon = zero_fill_recon(noisy, op);
                } else {
                    recon = gridding_recon(noisy, op);
                }
                Image truth(bl_n);
                truth.pix = target_channel(corpus.images[i], zero, TargetMode::magnitude);
                Metrics m = compute_metrics(recon, truth);
                csv += std::to_string(i) + "," + bl_method + "," + fmt_g17(m.rmse) + "," +
                       (std::isinf(m.psnr_db) ? "inf" : fmt_g17(m.psnr_db)) + "\n";
                std::string stem = bl_out + "/" + std::to_string(i) + "." + bl_method;
                write_pgm_scaled(stem + ".pgm", recon);
                write_f64_sidecar(stem + ".f64", recon.pix);
            }
            write_file_atomic(bl_out + "/metrics.csv", csv);
            if (bl_method == "art") write_file_atomic(bl_out + "/residuals.csv", residuals);
        });
    }
    return 2;
}
