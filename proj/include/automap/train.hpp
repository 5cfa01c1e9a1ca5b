#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

#include <json.hpp>

#include "automap/dataset.hpp"
#include "automap/network.hpp"
#include "automap/parallel.hpp"
#include "automap/rng.hpp"
#include "automap/types.hpp"

namespace automap {

// Defaults follow the published training recipe; desk-scale runs typically
// raise the learning rate and shorten the epoch count via the CLI/config.
struct TrainConfig {
    int batch_size = 100;
    double learning_rate = 2e-5;
    double rmsprop_decay = 0.9;
    double momentum = 0.0;
    int epochs = 100;
    double lambda_l1 = 1e-4;
    double mult_noise = 0.01;
    uint64_t seed = 0;
    int checkpoint_every = 0;  // epochs; 0 disables periodic checkpoints

    void validate() const {
        if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
        if (!(rmsprop_decay >= 0.0 && rmsprop_decay < 1.0))
            throw ConfigError("rmsprop_decay must be in [0, 1)");
        if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be > 0");
        if (!(mult_noise >= 0.0)) throw ConfigError("mult_noise must be >= 0");
        if (epochs < 1) throw ConfigError("epochs must be >= 1");
        if (momentum != 0.0)
            throw ConfigError("momentum must be 0.0 (the update rule has no velocity term)");
    }
};

inline nlohmann::json train_config_to_json(const TrainConfig& c) {
    return {{"batch_size", c.batch_size},
            {"learning_rate", c.learning_rate},
            {"rmsprop_decay", c.rmsprop_decay},
            {"momentum", c.momentum},
            {"epochs", c.epochs},
            {"lambda_l1", c.lambda_l1},
            {"mult_noise", c.mult_noise},
            {"seed", c.seed},
            {"checkpoint_every", c.checkpoint_every}};
}

inline TrainConfig train_config_from_json(const nlohmann::json& j) {
    TrainConfig c;
    if (j.contains("batch_size")) c.batch_size = j.at("batch_size").get<int>();
    if (j.contains("learning_rate")) c.learning_rate = j.at("learning_rate").get<double>();
    if (j.contains("rmsprop_decay")) c.rmsprop_decay = j.at("rmsprop_decay").get<double>();
    if (j.contains("momentum")) c.momentum = j.at("momentum").get<double>();
    if (j.contains("epochs")) c.epochs = j.at("epochs").get<int>();
    if (j.contains("lambda_l1")) c.lambda_l1 = j.at("lambda_l1").get<double>();
    if (j.contains("mult_noise")) c.mult_noise = j.at("mult_noise").get<double>();
    if (j.contains("seed")) c.seed = j.at("seed").get<uint64_t>();
    if (j.contains("checkpoint_every")) c.checkpoint_every = j.at("checkpoint_every").get<int>();
    return c;
}

// Per-parameter running mean square of gradients.
struct OptState {
    NetParams v;  // shape-congruent accumulators
    long step_count = 0;
};

// x_i -> x_i * (1 + level * eps_i), eps_i i.i.d. standard normal.
inline std::vector<double> corrupt_multiplicative(const std::vector<double>& x, double level,
                                                  Rng& rng) {
    if (level < 0.0) throw ConfigError("corruption level must be >= 0");
    std::vector<double> out(x.size());
    if (level == 0.0) {
        out = x;
        return out;
    }
    for (size_t i = 0; i < x.size(); ++i) out[i] = x[i] * (1.0 + level * rng.normal());
    return out;
}

// Non-centered RMSProp: v <- decay*v + (1-decay)*g^2; p <- p - lr*g/(sqrt(v)+1e-8).
inline void rmsprop_step(NetParams& p, const Gradients& g, OptState& s, const TrainConfig& cfg) {
    if (!same_shape(p, g)) throw DimensionError("rmsprop_step: gradient shape mismatch");
    if (!same_shape(p, s.v)) shape_like(s.v, p.d_in, p.n);
    const double decay = cfg.rmsprop_decay;
    const double lr = cfg.learning_rate;
    for (const auto& blk : kParamBlocks) {
        auto& pv = p.*blk.member;
        const auto& gv = g.*blk.member;
        auto& vv = s.v.*blk.member;
        for (size_t i = 0; i < pv.size(); ++i) {
            double gi = gv[i];
            if (!std::isfinite(gi)) throw NumericError("rmsprop_step: non-finite gradient");
            vv[i] = decay * vv[i] + (1.0 - decay) * gi * gi;
            if (!std::isfinite(vv[i]))
                throw NumericError("rmsprop_step: running mean-square overflow");
            pv[i] -= lr * gi / (std::sqrt(vv[i]) + 1e-8);
        }
    }
    ++s.step_count;
}

namespace detail {

inline void accumulate(Gradients& into, const Gradients& from) {
    for (const auto& blk : kParamBlocks) {
        auto& a = into.*blk.member;
        const auto& b = from.*blk.member;
        for (size_t i = 0; i < a.size(); ++i) a[i] += b[i];
    }
}

inline void scale(Gradients& g, double s) {
    for (const auto& blk : kParamBlocks)
        for (double& x : g.*blk.member) x *= s;
}

inline void zero(Gradients& g) {
    for (const auto& blk : kParamBlocks)
        std::fill((g.*blk.member).begin(), (g.*blk.member).end(), 0.0);
}

}  // namespace detail

struct TrainResult {
    NetParams params;
    std::vector<double> history;  // mean training loss per epoch
};

// Optional per-epoch observer (progress logging, mid-run evaluation).
using EpochCallback = std::function<void(int epoch, const NetParams&, double mean_loss)>;

// Minibatch RMSProp training with multiplicative input corruption.
//
// Reduction contract: each batch is split into fixed chunks of 4 examples
// (by position in the shuffled order); per-example gradients are summed in
// index order within a chunk and chunks are combined in chunk order. The
// grouping is independent of the worker count, so any --threads setting
// reproduces the serial result bit for bit. Corruption noise is drawn from a
// stream keyed by (epoch, dataset index), never by thread.
inline TrainResult train(const Dataset& ds, const TrainConfig& cfg,
                         const std::string& checkpoint_dir = "",
                         nlohmann::json ckpt_meta = nlohmann::json::object(),
                         const EpochCallback& on_epoch = {}) {
    cfg.validate();
    if (ds.size() == 0) throw ConfigError("train: dataset is empty");
    int n = ds.encoding.n;
    if (ds.target_len() != n * n)
        throw ConfigError("train: target length does not match encoding side");
    int d_in = ds.input_len();
    if (d_in != ds.encoding.layout().vec_len())
        throw ConfigError("train: input length does not match encoding layout");

    NetParams params = init_params(d_in, n, cfg.seed);
    OptState opt;
    shape_like(opt.v, d_in, n);

    const size_t count = ds.size();
    const int batch = cfg.batch_size;
    constexpr size_t kChunk = 4;
    const size_t max_chunks = (size_t(batch) + kChunk - 1) / kChunk;

    Rng shuffle_rng(derive_seed(cfg.seed, "shuffle"));
    const uint64_t corrupt_base = derive_seed(cfg.seed, "corrupt");

    std::vector<size_t> order(count);
    std::iota(order.begin(), order.end(), 0);

    int workers = thread_count();
    std::vector<NetWorkspace> ws(workers);
    std::vector<Gradients> scratch(workers);
    std::vector<Gradients> chunk_grad(max_chunks);
    for (auto& g : scratch) shape_like(g, d_in, n);
    for (auto& g : chunk_grad) shape_like(g, d_in, n);
    std::vector<double> chunk_loss(max_chunks, 0.0);
    Gradients batch_grad;
    shape_like(batch_grad, d_in, n);

    std::vector<double> history;
    history.reserve(cfg.epochs);

    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        shuffle_rng.shuffle(order);
        double epoch_loss_sum = 0.0;
        size_t batch_index = 0;
        for (size_t start = 0; start < count; start += batch, ++batch_index) {
            size_t len = std::min(size_t(batch), count - start);
            size_t chunks = (len + kChunk - 1) / kChunk;
            std::fill(chunk_loss.begin(), chunk_loss.begin() + chunks, 0.0);

            try {
                parallel_for_workers(0, chunks, [&](size_t c, int w) {
                    detail::zero(chunk_grad[c]);
                    double lsum = 0.0;
                    size_t lo = start + c * kChunk;
                    size_t hi = std::min(start + len, lo + kChunk);
                    for (size_t e = lo; e < hi; ++e) {
                        size_t idx = order[e];
                        Rng crng(derive_seed(corrupt_base, "example",
                                             uint64_t(epoch - 1) * count + idx));
                        std::vector<double> x =
                            corrupt_multiplicative(ds.inputs[idx], cfg.mult_noise, crng);
                        lsum +=
                            backward(params, x, ds.targets[idx], cfg.lambda_l1, ws[w], scratch[w]);
                        detail::accumulate(chunk_grad[c], scratch[w]);
                    }
                    chunk_loss[c] = lsum;
                });

                detail::zero(batch_grad);
                double batch_loss = 0.0;
                for (size_t c = 0; c < chunks; ++c) {
                    detail::accumulate(batch_grad, chunk_grad[c]);
                    batch_loss += chunk_loss[c];
                }
                detail::scale(batch_grad, 1.0 / double(len));
                if (!std::isfinite(batch_loss)) throw NumericError("train: non-finite loss");
                rmsprop_step(params, batch_grad, opt, cfg);
                epoch_loss_sum += batch_loss;
            } catch (const NumericError& e) {
                throw NumericError(std::string(e.what()) + " (epoch " + std::to_string(epoch) +
                                   ", batch " + std::to_string(batch_index) + ")");
            }
        }
        history.push_back(epoch_loss_sum / double(count));
        if (on_epoch) on_epoch(epoch, params, history.back());

        if (!checkpoint_dir.empty() && cfg.checkpoint_every > 0 &&
            epoch % cfg.checkpoint_every == 0) {
            nlohmann::json meta = ckpt_meta;
            meta["epoch"] = epoch;
            char name[64];
            std::snprintf(name, sizeof name, "/ckpt_epoch_%04d.amap", epoch);
            save_checkpoint(checkpoint_dir + name, params, meta);
        }
    }
    return {std::move(params), std::move(history)};
}

inline std::string history_csv(const std::vector<double>& history) {
    std::string out = "epoch,mean_loss\n";
    for (size_t i = 0; i < history.size(); ++i)
        out += std::to_string(i + 1) + "," + fmt_g17(history[i]) + "\n";
    return out;
}

}  // namespace automap
