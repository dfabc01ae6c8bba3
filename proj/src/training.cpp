#include "mhpinn/training.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace mhpinn {

namespace {

void validate_cfg(const TrainConfig& cfg) {
    if (!(cfg.base_lr > 0.0)) throw std::invalid_argument("train: base_lr must be > 0");
    if (!(cfg.decay_factor > 0.0) || cfg.decay_factor > 1.0)
        throw std::invalid_argument("train: decay_factor must be in (0,1]");
    if (cfg.warmup_epochs < 0) throw std::invalid_argument("train: warmup_epochs must be >= 0");
    if (cfg.decay_every < 1) throw std::invalid_argument("train: decay_every must be >= 1");
    if (cfg.epochs < 0) throw std::invalid_argument("train: epochs must be >= 0");
    if (cfg.warmup != "linear" && cfg.warmup != "constant")
        throw std::invalid_argument("train: warmup must be 'linear' or 'constant'");
}

std::vector<ICFunction> resolve_ics(const TrainConfig& cfg) {
    if (!cfg.ics.empty()) {
        if (static_cast<int>(cfg.ics.size()) != cfg.arch.n_heads)
            throw std::invalid_argument("train: " + std::to_string(cfg.ics.size()) +
                                        " initial conditions for " +
                                        std::to_string(cfg.arch.n_heads) + " heads");
        return cfg.ics;
    }
    ICEnsembleSpec spec = cfg.ic_spec;
    spec.n_ics = cfg.arch.n_heads;
    return generate_ics(spec);
}

std::size_t random_batch_size(const TrainConfig& cfg) {
    return cfg.batch_size ? cfg.batch_size
                          : static_cast<std::size_t>(cfg.grid_x) * cfg.grid_t * cfg.grid_nu;
}

// Batch for a given resample interval index; a pure function of (seed, index)
// so resumed runs rebuild the same batches without stream state.
CollocationBatch batch_for(const TrainConfig& cfg, long bidx) {
    if (cfg.resample_every <= 0) return make_grid(cfg.grid_x, cfg.grid_t, cfg.grid_nu, cfg.domain);
    Rng r = Rng(cfg.seed).substream(0xBA7C4000ull + static_cast<std::uint64_t>(bidx));
    return sample_random_batch(random_batch_size(cfg), cfg.domain, r);
}

TrainResult run_loop(const TrainConfig& cfg, ModelParams params, AdamState adam,
                     long start_epoch) {
    const std::vector<ICFunction> ics = resolve_ics(cfg);
    const par::Execution ex{cfg.parallel, cfg.deterministic};
    const std::size_t nparams = param_count(params.arch);
    std::vector<double> flat = pack(params);
    std::vector<double> grad(nparams);
    if (adam.m.empty()) adam = AdamState(nparams);
    if (adam.m.size() != nparams)
        throw std::invalid_argument("train: optimizer state does not match parameter count");

    auto save = [&](long epoch) {
        if (cfg.checkpoint_path.empty()) return;
        Checkpoint c;
        c.params = params;
        c.rng_seed = cfg.seed;
        c.epoch = epoch;
        c.adam = adam;
        save_checkpoint(c, cfg.checkpoint_path);
    };

    TrainResult res;
    long cur_bidx = cfg.resample_every > 0 ? start_epoch / cfg.resample_every : 0;
    CollocationBatch batch = batch_for(cfg, cur_bidx);
    LossWorkspace ws;
    ws.prepare(batch, ics);

    for (long e = start_epoch; e < cfg.epochs; ++e) {
        if (cfg.resample_every > 0 && e / cfg.resample_every != cur_bidx) {
            cur_bidx = e / cfg.resample_every;
            batch = batch_for(cfg, cur_bidx);
            ws.prepare(batch, ics);
        }
        const double lr = lr_at(e, cfg);
        const auto t0 = std::chrono::steady_clock::now();
        const LossBreakdown lb = total_loss(params, batch, ics, cfg.loss, grad, ex, &ws);
        const double wall =
            std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
                .count();
        res.log.push_back({e, lb.total, lb.pde_term, lb.ortho_term, lr, wall});
        if (lr > 0.0) {
            adam_step(flat, grad, adam, lr);
            unpack(flat, params);
        }
        if (cfg.checkpoint_every > 0 && (e + 1) % cfg.checkpoint_every == 0 && e + 1 < cfg.epochs)
            save(e + 1);
    }
    save(cfg.epochs);
    if (!cfg.log_path.empty()) write_loss_csv(res.log, cfg.log_path, cfg.deterministic);
    if (!res.log.empty()) {
        const TrainLogRow& last = res.log.back();
        res.final_loss = {last.total, last.pde, last.ortho};
    }
    res.params = std::move(params);
    res.ics = ics;
    return res;
}

}  // namespace

double lr_at(long epoch, const TrainConfig& cfg) {
    if (epoch < 0) throw std::invalid_argument("lr_at: epoch must be >= 0");
    if (cfg.warmup != "linear" && cfg.warmup != "constant")
        throw std::invalid_argument("lr_at: unknown warmup \"" + cfg.warmup + "\"");
    if (epoch < cfg.warmup_epochs)
        return cfg.warmup == "constant"
                   ? cfg.base_lr
                   : cfg.base_lr * static_cast<double>(epoch) / cfg.warmup_epochs;
    const long past = epoch - cfg.warmup_epochs;
    return cfg.base_lr * std::pow(cfg.decay_factor, static_cast<double>(past / cfg.decay_every));
}

TrainResult train(const TrainConfig& cfg) {
    validate_cfg(cfg);
    TrainConfig c = cfg;
    c.arch.nu_min = c.domain.nu_min;
    c.arch.nu_max = c.domain.nu_max;
    Rng init_rng = Rng(c.seed).substream(0x1A17);
    ModelParams params = init_params(c.arch, init_rng);
    return run_loop(c, std::move(params), AdamState(), 0);
}

TrainResult resume(const std::string& checkpoint_path, const TrainConfig& cfg) {
    validate_cfg(cfg);
    Checkpoint c = load_checkpoint(checkpoint_path);
    TrainConfig cc = cfg;
    cc.arch.nu_min = cc.domain.nu_min;
    cc.arch.nu_max = cc.domain.nu_max;
    const Arch& a = cc.arch;
    const Arch& b = c.params.arch;
    auto mismatch = [](const std::string& what, auto want, auto got) {
        throw std::runtime_error("resume: config " + what + " " + std::to_string(want) +
                                 " does not match checkpoint " + std::to_string(got));
    };
    if (a.depth != b.depth) mismatch("depth", a.depth, b.depth);
    if (a.width != b.width) mismatch("width", a.width, b.width);
    if (a.n_b != b.n_b) mismatch("n_b", a.n_b, b.n_b);
    if (a.n_heads != b.n_heads) mismatch("n_heads", a.n_heads, b.n_heads);
    if (c.epoch > cc.epochs)
        throw std::runtime_error("resume: checkpoint is at epoch " + std::to_string(c.epoch) +
                                 ", past the configured " + std::to_string(cc.epochs));
    return run_loop(cc, std::move(c.params), std::move(c.adam), c.epoch);
}

void write_loss_csv(const std::vector<TrainLogRow>& log, const std::string& path, bool zero_wall) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write loss curve file: " + path);
    os << "epoch,total,pde,ortho,lr,wall_ms\n";
    char buf[256];
    for (const auto& r : log) {
        std::snprintf(buf, sizeof buf, "%ld,%.17g,%.17g,%.17g,%.17g,%.17g\n", r.epoch, r.total,
                      r.pde, r.ortho, r.lr, zero_wall ? 0.0 : r.wall_ms);
        os << buf;
    }
}

}  // namespace mhpinn
