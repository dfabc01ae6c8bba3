#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mhpinn/model.hpp"
#include "mhpinn/physics.hpp"
#include "mhpinn/sampling.hpp"

namespace mhpinn {

struct TrainConfig {
    long epochs = 2000;
    double base_lr = 1e-3;
    long warmup_epochs = 1000;
    std::string warmup = "linear";  // linear ramp from 0, or "constant"
    double decay_factor = 0.985;
    long decay_every = 1000;

    LossConfig loss;  // lambda_ortho and the residual weighting
    Arch arch;
    Domain domain;

    // Fixed tensor-product grid by default; resample_every > 0 switches to a
    // fresh random batch every that many epochs.
    int grid_x = 40, grid_t = 40, grid_nu = 5;
    long resample_every = 0;
    std::size_t batch_size = 0;  // random-batch size; 0 = grid point count

    // ICs: explicit list, or generated from ic_spec (its own seed, so the
    // ensemble is shared across runs with different training seeds).
    std::vector<ICFunction> ics;
    ICEnsembleSpec ic_spec;

    std::uint64_t seed = 0;
    bool deterministic = true;
    bool parallel = true;

    long checkpoint_every = 0;  // 0: only at the end
    std::string checkpoint_path;
    std::string log_path;  // loss_curve.csv
};

struct TrainLogRow {
    long epoch = 0;
    double total = 0.0, pde = 0.0, ortho = 0.0, lr = 0.0;
    double wall_ms = 0.0;
};

/// Linear warm-up from 0 to base_lr over warmup_epochs, then step decay by
/// decay_factor every decay_every epochs.
double lr_at(long epoch, const TrainConfig& cfg);

struct TrainResult {
    ModelParams params;
    std::vector<TrainLogRow> log;
    std::vector<ICFunction> ics;
    LossBreakdown final_loss;
};

/// Full-batch Adam on the residual loss. Deterministic bit-for-bit under the
/// determinism flag for a fixed seed. Loss is logged before each step. A
/// non-finite loss aborts with an error; checkpoint files already written
/// stay in place.
TrainResult train(const TrainConfig& cfg);

/// Continue a checkpointed run up to cfg.epochs. Restores params, optimizer
/// moments and the epoch counter; the config must match the checkpoint arch.
TrainResult resume(const std::string& checkpoint_path, const TrainConfig& cfg);

/// CSV with header epoch,total,pde,ortho,lr,wall_ms. With zero_wall the
/// wall_ms column is written as 0 so reruns are byte-identical.
void write_loss_csv(const std::vector<TrainLogRow>& log, const std::string& path, bool zero_wall);

}  // namespace mhpinn
