// Timing harness: serial vs OpenMP execution of the loss-gradient kernel and
// the latent collection pass, at the desk-scale problem size.

#include <chrono>
#include <cstdio>
#include <string>
#include <vector>

#include "mhpinn/analysis.hpp"
#include "mhpinn/parallel.hpp"
#include "mhpinn/physics.hpp"
#include "mhpinn/sampling.hpp"

using namespace mhpinn;

namespace {

double time_ms(int reps, auto&& fn) {
    fn();  // warm-up
    const auto t0 = std::chrono::steady_clock::now();
    for (int i = 0; i < reps; ++i) fn();
    const auto t1 = std::chrono::steady_clock::now();
    return std::chrono::duration<double, std::milli>(t1 - t0).count() / reps;
}

}  // namespace

int main(int argc, char** argv) {
    int reps = 5;
    if (argc > 1) reps = std::stoi(argv[1]);

    Arch arch;
    arch.depth = 3;
    arch.width = 32;
    arch.n_b = 8;
    arch.n_heads = 4;
    Domain dom;
    dom.nu_min = 0.05;

    Rng rng(7);
    ModelParams params = init_params(arch, rng);
    params.arch.nu_min = dom.nu_min;
    const CollocationBatch batch = make_grid(40, 40, 5, dom);
    ICEnsembleSpec spec;
    spec.n_ics = arch.n_heads;
    const auto ics = gen_fourier_ics(spec);
    LossConfig cfg;
    LossWorkspace ws;
    ws.prepare(batch, ics);
    std::vector<double> grad(param_count(arch));

    std::printf("threads available: %d, batch %zu points, %zu parameters\n", par::max_threads(),
                batch.size(), grad.size());

    const par::Execution serial = par::Execution::serial();
    const par::Execution par_det{true, true};
    const par::Execution par_fast{true, false};

    const double g_serial = time_ms(reps, [&] { total_loss(params, batch, ics, cfg, grad, serial, &ws); });
    const double g_det = time_ms(reps, [&] { total_loss(params, batch, ics, cfg, grad, par_det, &ws); });
    const double g_fast = time_ms(reps, [&] { total_loss(params, batch, ics, cfg, grad, par_fast, &ws); });
    std::printf("loss gradient   serial %8.2f ms   parallel-det %8.2f ms (x%.2f)   parallel %8.2f ms (x%.2f)\n",
                g_serial, g_det, g_serial / g_det, g_fast, g_serial / g_fast);

    const double c_serial = time_ms(reps, [&] { collect_latents(params, batch, serial); });
    const double c_par = time_ms(reps, [&] { collect_latents(params, batch, par_det); });
    std::printf("collect latents serial %8.2f ms   parallel     %8.2f ms (x%.2f)\n", c_serial,
                c_par, c_serial / c_par);
    return 0;
}
