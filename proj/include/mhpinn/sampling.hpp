#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mhpinn/model.hpp"
#include "mhpinn/numerics.hpp"

namespace mhpinn {

/// Training box: x in [x_min,x_max], t in [t_min,t_max], nu in [nu_min,nu_max].
struct Domain {
    double x_min = -5.0, x_max = 5.0;
    double t_min = 0.0, t_max = 5.0;
    double nu_min = 1e-2, nu_max = 1.0;
};

/// Sampled (x,t,nu) triplets, flattened.
struct CollocationBatch {
    std::vector<double> x, t, nu;
    bool grid = false;
    int n_x = 0, n_t = 0, n_nu = 0;  // grid mode only

    std::size_t size() const { return x.size(); }
};

/// nu values logarithmically spaced from nu_min to nu_max inclusive; the
/// endpoints are exact.
std::vector<double> log_spaced_nu(int n, double nu_min, double nu_max);

/// Full tensor grid: x and t equally spaced including endpoints, nu
/// log-spaced. Point order: nu-major, then t, then x.
CollocationBatch make_grid(int n_x, int n_t, int n_nu, const Domain& dom = {});

/// x, t uniform on their intervals; log10(nu) uniform on its interval.
CollocationBatch sample_random_batch(std::size_t m, const Domain& dom, Rng& rng);

struct ICEnsembleSpec {
    enum class Family { fourier, polynomial };
    Family family = Family::fourier;
    int n_ics = 4;
    int n_modes = 10;     // fourier
    int max_degree = 4;   // polynomial
    double amplitude = 0.5;
    std::uint64_t seed = 0;
};

/// Random mode sums a_k sin(k pi (x+5)/10) + b_k cos(k pi (x+5)/10) with
/// a_k, b_k ~ U(-A/k, A/k), then the line through the endpoint values is
/// subtracted so v(+-5)=0. Draw order per IC: all a_k, then all b_k.
std::vector<ICFunction> gen_fourier_ics(const ICEnsembleSpec& spec);

/// v(x) = (1-(x/5)^2) sum_k c_k (x/5)^k, c_k ~ U(-A, A), k = 0..max_degree.
std::vector<ICFunction> gen_polynomial_ics(const ICEnsembleSpec& spec);

std::vector<ICFunction> generate_ics(const ICEnsembleSpec& spec);

/// JSON list of IC descriptors {family, coefficients, seed}.
void save_ics(const std::vector<ICFunction>& ics, const std::string& path);
std::vector<ICFunction> load_ics(const std::string& path);

}  // namespace mhpinn
