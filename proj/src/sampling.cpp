#include "mhpinn/sampling.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace mhpinn {

using nlohmann::json;

std::vector<double> log_spaced_nu(int n, double nu_min, double nu_max) {
    if (n < 2) throw std::invalid_argument("log_spaced_nu: need n >= 2");
    if (!(nu_min > 0.0) || !(nu_max > nu_min))
        throw std::invalid_argument("log_spaced_nu: need 0 < nu_min < nu_max");
    std::vector<double> nu(n);
    const double lg_min = std::log10(nu_min), lg_max = std::log10(nu_max);
    for (int k = 0; k < n; ++k)
        nu[k] = std::pow(10.0, lg_min + (lg_max - lg_min) * k / (n - 1));
    // Pin the endpoints so they are exact regardless of pow rounding.
    nu.front() = nu_min;
    nu.back() = nu_max;
    return nu;
}

CollocationBatch make_grid(int n_x, int n_t, int n_nu, const Domain& dom) {
    if (n_x < 2 || n_t < 2 || n_nu < 2)
        throw std::invalid_argument("make_grid: all counts must be >= 2");
    CollocationBatch b;
    b.grid = true;
    b.n_x = n_x;
    b.n_t = n_t;
    b.n_nu = n_nu;
    std::vector<double> xs(n_x), ts(n_t);
    for (int i = 0; i < n_x; ++i)
        xs[i] = dom.x_min + (dom.x_max - dom.x_min) * i / (n_x - 1);
    for (int i = 0; i < n_t; ++i)
        ts[i] = dom.t_min + (dom.t_max - dom.t_min) * i / (n_t - 1);
    const std::vector<double> nus = log_spaced_nu(n_nu, dom.nu_min, dom.nu_max);
    const std::size_t n = static_cast<std::size_t>(n_x) * n_t * n_nu;
    b.x.reserve(n);
    b.t.reserve(n);
    b.nu.reserve(n);
    for (int kn = 0; kn < n_nu; ++kn)
        for (int kt = 0; kt < n_t; ++kt)
            for (int kx = 0; kx < n_x; ++kx) {
                b.x.push_back(xs[kx]);
                b.t.push_back(ts[kt]);
                b.nu.push_back(nus[kn]);
            }
    return b;
}

CollocationBatch sample_random_batch(std::size_t m, const Domain& dom, Rng& rng) {
    if (m < 1) throw std::invalid_argument("sample_random_batch: need m >= 1");
    CollocationBatch b;
    b.x.resize(m);
    b.t.resize(m);
    b.nu.resize(m);
    const double lg_min = std::log10(dom.nu_min), lg_max = std::log10(dom.nu_max);
    for (std::size_t i = 0; i < m; ++i) {
        b.x[i] = rng.uniform(dom.x_min, dom.x_max);
        b.t[i] = rng.uniform(dom.t_min, dom.t_max);
        b.nu[i] = std::pow(10.0, rng.uniform(lg_min, lg_max));
    }
    return b;
}

std::vector<ICFunction> gen_fourier_ics(const ICEnsembleSpec& spec) {
    if (spec.family != ICEnsembleSpec::Family::fourier)
        throw std::invalid_argument("gen_fourier_ics: spec family is not fourier");
    if (spec.n_ics < 1 || spec.n_modes < 1)
        throw std::invalid_argument("gen_fourier_ics: counts must be >= 1");
    Rng rng(spec.seed);
    std::vector<ICFunction> ics;
    ics.reserve(spec.n_ics);
    for (int i = 0; i < spec.n_ics; ++i) {
        std::vector<double> a(spec.n_modes), b(spec.n_modes);
        for (int k = 0; k < spec.n_modes; ++k) {
            const double lim = spec.amplitude / (k + 1);
            a[k] = rng.uniform(-lim, lim);
        }
        for (int k = 0; k < spec.n_modes; ++k) {
            const double lim = spec.amplitude / (k + 1);
            b[k] = rng.uniform(-lim, lim);
        }
        ics.push_back(ICFunction::fourier(std::move(a), std::move(b), spec.seed));
    }
    return ics;
}

std::vector<ICFunction> gen_polynomial_ics(const ICEnsembleSpec& spec) {
    if (spec.family != ICEnsembleSpec::Family::polynomial)
        throw std::invalid_argument("gen_polynomial_ics: spec family is not polynomial");
    if (spec.n_ics < 1 || spec.max_degree < 0)
        throw std::invalid_argument("gen_polynomial_ics: bad counts");
    Rng rng(spec.seed);
    std::vector<ICFunction> ics;
    ics.reserve(spec.n_ics);
    for (int i = 0; i < spec.n_ics; ++i) {
        std::vector<double> c(spec.max_degree + 1);
        for (double& ck : c) ck = rng.uniform(-spec.amplitude, spec.amplitude);
        ics.push_back(ICFunction::polynomial(std::move(c), spec.seed));
    }
    return ics;
}

std::vector<ICFunction> generate_ics(const ICEnsembleSpec& spec) {
    return spec.family == ICEnsembleSpec::Family::fourier ? gen_fourier_ics(spec)
                                                          : gen_polynomial_ics(spec);
}

void save_ics(const std::vector<ICFunction>& ics, const std::string& path) {
    json j = json::array();
    for (const auto& ic : ics) j.push_back(json::parse(ic.to_json_string()));
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write IC file: " + path);
    os << j.dump(2) << '\n';
}

std::vector<ICFunction> load_ics(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open IC file: " + path);
    json j;
    try {
        is >> j;
    } catch (const json::parse_error& e) {
        throw std::runtime_error("IC file parse error in " + path + ": " + e.what());
    }
    const json& arr = j.is_array() ? j : j.at("ics");
    std::vector<ICFunction> ics;
    ics.reserve(arr.size());
    for (const auto& e : arr) ics.push_back(ICFunction::from_json_string(e.dump()));
    if (ics.empty()) throw std::runtime_error("IC file contains no initial conditions: " + path);
    return ics;
}

}  // namespace mhpinn
