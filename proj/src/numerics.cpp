#include "mhpinn/numerics.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace mhpinn {

Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols != b.rows)
        throw std::invalid_argument("matmul: dimension mismatch " + std::to_string(a.rows) + "x" +
                                    std::to_string(a.cols) + " * " + std::to_string(b.rows) + "x" +
                                    std::to_string(b.cols));
    Matrix c(a.rows, b.cols);
    const int n = a.rows, k_dim = a.cols, m = b.cols;
#pragma omp parallel for schedule(static) if (static_cast<long>(n) * k_dim * m > 64 * 1024)
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < m; ++j) {
            double s = 0.0;
            for (int k = 0; k < k_dim; ++k) s += a(i, k) * b(k, j);
            c(i, j) = s;
        }
    }
    return c;
}

Matrix transpose(const Matrix& a) {
    Matrix t(a.cols, a.rows);
    for (int i = 0; i < a.rows; ++i)
        for (int j = 0; j < a.cols; ++j) t(j, i) = a(i, j);
    return t;
}

Matrix identity(int n) {
    Matrix m(n, n);
    for (int i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

double frobenius_sq(const Matrix& a) {
    double s = 0.0;
    for (double x : a.data) s += x * x;
    return s;
}

double Rng::normal() {
    // Box-Muller, cosine branch only. Guard u1 away from 0.
    double u1 = uniform();
    double u2 = uniform();
    if (u1 < 0x1.0p-53) u1 = 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

Rng Rng::substream(std::uint64_t tag) const {
    // splitmix64 of (seed, tag) decorrelates the derived stream.
    std::uint64_t z = seed_ + 0x9E3779B97F4A7C15ull * (tag + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    z = z ^ (z >> 31);
    return Rng(z);
}

std::string Rng::state_string() const {
    std::ostringstream os;
    os << seed_ << ' ' << engine_;
    return os.str();
}

void Rng::restore_state(const std::string& s) {
    std::istringstream is(s);
    is >> seed_ >> engine_;
    if (is.fail()) throw std::runtime_error("Rng: corrupt state string");
}

void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state,
               double lr) {
    if (params.size() != grads.size() || params.size() != state.m.size() ||
        params.size() != state.v.size())
        throw std::invalid_argument("adam_step: params/grads/state length mismatch");
    if (!(lr > 0.0)) throw std::invalid_argument("adam_step: lr must be > 0");
    for (std::size_t i = 0; i < grads.size(); ++i)
        if (!std::isfinite(grads[i]))
            throw std::runtime_error("adam_step: non-finite gradient at parameter index " +
                                     std::to_string(i));

    state.t += 1;
    const double b1 = state.beta1, b2 = state.beta2;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(state.t));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(state.t));
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double g = grads[i];
        state.m[i] = b1 * state.m[i] + (1.0 - b1) * g;
        state.v[i] = b2 * state.v[i] + (1.0 - b2) * g * g;
        const double mhat = state.m[i] / c1;
        const double vhat = state.v[i] / c2;
        params[i] -= lr * mhat / (std::sqrt(vhat) + state.eps);
    }
}

}  // namespace mhpinn
