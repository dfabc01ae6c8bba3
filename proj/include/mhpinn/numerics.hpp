#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace mhpinn {

/// Dense row-major matrix of doubles.
struct Matrix {
    int rows = 0;
    int cols = 0;
    std::vector<double> data;  // length rows*cols, row-major

    Matrix() = default;
    Matrix(int r, int c)
        : rows(r), cols(c), data(static_cast<std::size_t>(r) * static_cast<std::size_t>(c), 0.0) {}

    double& operator()(int r, int c) { return data[static_cast<std::size_t>(r) * cols + c]; }
    double operator()(int r, int c) const { return data[static_cast<std::size_t>(r) * cols + c]; }
};

// Standard product with a fixed (ascending-k) summation order per entry,
// so results do not depend on the thread count.
Matrix matmul(const Matrix& a, const Matrix& b);

Matrix transpose(const Matrix& a);
Matrix identity(int n);

/// Sum of squared entries.
double frobenius_sq(const Matrix& a);

/// Seeded deterministic RNG. Same seed gives a bit-identical draw sequence;
/// substreams derived from (seed, tag) are independent per purpose.
/// Raw draws come from mt19937_64; uniform/normal conversion is done here
/// rather than with <random> distributions, whose output is
/// implementation-defined.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform on [0,1) with 53-bit resolution.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Standard normal via Box-Muller; consumes two uniforms per call.
    double normal();

    /// Independent stream for a given purpose tag.
    Rng substream(std::uint64_t tag) const;

    std::uint64_t seed() const { return seed_; }

    std::string state_string() const;
    void restore_state(const std::string& s);

  private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
};

struct AdamState {
    std::vector<double> m;  // first moment
    std::vector<double> v;  // second moment
    long t = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;

    AdamState() = default;
    explicit AdamState(std::size_t n) : m(n, 0.0), v(n, 0.0) {}
};

/// Bias-corrected Adam update in place; increments state.t.
/// Throws std::runtime_error naming the parameter index on a non-finite
/// gradient entry.
void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state,
               double lr);

}  // namespace mhpinn
