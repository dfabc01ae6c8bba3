#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mhpinn/jet.hpp"
#include "mhpinn/numerics.hpp"

namespace mhpinn {

/// Analytic initial condition with exact first and second spatial
/// derivatives. The fourier and polynomial families vanish at x = +-5 by
/// construction; kink is the steady Burgers profile -2 nu tanh(x), kept as an
/// analytic oracle (it does not vanish at the edges).
struct ICFunction {
    enum class Family { fourier, polynomial, kink };

    Family family = Family::polynomial;
    std::vector<double> sin_coef;   // fourier: a_k, k = 1..n
    std::vector<double> cos_coef;   // fourier: b_k, k = 1..n
    std::vector<double> poly_coef;  // polynomial: c_0..c_K
    double kink_nu = 0.0;
    std::uint64_t seed = 0;  // ensemble seed this IC was drawn from

    double value(double x) const;
    double d1(double x) const;
    double d2(double x) const;

    static ICFunction fourier(std::vector<double> a, std::vector<double> b,
                              std::uint64_t seed = 0);
    static ICFunction polynomial(std::vector<double> c, std::uint64_t seed = 0);
    static ICFunction kink(double nu);

    std::string to_json_string() const;
    static ICFunction from_json_string(const std::string& s);

  private:
    // Fourier boundary correction: straight line through (-5, v(-5)) and
    // (5, v(5)) of the raw mode sum, subtracted so the IC vanishes at +-5.
    double line_alpha_ = 0.0;
    double line_beta_ = 0.0;
    void recompute_line();
};

/// Network shape plus the fixed input map. nu enters the body either raw or
/// as log10(nu); with scale_inputs the three coordinates are affinely mapped
/// to [-1,1] using the training domain (x in [-5,5], t in [0,5],
/// nu in [nu_min, nu_max]).
struct Arch {
    int depth = 3;   // hidden tanh layers
    int width = 32;  // hidden width
    int n_b = 8;     // latent outputs
    int n_heads = 4; // linear heads == number of training ICs
    bool nu_log_input = true;
    bool scale_inputs = true;
    double nu_min = 1e-2;
    double nu_max = 1.0;
};

/// Trainable state: the body layers and the head matrix W (n_heads x n_b).
struct ModelParams {
    Arch arch;
    Body body;
    Matrix head;
};

struct SolutionJet {
    Jet u;
};

/// Input jets for (x,t,nu) under the arch's input map; derivative seeds carry
/// the map's chain-rule factors so all jets stay in physical coordinates.
std::array<Jet, 3> input_jets(const Arch& arch, double x, double t, double nu);

/// Body weights from a variance-scaled symmetric distribution (tanh gain);
/// head rows orthonormalized so the orthogonality penalty starts near zero.
ModelParams init_params(const Arch& arch, Rng& rng);

const Matrix& head_matrix(const ModelParams& p);
int latent_dim(const ModelParams& p);

/// Latent jets H_j(x,t,nu) for all j, with tape.
void body_jets(const ModelParams& p, double x, double t, double nu, Tape& tape,
               std::vector<Jet>& out);

/// u = v_i(x) + (1 - e^{-t}) sum_j w_ij H_j, assembled from precomputed
/// latent jets. The time envelope contributes e^{-t} sum_j w_ij H_j to the
/// vt channel; the IC contributes v_i, v_i', v_i'' to v, vx, vxx.
SolutionJet assemble_from_latents(const ModelParams& p, const ICFunction& ic, int head_index,
                                  double x, double t, std::span<const Jet> latents);

SolutionJet assemble_solution(const ModelParams& p, const ICFunction& ic, int head_index,
                              double x, double t, double nu);

/// Plain scalar forward pass (no jets): latent values only. Reference path
/// for finite-difference oracles and for field evaluation.
void body_values(const ModelParams& p, double x, double t, double nu, std::vector<double>& out);

/// Scalar value of the assembled solution via body_values.
double solution_value(const ModelParams& p, const ICFunction& ic, int head_index, double x,
                      double t, double nu);

/// Flat parameter vector: body layers in order (row-major weights, then
/// bias), then the head matrix row-major.
std::size_t param_count(const Arch& arch);
std::size_t body_param_count(const Arch& arch);
std::vector<double> pack(const ModelParams& p);
void unpack(std::span<const double> flat, ModelParams& p);

/// Versioned JSON checkpoint. Optimizer and RNG state ride along so training
/// can resume bit-identically.
struct Checkpoint {
    int version = 1;
    ModelParams params;
    std::uint64_t rng_seed = 0;
    long epoch = 0;
    AdamState adam;         // empty m/v when no optimizer state is stored
    std::string rng_state;  // empty when no stream state is stored
};

std::string checkpoint_to_json(const Checkpoint& c);
Checkpoint checkpoint_from_json(const std::string& s);
void save_checkpoint(const Checkpoint& c, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace mhpinn
