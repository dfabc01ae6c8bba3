#pragma once

#include <span>
#include <vector>

#include "mhpinn/model.hpp"
#include "mhpinn/parallel.hpp"
#include "mhpinn/sampling.hpp"

namespace mhpinn {

/// Residual down-weighting Lambda(s) = 1 + a*|s|^b applied to the squared
/// residual; s is the local du/dx. a=0 disables it.
struct ResidualWeighting {
    double a = 1.0;
    double b = 2.0;
};

struct LossConfig {
    double lambda_ortho = 1e-3;
    ResidualWeighting weighting;
};

struct LossBreakdown {
    double total = 0.0;
    double pde_term = 0.0;    // mean over heads and points of R^2 / Lambda
    double ortho_term = 0.0;  // raw penalty, before the lambda_ortho factor
};

/// R = u_t + u u_x - nu u_xx.
double residual(const SolutionJet& u, double nu);

double lambda_weight(double s, const ResidualWeighting& w);

/// |W W^T - I|_F^2 + |W^T W - I|_F^2.
double ortho_penalty(const Matrix& w);

/// d(ortho_penalty)/dW = 4[(W W^T - I)W + W(W^T W - I)].
Matrix ortho_penalty_grad(const Matrix& w);

/// Precomputed per-batch tables: IC values/derivatives per (head, point) and
/// the time envelope per point. Constant across epochs for a fixed batch.
struct LossWorkspace {
    std::vector<double> ic_v, ic_d1, ic_d2;  // [head * M + m]
    std::vector<double> env, envp;           // 1 - e^{-t}, e^{-t} per point

    void prepare(const CollocationBatch& batch, const std::vector<ICFunction>& ics);
    bool matches(const CollocationBatch& batch, const std::vector<ICFunction>& ics) const;

  private:
    const double* batch_key_ = nullptr;
    std::size_t batch_size_ = 0;
    std::size_t n_heads_ = 0;
};

/// Loss of the multihead residual objective and its full parameter gradient
/// (packed layout: body layers, then head matrix). Lambda is treated as a
/// constant per (point, head) per call: gradients do not flow through it.
/// Throws on a non-finite loss, naming the first offending (head, point) in
/// scan order.
LossBreakdown total_loss(const ModelParams& p, const CollocationBatch& batch,
                         const std::vector<ICFunction>& ics, const LossConfig& cfg,
                         std::span<double> grad, const par::Execution& ex = {},
                         const LossWorkspace* ws = nullptr);

/// Loss only, no gradient.
LossBreakdown loss_value(const ModelParams& p, const CollocationBatch& batch,
                         const std::vector<ICFunction>& ics, const LossConfig& cfg,
                         const par::Execution& ex = {}, const LossWorkspace* ws = nullptr);

/// Lambda values at the current params, [m * n_heads + i]. Together with
/// loss_value_frozen this exposes the exact function whose gradient
/// total_loss computes (Lambda held fixed), for derivative checks.
std::vector<double> lambda_table(const ModelParams& p, const CollocationBatch& batch,
                                 const std::vector<ICFunction>& ics, const LossConfig& cfg);

LossBreakdown loss_value_frozen(const ModelParams& p, const CollocationBatch& batch,
                                const std::vector<ICFunction>& ics, const LossConfig& cfg,
                                std::span<const double> lambda);

}  // namespace mhpinn
