#include "mhpinn/physics.hpp"

#include <atomic>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace mhpinn {

double residual(const SolutionJet& u, double nu) { return u.u.vt + u.u.v * u.u.vx - nu * u.u.vxx; }

double lambda_weight(double s, const ResidualWeighting& w) {
    if (w.a == 0.0) return 1.0;
    return 1.0 + w.a * std::pow(std::abs(s), w.b);
}

double ortho_penalty(const Matrix& w) {
    Matrix wwt = matmul(w, transpose(w));
    for (int i = 0; i < wwt.rows; ++i) wwt(i, i) -= 1.0;
    Matrix wtw = matmul(transpose(w), w);
    for (int i = 0; i < wtw.rows; ++i) wtw(i, i) -= 1.0;
    return frobenius_sq(wwt) + frobenius_sq(wtw);
}

Matrix ortho_penalty_grad(const Matrix& w) {
    Matrix wwt = matmul(w, transpose(w));
    for (int i = 0; i < wwt.rows; ++i) wwt(i, i) -= 1.0;
    Matrix wtw = matmul(transpose(w), w);
    for (int i = 0; i < wtw.rows; ++i) wtw(i, i) -= 1.0;
    Matrix g1 = matmul(wwt, w);
    Matrix g2 = matmul(w, wtw);
    Matrix g(w.rows, w.cols);
    for (std::size_t i = 0; i < g.data.size(); ++i) g.data[i] = 4.0 * (g1.data[i] + g2.data[i]);
    return g;
}

void LossWorkspace::prepare(const CollocationBatch& batch, const std::vector<ICFunction>& ics) {
    const std::size_t m = batch.size();
    const std::size_t h = ics.size();
    ic_v.resize(h * m);
    ic_d1.resize(h * m);
    ic_d2.resize(h * m);
    env.resize(m);
    envp.resize(m);
    for (std::size_t i = 0; i < m; ++i) {
        envp[i] = std::exp(-batch.t[i]);
        env[i] = 1.0 - envp[i];
    }
    for (std::size_t k = 0; k < h; ++k)
        for (std::size_t i = 0; i < m; ++i) {
            const double x = batch.x[i];
            ic_v[k * m + i] = ics[k].value(x);
            ic_d1[k * m + i] = ics[k].d1(x);
            ic_d2[k * m + i] = ics[k].d2(x);
        }
    batch_key_ = batch.x.data();
    batch_size_ = m;
    n_heads_ = h;
}

bool LossWorkspace::matches(const CollocationBatch& batch,
                            const std::vector<ICFunction>& ics) const {
    return batch_key_ == batch.x.data() && batch_size_ == batch.size() &&
           n_heads_ == ics.size();
}

namespace {

void validate(const CollocationBatch& batch, const std::vector<ICFunction>& ics,
              const ModelParams& p, const LossConfig& cfg) {
    if (batch.size() == 0) throw std::invalid_argument("loss: empty batch");
    if (static_cast<int>(ics.size()) != p.head.rows)
        throw std::invalid_argument("loss: " + std::to_string(ics.size()) +
                                    " initial conditions for " + std::to_string(p.head.rows) +
                                    " heads");
    if (cfg.weighting.a < 0.0 || cfg.weighting.b <= 0.0)
        throw std::invalid_argument("loss: weighting needs a >= 0 and b > 0");
    if (cfg.lambda_ortho < 0.0) throw std::invalid_argument("loss: lambda_ortho must be >= 0");
}

struct PointScratch {
    Tape tape;
    std::vector<Jet> lat;
    std::vector<Jet> latbar;
};

// Residual and weight of head k at point m, given that point's latent jets.
struct HeadEval {
    SolutionJet u;
    double r;
    double lam;
};

inline HeadEval eval_head(const ModelParams& p, const LossWorkspace& ws, const LossConfig& cfg,
                          std::size_t m, std::size_t M, int k, double nu,
                          std::span<const Jet> lat) {
    const double* wrow = &p.head.data[static_cast<std::size_t>(k) * p.head.cols];
    Jet g{};
    for (int j = 0; j < p.head.cols; ++j) {
        const double w = wrow[j];
        g.v += w * lat[j].v;
        g.vx += w * lat[j].vx;
        g.vt += w * lat[j].vt;
        g.vxx += w * lat[j].vxx;
    }
    const double env = ws.env[m], envp = ws.envp[m];
    HeadEval e;
    e.u.u.v = ws.ic_v[k * M + m] + env * g.v;
    e.u.u.vx = ws.ic_d1[k * M + m] + env * g.vx;
    e.u.u.vt = envp * g.v + env * g.vt;
    e.u.u.vxx = ws.ic_d2[k * M + m] + env * g.vxx;
    e.r = residual(e.u, nu);
    e.lam = lambda_weight(e.u.u.vx, cfg.weighting);
    return e;
}

// Serial pass used on the error path: locates the first non-finite (head,
// point) contribution in scan order and throws a precise error.
[[noreturn]] void throw_first_nonfinite(const ModelParams& p, const CollocationBatch& batch,
                                        const std::vector<ICFunction>& ics, const LossConfig& cfg,
                                        const LossWorkspace& ws) {
    const std::size_t M = batch.size();
    PointScratch s;
    for (std::size_t m = 0; m < M; ++m) {
        try {
            body_jets(p, batch.x[m], batch.t[m], batch.nu[m], s.tape, s.lat);
        } catch (const std::exception& e) {
            throw std::runtime_error("non-finite loss at point " + std::to_string(m) + ": " +
                                     e.what());
        }
        for (int k = 0; k < p.head.rows; ++k) {
            const HeadEval e = eval_head(p, ws, cfg, m, M, k, batch.nu[m], s.lat);
            if (!std::isfinite(e.r * e.r / e.lam))
                throw std::runtime_error("non-finite loss at head " + std::to_string(k) +
                                         ", point " + std::to_string(m));
        }
    }
    throw std::runtime_error("non-finite loss (gradient overflow)");
}

LossBreakdown loss_impl(const ModelParams& p, const CollocationBatch& batch,
                        const std::vector<ICFunction>& ics, const LossConfig& cfg,
                        std::span<double> grad, bool want_grad, const par::Execution& ex,
                        const LossWorkspace* ws, std::span<const double> frozen_lambda) {
    validate(batch, ics, p, cfg);
    LossWorkspace local;
    if (ws == nullptr || !ws->matches(batch, ics)) {
        local.prepare(batch, ics);
        ws = &local;
    }
    const std::size_t M = batch.size();
    const int n_heads = p.head.rows;
    const int n_b = p.head.cols;
    const std::size_t nbody = body_param_count(p.arch);
    const std::size_t nparams = param_count(p.arch);
    if (want_grad && grad.size() != nparams)
        throw std::invalid_argument("loss: gradient buffer has wrong length");
    if (!frozen_lambda.empty() && frozen_lambda.size() != M * n_heads)
        throw std::invalid_argument("loss: frozen lambda table has wrong length");

    // Reduction buffer: [body grads | head grads | pde sum].
    const std::size_t width = want_grad ? nparams + 1 : 1;
    const std::size_t pde_slot = width - 1;
    std::vector<double> red(width, 0.0);
    std::atomic<bool> failed{false};

    par::blocked_reduce(M, width, red.data(), ex, [&](std::size_t m, double* acc) {
        static thread_local PointScratch s;
        try {
            body_jets(p, batch.x[m], batch.t[m], batch.nu[m], s.tape, s.lat);
            s.latbar.assign(n_b, Jet{});
            const double nu = batch.nu[m];
            for (int k = 0; k < n_heads; ++k) {
                HeadEval e = eval_head(p, *ws, cfg, m, M, k, nu, s.lat);
                if (!frozen_lambda.empty()) e.lam = frozen_lambda[m * n_heads + k];
                acc[pde_slot] += e.r * e.r / e.lam;
                if (!want_grad) continue;
                const double d = 2.0 * e.r / e.lam;
                const double env = ws->env[m], envp = ws->envp[m];
                Jet gbar;
                gbar.v = d * (env * e.u.u.vx + envp);
                gbar.vx = d * env * e.u.u.v;
                gbar.vt = d * env;
                gbar.vxx = -d * env * nu;
                const double* wrow = &p.head.data[static_cast<std::size_t>(k) * n_b];
                double* hg = acc + nbody + static_cast<std::size_t>(k) * n_b;
                for (int j = 0; j < n_b; ++j) {
                    const Jet& h = s.lat[j];
                    hg[j] += gbar.v * h.v + gbar.vx * h.vx + gbar.vt * h.vt + gbar.vxx * h.vxx;
                    Jet& hb = s.latbar[j];
                    const double w = wrow[j];
                    hb.v += w * gbar.v;
                    hb.vx += w * gbar.vx;
                    hb.vt += w * gbar.vt;
                    hb.vxx += w * gbar.vxx;
                }
            }
            if (want_grad) backward(p.body, s.tape, s.latbar, {acc, nbody});
        } catch (...) {
            // Exceptions must not escape the worker loop; poison the sum and
            // let the serial rescan below reproduce the error precisely.
            failed.store(true, std::memory_order_relaxed);
            acc[pde_slot] = std::numeric_limits<double>::quiet_NaN();
        }
    });

    if (failed.load(std::memory_order_relaxed) || !std::isfinite(red[pde_slot]))
        throw_first_nonfinite(p, batch, ics, cfg, *ws);

    const double scale = 1.0 / (static_cast<double>(n_heads) * static_cast<double>(M));
    LossBreakdown out;
    out.pde_term = red[pde_slot] * scale;
    out.ortho_term = ortho_penalty(p.head);
    out.total = out.pde_term + cfg.lambda_ortho * out.ortho_term;
    if (!std::isfinite(out.total)) throw_first_nonfinite(p, batch, ics, cfg, *ws);

    if (want_grad) {
        for (std::size_t i = 0; i < nparams; ++i) grad[i] = red[i] * scale;
        if (cfg.lambda_ortho != 0.0) {
            const Matrix og = ortho_penalty_grad(p.head);
            for (std::size_t i = 0; i < og.data.size(); ++i)
                grad[nbody + i] += cfg.lambda_ortho * og.data[i];
        }
    }
    return out;
}

}  // namespace

LossBreakdown total_loss(const ModelParams& p, const CollocationBatch& batch,
                         const std::vector<ICFunction>& ics, const LossConfig& cfg,
                         std::span<double> grad, const par::Execution& ex,
                         const LossWorkspace* ws) {
    return loss_impl(p, batch, ics, cfg, grad, true, ex, ws, {});
}

LossBreakdown loss_value(const ModelParams& p, const CollocationBatch& batch,
                         const std::vector<ICFunction>& ics, const LossConfig& cfg,
                         const par::Execution& ex, const LossWorkspace* ws) {
    return loss_impl(p, batch, ics, cfg, {}, false, ex, ws, {});
}

std::vector<double> lambda_table(const ModelParams& p, const CollocationBatch& batch,
                                 const std::vector<ICFunction>& ics, const LossConfig& cfg) {
    validate(batch, ics, p, cfg);
    LossWorkspace ws;
    ws.prepare(batch, ics);
    const std::size_t M = batch.size();
    std::vector<double> lam(M * p.head.rows);
    PointScratch s;
    for (std::size_t m = 0; m < M; ++m) {
        body_jets(p, batch.x[m], batch.t[m], batch.nu[m], s.tape, s.lat);
        for (int k = 0; k < p.head.rows; ++k)
            lam[m * p.head.rows + k] =
                eval_head(p, ws, cfg, m, M, k, batch.nu[m], s.lat).lam;
    }
    return lam;
}

LossBreakdown loss_value_frozen(const ModelParams& p, const CollocationBatch& batch,
                                const std::vector<ICFunction>& ics, const LossConfig& cfg,
                                std::span<const double> lambda) {
    return loss_impl(p, batch, ics, cfg, {}, false, par::Execution::serial(), nullptr, lambda);
}

}  // namespace mhpinn
