#include "mhpinn/reference.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace mhpinn {

namespace {

void validate_grid(const FDGrid& g) {
    if (g.n_x < 3) throw std::invalid_argument("solve_fd: need n_x >= 3");
    if (!(g.nu > 0.0)) throw std::invalid_argument("solve_fd: need nu > 0");
    if (!(g.t_final >= 0.0)) throw std::invalid_argument("solve_fd: need t_final >= 0");
    if (!(g.cfl > 0.0) || g.cfl > 1.0)
        throw std::invalid_argument("solve_fd: need cfl in (0,1]");
}

// One right-hand-side evaluation du/dt. Linear reconstruction with central
// slopes in the interior, one-sided at the edge cells; local Lax-Friedrichs
// (Rusanov) flux for u^2/2; central second difference for diffusion.
void rhs(const std::vector<double>& u, double dx, double nu, std::vector<double>& slope,
         std::vector<double>& flux, std::vector<double>& out) {
    const int n = static_cast<int>(u.size());
    slope.resize(n);
    slope[0] = u[1] - u[0];
    slope[n - 1] = u[n - 1] - u[n - 2];
    for (int i = 1; i < n - 1; ++i) slope[i] = 0.5 * (u[i + 1] - u[i - 1]);

    flux.resize(n - 1);
    for (int i = 0; i < n - 1; ++i) {
        const double ul = u[i] + 0.5 * slope[i];
        const double ur = u[i + 1] - 0.5 * slope[i + 1];
        const double alpha = std::max(std::abs(ul), std::abs(ur));
        flux[i] = 0.25 * (ul * ul + ur * ur) - 0.5 * alpha * (ur - ul);
    }

    out.resize(n);
    out[0] = out[n - 1] = 0.0;  // Dirichlet nodes, held fixed
    const double idx = 1.0 / dx, idx2 = 1.0 / (dx * dx);
    for (int i = 1; i < n - 1; ++i)
        out[i] = -(flux[i] - flux[i - 1]) * idx + nu * (u[i + 1] - 2.0 * u[i] + u[i - 1]) * idx2;
}

}  // namespace

double stable_dt(const ICFunction& ic, const FDGrid& grid) {
    validate_grid(grid);
    const double dx = grid.dx();
    double umax = 0.0;
    for (int i = 0; i < grid.n_x; ++i)
        umax = std::max(umax, std::abs(ic.value(-5.0 + dx * i)));
    // Margin over the IC range: the scheme keeps |u| near the IC bound but
    // transient overshoots of a few percent are possible.
    umax = 1.1 * umax + 1e-12;
    return grid.cfl / (umax / dx + 2.0 * grid.nu / (dx * dx));
}

std::vector<FieldSnapshot> solve_fd(const ICFunction& ic, const FDGrid& grid) {
    validate_grid(grid);
    const double dt_max = stable_dt(ic, grid);
    double dt_base = grid.dt;
    if (dt_base == 0.0) {
        dt_base = dt_max;
    } else if (dt_base > dt_max || dt_base <= 0.0) {
        throw std::invalid_argument("solve_fd: dt " + std::to_string(grid.dt) +
                                    " violates the stability bound " + std::to_string(dt_max));
    }

    std::vector<double> times = grid.snapshot_times;
    if (times.empty()) times = {0.0, grid.t_final};
    std::sort(times.begin(), times.end());
    for (double t : times)
        if (t < 0.0 || t > grid.t_final + 1e-12)
            throw std::invalid_argument("solve_fd: snapshot time " + std::to_string(t) +
                                        " outside [0, t_final]");

    const int n = grid.n_x;
    const double dx = grid.dx();
    std::vector<double> u(n);
    for (int i = 0; i < n; ++i) u[i] = ic.value(-5.0 + dx * i);
    const double left = u[0], right = u[n - 1];

    std::vector<FieldSnapshot> snaps;
    std::vector<double> slope, flux, du;
    double t_now = 0.0;
    for (double t_want : times) {
        if (t_want > t_now) {
            const long steps = std::max(1l, static_cast<long>(std::ceil((t_want - t_now) / dt_base - 1e-12)));
            const double dt = (t_want - t_now) / static_cast<double>(steps);
            for (long s = 0; s < steps; ++s) {
                rhs(u, dx, grid.nu, slope, flux, du);
                for (int i = 1; i < n - 1; ++i) u[i] += dt * du[i];
                u[0] = left;
                u[n - 1] = right;
            }
            t_now = t_want;
        }
        for (double v : u)
            if (!std::isfinite(v))
                throw std::runtime_error("solve_fd: non-finite field at t = " +
                                         std::to_string(t_want));
        snaps.push_back({t_want, u});
    }
    return snaps;
}

std::array<double, 3> exact_kink(double x, double nu) {
    if (!(nu > 0.0)) throw std::invalid_argument("exact_kink: need nu > 0");
    const double th = std::tanh(x);
    const double sech2 = 1.0 - th * th;
    return {-2.0 * nu * th, -2.0 * nu * sech2, 4.0 * nu * sech2 * th};
}

ErrorMetrics compare(const std::vector<FieldSnapshot>& test,
                     const std::vector<FieldSnapshot>& ref) {
    if (test.empty() || ref.empty()) throw std::invalid_argument("compare: empty snapshot list");
    for (const auto& s : test)
        if (s.u.size() != ref.front().u.size())
            throw std::invalid_argument("compare: spatial grids differ");
    for (std::size_t i = 1; i < ref.size(); ++i)
        if (ref[i].t < ref[i - 1].t) throw std::invalid_argument("compare: ref times not sorted");

    double diff2 = 0.0, ref2 = 0.0, dmax = 0.0, rmax = 0.0;
    std::size_t used = 0;
    std::vector<double> interp(ref.front().u.size());
    for (const auto& s : test) {
        // Locate s.t within the reference times (small tolerance at the ends).
        if (s.t < ref.front().t - 1e-9 || s.t > ref.back().t + 1e-9) continue;
        std::size_t hi = 0;
        while (hi < ref.size() && ref[hi].t < s.t) ++hi;
        if (hi == 0) {
            interp = ref.front().u;
        } else if (hi == ref.size()) {
            interp = ref.back().u;
        } else {
            const auto& a = ref[hi - 1];
            const auto& b = ref[hi];
            const double w = (b.t > a.t) ? (s.t - a.t) / (b.t - a.t) : 0.0;
            for (std::size_t i = 0; i < interp.size(); ++i)
                interp[i] = (1.0 - w) * a.u[i] + w * b.u[i];
        }
        for (std::size_t i = 0; i < interp.size(); ++i) {
            const double d = s.u[i] - interp[i];
            diff2 += d * d;
            ref2 += interp[i] * interp[i];
            dmax = std::max(dmax, std::abs(d));
            rmax = std::max(rmax, std::abs(interp[i]));
        }
        ++used;
    }
    if (used == 0) throw std::invalid_argument("compare: no overlapping snapshot times");
    ErrorMetrics m;
    m.rel_l2 = (ref2 > 0.0) ? std::sqrt(diff2 / ref2) : std::sqrt(diff2);
    m.rel_linf = (rmax > 0.0) ? dmax / rmax : dmax;
    return m;
}

}  // namespace mhpinn
