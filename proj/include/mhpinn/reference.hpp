#pragma once

#include <array>
#include <vector>

#include "mhpinn/model.hpp"

namespace mhpinn {

/// Finite-difference setup on [-5,5]: n_x nodes including the endpoints.
/// dt = 0 picks the largest stable step (with the cfl safety factor) from
/// the convection + diffusion bound; an explicit dt above that bound is
/// rejected at solve entry.
struct FDGrid {
    int n_x = 256;
    double dt = 0.0;
    double t_final = 5.0;
    double nu = 0.1;
    double cfl = 0.8;
    std::vector<double> snapshot_times;  // empty: {0, t_final}

    double dx() const { return 10.0 / (n_x - 1); }
};

struct FieldSnapshot {
    double t = 0.0;
    std::vector<double> u;
};

/// Largest stable explicit step for this IC and grid.
double stable_dt(const ICFunction& ic, const FDGrid& grid);

/// Burgers solve: conservative convection with linear reconstruction and a
/// local Lax-Friedrichs interface flux, second-order central diffusion,
/// explicit Euler in time. Boundary nodes are held at the IC endpoint
/// values. Steps land exactly on each requested snapshot time.
std::vector<FieldSnapshot> solve_fd(const ICFunction& ic, const FDGrid& grid);

/// Stationary solution u = -2 nu tanh(x): (u, du/dx, d2u/dx2).
std::array<double, 3> exact_kink(double x, double nu);

struct ErrorMetrics {
    double rel_l2 = 0.0;
    double rel_linf = 0.0;
};

/// Space-time error of `test` against `ref`, both on the same x grid; ref is
/// interpolated linearly in time to each test snapshot. Relative L2 is over
/// the pooled space-time values; relative Linf is max|diff| / max|ref|.
ErrorMetrics compare(const std::vector<FieldSnapshot>& test,
                     const std::vector<FieldSnapshot>& ref);

}  // namespace mhpinn
