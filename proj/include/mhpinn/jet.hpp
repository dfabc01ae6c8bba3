#pragma once

#include <span>
#include <vector>

#include "mhpinn/numerics.hpp"

namespace mhpinn {

/// Value plus the input derivatives (d/dx, d/dt, d2/dx2) propagated exactly
/// through the forward pass. The four doubles are contiguous so channel-wide
/// updates vectorize.
struct Jet {
    double v = 0.0;
    double vx = 0.0;
    double vt = 0.0;
    double vxx = 0.0;

    static Jet input_x(double x) { return {x, 1.0, 0.0, 0.0}; }
    static Jet input_t(double t) { return {t, 0.0, 1.0, 0.0}; }
    static Jet constant(double c) { return {c, 0.0, 0.0, 0.0}; }
};

struct DenseLayer {
    Matrix w;
    std::vector<double> b;
};

/// Feed-forward body: affine layers with tanh after every layer except the
/// last, which stays linear and emits the latent outputs.
struct Body {
    std::vector<DenseLayer> layers;

    int input_dim() const { return layers.empty() ? 0 : layers.front().w.cols; }
    int output_dim() const { return layers.empty() ? 0 : layers.back().w.rows; }
    std::size_t param_count() const;
};

/// All four jet channels map linearly; the bias shifts only the value channel.
std::vector<Jet> affine_jet(const Matrix& w, std::span<const double> b, std::span<const Jet> in);

/// y = tanh(v) with exact first/second-order chain rule on the carried
/// channels: yx = (1-y^2) vx, yt = (1-y^2) vt,
/// yxx = (1-y^2) vxx - 2 y (1-y^2) vx^2.
Jet tanh_jet(const Jet& z);

/// Per-layer jets stored by the forward pass and consumed by the reverse one.
/// Buffers are reused across calls; capacity persists.
struct Tape {
    std::vector<std::vector<Jet>> inputs;  // inputs[l]: input jets of affine layer l
    std::vector<std::vector<Jet>> preact;  // preact[l]: pre-activation jets of tanh layer l
};

/// Forward pass through the body; returns the latent jets in `out` and fills
/// the tape. Throws std::runtime_error naming the layer on a non-finite
/// intermediate.
void forward_with_tape(const Body& body, std::span<const Jet> in, Tape& tape,
                       std::vector<Jet>& out);

std::vector<Jet> forward_with_tape(const Body& body, std::span<const Jet> in, Tape& tape);

/// Reverse pass: accumulates d<adjoints, outputs>/dtheta into `grad`
/// (layout: per layer, row-major weights then bias). `adjoints[j]` carries the
/// four per-channel adjoints of latent output j.
void backward(const Body& body, const Tape& tape, std::span<const Jet> adjoints,
              std::span<double> grad);

}  // namespace mhpinn
