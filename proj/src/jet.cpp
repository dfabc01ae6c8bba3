#include "mhpinn/jet.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace mhpinn {

std::size_t Body::param_count() const {
    std::size_t n = 0;
    for (const auto& l : layers) n += l.w.data.size() + l.b.size();
    return n;
}

static void affine_jet_into(const Matrix& w, std::span<const double> b, std::span<const Jet> in,
                            std::vector<Jet>& out) {
    if (w.cols != static_cast<int>(in.size()))
        throw std::invalid_argument("affine_jet: weight cols " + std::to_string(w.cols) +
                                    " != input length " + std::to_string(in.size()));
    if (!b.empty() && static_cast<int>(b.size()) != w.rows)
        throw std::invalid_argument("affine_jet: bias length mismatch");
    out.resize(w.rows);
    for (int o = 0; o < w.rows; ++o) {
        const double* wrow = &w.data[static_cast<std::size_t>(o) * w.cols];
        Jet acc = Jet::constant(b.empty() ? 0.0 : b[o]);
        for (int i = 0; i < w.cols; ++i) {
            const double wv = wrow[i];
            acc.v += wv * in[i].v;
            acc.vx += wv * in[i].vx;
            acc.vt += wv * in[i].vt;
            acc.vxx += wv * in[i].vxx;
        }
        out[o] = acc;
    }
}

std::vector<Jet> affine_jet(const Matrix& w, std::span<const double> b, std::span<const Jet> in) {
    std::vector<Jet> out;
    affine_jet_into(w, b, in, out);
    return out;
}

Jet tanh_jet(const Jet& z) {
    const double y = std::tanh(z.v);
    const double s = 1.0 - y * y;
    Jet r;
    r.v = y;
    r.vx = s * z.vx;
    r.vt = s * z.vt;
    r.vxx = s * z.vxx - 2.0 * y * s * z.vx * z.vx;
    return r;
}

static bool all_finite(const std::vector<Jet>& js) {
    for (const Jet& j : js)
        if (!(std::isfinite(j.v) && std::isfinite(j.vx) && std::isfinite(j.vt) &&
              std::isfinite(j.vxx)))
            return false;
    return true;
}

void forward_with_tape(const Body& body, std::span<const Jet> in, Tape& tape,
                       std::vector<Jet>& out) {
    const std::size_t nlayers = body.layers.size();
    if (nlayers == 0) throw std::invalid_argument("forward_with_tape: empty body");
    tape.inputs.resize(nlayers);
    tape.preact.resize(nlayers - 1);

    tape.inputs[0].assign(in.begin(), in.end());
    for (std::size_t l = 0; l < nlayers; ++l) {
        const auto& layer = body.layers[l];
        const bool last = (l + 1 == nlayers);
        std::vector<Jet>& z = last ? out : tape.preact[l];
        affine_jet_into(layer.w, layer.b, tape.inputs[l], z);
        if (!all_finite(z))
            throw std::runtime_error("forward_with_tape: non-finite value at layer " +
                                     std::to_string(l));
        if (!last) {
            auto& act = tape.inputs[l + 1];
            act.resize(z.size());
            for (std::size_t i = 0; i < z.size(); ++i) act[i] = tanh_jet(z[i]);
        }
    }
}

std::vector<Jet> forward_with_tape(const Body& body, std::span<const Jet> in, Tape& tape) {
    std::vector<Jet> out;
    forward_with_tape(body, in, tape, out);
    return out;
}

void backward(const Body& body, const Tape& tape, std::span<const Jet> adjoints,
              std::span<double> grad) {
    const std::size_t nlayers = body.layers.size();
    if (tape.inputs.size() != nlayers)
        throw std::invalid_argument("backward: tape does not match body layer count");
    if (adjoints.size() != static_cast<std::size_t>(body.output_dim()))
        throw std::invalid_argument("backward: adjoint count != latent outputs");
    if (grad.size() != body.param_count())
        throw std::invalid_argument("backward: gradient buffer size mismatch");

    // Offsets of each layer's weight block in the flat gradient.
    std::vector<std::size_t> offset(nlayers);
    std::size_t off = 0;
    for (std::size_t l = 0; l < nlayers; ++l) {
        offset[l] = off;
        off += body.layers[l].w.data.size() + body.layers[l].b.size();
    }

    std::vector<Jet> cur(adjoints.begin(), adjoints.end());
    std::vector<Jet> prev;
    for (std::size_t li = nlayers; li-- > 0;) {
        const auto& layer = body.layers[li];
        const auto& a_in = tape.inputs[li];
        if (static_cast<int>(a_in.size()) != layer.w.cols)
            throw std::invalid_argument("backward: tape input size mismatch at layer " +
                                        std::to_string(li));
        double* wg = grad.data() + offset[li];
        double* bg = wg + layer.w.data.size();
        for (int o = 0; o < layer.w.rows; ++o) {
            const Jet& co = cur[o];
            double* wgrow = wg + static_cast<std::size_t>(o) * layer.w.cols;
            for (int i = 0; i < layer.w.cols; ++i) {
                const Jet& ai = a_in[i];
                wgrow[i] += co.v * ai.v + co.vx * ai.vx + co.vt * ai.vt + co.vxx * ai.vxx;
            }
            bg[o] += co.v;
        }
        if (li == 0) break;

        // Adjoint of z = W a + b with respect to a, channel by channel.
        prev.assign(layer.w.cols, Jet{});
        for (int o = 0; o < layer.w.rows; ++o) {
            const double* wrow = &layer.w.data[static_cast<std::size_t>(o) * layer.w.cols];
            const Jet& co = cur[o];
            for (int i = 0; i < layer.w.cols; ++i) {
                const double wv = wrow[i];
                prev[i].v += wv * co.v;
                prev[i].vx += wv * co.vx;
                prev[i].vt += wv * co.vt;
                prev[i].vxx += wv * co.vxx;
            }
        }

        // Adjoint of the tanh jet map feeding layer li. The stored activation
        // value is tanh of the stored pre-activation.
        const auto& z = tape.preact[li - 1];
        const auto& y = tape.inputs[li];
        cur.assign(z.size(), Jet{});
        for (std::size_t i = 0; i < z.size(); ++i) {
            const double yv = y[i].v;
            const double s = 1.0 - yv * yv;
            const Jet& up = prev[i];
            const Jet& zi = z[i];
            Jet& dn = cur[i];
            dn.v = up.v * s - 2.0 * yv * s * (up.vx * zi.vx + up.vt * zi.vt + up.vxx * zi.vxx) -
                   2.0 * s * (1.0 - 3.0 * yv * yv) * up.vxx * zi.vx * zi.vx;
            dn.vx = up.vx * s - 4.0 * yv * s * up.vxx * zi.vx;
            dn.vt = up.vt * s;
            dn.vxx = up.vxx * s;
        }
    }
}

}  // namespace mhpinn
