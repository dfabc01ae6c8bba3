#include "mhpinn/model.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <stdexcept>

#include <json.hpp>

namespace mhpinn {

using nlohmann::json;

// ---------------------------------------------------------------------------
// ICFunction

namespace {
constexpr double kHalfBox = 5.0;  // x in [-5, 5]
constexpr double kOmega = std::numbers::pi / (2 * kHalfBox);  // base mode frequency pi/10
}  // namespace

void ICFunction::recompute_line() {
    line_alpha_ = 0.0;
    line_beta_ = 0.0;
    if (family != Family::fourier) return;
    // Sines vanish at both edges; only cosines contribute boundary values.
    double vm = 0.0, vp = 0.0;
    for (std::size_t k = 0; k < cos_coef.size(); ++k) {
        vm += cos_coef[k];
        vp += (k % 2 == 0) ? -cos_coef[k] : cos_coef[k];  // cos((k+1) pi) = (-1)^(k+1)
    }
    line_beta_ = (vp - vm) / (2 * kHalfBox);
    line_alpha_ = (vp + vm) / 2.0;
}

double ICFunction::value(double x) const {
    switch (family) {
        case Family::fourier: {
            double s = 0.0;
            for (std::size_t k = 0; k < sin_coef.size(); ++k)
                s += sin_coef[k] * std::sin((k + 1) * kOmega * (x + kHalfBox));
            for (std::size_t k = 0; k < cos_coef.size(); ++k)
                s += cos_coef[k] * std::cos((k + 1) * kOmega * (x + kHalfBox));
            return s - line_alpha_ - line_beta_ * x;
        }
        case Family::polynomial: {
            const double u = x / kHalfBox;
            double p = 0.0;
            for (std::size_t k = poly_coef.size(); k-- > 0;) p = p * u + poly_coef[k];
            return (1.0 - u * u) * p;
        }
        case Family::kink:
            return -2.0 * kink_nu * std::tanh(x);
    }
    return 0.0;
}

double ICFunction::d1(double x) const {
    switch (family) {
        case Family::fourier: {
            double s = 0.0;
            for (std::size_t k = 0; k < sin_coef.size(); ++k) {
                const double w = (k + 1) * kOmega;
                s += sin_coef[k] * w * std::cos(w * (x + kHalfBox));
            }
            for (std::size_t k = 0; k < cos_coef.size(); ++k) {
                const double w = (k + 1) * kOmega;
                s -= cos_coef[k] * w * std::sin(w * (x + kHalfBox));
            }
            return s - line_beta_;
        }
        case Family::polynomial: {
            const double u = x / kHalfBox;
            double p = 0.0, dp = 0.0;
            for (std::size_t k = poly_coef.size(); k-- > 0;) {
                dp = dp * u + p;
                p = p * u + poly_coef[k];
            }
            return (-2.0 * u * p + (1.0 - u * u) * dp) / kHalfBox;
        }
        case Family::kink: {
            const double th = std::tanh(x);
            return -2.0 * kink_nu * (1.0 - th * th);
        }
    }
    return 0.0;
}

double ICFunction::d2(double x) const {
    switch (family) {
        case Family::fourier: {
            double s = 0.0;
            for (std::size_t k = 0; k < sin_coef.size(); ++k) {
                const double w = (k + 1) * kOmega;
                s -= sin_coef[k] * w * w * std::sin(w * (x + kHalfBox));
            }
            for (std::size_t k = 0; k < cos_coef.size(); ++k) {
                const double w = (k + 1) * kOmega;
                s -= cos_coef[k] * w * w * std::cos(w * (x + kHalfBox));
            }
            return s;
        }
        case Family::polynomial: {
            const double u = x / kHalfBox;
            double p = 0.0, dp = 0.0, d2p = 0.0;
            for (std::size_t k = poly_coef.size(); k-- > 0;) {
                d2p = d2p * u + 2.0 * dp;
                dp = dp * u + p;
                p = p * u + poly_coef[k];
            }
            return (-2.0 * p - 4.0 * u * dp + (1.0 - u * u) * d2p) / (kHalfBox * kHalfBox);
        }
        case Family::kink: {
            const double th = std::tanh(x);
            const double sech2 = 1.0 - th * th;
            return 4.0 * kink_nu * sech2 * th;
        }
    }
    return 0.0;
}

ICFunction ICFunction::fourier(std::vector<double> a, std::vector<double> b, std::uint64_t seed) {
    ICFunction ic;
    ic.family = Family::fourier;
    ic.sin_coef = std::move(a);
    ic.cos_coef = std::move(b);
    ic.seed = seed;
    ic.recompute_line();
    return ic;
}

ICFunction ICFunction::polynomial(std::vector<double> c, std::uint64_t seed) {
    ICFunction ic;
    ic.family = Family::polynomial;
    ic.poly_coef = std::move(c);
    ic.seed = seed;
    return ic;
}

ICFunction ICFunction::kink(double nu) {
    ICFunction ic;
    ic.family = Family::kink;
    ic.kink_nu = nu;
    return ic;
}

// Descriptor shape: {family, coefficients, seed}. Fourier coefficients are an
// object with sin/cos lists; polynomial a plain list; kink an object with nu.
std::string ICFunction::to_json_string() const {
    json j;
    switch (family) {
        case Family::fourier:
            j["family"] = "fourier";
            j["coefficients"] = {{"sin", sin_coef}, {"cos", cos_coef}};
            j["seed"] = seed;
            break;
        case Family::polynomial:
            j["family"] = "polynomial";
            j["coefficients"] = poly_coef;
            j["seed"] = seed;
            break;
        case Family::kink:
            j["family"] = "kink";
            j["coefficients"] = {{"nu", kink_nu}};
            break;
    }
    return j.dump();
}

ICFunction ICFunction::from_json_string(const std::string& s) {
    json j = json::parse(s);
    const std::string fam = j.at("family").get<std::string>();
    const json& c = j.at("coefficients");
    if (fam == "fourier")
        return fourier(c.at("sin").get<std::vector<double>>(),
                       c.at("cos").get<std::vector<double>>(),
                       j.value("seed", std::uint64_t{0}));
    if (fam == "polynomial")
        return polynomial(c.get<std::vector<double>>(), j.value("seed", std::uint64_t{0}));
    if (fam == "kink") return kink(c.at("nu").get<double>());
    throw std::runtime_error("ICFunction: unknown family '" + fam + "'");
}

// ---------------------------------------------------------------------------
// Params

std::array<Jet, 3> input_jets(const Arch& arch, double x, double t, double nu) {
    std::array<Jet, 3> in;
    double nl = arch.nu_log_input ? std::log10(nu) : nu;
    if (arch.scale_inputs) {
        in[0] = Jet{x / 5.0, 1.0 / 5.0, 0.0, 0.0};
        in[1] = Jet{(t - 2.5) / 2.5, 0.0, 1.0 / 2.5, 0.0};
        const double lo = arch.nu_log_input ? std::log10(arch.nu_min) : arch.nu_min;
        const double hi = arch.nu_log_input ? std::log10(arch.nu_max) : arch.nu_max;
        const double nhat = (hi > lo) ? 2.0 * (nl - lo) / (hi - lo) - 1.0 : 0.0;
        in[2] = Jet::constant(nhat);
    } else {
        in[0] = Jet::input_x(x);
        in[1] = Jet::input_t(t);
        in[2] = Jet::constant(nl);
    }
    return in;
}

ModelParams init_params(const Arch& arch, Rng& rng) {
    if (arch.depth < 1 || arch.width < 1 || arch.n_b < 1 || arch.n_heads < 1)
        throw std::invalid_argument("init_params: all arch dims must be >= 1");
    ModelParams p;
    p.arch = arch;
    auto make_layer = [&](int rows, int cols) {
        DenseLayer l;
        l.w = Matrix(rows, cols);
        // Symmetric uniform scaled by fan-in/fan-out, with tanh gain 5/3.
        const double lim = (5.0 / 3.0) * std::sqrt(6.0 / (rows + cols));
        for (double& w : l.w.data) w = rng.uniform(-lim, lim);
        l.b.assign(rows, 0.0);
        return l;
    };
    p.body.layers.push_back(make_layer(arch.width, 3));
    for (int l = 1; l < arch.depth; ++l) p.body.layers.push_back(make_layer(arch.width, arch.width));
    p.body.layers.push_back(make_layer(arch.n_b, arch.width));

    // Head rows orthonormalized by modified Gram-Schmidt; rows beyond n_b
    // (more heads than latents) are only normalized.
    p.head = Matrix(arch.n_heads, arch.n_b);
    for (int i = 0; i < arch.n_heads; ++i) {
        for (;;) {
            for (int j = 0; j < arch.n_b; ++j) p.head(i, j) = rng.normal();
            // Past n_b rows the span is full and the projection would always
            // annihilate the draw, so those rows skip the orthogonalization.
            const int n_proj = i < arch.n_b ? i : 0;
            for (int r = 0; r < n_proj; ++r) {
                double dot = 0.0;
                for (int j = 0; j < arch.n_b; ++j) dot += p.head(i, j) * p.head(r, j);
                for (int j = 0; j < arch.n_b; ++j) p.head(i, j) -= dot * p.head(r, j);
            }
            double nrm = 0.0;
            for (int j = 0; j < arch.n_b; ++j) nrm += p.head(i, j) * p.head(i, j);
            nrm = std::sqrt(nrm);
            if (nrm > 1e-8) {
                for (int j = 0; j < arch.n_b; ++j) p.head(i, j) /= nrm;
                break;
            }
        }
    }
    return p;
}

const Matrix& head_matrix(const ModelParams& p) { return p.head; }
int latent_dim(const ModelParams& p) { return p.arch.n_b; }

void body_jets(const ModelParams& p, double x, double t, double nu, Tape& tape,
               std::vector<Jet>& out) {
    const auto in = input_jets(p.arch, x, t, nu);
    forward_with_tape(p.body, in, tape, out);
}

SolutionJet assemble_from_latents(const ModelParams& p, const ICFunction& ic, int head_index,
                                  double x, double t, std::span<const Jet> latents) {
    if (head_index < 0 || head_index >= p.head.rows)
        throw std::out_of_range("assemble_solution: head index " + std::to_string(head_index) +
                                " out of range [0," + std::to_string(p.head.rows) + ")");
    if (static_cast<int>(latents.size()) != p.head.cols)
        throw std::invalid_argument("assemble_solution: latent count mismatch");
    Jet g{};
    const double* wrow = &p.head.data[static_cast<std::size_t>(head_index) * p.head.cols];
    for (int j = 0; j < p.head.cols; ++j) {
        const double w = wrow[j];
        g.v += w * latents[j].v;
        g.vx += w * latents[j].vx;
        g.vt += w * latents[j].vt;
        g.vxx += w * latents[j].vxx;
    }
    const double ep = std::exp(-t);
    const double env = 1.0 - ep;
    SolutionJet s;
    s.u.v = ic.value(x) + env * g.v;
    s.u.vx = ic.d1(x) + env * g.vx;
    s.u.vt = ep * g.v + env * g.vt;
    s.u.vxx = ic.d2(x) + env * g.vxx;
    return s;
}

SolutionJet assemble_solution(const ModelParams& p, const ICFunction& ic, int head_index,
                              double x, double t, double nu) {
    Tape tape;
    std::vector<Jet> latents;
    body_jets(p, x, t, nu, tape, latents);
    return assemble_from_latents(p, ic, head_index, x, t, latents);
}

void body_values(const ModelParams& p, double x, double t, double nu, std::vector<double>& out) {
    const auto in = input_jets(p.arch, x, t, nu);
    std::vector<double> a = {in[0].v, in[1].v, in[2].v};
    std::vector<double> z;
    for (std::size_t l = 0; l < p.body.layers.size(); ++l) {
        const auto& layer = p.body.layers[l];
        z.assign(layer.w.rows, 0.0);
        for (int o = 0; o < layer.w.rows; ++o) {
            const double* wrow = &layer.w.data[static_cast<std::size_t>(o) * layer.w.cols];
            double s = layer.b[o];
            for (int i = 0; i < layer.w.cols; ++i) s += wrow[i] * a[i];
            z[o] = s;
        }
        if (l + 1 < p.body.layers.size()) {
            a.resize(z.size());
            for (std::size_t i = 0; i < z.size(); ++i) a[i] = std::tanh(z[i]);
        } else {
            a = z;
        }
    }
    out = a;
}

double solution_value(const ModelParams& p, const ICFunction& ic, int head_index, double x,
                      double t, double nu) {
    if (head_index < 0 || head_index >= p.head.rows)
        throw std::out_of_range("solution_value: head index out of range");
    std::vector<double> h;
    body_values(p, x, t, nu, h);
    double g = 0.0;
    for (int j = 0; j < p.head.cols; ++j) g += p.head(head_index, j) * h[j];
    return ic.value(x) + (1.0 - std::exp(-t)) * g;
}

// ---------------------------------------------------------------------------
// Flat parameter vector

std::size_t body_param_count(const Arch& arch) {
    std::size_t n = static_cast<std::size_t>(arch.width) * 3 + arch.width;
    for (int l = 1; l < arch.depth; ++l)
        n += static_cast<std::size_t>(arch.width) * arch.width + arch.width;
    n += static_cast<std::size_t>(arch.n_b) * arch.width + arch.n_b;
    return n;
}

std::size_t param_count(const Arch& arch) {
    return body_param_count(arch) + static_cast<std::size_t>(arch.n_heads) * arch.n_b;
}

std::vector<double> pack(const ModelParams& p) {
    std::vector<double> flat;
    flat.reserve(param_count(p.arch));
    for (const auto& l : p.body.layers) {
        flat.insert(flat.end(), l.w.data.begin(), l.w.data.end());
        flat.insert(flat.end(), l.b.begin(), l.b.end());
    }
    flat.insert(flat.end(), p.head.data.begin(), p.head.data.end());
    return flat;
}

void unpack(std::span<const double> flat, ModelParams& p) {
    if (flat.size() != param_count(p.arch))
        throw std::invalid_argument("unpack: flat vector has wrong length");
    std::size_t off = 0;
    for (auto& l : p.body.layers) {
        std::copy(flat.begin() + off, flat.begin() + off + l.w.data.size(), l.w.data.begin());
        off += l.w.data.size();
        std::copy(flat.begin() + off, flat.begin() + off + l.b.size(), l.b.begin());
        off += l.b.size();
    }
    std::copy(flat.begin() + off, flat.begin() + off + p.head.data.size(), p.head.data.begin());
}

// ---------------------------------------------------------------------------
// Checkpoints

std::string checkpoint_to_json(const Checkpoint& c) {
    json j;
    j["version"] = c.version;
    j["arch"] = {{"depth", c.params.arch.depth},
                 {"width", c.params.arch.width},
                 {"n_b", c.params.arch.n_b},
                 {"n_heads", c.params.arch.n_heads},
                 {"nu_input", c.params.arch.nu_log_input ? "log" : "raw"},
                 {"scale_inputs", c.params.arch.scale_inputs},
                 {"nu_min", c.params.arch.nu_min},
                 {"nu_max", c.params.arch.nu_max}};
    json layers = json::array();
    for (const auto& l : c.params.body.layers)
        layers.push_back(
            {{"rows", l.w.rows}, {"cols", l.w.cols}, {"weights", l.w.data}, {"bias", l.b}});
    j["body_layers"] = std::move(layers);
    j["head_matrix"] = {{"rows", c.params.head.rows},
                        {"cols", c.params.head.cols},
                        {"weights", c.params.head.data}};
    j["rng_seed"] = c.rng_seed;
    j["epoch"] = c.epoch;
    if (!c.adam.m.empty())
        j["adam"] = {{"t", c.adam.t}, {"beta1", c.adam.beta1}, {"beta2", c.adam.beta2},
                     {"eps", c.adam.eps}, {"m", c.adam.m},     {"v", c.adam.v}};
    if (!c.rng_state.empty()) j["rng_state"] = c.rng_state;
    return j.dump(2);
}

Checkpoint checkpoint_from_json(const std::string& s) {
    json j;
    try {
        j = json::parse(s);
    } catch (const json::parse_error& e) {
        throw std::runtime_error(std::string("checkpoint parse error: ") + e.what());
    }
    Checkpoint c;
    c.version = j.at("version").get<int>();
    if (c.version != 1)
        throw std::runtime_error("checkpoint version mismatch: got " + std::to_string(c.version) +
                                 ", expected 1");
    const json& a = j.at("arch");
    Arch arch;
    arch.depth = a.at("depth").get<int>();
    arch.width = a.at("width").get<int>();
    arch.n_b = a.at("n_b").get<int>();
    arch.n_heads = a.at("n_heads").get<int>();
    arch.nu_log_input = a.value("nu_input", std::string("log")) == "log";
    arch.scale_inputs = a.value("scale_inputs", true);
    arch.nu_min = a.value("nu_min", 1e-2);
    arch.nu_max = a.value("nu_max", 1.0);
    c.params.arch = arch;

    const json& layers = j.at("body_layers");
    if (static_cast<int>(layers.size()) != arch.depth + 1)
        throw std::runtime_error("checkpoint shape error: expected " +
                                 std::to_string(arch.depth + 1) + " body layers, got " +
                                 std::to_string(layers.size()));
    int prev = 3;
    for (std::size_t l = 0; l < layers.size(); ++l) {
        DenseLayer dl;
        const json& jl = layers[l];
        dl.w.rows = jl.at("rows").get<int>();
        dl.w.cols = jl.at("cols").get<int>();
        dl.w.data = jl.at("weights").get<std::vector<double>>();
        dl.b = jl.at("bias").get<std::vector<double>>();
        const int want_rows = (l + 1 == layers.size()) ? arch.n_b : arch.width;
        if (dl.w.cols != prev || dl.w.rows != want_rows ||
            dl.w.data.size() != static_cast<std::size_t>(dl.w.rows) * dl.w.cols ||
            dl.b.size() != static_cast<std::size_t>(dl.w.rows))
            throw std::runtime_error("checkpoint shape error at body layer " + std::to_string(l));
        prev = dl.w.rows;
        c.params.body.layers.push_back(std::move(dl));
    }
    const json& h = j.at("head_matrix");
    c.params.head.rows = h.at("rows").get<int>();
    c.params.head.cols = h.at("cols").get<int>();
    c.params.head.data = h.at("weights").get<std::vector<double>>();
    if (c.params.head.rows != arch.n_heads || c.params.head.cols != arch.n_b ||
        c.params.head.data.size() !=
            static_cast<std::size_t>(c.params.head.rows) * c.params.head.cols)
        throw std::runtime_error("checkpoint shape error at head_matrix");

    c.rng_seed = j.at("rng_seed").get<std::uint64_t>();
    c.epoch = j.at("epoch").get<long>();
    if (j.contains("adam")) {
        const json& ad = j.at("adam");
        c.adam.t = ad.at("t").get<long>();
        c.adam.beta1 = ad.at("beta1").get<double>();
        c.adam.beta2 = ad.at("beta2").get<double>();
        c.adam.eps = ad.at("eps").get<double>();
        c.adam.m = ad.at("m").get<std::vector<double>>();
        c.adam.v = ad.at("v").get<std::vector<double>>();
        if (c.adam.m.size() != param_count(arch) || c.adam.v.size() != param_count(arch))
            throw std::runtime_error("checkpoint shape error: adam state length");
    }
    c.rng_state = j.value("rng_state", std::string());
    return c;
}

void save_checkpoint(const Checkpoint& c, const std::string& path) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary);
        if (!os) throw std::runtime_error("cannot write checkpoint file: " + tmp);
        os << checkpoint_to_json(c) << '\n';
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0)
        throw std::runtime_error("cannot move checkpoint into place: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open checkpoint file: " + path);
    std::string s((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
    return checkpoint_from_json(s);
}

}  // namespace mhpinn
