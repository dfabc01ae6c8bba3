#include "mhpinn/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <iostream>
#include <stdexcept>

#include <CLI11.hpp>
#include <json.hpp>

#include "mhpinn/analysis.hpp"
#include "mhpinn/reference.hpp"

namespace mhpinn {

using nlohmann::json;

namespace {

constexpr const char* kVersion = "mhpinn 1.0.0";

std::string utc_now() {
    const std::time_t t = std::time(nullptr);
    char buf[32];
    std::tm tm{};
    gmtime_r(&t, &tm);
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

double median(std::vector<double> v) {
    if (v.empty()) throw std::invalid_argument("median of empty list");
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

void atomic_write(const std::string& path, const std::string& content) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary);
        if (!os) throw std::runtime_error("cannot write file: " + tmp);
        os << content;
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0)
        throw std::runtime_error("cannot move file into place: " + path);
}

// Tracks one subcommand run and writes the manifest when asked.
struct RunScope {
    RunManifest m;

    RunScope(std::string command, const json& effective_config, std::uint64_t seed) {
        m.command = std::move(command);
        m.config_hash = config_hash(effective_config.dump());
        m.seed = seed;
        m.version = kVersion;
        m.started = utc_now();
    }
    void finish(const std::vector<std::string>& outputs, const std::string& manifest_path) {
        m.outputs = outputs;
        m.finished = utc_now();
        write_manifest(m, manifest_path);
    }
};

ICEnsembleSpec::Family parse_family(const std::string& s) {
    if (s == "fourier") return ICEnsembleSpec::Family::fourier;
    if (s == "polynomial") return ICEnsembleSpec::Family::polynomial;
    throw std::invalid_argument("unknown IC family: " + s);
}

// ---------------------------------------------------------------------------
// gen-ics

struct GenIcsArgs {
    std::string family = "fourier";
    int count = 4;
    int modes = 10;
    int degree = 4;
    double amplitude = 0.5;
    std::uint64_t seed = 0;
    std::string out = "ics.json";
    std::string manifest;
};

int run_gen_ics(const GenIcsArgs& a) {
    ICEnsembleSpec spec;
    spec.family = parse_family(a.family);
    spec.n_ics = a.count;
    spec.n_modes = a.modes;
    spec.max_degree = a.degree;
    spec.amplitude = a.amplitude;
    spec.seed = a.seed;
    const json cfg = {{"family", a.family},   {"count", a.count},
                      {"modes", a.modes},     {"degree", a.degree},
                      {"amplitude", a.amplitude}, {"seed", a.seed},
                      {"out", a.out}};
    RunScope scope("gen-ics", cfg, a.seed);
    const auto ics = generate_ics(spec);
    save_ics(ics, a.out);
    std::cout << "wrote " << ics.size() << " initial conditions to " << a.out << "\n";
    scope.finish({a.out}, a.manifest.empty() ? a.out + ".manifest.json" : a.manifest);
    return 0;
}

// ---------------------------------------------------------------------------
// train

struct TrainArgs {
    std::string config;
    std::string resume_from;
    std::string manifest = "manifest.json";
    std::uint64_t seed = 0;
    bool seed_set = false;
    long epochs = -1;
    bool deterministic = false;
};

int run_train(const TrainArgs& a) {
    TrainConfig cfg = load_train_config(a.config);
    if (a.seed_set) cfg.seed = a.seed;
    if (a.epochs >= 0) cfg.epochs = a.epochs;
    if (a.deterministic) cfg.deterministic = true;
    if (cfg.log_path.empty()) cfg.log_path = "loss_curve.csv";
    if (cfg.checkpoint_path.empty()) cfg.checkpoint_path = "checkpoint.json";

    std::ifstream is(a.config, std::ios::binary);
    json raw;
    is >> raw;
    raw["_seed"] = cfg.seed;
    raw["_epochs"] = cfg.epochs;
    raw["_deterministic"] = cfg.deterministic;
    RunScope scope("train", raw, cfg.seed);

    const TrainResult res =
        a.resume_from.empty() ? train(cfg) : resume(a.resume_from, cfg);
    std::printf("trained to epoch %ld: total %.6g, pde %.6g, ortho %.6g\n", cfg.epochs,
                res.final_loss.total, res.final_loss.pde_term, res.final_loss.ortho_term);
    scope.finish({cfg.log_path, cfg.checkpoint_path}, a.manifest);
    return 0;
}

// ---------------------------------------------------------------------------
// pca

struct PcaArgs {
    std::string checkpoint;
    long points = 4096;
    bool mixed = false;
    std::uint64_t seed = 0;
    std::string out = "spectrum.csv";
    std::string manifest;
};

int run_pca(const PcaArgs& a) {
    if (a.points < 1) throw std::invalid_argument("pca: --points must be >= 1");
    const json cfg = {{"checkpoint", a.checkpoint},
                      {"points", a.points},
                      {"mixed", a.mixed},
                      {"seed", a.seed},
                      {"out", a.out}};
    RunScope scope("pca", cfg, a.seed);
    const Checkpoint c = load_checkpoint(a.checkpoint);
    Domain dom;
    dom.nu_min = c.params.arch.nu_min;
    dom.nu_max = c.params.arch.nu_max;
    Rng rng = Rng(a.seed).substream(0x9CA);
    const CollocationBatch batch =
        sample_random_batch(static_cast<std::size_t>(a.points), dom, rng);
    const SpectrumReport rep = latent_spectrum(c.params, batch, a.mixed);
    write_spectrum_csv(rep, a.out);
    std::printf("spectrum over %ld points: r(0.9) = %d of %zu components\n", a.points,
                rep.r_at(0.9), rep.eigenvalues.size());
    for (int col : rep.excluded_columns)
        std::fprintf(stderr, "warning: latent column %d has zero variance; excluded from PCA\n",
                     col);
    scope.finish({a.out}, a.manifest.empty() ? a.out + ".manifest.json" : a.manifest);
    return 0;
}

// ---------------------------------------------------------------------------
// reference

struct ReferenceArgs {
    std::string ic_file;
    int ic_index = 0;
    double nu = 0.1;
    int nx = 256;
    double t_final = 5.0;
    int snapshots = 11;
    std::string out = "reference.csv";
    std::string manifest;
};

int run_reference(const ReferenceArgs& a) {
    if (a.snapshots < 2) throw std::invalid_argument("reference: --snapshots must be >= 2");
    const json cfg = {{"ic", a.ic_file},   {"ic_index", a.ic_index}, {"nu", a.nu},
                      {"nx", a.nx},        {"t_final", a.t_final},   {"snapshots", a.snapshots},
                      {"out", a.out}};
    RunScope scope("reference", cfg, 0);
    const auto ics = load_ics(a.ic_file);
    if (a.ic_index < 0 || a.ic_index >= static_cast<int>(ics.size()))
        throw std::invalid_argument("reference: --ic-index " + std::to_string(a.ic_index) +
                                    " out of range for " + std::to_string(ics.size()) + " ICs");
    FDGrid grid;
    grid.n_x = a.nx;
    grid.t_final = a.t_final;
    grid.nu = a.nu;
    grid.snapshot_times.resize(a.snapshots);
    for (int i = 0; i < a.snapshots; ++i)
        grid.snapshot_times[i] = a.t_final * i / (a.snapshots - 1);
    const auto snaps = solve_fd(ics[a.ic_index], grid);

    std::ofstream os(a.out, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write reference file: " + a.out);
    os << "t,x,u\n";
    char buf[128];
    const double dx = grid.dx();
    for (const auto& s : snaps)
        for (int i = 0; i < a.nx; ++i) {
            std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", s.t, -5.0 + dx * i, s.u[i]);
            os << buf;
        }
    os.close();
    std::printf("wrote %zu snapshots (nx=%d) to %s\n", snaps.size(), a.nx, a.out.c_str());
    scope.finish({a.out}, a.manifest.empty() ? a.out + ".manifest.json" : a.manifest);
    return 0;
}

// ---------------------------------------------------------------------------
// eval

struct EvalArgs {
    std::string checkpoint;
    std::string ic_file;
    int nu_count = 5;
    int nx = 256;
    int times = 10;
    double t_final = 5.0;
    std::string out = "eval.json";
    std::string manifest;
};

int run_eval(const EvalArgs& a) {
    if (a.nu_count < 2) throw std::invalid_argument("eval: --nu-count must be >= 2");
    if (a.times < 1) throw std::invalid_argument("eval: --times must be >= 1");
    const json cfg = {{"checkpoint", a.checkpoint}, {"ics", a.ic_file}, {"nu_count", a.nu_count},
                      {"nx", a.nx},                 {"times", a.times}, {"t_final", a.t_final},
                      {"out", a.out}};
    RunScope scope("eval", cfg, 0);
    const Checkpoint c = load_checkpoint(a.checkpoint);
    const auto ics = load_ics(a.ic_file);
    if (static_cast<int>(ics.size()) != c.params.arch.n_heads)
        throw std::runtime_error("eval: " + std::to_string(ics.size()) +
                                 " initial conditions for " +
                                 std::to_string(c.params.arch.n_heads) + " heads");
    const auto nus = log_spaced_nu(a.nu_count, c.params.arch.nu_min, c.params.arch.nu_max);
    std::vector<double> ts(a.times);
    for (int k = 0; k < a.times; ++k) ts[k] = a.t_final * (k + 1) / a.times;

    json pairs = json::array();
    std::vector<double> l2s, linfs;
    const double dx = 10.0 / (a.nx - 1);
    for (std::size_t i = 0; i < ics.size(); ++i)
        for (double nu : nus) {
            FDGrid grid;
            grid.n_x = a.nx;
            grid.t_final = a.t_final;
            grid.nu = nu;
            grid.snapshot_times = ts;
            const auto ref = solve_fd(ics[i], grid);
            std::vector<FieldSnapshot> net(ref.size());
            for (std::size_t s = 0; s < ref.size(); ++s) {
                net[s].t = ref[s].t;
                net[s].u.resize(a.nx);
                for (int k = 0; k < a.nx; ++k)
                    net[s].u[k] = solution_value(c.params, ics[i], static_cast<int>(i),
                                                 -5.0 + dx * k, ref[s].t, nu);
            }
            const ErrorMetrics m = compare(net, ref);
            pairs.push_back({{"ic", i}, {"nu", nu}, {"rel_l2", m.rel_l2},
                             {"rel_linf", m.rel_linf}});
            l2s.push_back(m.rel_l2);
            linfs.push_back(m.rel_linf);
        }
    json out;
    out["pairs"] = std::move(pairs);
    out["median_rel_l2"] = median(l2s);
    out["median_rel_linf"] = median(linfs);
    atomic_write(a.out, out.dump(2) + "\n");
    std::printf("eval over %zu pairs: median rel_l2 %.6g, median rel_linf %.6g\n", l2s.size(),
                median(l2s), median(linfs));
    scope.finish({a.out}, a.manifest.empty() ? a.out + ".manifest.json" : a.manifest);
    return 0;
}

}  // namespace

// ---------------------------------------------------------------------------

TrainConfig load_train_config(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open config file: " + path);
    json j;
    try {
        is >> j;
    } catch (const json::parse_error& e) {
        throw std::runtime_error("config parse error in " + path + ": " + e.what());
    }
    if (!j.is_object()) throw std::runtime_error("config must be a JSON object: " + path);

    TrainConfig cfg;
    std::string ics_path;
    for (const auto& [key, val] : j.items()) {
        try {
            if (key == "epochs") cfg.epochs = val.get<long>();
            else if (key == "base_lr") cfg.base_lr = val.get<double>();
            else if (key == "warmup_epochs") cfg.warmup_epochs = val.get<long>();
            else if (key == "warmup") cfg.warmup = val.get<std::string>();
            else if (key == "decay_factor") cfg.decay_factor = val.get<double>();
            else if (key == "decay_every") cfg.decay_every = val.get<long>();
            else if (key == "lambda_ortho") cfg.loss.lambda_ortho = val.get<double>();
            else if (key == "weight_a") cfg.loss.weighting.a = val.get<double>();
            else if (key == "weight_b") cfg.loss.weighting.b = val.get<double>();
            else if (key == "depth") cfg.arch.depth = val.get<int>();
            else if (key == "width") cfg.arch.width = val.get<int>();
            else if (key == "n_b") cfg.arch.n_b = val.get<int>();
            else if (key == "n_heads") cfg.arch.n_heads = val.get<int>();
            else if (key == "nu_input") cfg.arch.nu_log_input = val.get<std::string>() == "log";
            else if (key == "scale_inputs") cfg.arch.scale_inputs = val.get<bool>();
            else if (key == "grid_x") cfg.grid_x = val.get<int>();
            else if (key == "grid_t") cfg.grid_t = val.get<int>();
            else if (key == "grid_nu") cfg.grid_nu = val.get<int>();
            else if (key == "nu_min") cfg.domain.nu_min = val.get<double>();
            else if (key == "nu_max") cfg.domain.nu_max = val.get<double>();
            else if (key == "resample_every") cfg.resample_every = val.get<long>();
            else if (key == "batch_size") cfg.batch_size = val.get<std::size_t>();
            else if (key == "ics") ics_path = val.get<std::string>();
            else if (key == "ic_family") cfg.ic_spec.family = parse_family(val.get<std::string>());
            else if (key == "ic_modes") cfg.ic_spec.n_modes = val.get<int>();
            else if (key == "ic_degree") cfg.ic_spec.max_degree = val.get<int>();
            else if (key == "ic_amplitude") cfg.ic_spec.amplitude = val.get<double>();
            else if (key == "ic_seed") cfg.ic_spec.seed = val.get<std::uint64_t>();
            else if (key == "seed") cfg.seed = val.get<std::uint64_t>();
            else if (key == "deterministic") cfg.deterministic = val.get<bool>();
            else if (key == "parallel") cfg.parallel = val.get<bool>();
            else if (key == "checkpoint_path") cfg.checkpoint_path = val.get<std::string>();
            else if (key == "checkpoint_every") cfg.checkpoint_every = val.get<long>();
            else if (key == "log_path") cfg.log_path = val.get<std::string>();
            else throw std::runtime_error("unknown config key: " + key);
        } catch (const json::exception&) {
            throw std::runtime_error("invalid config value for key: " + key);
        }
    }
    if (!ics_path.empty()) cfg.ics = load_ics(ics_path);
    return cfg;
}

std::uint64_t config_hash(const std::string& canonical_json) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : canonical_json) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

void write_manifest(const RunManifest& m, const std::string& path) {
    json j;
    j["command"] = m.command;
    char hash[32];
    std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(m.config_hash));
    j["config_hash"] = hash;
    j["seed"] = m.seed;
    j["version"] = m.version;
    j["started"] = m.started;
    j["finished"] = m.finished;
    j["outputs"] = m.outputs;
    atomic_write(path, j.dump(2) + "\n");
}

int dispatch(int argc, const char* const* argv) {
    CLI::App app{"Multihead physics-informed network for the viscous Burgers solution bundle"};
    app.require_subcommand(1);
    app.footer("Thread count follows OMP_NUM_THREADS.");

    GenIcsArgs gi;
    auto* gen = app.add_subcommand("gen-ics", "Generate a random IC ensemble as JSON");
    gen->add_option("--family", gi.family, "fourier | polynomial")
        ->check(CLI::IsMember({"fourier", "polynomial"}));
    gen->add_option("--count", gi.count, "Number of ICs")->check(CLI::PositiveNumber);
    gen->add_option("--modes", gi.modes, "Fourier modes per IC");
    gen->add_option("--degree", gi.degree, "Polynomial degree");
    gen->add_option("--amplitude", gi.amplitude, "Coefficient amplitude scale");
    gen->add_option("--seed", gi.seed, "Ensemble seed");
    gen->add_option("--out", gi.out, "Output JSON path");
    gen->add_option("--manifest", gi.manifest, "Manifest path");

    TrainArgs tr;
    auto* train_cmd = app.add_subcommand("train", "Train the multihead network");
    train_cmd->add_option("--config", tr.config, "Flat JSON config file")
        ->required()
        ->check(CLI::ExistingFile);
    train_cmd->add_option("--resume", tr.resume_from, "Continue from a checkpoint file");
    auto* seed_opt = train_cmd->add_option("--seed", tr.seed, "Override config seed");
    train_cmd->add_option("--epochs", tr.epochs, "Override config epochs");
    train_cmd->add_flag("--deterministic", tr.deterministic,
                        "Bit-reproducible reductions and zeroed wall_ms");
    train_cmd->add_option("--manifest", tr.manifest, "Manifest path");

    PcaArgs pc;
    auto* pca_cmd = app.add_subcommand("pca", "Latent-space PCA spectrum of a checkpoint");
    pca_cmd->add_option("--checkpoint", pc.checkpoint, "Checkpoint JSON")->required();
    pca_cmd->add_option("--points", pc.points, "Sample size M");
    pca_cmd->add_flag("--mixed", pc.mixed, "Mix latents through the head matrix first");
    pca_cmd->add_option("--seed", pc.seed, "Sampling seed");
    pca_cmd->add_option("--out", pc.out, "Output CSV path");
    pca_cmd->add_option("--manifest", pc.manifest, "Manifest path");

    ReferenceArgs rf;
    auto* ref_cmd = app.add_subcommand("reference", "Finite-difference Burgers reference solve");
    ref_cmd->add_option("--ic", rf.ic_file, "IC ensemble JSON")->required();
    ref_cmd->add_option("--ic-index", rf.ic_index, "Which IC from the file");
    ref_cmd->add_option("--nu", rf.nu, "Viscosity")->required();
    ref_cmd->add_option("--nx", rf.nx, "Spatial nodes");
    ref_cmd->add_option("--t-final", rf.t_final, "Final time");
    ref_cmd->add_option("--snapshots", rf.snapshots, "Snapshot count (incl. t=0)");
    ref_cmd->add_option("--out", rf.out, "Output CSV path");
    ref_cmd->add_option("--manifest", rf.manifest, "Manifest path");

    EvalArgs ev;
    auto* eval_cmd = app.add_subcommand("eval", "Compare a checkpoint against FD references");
    eval_cmd->add_option("--checkpoint", ev.checkpoint, "Checkpoint JSON")->required();
    eval_cmd->add_option("--ics", ev.ic_file, "IC ensemble JSON")->required();
    eval_cmd->add_option("--nu-count", ev.nu_count, "Log-spaced viscosities");
    eval_cmd->add_option("--nx", ev.nx, "Spatial nodes");
    eval_cmd->add_option("--times", ev.times, "Snapshot times in (0, t_final]");
    eval_cmd->add_option("--t-final", ev.t_final, "Final time");
    eval_cmd->add_option("--out", ev.out, "Output JSON path");
    eval_cmd->add_option("--manifest", ev.manifest, "Manifest path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help and friends
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    tr.seed_set = seed_opt->count() > 0;

    try {
        if (gen->parsed()) return run_gen_ics(gi);
        if (train_cmd->parsed()) return run_train(tr);
        if (pca_cmd->parsed()) return run_pca(pc);
        if (ref_cmd->parsed()) return run_reference(rf);
        if (eval_cmd->parsed()) return run_eval(ev);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    std::cerr << "error: no subcommand given\n";
    return 2;
}

}  // namespace mhpinn
