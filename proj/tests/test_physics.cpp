#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "mhpinn/physics.hpp"
#include "mhpinn/reference.hpp"
#include "oracles.hpp"

using mhpinn::Arch;
using mhpinn::CollocationBatch;
using mhpinn::ICFunction;
using mhpinn::LossConfig;
using mhpinn::Matrix;
using mhpinn::ModelParams;
using mhpinn::SolutionJet;

namespace {

ModelParams make_params(const Arch& arch, std::uint64_t seed) {
    mhpinn::Rng rng(seed);
    return mhpinn::init_params(arch, rng);
}

CollocationBatch tiny_batch(std::size_t m, std::uint64_t seed, double nu_min = 1e-2,
                            double nu_max = 1.0) {
    mhpinn::Domain dom;
    dom.nu_min = nu_min;
    dom.nu_max = nu_max;
    mhpinn::Rng rng(seed);
    return mhpinn::sample_random_batch(m, dom, rng);
}

std::vector<ICFunction> tiny_ics(int n) {
    std::vector<ICFunction> ics;
    for (int i = 0; i < n; ++i)
        ics.push_back(ICFunction::fourier({0.3 / (i + 1), -0.1}, {0.2, 0.05 * (i + 1)}));
    return ics;
}

}  // namespace

TEST_CASE("residual on hand-built jets") {
    SolutionJet c;
    c.u = mhpinn::Jet::constant(3.0);
    CHECK(mhpinn::residual(c, 0.5) == 0.0);  // constants solve the equation

    SolutionJet lin;
    lin.u = {2.0, 1.0, 0.0, 0.0};  // u = x at x = 2: R = u u_x = 2
    CHECK(mhpinn::residual(lin, 0.7) == 2.0);

    SolutionJet full;
    full.u = {1.5, -2.0, 0.25, 3.0};
    const double nu = 0.1;
    CHECK(mhpinn::residual(full, nu) ==
          doctest::Approx(0.25 + 1.5 * (-2.0) - nu * 3.0).epsilon(1e-15));
}

TEST_CASE("steady kink profile has zero residual") {
    for (double nu : {0.01, 0.1, 1.0}) {
        for (double x : {-4.0, -1.0, 0.0, 0.3, 2.2}) {
            auto e = mhpinn::exact_kink(x, nu);
            SolutionJet u;
            u.u = {e[0], e[1], 0.0, e[2]};  // steady: u_t = 0
            CHECK(std::abs(mhpinn::residual(u, nu)) < 1e-12);
        }
    }
}

TEST_CASE("residual weighting") {
    mhpinn::ResidualWeighting w;  // a=1, b=2
    CHECK(mhpinn::lambda_weight(0.0, w) == 1.0);
    CHECK(mhpinn::lambda_weight(3.0, w) == 10.0);
    CHECK(mhpinn::lambda_weight(-3.0, w) == 10.0);
    mhpinn::ResidualWeighting off;
    off.a = 0.0;
    CHECK(mhpinn::lambda_weight(123.0, off) == 1.0);
    mhpinn::ResidualWeighting ab;
    ab.a = 2.0;
    ab.b = 1.0;
    CHECK(mhpinn::lambda_weight(-0.5, ab) == doctest::Approx(2.0).epsilon(1e-15));
    mhpinn::Rng rng(1);
    for (int i = 0; i < 100; ++i) CHECK(mhpinn::lambda_weight(rng.uniform(-9, 9), w) >= 1.0);
}

TEST_CASE("orthogonality penalty closed forms") {
    CHECK(mhpinn::ortho_penalty(mhpinn::identity(4)) == 0.0);

    Matrix two = mhpinn::identity(2);
    for (double& x : two.data) x *= 2.0;
    // WW^T - I = 3I (2x2): 18; W^T W identical: 18; total 36.
    CHECK(mhpinn::ortho_penalty(two) == doctest::Approx(36.0).epsilon(1e-15));

    Matrix rect(2, 3);
    rect(0, 0) = 1.0;
    rect(1, 1) = 1.0;
    // WW^T = I_2 (0); W^T W = diag(1,1,0): one unit off the identity.
    CHECK(mhpinn::ortho_penalty(rect) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("orthogonality gradient matches finite differences") {
    mhpinn::Rng rng(8);
    Matrix w(3, 5);
    for (double& x : w.data) x = rng.uniform(-1, 1);
    Matrix g = mhpinn::ortho_penalty_grad(w);
    REQUIRE(g.rows == 3);
    REQUIRE(g.cols == 5);
    auto f = [&](const std::vector<double>& th) {
        Matrix m = w;
        m.data = th;
        return mhpinn::ortho_penalty(m);
    };
    std::vector<double> fd = oracles::fd_gradient(f, w.data, 1e-6);
    CHECK(oracles::max_rel_error(g.data, fd, 1e-8) < 1e-6);
}

TEST_CASE("zero head matrix with the kink IC gives zero pde loss") {
    Arch arch;
    arch.n_heads = 1;
    arch.nu_min = 0.05;
    ModelParams p = make_params(arch, 3);
    for (double& x : p.head.data) x = 0.0;  // u collapses onto the IC
    std::vector<ICFunction> ics{ICFunction::kink(0.1)};

    CollocationBatch b;
    mhpinn::Rng rng(12);
    for (int i = 0; i < 50; ++i) {
        b.x.push_back(rng.uniform(-5, 5));
        b.t.push_back(rng.uniform(0, 5));
        b.nu.push_back(0.1);  // the kink is steady only at its own viscosity
    }
    LossConfig cfg;
    cfg.lambda_ortho = 0.0;
    auto l = mhpinn::loss_value(p, b, ics, cfg);
    CHECK(l.pde_term < 1e-24);
    CHECK(l.total == l.pde_term);
}

TEST_CASE("unweighted loss equals the plain mean square residual") {
    Arch arch;
    arch.depth = 2;
    arch.width = 6;
    arch.n_b = 4;
    arch.n_heads = 2;
    ModelParams p = make_params(arch, 10);
    auto ics = tiny_ics(2);
    CollocationBatch b = tiny_batch(40, 5);
    LossConfig cfg;
    cfg.lambda_ortho = 0.0;
    cfg.weighting.a = 0.0;

    auto got = mhpinn::loss_value(p, b, ics, cfg);
    double acc = 0.0;
    for (std::size_t m = 0; m < b.size(); ++m)
        for (int k = 0; k < arch.n_heads; ++k) {
            auto u = mhpinn::assemble_solution(p, ics[k], k, b.x[m], b.t[m], b.nu[m]);
            const double r = mhpinn::residual(u, b.nu[m]);
            acc += r * r;
        }
    acc /= static_cast<double>(arch.n_heads) * static_cast<double>(b.size());
    CHECK(got.pde_term == doctest::Approx(acc).epsilon(1e-13));
    CHECK(got.ortho_term == doctest::Approx(mhpinn::ortho_penalty(p.head)).epsilon(1e-13));
}

TEST_CASE("weighting never increases the pde term") {
    Arch arch;
    arch.depth = 2;
    arch.width = 5;
    arch.n_b = 3;
    arch.n_heads = 2;
    ModelParams p = make_params(arch, 6);
    auto ics = tiny_ics(2);
    CollocationBatch b = tiny_batch(30, 77);
    LossConfig weighted, plain;
    plain.weighting.a = 0.0;
    auto lw = mhpinn::loss_value(p, b, ics, weighted);
    auto lp = mhpinn::loss_value(p, b, ics, plain);
    CHECK(lw.pde_term <= lp.pde_term + 1e-15);
}

TEST_CASE("loss breakdown identity") {
    Arch arch;
    arch.depth = 2;
    arch.width = 5;
    arch.n_b = 4;
    arch.n_heads = 3;
    ModelParams p = make_params(arch, 44);
    auto ics = tiny_ics(3);
    CollocationBatch b = tiny_batch(25, 2);
    LossConfig cfg;
    cfg.lambda_ortho = 0.37;
    auto l = mhpinn::loss_value(p, b, ics, cfg);
    CHECK(l.total ==
          doctest::Approx(l.pde_term + cfg.lambda_ortho * l.ortho_term).epsilon(1e-15));
}

TEST_CASE("gradient matches finite differences of the frozen-weight loss") {
    mhpinn::Rng meta(321);
    for (int trial = 0; trial < 6; ++trial) {
        Arch arch;
        arch.depth = 1 + static_cast<int>(meta.next_u64() % 2);
        arch.width = 3 + static_cast<int>(meta.next_u64() % 4);
        arch.n_b = 2 + static_cast<int>(meta.next_u64() % 3);
        arch.n_heads = 1 + static_cast<int>(meta.next_u64() % 3);
        ModelParams p = make_params(arch, 1000 + trial);
        auto ics = tiny_ics(arch.n_heads);
        CollocationBatch b = tiny_batch(8, 50 + trial);
        LossConfig cfg;
        cfg.lambda_ortho = (trial % 2 == 0) ? 1e-2 : 0.0;

        std::vector<double> grad(mhpinn::param_count(arch), 0.0);
        auto l = mhpinn::total_loss(p, b, ics, cfg, grad);

        // Freeze the residual weights at the current parameters, then
        // differentiate that fixed function numerically.
        std::vector<double> lam = mhpinn::lambda_table(p, b, ics, cfg);
        auto frozen = [&](const std::vector<double>& th) {
            ModelParams q = p;
            mhpinn::unpack(th, q);
            return mhpinn::loss_value_frozen(q, b, ics, cfg, lam).total;
        };
        std::vector<double> theta = mhpinn::pack(p);
        CHECK(frozen(theta) == doctest::Approx(l.total).epsilon(1e-12));
        std::vector<double> fd = oracles::fd_gradient(frozen, theta, 1e-5);
        CHECK(oracles::max_rel_error(grad, fd, 1e-8) < 1e-6);
    }
}

TEST_CASE("loss is invariant to point order") {
    Arch arch;
    arch.depth = 2;
    arch.width = 5;
    arch.n_b = 3;
    arch.n_heads = 2;
    ModelParams p = make_params(arch, 9);
    auto ics = tiny_ics(2);
    CollocationBatch b = tiny_batch(64, 13);
    CollocationBatch r = b;
    std::reverse(r.x.begin(), r.x.end());
    std::reverse(r.t.begin(), r.t.end());
    std::reverse(r.nu.begin(), r.nu.end());
    LossConfig cfg;
    auto lb = mhpinn::loss_value(p, b, ics, cfg);
    auto lr = mhpinn::loss_value(p, r, ics, cfg);
    CHECK(lb.pde_term == doctest::Approx(lr.pde_term).epsilon(1e-12));
}

TEST_CASE("serial, deterministic parallel, and fast parallel modes agree") {
    Arch arch;
    ModelParams p = make_params(arch, 14);
    auto ics = tiny_ics(arch.n_heads);
    CollocationBatch b = tiny_batch(200, 21);
    LossConfig cfg;

    std::vector<double> g_serial(mhpinn::param_count(arch), 0.0);
    std::vector<double> g_det(g_serial.size(), 0.0);
    std::vector<double> g_fast(g_serial.size(), 0.0);
    auto ls = mhpinn::total_loss(p, b, ics, cfg, g_serial, mhpinn::par::Execution::serial());
    mhpinn::par::Execution det;  // parallel + deterministic
    auto ld = mhpinn::total_loss(p, b, ics, cfg, g_det, det);
    mhpinn::par::Execution fast;
    fast.deterministic = false;
    auto lf = mhpinn::total_loss(p, b, ics, cfg, g_fast, fast);

    CHECK(ls.total == doctest::Approx(ld.total).epsilon(1e-13));
    CHECK(ls.total == doctest::Approx(lf.total).epsilon(1e-13));
    CHECK(oracles::max_rel_error(g_det, g_serial, 1e-10) < 1e-10);
    CHECK(oracles::max_rel_error(g_fast, g_serial, 1e-10) < 1e-10);

    // The deterministic path is bit-stable call to call.
    std::vector<double> g_det2(g_serial.size(), 0.0);
    auto ld2 = mhpinn::total_loss(p, b, ics, cfg, g_det2, det);
    CHECK(ld2.total == ld.total);
    CHECK(g_det2 == g_det);
}

#ifdef _OPENMP
#include <omp.h>
TEST_CASE("deterministic parallel results do not depend on the thread count") {
    Arch arch;
    arch.depth = 2;
    arch.width = 8;
    ModelParams p = make_params(arch, 15);
    auto ics = tiny_ics(arch.n_heads);
    CollocationBatch b = tiny_batch(150, 22);
    LossConfig cfg;
    mhpinn::par::Execution det;

    const int before = omp_get_max_threads();
    omp_set_num_threads(1);
    std::vector<double> g1(mhpinn::param_count(arch), 0.0);
    auto l1 = mhpinn::total_loss(p, b, ics, cfg, g1, det);
    omp_set_num_threads(3);
    std::vector<double> g3(mhpinn::param_count(arch), 0.0);
    auto l3 = mhpinn::total_loss(p, b, ics, cfg, g3, det);
    omp_set_num_threads(before);

    CHECK(l1.total == l3.total);  // bitwise
    CHECK(g1 == g3);
}
#endif

TEST_CASE("workspace reuse gives identical results") {
    Arch arch;
    arch.depth = 2;
    arch.width = 6;
    ModelParams p = make_params(arch, 33);
    auto ics = tiny_ics(arch.n_heads);
    CollocationBatch b = tiny_batch(64, 71);
    LossConfig cfg;
    mhpinn::LossWorkspace ws;
    ws.prepare(b, ics);
    CHECK(ws.matches(b, ics));
    auto with = mhpinn::loss_value(p, b, ics, cfg, mhpinn::par::Execution::serial(), &ws);
    auto without = mhpinn::loss_value(p, b, ics, cfg, mhpinn::par::Execution::serial());
    CHECK(with.total == without.total);
}

TEST_CASE("non-finite losses are reported with their location") {
    Arch arch;
    arch.depth = 1;
    arch.width = 4;
    arch.n_b = 3;
    arch.n_heads = 2;
    ModelParams p = make_params(arch, 2);
    p.head(1, 0) = 1e200;  // residual square overflows
    auto ics = tiny_ics(2);
    CollocationBatch b = tiny_batch(10, 4);
    LossConfig cfg;
    try {
        mhpinn::loss_value(p, b, ics, cfg);
        CHECK(false);
    } catch (const std::runtime_error& e) {
        std::string msg = e.what();
        CHECK(msg.find("head") != std::string::npos);
        CHECK(msg.find("point") != std::string::npos);
    }
}

TEST_CASE("loss input validation") {
    Arch arch;
    arch.n_heads = 2;
    ModelParams p = make_params(arch, 1);
    auto ics = tiny_ics(2);
    LossConfig cfg;
    CollocationBatch empty;
    CHECK_THROWS_AS(mhpinn::loss_value(p, empty, ics, cfg), std::invalid_argument);

    CollocationBatch b = tiny_batch(4, 1);
    auto three = tiny_ics(3);
    CHECK_THROWS_AS(mhpinn::loss_value(p, b, three, cfg), std::invalid_argument);

    LossConfig bad = cfg;
    bad.lambda_ortho = -1.0;
    CHECK_THROWS_AS(mhpinn::loss_value(p, b, ics, bad), std::invalid_argument);
    bad = cfg;
    bad.weighting.a = -0.5;
    CHECK_THROWS_AS(mhpinn::loss_value(p, b, ics, bad), std::invalid_argument);

    std::vector<double> short_grad(3, 0.0);
    CHECK_THROWS_AS(mhpinn::total_loss(p, b, ics, cfg, short_grad), std::invalid_argument);
}
