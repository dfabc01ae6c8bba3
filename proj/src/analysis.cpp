#include "mhpinn/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <stdexcept>

namespace mhpinn {

Matrix collect_latents(const ModelParams& p, const CollocationBatch& batch,
                       const par::Execution& ex) {
    const std::size_t m = batch.size();
    if (m < static_cast<std::size_t>(p.arch.n_b))
        throw std::invalid_argument("collect_latents: need at least n_b points");
    Matrix s(static_cast<int>(m), p.arch.n_b);
    par::for_each(m, ex, [&](std::size_t i) {
        static thread_local std::vector<double> h;
        body_values(p, batch.x[i], batch.t[i], batch.nu[i], h);
        std::copy(h.begin(), h.end(), s.data.begin() + i * static_cast<std::size_t>(p.arch.n_b));
    });
    return s;
}

StandardizeResult standardize(const Matrix& sample) {
    const int m = sample.rows, n = sample.cols;
    if (m < 2) throw std::invalid_argument("standardize: need at least 2 rows");
    StandardizeResult r;
    r.mean.resize(n);
    r.stddev.resize(n);
    for (int j = 0; j < n; ++j) {
        double mu = 0.0;
        for (int i = 0; i < m; ++i) mu += sample(i, j);
        mu /= m;
        double ss = 0.0;
        for (int i = 0; i < m; ++i) {
            const double d = sample(i, j) - mu;
            ss += d * d;
        }
        const double sd = std::sqrt(ss / (m - 1));
        r.mean[j] = mu;
        r.stddev[j] = sd;
        if (sd < 1e-14 * (std::abs(mu) + 1.0)) {
            r.excluded.push_back(j);
            r.warnings.push_back("column " + std::to_string(j) +
                                 " has zero variance; excluded from PCA");
        } else {
            r.kept.push_back(j);
        }
    }
    r.standardized = Matrix(m, static_cast<int>(r.kept.size()));
    for (int i = 0; i < m; ++i)
        for (std::size_t k = 0; k < r.kept.size(); ++k) {
            const int j = r.kept[k];
            r.standardized(i, static_cast<int>(k)) = (sample(i, j) - r.mean[j]) / r.stddev[j];
        }
    return r;
}

std::vector<double> symmetric_eigenvalues(Matrix a) {
    if (a.rows != a.cols) throw std::invalid_argument("symmetric_eigenvalues: matrix not square");
    const int n = a.rows;
    if (n == 0) return {};
    const double anorm = std::sqrt(frobenius_sq(a));
    const double tol = 1e-12 * (anorm > 0.0 ? anorm : 1.0);

    auto offdiag = [&]() {
        double s = 0.0;
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j) s += 2.0 * a(i, j) * a(i, j);
        return std::sqrt(s);
    };

    for (int sweep = 0; sweep < 100; ++sweep) {
        if (offdiag() <= tol) {
            std::vector<double> ev(n);
            for (int i = 0; i < n; ++i) ev[i] = a(i, i);
            std::sort(ev.begin(), ev.end(), std::greater<double>());
            return ev;
        }
        for (int p = 0; p < n - 1; ++p)
            for (int q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                if (apq == 0.0) continue;
                const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (int k = 0; k < n; ++k) {
                    const double akp = a(k, p), akq = a(k, q);
                    a(k, p) = c * akp - s * akq;
                    a(k, q) = s * akp + c * akq;
                }
                for (int k = 0; k < n; ++k) {
                    const double apk = a(p, k), aqk = a(q, k);
                    a(p, k) = c * apk - s * aqk;
                    a(q, k) = s * apk + c * aqk;
                }
            }
    }
    throw std::runtime_error("symmetric_eigenvalues: Jacobi sweep did not converge");
}

int SpectrumReport::r_at(double tau) const {
    for (std::size_t j = 0; j < cumulative.size(); ++j)
        if (cumulative[j] >= tau - 1e-12) return static_cast<int>(j) + 1;
    return static_cast<int>(cumulative.size());
}

SpectrumReport pca_spectrum(const Matrix& standardized) {
    const int m = standardized.rows, n = standardized.cols;
    if (m < 1 || n < 1) throw std::invalid_argument("pca_spectrum: empty sample");
    Matrix cov(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) {
            double s = 0.0;
            for (int k = 0; k < m; ++k) s += standardized(k, i) * standardized(k, j);
            cov(i, j) = cov(j, i) = s / m;
        }
    std::vector<double> ev = symmetric_eigenvalues(std::move(cov));
    SpectrumReport rep;
    rep.eigenvalues.reserve(ev.size());
    for (double v : ev) {
        if (v < -1e-10)
            throw std::runtime_error("pca_spectrum: covariance eigenvalue " + std::to_string(v) +
                                     " is negative beyond tolerance");
        rep.eigenvalues.push_back(std::max(v, 0.0));
    }
    const double total = std::accumulate(rep.eigenvalues.begin(), rep.eigenvalues.end(), 0.0);
    if (!(total > 0.0)) throw std::runtime_error("pca_spectrum: zero total variance");
    double run = 0.0;
    for (double v : rep.eigenvalues) {
        const double ratio = v / total;
        run += ratio;
        rep.explained_ratio.push_back(ratio);
        rep.cumulative.push_back(run);
    }
    return rep;
}

SpectrumReport latent_spectrum(const ModelParams& p, const CollocationBatch& batch, bool mixed,
                               const par::Execution& ex) {
    Matrix sample = collect_latents(p, batch, ex);
    if (mixed) sample = matmul(sample, transpose(p.head));
    StandardizeResult st = standardize(sample);
    SpectrumReport rep = pca_spectrum(st.standardized);
    // Zero-variance columns re-enter as exact zero components so the report
    // length always matches the sample width.
    for (std::size_t i = 0; i < st.excluded.size(); ++i) {
        rep.eigenvalues.push_back(0.0);
        rep.explained_ratio.push_back(0.0);
        rep.cumulative.push_back(rep.cumulative.empty() ? 0.0 : rep.cumulative.back());
    }
    rep.excluded_columns = st.excluded;
    return rep;
}

namespace {

// Average ranks (ties share the mean rank), for the rank correlation.
std::vector<double> average_ranks(const std::vector<double>& v) {
    const std::size_t n = v.size();
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> rank(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && v[idx[j + 1]] == v[idx[i]]) ++j;
        const double r = 0.5 * (static_cast<double>(i) + static_cast<double>(j)) + 1.0;
        for (std::size_t k = i; k <= j; ++k) rank[idx[k]] = r;
        i = j + 1;
    }
    return rank;
}

double spearman(const std::vector<double>& a, const std::vector<double>& b) {
    const auto ra = average_ranks(a), rb = average_ranks(b);
    const std::size_t n = ra.size();
    double ma = 0.0, mb = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        ma += ra[i];
        mb += rb[i];
    }
    ma /= n;
    mb /= n;
    double sab = 0.0, sa = 0.0, sb = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sab += (ra[i] - ma) * (rb[i] - mb);
        sa += (ra[i] - ma) * (ra[i] - ma);
        sb += (rb[i] - mb) * (rb[i] - mb);
    }
    if (sa == 0.0 || sb == 0.0) return 1.0;  // constant ranks on both sides
    return sab / std::sqrt(sa * sb);
}

}  // namespace

StabilityMetrics spectrum_stability(const std::vector<SpectrumReport>& reports) {
    if (reports.size() < 2)
        throw std::invalid_argument("spectrum_stability: need at least 2 reports");
    const std::size_t n = reports.front().explained_ratio.size();
    for (const auto& r : reports)
        if (r.explained_ratio.size() != n)
            throw std::invalid_argument("spectrum_stability: reports have different lengths");
    StabilityMetrics m;
    for (std::size_t i = 0; i < reports.size(); ++i)
        for (std::size_t j = i + 1; j < reports.size(); ++j) {
            double linf = 0.0;
            for (std::size_t k = 0; k < n; ++k)
                linf = std::max(linf, std::abs(reports[i].explained_ratio[k] -
                                               reports[j].explained_ratio[k]));
            m.max_linf = std::max(m.max_linf, linf);
            m.min_spearman = std::min(
                m.min_spearman, spearman(reports[i].explained_ratio, reports[j].explained_ratio));
        }
    return m;
}

void write_spectrum_csv(const SpectrumReport& report, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write spectrum file: " + path);
    os << "component,eigenvalue,explained_ratio,cumulative\n";
    char buf[128];
    for (std::size_t j = 0; j < report.eigenvalues.size(); ++j) {
        std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g\n", j + 1, report.eigenvalues[j],
                      report.explained_ratio[j], report.cumulative[j]);
        os << buf;
    }
}

}  // namespace mhpinn
