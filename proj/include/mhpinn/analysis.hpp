#pragma once

#include <string>
#include <vector>

#include "mhpinn/model.hpp"
#include "mhpinn/parallel.hpp"
#include "mhpinn/sampling.hpp"

namespace mhpinn {

/// Latent value rows H(x,t,nu), one per batch point: M x n_b.
Matrix collect_latents(const ModelParams& p, const CollocationBatch& batch,
                       const par::Execution& ex = {});

/// Column z-scoring with the unbiased (1/(M-1)) variance. Columns whose
/// standard deviation is (numerically) zero are excluded from the output and
/// reported in `excluded` with a warning string.
struct StandardizeResult {
    Matrix standardized;        // M x kept
    std::vector<int> kept;      // original column indices, ascending
    std::vector<int> excluded;  // zero-variance columns
    std::vector<double> mean;   // per original column
    std::vector<double> stddev;
    std::vector<std::string> warnings;
};
StandardizeResult standardize(const Matrix& sample);

/// Eigenvalues of a symmetric matrix by the cyclic Jacobi method, sorted
/// descending. Throws if the off-diagonal norm has not dropped below
/// 1e-12 * |A|_F after 100 sweeps.
std::vector<double> symmetric_eigenvalues(Matrix a);

struct SpectrumReport {
    std::vector<double> eigenvalues;      // descending, clamped at 0
    std::vector<double> explained_ratio;  // eigenvalue / sum
    std::vector<double> cumulative;       // running sum of ratios
    std::vector<int> excluded_columns;    // zero-variance inputs, ratio 0

    /// Smallest r with cumulative[r-1] >= tau (small tolerance).
    int r_at(double tau) const;
};

/// PCA of the (1/M) X^T X covariance of an already-standardized sample.
SpectrumReport pca_spectrum(const Matrix& standardized);

/// collect -> (optionally mix rows through the head matrix) -> standardize
/// -> pca. Excluded zero-variance columns appear as zero eigenvalues so the
/// report always has n_b (or n_heads, when mixed) components.
SpectrumReport latent_spectrum(const ModelParams& p, const CollocationBatch& batch, bool mixed,
                               const par::Execution& ex = {});

struct StabilityMetrics {
    double max_linf = 0.0;     // max pairwise L_inf between ratio vectors
    double min_spearman = 1.0; // min pairwise rank correlation of the ratios
};

/// Cross-run spread of explained-ratio vectors; needs >= 2 reports of equal
/// length.
StabilityMetrics spectrum_stability(const std::vector<SpectrumReport>& reports);

void write_spectrum_csv(const SpectrumReport& report, const std::string& path);

}  // namespace mhpinn
