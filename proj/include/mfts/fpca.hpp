#pragma once

#include "mfts/age_grid.hpp"
#include "mfts/series_key.hpp"
#include "mfts/smoothing.hpp"

#include <Eigen/Dense>

#include <filesystem>
#include <vector>

namespace mfts {

/// A block of curves decomposed jointly: n years of omega series sampled on
/// p grid points. Row t is the stacked vector (series-major) of year t.
struct CurveBlock {
    std::vector<SeriesKey> keys;
    std::vector<int> years;
    int omega = 0;
    int p = 0;
    Eigen::MatrixXd data; // n x (omega*p)
};

CurveBlock make_block(const SmoothCurveSet& curves, const std::vector<SeriesKey>& keys);

enum class EigenPath { Auto, Primal, Dual };

struct FpcaOptions {
    double variance_threshold = 0.95;
    bool trapezoid_quadrature = false;
    EigenPath path = EigenPath::Auto;
};

/// Principal component decomposition of a curve block: per-series means,
/// eigenvalues, stacked eigenfunctions orthonormal under the quadrature
/// inner product, and one common score series per component.
struct FpcaModel {
    std::vector<SeriesKey> keys;
    std::vector<int> years;
    int omega = 0;
    int p = 0;
    Eigen::VectorXd quadrature;     // p quadrature weights
    Eigen::VectorXd mean;           // stacked omega*p
    Eigen::VectorXd eigenvalues;    // descending, all > 0 unless degenerate
    Eigen::MatrixXd eigenfunctions; // (omega*p) x r, column k is phi_k stacked
    Eigen::MatrixXd scores;         // n x r
    Eigen::VectorXd explained;      // cumulative variance fractions
    int K = 1;
    bool degenerate = false;

    int rank() const { return static_cast<int>(eigenvalues.size()); }

    /// View of phi_k for one series of the block (length p).
    Eigen::VectorXd eigenfunction(int k, int series) const {
        return eigenfunctions.col(k).segment(static_cast<Eigen::Index>(series) * p, p);
    }
    Eigen::VectorXd mean_of(int series) const {
        return mean.segment(static_cast<Eigen::Index>(series) * p, p);
    }

    void save(const std::filesystem::path& stem) const;
    static FpcaModel load(const std::filesystem::path& stem);
};

Eigen::VectorXd quadrature_weights(const std::vector<double>& centers, bool trapezoid);

/// Pointwise average over years, stacked series-major.
Eigen::VectorXd estimate_mean(const CurveBlock& block);

FpcaModel decompose(const CurveBlock& block, const Eigen::VectorXd& quadrature,
                    const FpcaOptions& options = {});
FpcaModel decompose(const CurveBlock& block, const FpcaOptions& options = {});

/// Smallest K whose leading eigenvalues reach `threshold` of the total
/// positive spectrum. All-zero spectra fall back to K=1.
int select_K(const Eigen::VectorXd& eigenvalues, double threshold = 0.95);

/// mean + sum_k scores[k] * phi_k over the first `scores.size()` components;
/// score length must equal model.K.
Eigen::VectorXd reconstruct(const FpcaModel& model, const Eigen::VectorXd& scores);

/// As reconstruct, with an explicit component count k <= rank.
Eigen::VectorXd reconstruct_k(const FpcaModel& model, const Eigen::VectorXd& scores, int k);

} // namespace mfts
