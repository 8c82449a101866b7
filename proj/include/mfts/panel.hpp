#pragma once

#include "mfts/age_grid.hpp"
#include "mfts/group_structure.hpp"
#include "mfts/series_key.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <filesystem>
#include <optional>
#include <vector>

namespace mfts {

/// Exposure-share matrix mapping bottom-level rates to all series for a
/// given year. Rows follow the panel's canonical series order; the bottom
/// block is the identity.
struct SummingMatrix {
    int year = 0;
    std::vector<SeriesKey> rows;
    std::vector<SeriesKey> cols;
    Eigen::MatrixXd entries; // rows.size() x cols.size()
};

struct CoherenceReport {
    double max_abs_residual = 0.0;
    long cells_checked = 0;
    long cells_skipped = 0;
};

/// Deaths, exposures and derived rates for every (year, age, series) cell.
/// Aggregate series are always recomputed from the bottom level, so the
/// stored data is coherent by construction; user-supplied aggregates are
/// only cross-checked.
class MortalityPanel {
  public:
    MortalityPanel() = default;

    const std::vector<int>& years() const { return years_; }
    const AgeGrid& ages() const { return ages_; }
    const std::vector<SeriesKey>& series() const { return series_; }
    const GroupStructure& structure() const { return structure_; }

    int year_index(int year) const;
    int series_index(const SeriesKey& key) const;

    bool masked(int t, int s, int a) const { return mask_[cell(t, s, a)] != 0; }
    double deaths(int t, int s, int a) const { return deaths_[cell(t, s, a)]; }
    double exposures(int t, int s, int a) const { return exposures_[cell(t, s, a)]; }

    /// Central mortality rate D/E; only defined where the cell is unmasked.
    double rate(int t, int s, int a) const { return deaths_[cell(t, s, a)] / exposures_[cell(t, s, a)]; }

    /// Panel restricted to years <= last_year (shared grid and structure).
    MortalityPanel truncate_after(int last_year) const;

    /// Number of aggregate cells that disagreed with the recomputed value by
    /// more than 1e-9 relative when the panel was loaded.
    long aggregate_mismatches() const { return aggregate_mismatches_; }

    static MortalityPanel load(const std::filesystem::path& deaths_csv,
                               const std::filesystem::path& exposures_csv,
                               const GroupStructure& structure,
                               const AgeGrid& grid = AgeGrid::five_year_default());

    /// Builds a panel from bottom-level data, synthesizing every aggregate
    /// by exact summation. Matrices are (year x (bottom series * ages)),
    /// cell layout series-major. NaN marks a missing cell.
    static MortalityPanel from_bottom(const std::vector<int>& years, const AgeGrid& grid,
                                      const GroupStructure& structure,
                                      const Eigen::MatrixXd& bottom_deaths,
                                      const Eigen::MatrixXd& bottom_exposures);

    void write(const std::filesystem::path& deaths_csv,
               const std::filesystem::path& exposures_csv) const;

    /// Fault-injection hook for validation tooling: overwrites one cell
    /// without resynthesizing aggregates, so coherence checks can see the
    /// perturbation.
    void set_cell(int t, int s, int a, double deaths, double exposures) {
        const std::size_t idx = cell(t, s, a);
        deaths_[idx] = deaths;
        exposures_[idx] = exposures;
        mask_[idx] = (!std::isfinite(deaths) || !std::isfinite(exposures) || exposures == 0.0);
    }

  private:
    std::size_t cell(int t, int s, int a) const {
        return (static_cast<std::size_t>(t) * series_.size() + s) * ages_.size() + a;
    }

    std::vector<int> years_;
    AgeGrid ages_;
    std::vector<SeriesKey> series_;
    GroupStructure structure_;
    std::vector<double> deaths_;
    std::vector<double> exposures_;
    std::vector<std::uint8_t> mask_;
    long aggregate_mismatches_ = 0;
};

/// Exposure ratios E_bottom / E_row for `year`.
SummingMatrix build_summing_matrix(const MortalityPanel& panel, int year);

/// Max over (series, age) of |R_row - sum_b S[row,b] R_b| for `year`,
/// skipping any cell whose contributors are masked.
CoherenceReport verify_coherence(const MortalityPanel& panel, int year);

} // namespace mfts
