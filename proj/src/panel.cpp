#include "mfts/panel.hpp"

#include "mfts/csv.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <unordered_map>

namespace mfts {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct CellTable {
    // value per (year, series, age); NaN when absent from the file
    std::vector<double> values;
};

} // namespace

int MortalityPanel::year_index(int year) const {
    for (std::size_t i = 0; i < years_.size(); ++i)
        if (years_[i] == year) return static_cast<int>(i);
    return -1;
}

int MortalityPanel::series_index(const SeriesKey& key) const {
    for (std::size_t i = 0; i < series_.size(); ++i)
        if (series_[i] == key) return static_cast<int>(i);
    return -1;
}

MortalityPanel MortalityPanel::truncate_after(int last_year) const {
    MortalityPanel out;
    out.ages_ = ages_;
    out.series_ = series_;
    out.structure_ = structure_;
    out.aggregate_mismatches_ = aggregate_mismatches_;
    const std::size_t stride = series_.size() * ages_.size();
    for (std::size_t t = 0; t < years_.size(); ++t) {
        if (years_[t] > last_year) continue;
        out.years_.push_back(years_[t]);
        out.deaths_.insert(out.deaths_.end(), deaths_.begin() + t * stride,
                           deaths_.begin() + (t + 1) * stride);
        out.exposures_.insert(out.exposures_.end(), exposures_.begin() + t * stride,
                              exposures_.begin() + (t + 1) * stride);
        out.mask_.insert(out.mask_.end(), mask_.begin() + t * stride,
                         mask_.begin() + (t + 1) * stride);
    }
    if (out.years_.empty()) throw Error("truncate_after removed every year");
    return out;
}

MortalityPanel MortalityPanel::from_bottom(const std::vector<int>& years, const AgeGrid& grid,
                                           const GroupStructure& structure,
                                           const Eigen::MatrixXd& bottom_deaths,
                                           const Eigen::MatrixXd& bottom_exposures) {
    grid.validate();
    structure.validate();
    const std::size_t n_years = years.size();
    const std::size_t n_ages = grid.size();
    const std::size_t n_bottom = structure.bottom.size();
    if (bottom_deaths.rows() != static_cast<Eigen::Index>(n_years) ||
        bottom_deaths.cols() != static_cast<Eigen::Index>(n_bottom * n_ages) ||
        bottom_exposures.rows() != bottom_deaths.rows() ||
        bottom_exposures.cols() != bottom_deaths.cols())
        throw Error("bottom data dimensions do not match years/structure/grid");

    MortalityPanel panel;
    panel.years_ = years;
    panel.ages_ = grid;
    panel.structure_ = structure;
    panel.series_ = structure.all_keys();
    const std::size_t n_series = panel.series_.size();
    panel.deaths_.assign(n_years * n_series * n_ages, kNaN);
    panel.exposures_.assign(n_years * n_series * n_ages, kNaN);
    panel.mask_.assign(n_years * n_series * n_ages, 1);

    std::vector<int> series_of_bottom(n_bottom);
    for (std::size_t b = 0; b < n_bottom; ++b) {
        const int s = panel.series_index(structure.bottom[b]);
        if (s < 0) throw Error("internal: bottom key missing from canonical list");
        series_of_bottom[b] = s;
    }

    for (std::size_t t = 0; t < n_years; ++t) {
        for (std::size_t b = 0; b < n_bottom; ++b) {
            const int s = series_of_bottom[b];
            for (std::size_t a = 0; a < n_ages; ++a) {
                const double d = bottom_deaths(t, b * n_ages + a);
                const double e = bottom_exposures(t, b * n_ages + a);
                const std::size_t idx = panel.cell(static_cast<int>(t), s, static_cast<int>(a));
                panel.deaths_[idx] = d;
                panel.exposures_[idx] = e;
                panel.mask_[idx] = (!std::isfinite(d) || !std::isfinite(e) || e == 0.0) ? 1 : 0;
            }
        }
        // aggregates are exact sums of their members; a single missing
        // member masks the aggregate cell
        for (const auto& [key, members] : structure.aggregates) {
            const int s = panel.series_index(key);
            for (std::size_t a = 0; a < n_ages; ++a) {
                double d = 0.0, e = 0.0;
                bool missing = false;
                for (int m : members) {
                    const std::size_t mi =
                        panel.cell(static_cast<int>(t), series_of_bottom[m], static_cast<int>(a));
                    if (panel.mask_[mi]) {
                        missing = true;
                        break;
                    }
                    d += panel.deaths_[mi];
                    e += panel.exposures_[mi];
                }
                const std::size_t idx = panel.cell(static_cast<int>(t), s, static_cast<int>(a));
                if (missing || e == 0.0) {
                    panel.mask_[idx] = 1;
                } else {
                    panel.deaths_[idx] = d;
                    panel.exposures_[idx] = e;
                    panel.mask_[idx] = 0;
                }
            }
        }
    }
    return panel;
}

namespace {

void ingest_csv(const std::filesystem::path& path, const AgeGrid& grid, const std::vector<int>& years,
                const std::unordered_map<std::string, int>& bottom_lookup,
                const std::unordered_map<std::string, int>& agg_lookup, bool is_deaths,
                Eigen::MatrixXd& bottom_values, Eigen::MatrixXd& agg_values) {
    const CsvTable table = read_csv(path);
    const int c_year = table.column("year");
    const int c_age = table.column("age_group");
    const int c_level = table.column("level");
    const int c_geo = table.column("geo_id");
    const int c_sex = table.column("sex");
    const int c_value = table.column("value");

    const std::size_t n_ages = grid.size();
    std::unordered_map<int, int> year_lookup;
    for (std::size_t i = 0; i < years.size(); ++i) year_lookup[years[i]] = static_cast<int>(i);

    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        const std::string where = path.string() + ":" + std::to_string(table.line_numbers[r]);
        SeriesKey key;
        int age_idx, year_val;
        double value;
        try {
            year_val = static_cast<int>(parse_long(row[c_year], "year"));
            key.level = parse_level(row[c_level]);
            key.geo = row[c_geo];
            key.sex = parse_sex(row[c_sex]);
            age_idx = grid.index_of(row[c_age]);
            if (age_idx < 0) throw Error("unknown age group '" + row[c_age] + "'");
            value = parse_double(row[c_value], "value");
        } catch (const Error& e) {
            throw Error(where + ": " + e.what());
        }
        if (!std::isfinite(value))
            throw Error(where + ": non-finite value for " + key.str());
        if (is_deaths && value < 0.0)
            throw Error(where + ": negative death count for " + key.str());
        if (!is_deaths && value < 0.0)
            throw Error(where + ": negative exposure for " + key.str());

        const auto yit = year_lookup.find(year_val);
        if (yit == year_lookup.end()) continue; // year collected in a prior pass
        const int t = yit->second;
        const auto bit = bottom_lookup.find(key.str());
        if (bit != bottom_lookup.end()) {
            double& slot = bottom_values(t, bit->second * n_ages + age_idx);
            if (std::isfinite(slot))
                throw Error(where + ": duplicate cell (" + std::to_string(year_val) + ", " +
                            grid.labels[age_idx] + ", " + key.str() + ")");
            slot = value;
            continue;
        }
        const auto ait = agg_lookup.find(key.str());
        if (ait == agg_lookup.end())
            throw Error(where + ": series " + key.str() + " is not part of the structure");
        double& slot = agg_values(t, ait->second * n_ages + age_idx);
        if (std::isfinite(slot))
            throw Error(where + ": duplicate cell (" + std::to_string(year_val) + ", " +
                        grid.labels[age_idx] + ", " + key.str() + ")");
        slot = value;
    }
}

std::vector<int> collect_years(const std::filesystem::path& path) {
    const CsvTable table = read_csv(path);
    const int c_year = table.column("year");
    std::vector<int> years;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const int y = static_cast<int>(
            parse_long(table.rows[r][c_year],
                       path.string() + ":" + std::to_string(table.line_numbers[r])));
        bool seen = false;
        for (int existing : years) seen = seen || existing == y;
        if (!seen) years.push_back(y);
    }
    std::sort(years.begin(), years.end());
    return years;
}

} // namespace

MortalityPanel MortalityPanel::load(const std::filesystem::path& deaths_csv,
                                    const std::filesystem::path& exposures_csv,
                                    const GroupStructure& structure, const AgeGrid& grid) {
    structure.validate();
    grid.validate();
    std::vector<int> years = collect_years(deaths_csv);
    for (int y : collect_years(exposures_csv)) {
        bool seen = false;
        for (int existing : years) seen = seen || existing == y;
        if (!seen) years.push_back(y);
    }
    std::sort(years.begin(), years.end());
    if (years.empty()) throw Error("no data rows in " + deaths_csv.string());

    const std::size_t n_ages = grid.size();
    const std::size_t n_bottom = structure.bottom.size();
    std::unordered_map<std::string, int> bottom_lookup, agg_lookup;
    for (std::size_t b = 0; b < n_bottom; ++b)
        bottom_lookup[structure.bottom[b].str()] = static_cast<int>(b);
    for (std::size_t g = 0; g < structure.aggregates.size(); ++g)
        agg_lookup[structure.aggregates[g].first.str()] = static_cast<int>(g);

    Eigen::MatrixXd bottom_d = Eigen::MatrixXd::Constant(years.size(), n_bottom * n_ages, kNaN);
    Eigen::MatrixXd bottom_e = Eigen::MatrixXd::Constant(years.size(), n_bottom * n_ages, kNaN);
    Eigen::MatrixXd agg_d =
        Eigen::MatrixXd::Constant(years.size(), structure.aggregates.size() * n_ages, kNaN);
    Eigen::MatrixXd agg_e =
        Eigen::MatrixXd::Constant(years.size(), structure.aggregates.size() * n_ages, kNaN);

    ingest_csv(deaths_csv, grid, years, bottom_lookup, agg_lookup, true, bottom_d, agg_d);
    ingest_csv(exposures_csv, grid, years, bottom_lookup, agg_lookup, false, bottom_e, agg_e);

    for (std::size_t b = 0; b < n_bottom; ++b) {
        const bool any = bottom_d.middleCols(b * n_ages, n_ages).array().isFinite().any() ||
                         bottom_e.middleCols(b * n_ages, n_ages).array().isFinite().any();
        if (!any)
            throw Error("bottom series " + structure.bottom[b].str() +
                        " has no data in the input files");
    }

    MortalityPanel panel = from_bottom(years, grid, structure, bottom_d, bottom_e);

    // user-supplied aggregates are cross-checked, never trusted
    long mismatches = 0;
    for (std::size_t g = 0; g < structure.aggregates.size(); ++g) {
        const int s = panel.series_index(structure.aggregates[g].first);
        for (std::size_t t = 0; t < years.size(); ++t) {
            for (std::size_t a = 0; a < n_ages; ++a) {
                const std::size_t idx = panel.cell(static_cast<int>(t), s, static_cast<int>(a));
                const double dv = agg_d(t, g * n_ages + a);
                const double ev = agg_e(t, g * n_ages + a);
                if (std::isfinite(dv) && !panel.mask_[idx]) {
                    const double ref = panel.deaths_[idx];
                    if (std::abs(dv - ref) > 1e-9 * std::max(1.0, std::abs(ref))) ++mismatches;
                }
                if (std::isfinite(ev) && !panel.mask_[idx]) {
                    const double ref = panel.exposures_[idx];
                    if (std::abs(ev - ref) > 1e-9 * std::max(1.0, std::abs(ref))) ++mismatches;
                }
            }
        }
    }
    panel.aggregate_mismatches_ = mismatches;
    return panel;
}

void MortalityPanel::write(const std::filesystem::path& deaths_csv,
                           const std::filesystem::path& exposures_csv) const {
    std::ostringstream d_out, e_out;
    d_out << "year,age_group,level,geo_id,sex,value\n";
    e_out << "year,age_group,level,geo_id,sex,value\n";
    for (std::size_t t = 0; t < years_.size(); ++t) {
        for (std::size_t s = 0; s < series_.size(); ++s) {
            const SeriesKey& key = series_[s];
            const std::string prefix = std::to_string(years_[t]) + ",";
            const std::string suffix =
                "," + to_string(key.level) + "," + key.geo + "," + to_string(key.sex) + ",";
            for (std::size_t a = 0; a < ages_.size(); ++a) {
                const std::size_t idx = cell(static_cast<int>(t), static_cast<int>(s),
                                             static_cast<int>(a));
                const double d = deaths_[idx];
                const double e = exposures_[idx];
                if (std::isfinite(d))
                    d_out << prefix << ages_.labels[a] << suffix << format_full(d) << "\n";
                if (std::isfinite(e))
                    e_out << prefix << ages_.labels[a] << suffix << format_full(e) << "\n";
            }
        }
    }
    write_file_atomic(deaths_csv, d_out.str());
    write_file_atomic(exposures_csv, e_out.str());
}

SummingMatrix build_summing_matrix(const MortalityPanel& panel, int year) {
    const int t = panel.year_index(year);
    if (t < 0) throw Error("year " + std::to_string(year) + " not in panel");
    const auto& structure = panel.structure();
    const std::size_t n_bottom = structure.bottom.size();
    const std::size_t n_ages = panel.ages().size();

    SummingMatrix sm;
    sm.year = year;
    sm.rows = panel.series();
    sm.cols = structure.bottom;
    sm.entries = Eigen::MatrixXd::Zero(sm.rows.size(), n_bottom);

    // exposure of a bottom key for the year, pooled over ages
    std::vector<double> bottom_exposure(n_bottom, 0.0);
    for (std::size_t b = 0; b < n_bottom; ++b) {
        const int s = panel.series_index(structure.bottom[b]);
        double total = 0.0;
        for (std::size_t a = 0; a < n_ages; ++a) {
            const double e = panel.exposures(t, s, static_cast<int>(a));
            if (!std::isfinite(e) || e <= 0.0)
                throw Error("missing exposure for bottom series " + structure.bottom[b].str() +
                            " in year " + std::to_string(year));
            total += e;
        }
        bottom_exposure[b] = total;
    }

    for (std::size_t r = 0; r < sm.rows.size(); ++r) {
        const auto members = structure.members_of(sm.rows[r]);
        double row_exposure = 0.0;
        for (int m : members) row_exposure += bottom_exposure[m];
        for (int m : members) sm.entries(r, m) = bottom_exposure[m] / row_exposure;
    }
    return sm;
}

CoherenceReport verify_coherence(const MortalityPanel& panel, int year) {
    const int t = panel.year_index(year);
    if (t < 0) throw Error("year " + std::to_string(year) + " not in panel");
    const auto& structure = panel.structure();
    const std::size_t n_ages = panel.ages().size();

    // per-age exposure shares; the matrix in build_summing_matrix pools ages
    std::vector<int> bottom_series(structure.bottom.size());
    for (std::size_t b = 0; b < structure.bottom.size(); ++b)
        bottom_series[b] = panel.series_index(structure.bottom[b]);

    CoherenceReport report;
    for (std::size_t s = 0; s < panel.series().size(); ++s) {
        const auto members = structure.members_of(panel.series()[s]);
        for (std::size_t a = 0; a < n_ages; ++a) {
            bool skip = panel.masked(t, static_cast<int>(s), static_cast<int>(a));
            double row_exposure = 0.0;
            for (int m : members) {
                if (panel.masked(t, bottom_series[m], static_cast<int>(a))) {
                    skip = true;
                    break;
                }
                row_exposure += panel.exposures(t, bottom_series[m], static_cast<int>(a));
            }
            if (skip || row_exposure <= 0.0) {
                ++report.cells_skipped;
                continue;
            }
            double combined = 0.0;
            for (int m : members) {
                const double share =
                    panel.exposures(t, bottom_series[m], static_cast<int>(a)) / row_exposure;
                combined += share * panel.rate(t, bottom_series[m], static_cast<int>(a));
            }
            const double resid =
                std::abs(panel.rate(t, static_cast<int>(s), static_cast<int>(a)) - combined);
            report.max_abs_residual = std::max(report.max_abs_residual, resid);
            ++report.cells_checked;
        }
    }
    return report;
}

} // namespace mfts
