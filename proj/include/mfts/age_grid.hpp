#pragma once

#include "mfts/error.hpp"

#include <string>
#include <vector>

namespace mfts {

/// Discretization of the age axis: labelled groups with representative
/// centers. Every curve in a panel is sampled on exactly this grid.
struct AgeGrid {
    std::vector<std::string> labels;
    std::vector<double> centers;

    std::size_t size() const { return labels.size(); }

    int index_of(const std::string& label) const {
        for (std::size_t i = 0; i < labels.size(); ++i)
            if (labels[i] == label) return static_cast<int>(i);
        return -1;
    }

    void validate() const;

    /// 18 five-year groups "0-4" .. "80-84" plus the open group "85+".
    /// Centers are interval midpoints; the open group is assigned 87.5.
    static AgeGrid five_year_default();
};

} // namespace mfts
