#pragma once

#include "mfts/error.hpp"

#include <string>
#include <tuple>
#include <vector>

namespace mfts {

enum class Level { National, Region, Area };
enum class Sex { F, M, T };

std::string to_string(Level level);
std::string to_string(Sex sex);
Level parse_level(const std::string& s);
Sex parse_sex(const std::string& s);

/// One mortality series: a geographic node crossed with a sex.
/// Text form is "level:geo*sex", e.g. "region:R3*F".
struct SeriesKey {
    Level level = Level::National;
    std::string geo;
    Sex sex = Sex::T;

    std::string str() const;
    static SeriesKey parse(const std::string& text);

    bool operator==(const SeriesKey& o) const {
        return level == o.level && sex == o.sex && geo == o.geo;
    }
};

// Sort tier of the six-level listing: national total, national by sex,
// region totals, region by sex, area totals, area by sex.
int canonical_tier(const SeriesKey& key);

// Digit runs compare numerically so R2 sorts before R10.
bool natural_less(const std::string& a, const std::string& b);

// Total order: tier, then geo (natural), then sex (F < M < T).
bool canonical_less(const SeriesKey& a, const SeriesKey& b);

void canonical_sort(std::vector<SeriesKey>& keys);

} // namespace mfts
