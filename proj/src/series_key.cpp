#include "mfts/series_key.hpp"

#include <algorithm>
#include <cctype>

namespace mfts {

std::string to_string(Level level) {
    switch (level) {
    case Level::National: return "national";
    case Level::Region: return "region";
    case Level::Area: return "area";
    }
    return "?";
}

std::string to_string(Sex sex) {
    switch (sex) {
    case Sex::F: return "F";
    case Sex::M: return "M";
    case Sex::T: return "T";
    }
    return "?";
}

Level parse_level(const std::string& s) {
    if (s == "national") return Level::National;
    if (s == "region") return Level::Region;
    if (s == "area") return Level::Area;
    throw Error("unknown level '" + s + "' (expected national|region|area)");
}

Sex parse_sex(const std::string& s) {
    if (s == "F") return Sex::F;
    if (s == "M") return Sex::M;
    if (s == "T") return Sex::T;
    throw Error("unknown sex '" + s + "' (expected F|M|T)");
}

std::string SeriesKey::str() const {
    return to_string(level) + ":" + geo + "*" + to_string(sex);
}

SeriesKey SeriesKey::parse(const std::string& text) {
    const auto colon = text.find(':');
    const auto star = text.rfind('*');
    if (colon == std::string::npos || star == std::string::npos || star < colon)
        throw Error("malformed series key '" + text + "' (expected level:geo*sex)");
    SeriesKey key;
    key.level = parse_level(text.substr(0, colon));
    key.geo = text.substr(colon + 1, star - colon - 1);
    key.sex = parse_sex(text.substr(star + 1));
    if (key.geo.empty()) throw Error("empty geo id in series key '" + text + "'");
    return key;
}

int canonical_tier(const SeriesKey& key) {
    const bool total = key.sex == Sex::T;
    switch (key.level) {
    case Level::National: return total ? 0 : 1;
    case Level::Region: return total ? 2 : 3;
    case Level::Area: return total ? 4 : 5;
    }
    return 6;
}

bool natural_less(const std::string& a, const std::string& b) {
    std::size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        const bool da = std::isdigit(static_cast<unsigned char>(a[i])) != 0;
        const bool db = std::isdigit(static_cast<unsigned char>(b[j])) != 0;
        if (da && db) {
            std::size_t ia = i, jb = j;
            while (ia < a.size() && std::isdigit(static_cast<unsigned char>(a[ia]))) ++ia;
            while (jb < b.size() && std::isdigit(static_cast<unsigned char>(b[jb]))) ++jb;
            const std::string na = a.substr(i, ia - i), nb = b.substr(j, jb - j);
            // compare by length then digits; equal numbers fall through
            const std::string ta = na.substr(na.find_first_not_of('0') == std::string::npos
                                                 ? na.size() - 1
                                                 : na.find_first_not_of('0'));
            const std::string tb = nb.substr(nb.find_first_not_of('0') == std::string::npos
                                                 ? nb.size() - 1
                                                 : nb.find_first_not_of('0'));
            if (ta.size() != tb.size()) return ta.size() < tb.size();
            if (ta != tb) return ta < tb;
            i = ia;
            j = jb;
        } else {
            if (a[i] != b[j]) return a[i] < b[j];
            ++i;
            ++j;
        }
    }
    return a.size() - i < b.size() - j;
}

bool canonical_less(const SeriesKey& a, const SeriesKey& b) {
    const int ta = canonical_tier(a), tb = canonical_tier(b);
    if (ta != tb) return ta < tb;
    if (a.geo != b.geo) return natural_less(a.geo, b.geo);
    return static_cast<int>(a.sex) < static_cast<int>(b.sex);
}

void canonical_sort(std::vector<SeriesKey>& keys) {
    std::sort(keys.begin(), keys.end(), canonical_less);
}

} // namespace mfts
