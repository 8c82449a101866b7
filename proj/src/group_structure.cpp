#include "mfts/group_structure.hpp"

#include "mfts/csv.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <sstream>

namespace mfts {

std::vector<SeriesKey> GroupStructure::all_keys() const {
    std::vector<SeriesKey> keys = bottom;
    keys.reserve(bottom.size() + aggregates.size());
    for (const auto& [key, members] : aggregates) keys.push_back(key);
    canonical_sort(keys);
    return keys;
}

int GroupStructure::bottom_index(const SeriesKey& key) const {
    for (std::size_t i = 0; i < bottom.size(); ++i)
        if (bottom[i] == key) return static_cast<int>(i);
    return -1;
}

std::vector<int> GroupStructure::members_of(const SeriesKey& key) const {
    const int bi = bottom_index(key);
    if (bi >= 0) return {bi};
    for (const auto& [agg, members] : aggregates)
        if (agg == key) return members;
    throw Error("series key " + key.str() + " is not part of the structure");
}

void GroupStructure::validate() const {
    if (bottom.empty()) throw Error("group structure has no bottom series");
    for (std::size_t i = 1; i < bottom.size(); ++i)
        if (!canonical_less(bottom[i - 1], bottom[i]))
            throw Error("bottom keys not in canonical order or not unique");
    for (const auto& [key, members] : aggregates) {
        if (members.empty())
            throw Error("aggregate " + key.str() + " has an empty bottom set");
        for (int m : members)
            if (m < 0 || m >= static_cast<int>(bottom.size()))
                throw Error("aggregate " + key.str() + " references an unknown bottom index");
        if (bottom_index(key) >= 0)
            throw Error("key " + key.str() + " is declared both bottom and aggregate");
    }
    // joint blocks must partition the full key set
    std::set<std::string> seen;
    for (const auto& block : joint_blocks) {
        if (block.empty()) throw Error("empty joint block");
        for (const auto& key : block) {
            if (!seen.insert(key.str()).second)
                throw Error("key " + key.str() + " appears in more than one joint block");
        }
    }
    const auto keys = all_keys();
    if (!joint_blocks.empty()) {
        for (const auto& key : keys)
            if (seen.find(key.str()) == seen.end())
                throw Error("key " + key.str() + " missing from the joint blocks");
        if (seen.size() != keys.size())
            throw Error("joint blocks contain keys outside the structure");
    }
}

std::string GroupStructure::serialize() const {
    std::ostringstream out;
    out << "[bottom]\n";
    for (const auto& key : bottom) out << key.str() << "\n";
    out << "[aggregates]\n";
    for (const auto& [key, members] : aggregates) {
        out << key.str() << " =";
        for (int m : members) out << " " << bottom[m].str();
        out << "\n";
    }
    out << "[joint_blocks]\n";
    for (const auto& block : joint_blocks) {
        for (std::size_t i = 0; i < block.size(); ++i)
            out << (i ? " " : "") << block[i].str();
        out << "\n";
    }
    return out.str();
}

GroupStructure GroupStructure::parse(const std::string& text) {
    std::vector<SeriesKey> bottom;
    std::vector<std::pair<SeriesKey, std::vector<SeriesKey>>> aggregates;
    std::vector<std::vector<SeriesKey>> blocks;

    std::istringstream in(text);
    std::string line;
    enum class Section { None, Bottom, Aggregates, Blocks } section = Section::None;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::istringstream ls(line);
        std::string tok;
        std::vector<std::string> tokens;
        while (ls >> tok) tokens.push_back(tok);
        if (tokens.empty()) continue;
        if (tokens[0] == "[bottom]") {
            section = Section::Bottom;
            continue;
        }
        if (tokens[0] == "[aggregates]") {
            section = Section::Aggregates;
            continue;
        }
        if (tokens[0] == "[joint_blocks]") {
            section = Section::Blocks;
            continue;
        }
        try {
            switch (section) {
            case Section::None:
                throw Error("content before the first section header");
            case Section::Bottom:
                for (const auto& t : tokens) bottom.push_back(SeriesKey::parse(t));
                break;
            case Section::Aggregates: {
                if (tokens.size() < 3 || tokens[1] != "=")
                    throw Error("expected 'KEY = member member ...'");
                std::vector<SeriesKey> members;
                for (std::size_t i = 2; i < tokens.size(); ++i)
                    members.push_back(SeriesKey::parse(tokens[i]));
                aggregates.emplace_back(SeriesKey::parse(tokens[0]), std::move(members));
                break;
            }
            case Section::Blocks: {
                std::vector<SeriesKey> block;
                for (const auto& t : tokens) block.push_back(SeriesKey::parse(t));
                blocks.push_back(std::move(block));
                break;
            }
            }
        } catch (const Error& e) {
            throw Error("structure line " + std::to_string(lineno) + ": " + e.what());
        }
    }

    GroupStructure gs;
    gs.bottom = std::move(bottom);
    canonical_sort(gs.bottom);
    std::map<std::string, int> lookup;
    for (std::size_t i = 0; i < gs.bottom.size(); ++i)
        lookup[gs.bottom[i].str()] = static_cast<int>(i);
    for (auto& [key, member_keys] : aggregates) {
        std::vector<int> members;
        for (const auto& mk : member_keys) {
            const auto it = lookup.find(mk.str());
            if (it == lookup.end())
                throw Error("aggregate member " + mk.str() + " is not a bottom key");
            members.push_back(it->second);
        }
        gs.aggregates.emplace_back(key, std::move(members));
    }
    gs.joint_blocks = std::move(blocks);
    gs.validate();
    return gs;
}

GroupStructure GroupStructure::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open structure file " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    try {
        return parse(buf.str());
    } catch (const Error& e) {
        throw Error(path.string() + ": " + e.what());
    }
}

void GroupStructure::save(const std::filesystem::path& path) const {
    write_file_atomic(path, serialize());
}

namespace {

GroupStructure build_from_regions(const std::vector<std::vector<int>>& region_areas) {
    GroupStructure gs;
    const bool has_area_level = !region_areas.empty() && !region_areas.front().empty();
    const int n_regions = static_cast<int>(region_areas.size());

    const auto area_key = [](int a, Sex s) {
        return SeriesKey{Level::Area, "A" + std::to_string(a), s};
    };
    const auto region_key = [](int r, Sex s) {
        return SeriesKey{Level::Region, "R" + std::to_string(r), s};
    };
    const auto national_key = [](Sex s) { return SeriesKey{Level::National, "AUS", s}; };

    // bottom level: areas by sex if areas exist, otherwise regions by sex
    if (has_area_level) {
        std::vector<int> all_areas;
        for (const auto& areas : region_areas)
            all_areas.insert(all_areas.end(), areas.begin(), areas.end());
        std::sort(all_areas.begin(), all_areas.end());
        for (int a : all_areas) {
            gs.bottom.push_back(area_key(a, Sex::F));
            gs.bottom.push_back(area_key(a, Sex::M));
        }
    } else {
        for (int r = 1; r <= n_regions; ++r) {
            gs.bottom.push_back(region_key(r, Sex::F));
            gs.bottom.push_back(region_key(r, Sex::M));
        }
    }
    canonical_sort(gs.bottom);

    const auto idx_of = [&gs](const SeriesKey& key) {
        const int i = gs.bottom_index(key);
        if (i < 0) throw Error("internal: bottom key missing " + key.str());
        return i;
    };

    std::vector<int> everyone, females, males;
    for (std::size_t i = 0; i < gs.bottom.size(); ++i) {
        everyone.push_back(static_cast<int>(i));
        (gs.bottom[i].sex == Sex::F ? females : males).push_back(static_cast<int>(i));
    }
    gs.aggregates.emplace_back(national_key(Sex::T), everyone);
    gs.aggregates.emplace_back(national_key(Sex::F), females);
    gs.aggregates.emplace_back(national_key(Sex::M), males);

    for (int r = 1; r <= n_regions; ++r) {
        if (has_area_level) {
            std::vector<int> rt, rf, rm;
            for (int a : region_areas[r - 1]) {
                rf.push_back(idx_of(area_key(a, Sex::F)));
                rm.push_back(idx_of(area_key(a, Sex::M)));
            }
            rt = rf;
            rt.insert(rt.end(), rm.begin(), rm.end());
            std::sort(rt.begin(), rt.end());
            gs.aggregates.emplace_back(region_key(r, Sex::T), rt);
            gs.aggregates.emplace_back(region_key(r, Sex::F), rf);
            gs.aggregates.emplace_back(region_key(r, Sex::M), rm);
            for (int a : region_areas[r - 1]) {
                gs.aggregates.emplace_back(
                    area_key(a, Sex::T),
                    std::vector<int>{idx_of(area_key(a, Sex::F)), idx_of(area_key(a, Sex::M))});
            }
        } else {
            gs.aggregates.emplace_back(
                region_key(r, Sex::T),
                std::vector<int>{idx_of(region_key(r, Sex::F)), idx_of(region_key(r, Sex::M))});
        }
    }

    // joint blocks: national total alone, all region totals together, the
    // area totals of each region together, and a female/male pair per node
    gs.joint_blocks.push_back({national_key(Sex::T)});
    {
        std::vector<SeriesKey> regions;
        for (int r = 1; r <= n_regions; ++r) regions.push_back(region_key(r, Sex::T));
        gs.joint_blocks.push_back(std::move(regions));
    }
    if (has_area_level) {
        for (int r = 1; r <= n_regions; ++r) {
            std::vector<SeriesKey> areas;
            for (int a : region_areas[r - 1]) areas.push_back(area_key(a, Sex::T));
            gs.joint_blocks.push_back(std::move(areas));
        }
    }
    gs.joint_blocks.push_back({national_key(Sex::F), national_key(Sex::M)});
    for (int r = 1; r <= n_regions; ++r)
        gs.joint_blocks.push_back({region_key(r, Sex::F), region_key(r, Sex::M)});
    if (has_area_level) {
        for (const auto& areas : region_areas)
            for (int a : areas)
                gs.joint_blocks.push_back({area_key(a, Sex::F), area_key(a, Sex::M)});
    }

    gs.validate();
    return gs;
}

} // namespace

GroupStructure GroupStructure::nested(int n_regions, int areas_per_region) {
    if (n_regions < 1) throw Error("need at least one region");
    std::vector<std::vector<int>> region_areas(n_regions);
    if (areas_per_region > 0) {
        int next = 1;
        for (int r = 0; r < n_regions; ++r)
            for (int a = 0; a < areas_per_region; ++a) region_areas[r].push_back(next++);
    }
    return build_from_regions(region_areas);
}

GroupStructure GroupStructure::australia_demo() {
    // 7 capital cities, then NSW Coast, Country Victoria, Regional Australia
    // and Remote Australia; 47 areas over 11 regions.
    const std::vector<std::vector<int>> region_areas = {
        {1},  {5},  {11}, {12}, {13}, {14}, {15},
        {2, 3, 4},
        {6, 7, 8, 9, 10},
        {16, 17, 18, 19, 20, 21, 22, 23, 24, 25, 26, 27, 28, 29, 30, 31, 32, 33, 34},
        {35, 36, 37, 38, 39, 40, 41, 42, 43, 44, 45, 46, 47},
    };
    return build_from_regions(region_areas);
}

} // namespace mfts
