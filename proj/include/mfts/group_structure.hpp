#pragma once

#include "mfts/series_key.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace mfts {

/// The grouping of mortality series: which bottom-level series exist, how
/// every aggregate series is composed from them, and which series are
/// modeled jointly in one multivariate decomposition block.
struct GroupStructure {
    /// Most-disaggregated series, canonical order.
    std::vector<SeriesKey> bottom;
    /// Aggregate key -> indices into `bottom` of its members.
    std::vector<std::pair<SeriesKey, std::vector<int>>> aggregates;
    /// Partition of all keys into blocks decomposed jointly.
    std::vector<std::vector<SeriesKey>> joint_blocks;

    /// All keys (aggregates plus bottom) in canonical order.
    std::vector<SeriesKey> all_keys() const;

    int bottom_index(const SeriesKey& key) const;

    /// Members of `key` as indices into `bottom`; a bottom key maps to its
    /// own singleton set.
    std::vector<int> members_of(const SeriesKey& key) const;

    void validate() const;

    static GroupStructure load(const std::filesystem::path& path);
    void save(const std::filesystem::path& path) const;
    std::string serialize() const;
    static GroupStructure parse(const std::string& text);

    /// Hierarchy with `n_regions` regions of `areas_per_region` areas each,
    /// every node split by sex. Geo ids are AUS, R1.., A1...
    /// With areas_per_region == 0 the region level is the bottom.
    static GroupStructure nested(int n_regions, int areas_per_region);

    /// The bundled demo hierarchy: 47 areas grouped into 11 regions
    /// (7 capital cities plus 4 broader remoteness regions), 177 series.
    static GroupStructure australia_demo();
};

} // namespace mfts
