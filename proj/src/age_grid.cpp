#include "mfts/age_grid.hpp"

namespace mfts {

void AgeGrid::validate() const {
    if (labels.empty()) throw Error("age grid is empty");
    if (labels.size() != centers.size())
        throw Error("age grid labels and centers differ in length");
    for (std::size_t i = 1; i < centers.size(); ++i)
        if (!(centers[i] > centers[i - 1]))
            throw Error("age grid centers must be strictly increasing");
}

AgeGrid AgeGrid::five_year_default() {
    AgeGrid grid;
    for (int lo = 0; lo <= 80; lo += 5) {
        grid.labels.push_back(std::to_string(lo) + "-" + std::to_string(lo + 4));
        grid.centers.push_back(lo + 2.0);
    }
    grid.labels.push_back("85+");
    grid.centers.push_back(87.5);
    return grid;
}

} // namespace mfts
