#pragma once

#include <filesystem>
#include <string>

#include "transit_access/common.h"

namespace transit_access::acceptance {

// Writes a grid city with 1,244 populated cells, 9 schools, 48 one-way bus
// routes and 2 rail lines (GTFS, streets, sites and config.json) into `dir`.
// Returns the config path.
std::filesystem::path write_synthetic_city(const std::filesystem::path& dir);

// Runs access tables, the scheduled matrix for `day` and the ECO, district,
// bin and Gini outputs, and returns every product serialized as text.
std::string run_synthetic_city(const std::filesystem::path& config, Date day);

}  // namespace transit_access::acceptance
