#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "transit_access/router.h"
#include "transit_access/street.h"

namespace transit_access {

// Round-trip thresholds in seconds: 60, 90 and 120 minutes.
std::vector<double> default_thresholds();

// Linear decay: 1 up to T, falling to 0 at 2T. nullopt means unreachable.
// Throws std::invalid_argument for negative t or T <= 0.
double decay(std::optional<double> t, double T);

// Sum of decay over one cell's round-trip times to every school.
double eco(std::span<const std::optional<double>> times, double T);

inline double ogl(double eco_actual, double eco_scheduled) {
  return eco_actual - eco_scheduled;
}
inline double togl(double ogl_value, double population) {
  return population * ogl_value;
}

// Median; the mean of the central pair for even counts. Throws
// std::invalid_argument when empty.
double median_over_days(std::span<const double> values);

struct WeightedValue {
  double value = 0;
  double weight = 0;
};

enum class PercentileDirection {
  attains,  // largest v with share(value >= v) >= q
  below,    // smallest v with share(value <= v) >= q
};
std::optional<PercentileDirection> parse_percentile_direction(std::string_view s);

// Population-weighted district percentile. nullopt for an empty district or
// zero population.
std::optional<double> district_percentile(std::span<const WeightedValue> cells,
                                          double q,
                                          PercentileDirection direction =
                                              PercentileDirection::attains);

struct Bin {
  std::string label;
  double lo = 0;
  double hi = 0;
  bool lo_closed = true;
  bool hi_closed = false;

  bool contains(double v) const;
};

// [7,9], [5,7), [2,5), [1,2), [0.5,1), [0,0.5)
std::vector<Bin> eco_bins();
// (0,1), {0}, [-1,0), [-3,-1), (-inf,-3)
std::vector<Bin> ogl_bins();
// Throws ConfigError if any two bins share a value.
void check_bins(std::span<const Bin> bins);

struct BinnedItem {
  std::optional<double> value;  // nullopt = unreachable
  double weight = 1;
};

struct BinRow {
  std::string label;
  double mass = 0;
  double share = 0;
};

struct BinnedTable {
  std::vector<BinRow> rows;  // bins in order, then "Unreachable" if requested
  double unbinned_mass = 0;  // values outside every bin
};

// Shares are relative to the mass that landed in a row.
BinnedTable bin_population(std::span<const BinnedItem> items,
                           std::span<const Bin> bins,
                           bool unreachable_row = false);

// Population-weighted Gini. 0 when the weighted mean is 0. Throws
// std::invalid_argument on negative values or weights, or zero total weight.
double weighted_gini(std::span<const WeightedValue> cells);

enum class BootstrapDesign {
  cells,       // resample cells uniformly, each keeping its weight
  population,  // resample cells with probability proportional to weight
};
std::optional<BootstrapDesign> parse_bootstrap_design(std::string_view s);

struct GiniResult {
  double threshold = 0;
  std::string variant;
  double point = 0;
  double ci_low = 0;
  double ci_high = 0;
  std::size_t iterations = 0;
  std::uint64_t seed = 0;
};

// Point estimate plus nearest-rank 2.5/97.5 percentiles of the replicates.
// Replicate i draws from its own generator seeded by (seed, i), so results
// do not depend on the thread count.
GiniResult gini_bootstrap(std::span<const WeightedValue> cells,
                          std::size_t iterations, std::uint64_t seed,
                          BootstrapDesign design = BootstrapDesign::cells);

struct CellIndexRow {
  std::string cell;
  std::string district;
  double area = 0;
  double population = 0;
  double threshold = 0;  // seconds
  std::string day;       // date, or "median"
  double eco_scheduled = 0;
  double eco_actual = 0;
  double ogl = 0;
  double togl = 0;
  // No school reachable in either variant.
  bool unreachable = false;
};

// One row per cell for one threshold and day. Cells absent from a matrix
// count as unreachable from every school.
std::vector<CellIndexRow> cell_indices(std::span<const Cell> cells,
                                       std::span<const RoundTripTime> scheduled,
                                       std::span<const RoundTripTime> actual,
                                       double threshold, const std::string& day);

// Per (cell, threshold) medians over the day rows, labelled day "median".
// Output follows the first-seen order of (threshold, cell).
std::vector<CellIndexRow> median_rows(std::span<const CellIndexRow> rows);

struct DistrictRow {
  std::string district;
  double threshold = 0;
  std::optional<double> p50;
  std::optional<double> p75;
  double population = 0;
};

// Percentiles of the scheduled ECO in `rows`, per (district, threshold),
// sorted by district then threshold.
std::vector<DistrictRow> district_summary(std::span<const CellIndexRow> rows,
                                          PercentileDirection direction);

void write_index_csv(std::span<const CellIndexRow> rows, std::ostream& out);
std::vector<CellIndexRow> read_index_csv(const std::filesystem::path& path);
void write_district_csv(std::span<const DistrictRow> rows, std::ostream& out);
void write_gini_csv(std::span<const GiniResult> rows, std::ostream& out);
// `kind,threshold_min,bin,mass,share` rows.
void write_binned_csv(const std::string& kind, double threshold,
                      const BinnedTable& table, std::ostream& out,
                      bool header);

}  // namespace transit_access
