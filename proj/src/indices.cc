#include "transit_access/indices.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <random>
#include <stdexcept>

#include "transit_access/csv.h"
#include "transit_access/parallel.h"

namespace transit_access {

std::vector<double> default_thresholds() { return {3600, 5400, 7200}; }

double decay(std::optional<double> t, double T) {
  if (!(T > 0)) throw std::invalid_argument("threshold must be positive");
  if (!t) return 0;
  if (*t < 0) throw std::invalid_argument("negative travel time");
  if (*t <= T) return 1;
  if (*t <= 2 * T) return 2 - *t / T;
  return 0;
}

double eco(std::span<const std::optional<double>> times, double T) {
  double sum = 0;
  for (const auto& t : times) sum += decay(t, T);
  return sum;
}

double median_over_days(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("median of no values");
  std::vector<double> v(values.begin(), values.end());
  std::sort(v.begin(), v.end());
  std::size_t n = v.size();
  if (n % 2 == 1) return v[n / 2];
  return (v[n / 2 - 1] + v[n / 2]) / 2;
}

std::optional<PercentileDirection> parse_percentile_direction(std::string_view s) {
  if (s == "attains") return PercentileDirection::attains;
  if (s == "below") return PercentileDirection::below;
  return std::nullopt;
}

std::optional<double> district_percentile(std::span<const WeightedValue> cells,
                                          double q,
                                          PercentileDirection direction) {
  std::map<double, double> mass;
  double total = 0;
  for (const auto& c : cells) {
    if (c.weight < 0) throw std::invalid_argument("negative population");
    mass[c.value] += c.weight;
    total += c.weight;
  }
  if (mass.empty() || total <= 0) return std::nullopt;
  const double needed = q * total * (1 - 1e-12);
  double cum = 0;
  if (direction == PercentileDirection::attains) {
    for (auto it = mass.rbegin(); it != mass.rend(); ++it) {
      cum += it->second;
      if (cum >= needed) return it->first;
    }
    return mass.begin()->first;
  }
  for (const auto& [v, w] : mass) {
    cum += w;
    if (cum >= needed) return v;
  }
  return mass.rbegin()->first;
}

bool Bin::contains(double v) const {
  bool above = lo_closed ? v >= lo : v > lo;
  bool below = hi_closed ? v <= hi : v < hi;
  return above && below;
}

std::vector<Bin> eco_bins() {
  return {{"[7,9]", 7, 9, true, true},     {"[5,7)", 5, 7, true, false},
          {"[2,5)", 2, 5, true, false},    {"[1,2)", 1, 2, true, false},
          {"[0.5,1)", 0.5, 1, true, false}, {"[0,0.5)", 0, 0.5, true, false}};
}

std::vector<Bin> ogl_bins() {
  constexpr double inf = std::numeric_limits<double>::infinity();
  return {{"(0,1)", 0, 1, false, false},
          {"0", 0, 0, true, true},
          {"[-1,0)", -1, 0, true, false},
          {"[-3,-1)", -3, -1, true, false},
          {"(-inf,-3)", -inf, -3, false, false}};
}

void check_bins(std::span<const Bin> bins) {
  for (std::size_t i = 0; i < bins.size(); ++i) {
    for (std::size_t j = i + 1; j < bins.size(); ++j) {
      const Bin& a = bins[i];
      const Bin& b = bins[j];
      double lo = std::max(a.lo, b.lo);
      bool lo_closed = a.lo > b.lo   ? a.lo_closed
                       : b.lo > a.lo ? b.lo_closed
                                     : a.lo_closed && b.lo_closed;
      double hi = std::min(a.hi, b.hi);
      bool hi_closed = a.hi < b.hi   ? a.hi_closed
                       : b.hi < a.hi ? b.hi_closed
                                     : a.hi_closed && b.hi_closed;
      if (lo < hi || (lo == hi && lo_closed && hi_closed)) {
        throw ConfigError("bins " + a.label + " and " + b.label + " overlap");
      }
    }
  }
}

BinnedTable bin_population(std::span<const BinnedItem> items,
                           std::span<const Bin> bins, bool unreachable_row) {
  check_bins(bins);
  BinnedTable table;
  for (const auto& b : bins) table.rows.push_back({b.label, 0, 0});
  if (unreachable_row) table.rows.push_back({"Unreachable", 0, 0});
  for (const auto& item : items) {
    if (!item.value) {
      if (unreachable_row) {
        table.rows.back().mass += item.weight;
      } else {
        table.unbinned_mass += item.weight;
      }
      continue;
    }
    bool placed = false;
    for (std::size_t b = 0; b < bins.size(); ++b) {
      if (bins[b].contains(*item.value)) {
        table.rows[b].mass += item.weight;
        placed = true;
        break;
      }
    }
    if (!placed) table.unbinned_mass += item.weight;
  }
  double total = 0;
  for (const auto& r : table.rows) total += r.mass;
  if (total > 0) {
    for (auto& r : table.rows) r.share = r.mass / total;
  }
  return table;
}

double weighted_gini(std::span<const WeightedValue> cells) {
  std::vector<WeightedValue> v(cells.begin(), cells.end());
  double total_weight = 0;
  double weighted_sum = 0;
  for (const auto& c : v) {
    if (c.weight < 0) throw std::invalid_argument("negative weight");
    if (c.value < 0) throw std::invalid_argument("negative value");
    total_weight += c.weight;
    weighted_sum += c.weight * c.value;
  }
  if (!(total_weight > 0)) throw std::invalid_argument("zero total weight");
  if (weighted_sum == 0) return 0;
  std::sort(v.begin(), v.end(), [](const WeightedValue& a, const WeightedValue& b) {
    return a.value < b.value;
  });
  // Sum over i<j of w_i w_j (x_j - x_i), accumulated gap by gap.
  std::vector<double> suffix(v.size() + 1, 0);
  for (std::size_t i = v.size(); i-- > 0;) suffix[i] = suffix[i + 1] + v[i].weight;
  double below = 0;
  double pairs = 0;
  for (std::size_t k = 0; k + 1 < v.size(); ++k) {
    below += v[k].weight;
    double gap = v[k + 1].value - v[k].value;
    if (gap != 0) pairs += gap * below * suffix[k + 1];
  }
  return pairs / (total_weight * weighted_sum);
}

std::optional<BootstrapDesign> parse_bootstrap_design(std::string_view s) {
  if (s == "cells") return BootstrapDesign::cells;
  if (s == "population") return BootstrapDesign::population;
  return std::nullopt;
}

namespace {

// Unbiased draw from [0, n) by rejection; fixed across standard libraries.
std::uint64_t draw_index(std::mt19937_64& rng, std::uint64_t n) {
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % n;
  for (;;) {
    std::uint64_t r = rng();
    if (r < limit) return r % n;
  }
}

double draw_unit(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

double nearest_rank(const std::vector<double>& sorted, double q) {
  auto n = static_cast<double>(sorted.size());
  auto rank = static_cast<std::size_t>(std::ceil(q * n - 1e-9));
  rank = std::clamp<std::size_t>(rank, 1, sorted.size());
  return sorted[rank - 1];
}

}  // namespace

GiniResult gini_bootstrap(std::span<const WeightedValue> cells,
                          std::size_t iterations, std::uint64_t seed,
                          BootstrapDesign design) {
  if (cells.size() < 2) throw std::invalid_argument("bootstrap needs two cells");
  GiniResult result;
  result.point = weighted_gini(cells);
  result.iterations = iterations;
  result.seed = seed;
  if (iterations == 0) {
    result.ci_low = result.ci_high = result.point;
    return result;
  }
  std::vector<double> cumulative;
  if (design == BootstrapDesign::population) {
    double acc = 0;
    for (const auto& c : cells) cumulative.push_back(acc += c.weight);
  }
  std::vector<double> replicates(iterations);
  parallel_for(iterations, [&](std::size_t i) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed),
                      static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(i)};
    std::mt19937_64 rng(seq);
    std::vector<WeightedValue> sample(cells.size());
    for (auto& s : sample) {
      if (design == BootstrapDesign::cells) {
        s = cells[draw_index(rng, cells.size())];
      } else {
        double u = draw_unit(rng) * cumulative.back();
        auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
        if (it == cumulative.end()) --it;
        s = {cells[static_cast<std::size_t>(it - cumulative.begin())].value, 1};
      }
    }
    double w = 0;
    for (const auto& s : sample) w += s.weight;
    replicates[i] = w > 0 ? weighted_gini(sample) : 0;
  });
  std::sort(replicates.begin(), replicates.end());
  result.ci_low = nearest_rank(replicates, 0.025);
  result.ci_high = nearest_rank(replicates, 0.975);
  return result;
}

std::vector<CellIndexRow> cell_indices(std::span<const Cell> cells,
                                       std::span<const RoundTripTime> scheduled,
                                       std::span<const RoundTripTime> actual,
                                       double threshold, const std::string& day) {
  std::map<std::string, std::vector<std::optional<double>>> sched_times;
  std::map<std::string, std::vector<std::optional<double>>> actual_times;
  for (const auto& e : scheduled) sched_times[e.cell].push_back(e.t_ik);
  for (const auto& e : actual) actual_times[e.cell].push_back(e.t_ik);
  auto reachable = [](const std::vector<std::optional<double>>& v) {
    return std::any_of(v.begin(), v.end(), [](const auto& t) { return t.has_value(); });
  };
  std::vector<CellIndexRow> rows;
  rows.reserve(cells.size());
  for (const auto& c : cells) {
    CellIndexRow r;
    r.cell = c.id;
    r.district = c.district;
    r.area = c.area;
    r.population = c.population;
    r.threshold = threshold;
    r.day = day;
    const auto& s = sched_times[c.id];
    const auto& a = actual_times[c.id];
    r.eco_scheduled = eco(s, threshold);
    r.eco_actual = eco(a, threshold);
    r.ogl = ogl(r.eco_actual, r.eco_scheduled);
    r.togl = togl(r.ogl, r.population);
    r.unreachable = !reachable(s) && !reachable(a);
    rows.push_back(std::move(r));
  }
  return rows;
}

std::vector<CellIndexRow> median_rows(std::span<const CellIndexRow> rows) {
  std::vector<std::pair<double, std::string>> order;
  std::map<std::pair<double, std::string>, std::vector<const CellIndexRow*>> groups;
  for (const auto& r : rows) {
    auto key = std::make_pair(r.threshold, r.cell);
    auto& g = groups[key];
    if (g.empty()) order.push_back(key);
    g.push_back(&r);
  }
  std::vector<CellIndexRow> out;
  for (const auto& key : order) {
    const auto& g = groups[key];
    CellIndexRow m = *g.front();
    m.day = "median";
    auto med = [&](double CellIndexRow::*field) {
      std::vector<double> v;
      for (const auto* r : g) v.push_back(r->*field);
      return median_over_days(v);
    };
    m.eco_scheduled = med(&CellIndexRow::eco_scheduled);
    m.eco_actual = med(&CellIndexRow::eco_actual);
    m.ogl = med(&CellIndexRow::ogl);
    m.togl = med(&CellIndexRow::togl);
    m.unreachable = std::all_of(g.begin(), g.end(),
                                [](const CellIndexRow* r) { return r->unreachable; });
    out.push_back(std::move(m));
  }
  return out;
}

std::vector<DistrictRow> district_summary(std::span<const CellIndexRow> rows,
                                          PercentileDirection direction) {
  std::map<std::pair<std::string, double>, std::vector<WeightedValue>> groups;
  for (const auto& r : rows) {
    groups[{r.district, r.threshold}].push_back({r.eco_scheduled, r.population});
  }
  std::vector<DistrictRow> out;
  for (const auto& [key, cells] : groups) {
    DistrictRow d;
    d.district = key.first;
    d.threshold = key.second;
    for (const auto& c : cells) d.population += c.weight;
    d.p50 = district_percentile(cells, 0.50, direction);
    d.p75 = district_percentile(cells, 0.75, direction);
    out.push_back(std::move(d));
  }
  return out;
}

namespace {

std::string minutes(double threshold_s) { return format_double(threshold_s / 60); }

}  // namespace

void write_index_csv(std::span<const CellIndexRow> rows, std::ostream& out) {
  CsvWriter w(out);
  w.row({"cell_id", "district", "area", "population", "threshold_min", "day",
         "eco_sched", "eco_actual", "ogl", "togl"});
  for (const auto& r : rows) {
    w.row({r.cell, r.district, format_double(r.area), format_double(r.population),
           minutes(r.threshold), r.day, format_double(r.eco_scheduled),
           format_double(r.eco_actual), format_double(r.ogl),
           format_double(r.togl)});
  }
}

std::vector<CellIndexRow> read_index_csv(const std::filesystem::path& path) {
  auto t = CsvTable::read(path);
  std::vector<std::size_t> cols;
  for (const char* name : {"cell_id", "district", "area", "population",
                           "threshold_min", "day", "eco_sched", "eco_actual",
                           "ogl", "togl"}) {
    cols.push_back(t.require_column(name));
  }
  std::vector<CellIndexRow> out;
  for (const auto& row : t.rows()) {
    auto num = [&](std::size_t i) {
      auto v = parse_double(t.get(row, cols[i]));
      if (!v) {
        throw InputError(path.string(), row.line, t.header()[cols[i]],
                         "not a number");
      }
      return *v;
    };
    CellIndexRow r;
    r.cell = std::string(t.get(row, cols[0]));
    r.district = std::string(t.get(row, cols[1]));
    r.area = num(2);
    r.population = num(3);
    r.threshold = num(4) * 60;
    r.day = std::string(t.get(row, cols[5]));
    r.eco_scheduled = num(6);
    r.eco_actual = num(7);
    r.ogl = num(8);
    r.togl = num(9);
    out.push_back(std::move(r));
  }
  return out;
}

void write_district_csv(std::span<const DistrictRow> rows, std::ostream& out) {
  CsvWriter w(out);
  w.row({"district", "threshold_min", "p50_eco", "p75_eco", "population"});
  for (const auto& r : rows) {
    w.row({r.district, minutes(r.threshold), r.p50 ? format_double(*r.p50) : "NA",
           r.p75 ? format_double(*r.p75) : "NA", format_double(r.population)});
  }
}

void write_gini_csv(std::span<const GiniResult> rows, std::ostream& out) {
  CsvWriter w(out);
  w.row({"variant", "threshold_min", "gini", "ci_low", "ci_high", "seed"});
  for (const auto& r : rows) {
    w.row({r.variant, minutes(r.threshold), format_double(r.point),
           format_double(r.ci_low), format_double(r.ci_high),
           std::to_string(r.seed)});
  }
}

void write_binned_csv(const std::string& kind, double threshold,
                      const BinnedTable& table, std::ostream& out, bool header) {
  CsvWriter w(out);
  if (header) w.row({"kind", "threshold_min", "bin", "mass", "share"});
  for (const auto& r : table.rows) {
    w.row({kind, minutes(threshold), r.label, format_double(r.mass),
           format_double(r.share)});
  }
  if (table.unbinned_mass > 0) {
    w.row({kind, minutes(threshold), "unbinned", format_double(table.unbinned_mass),
           ""});
  }
}

}  // namespace transit_access
