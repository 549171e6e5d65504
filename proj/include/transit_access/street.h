#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "transit_access/common.h"
#include "transit_access/gtfs.h"

namespace transit_access {

struct LatLon {
  double lat = 0;
  double lon = 0;

  bool operator==(const LatLon&) const = default;
};

struct PlanarPoint {
  double x = 0;  // metres east
  double y = 0;  // metres north
};

// Equirectangular projection around a reference point. Adequate at city
// scale, where the error stays well below a metre.
class LocalProjection {
 public:
  static constexpr double kEarthRadiusM = 6371008.8;

  explicit LocalProjection(LatLon origin);
  // Origin at the mean of the points (the study-area mean latitude).
  static LocalProjection around(std::span<const LatLon> points);

  PlanarPoint to_planar(LatLon p) const;
  LatLon to_latlon(PlanarPoint p) const;
  double distance_m(LatLon a, LatLon b) const;
  LatLon origin() const { return origin_; }

 private:
  LatLon origin_;
  double cos_lat_;
};

using NodeIndex = std::uint32_t;

struct StreetNode {
  std::string id;
  LatLon pos;
};

struct StreetEdge {
  std::string from;
  std::string to;
  double length_m = 0;
  bool walk = true;
  bool cycle = true;
};

enum class Mode { walk, cycle };
std::string_view to_string(Mode m);

// Undirected street network. Immutable after construction; may be
// disconnected.
class StreetGraph {
 public:
  struct Arc {
    NodeIndex to;
    double length_m;
    bool walk;
    bool cycle;
  };

  // Throws InputError on non-positive lengths or unresolved endpoints.
  StreetGraph(std::vector<StreetNode> nodes, const std::vector<StreetEdge>& edges);

  std::size_t node_count() const { return nodes_.size(); }
  const StreetNode& node(NodeIndex i) const { return nodes_[i]; }
  std::span<const Arc> arcs(NodeIndex i) const;
  const LocalProjection& projection() const { return projection_; }

  // Nearest node by straight-line distance, with that distance.
  std::optional<std::pair<NodeIndex, double>> nearest_node(LatLon p) const;

 private:
  std::vector<StreetNode> nodes_;
  std::vector<std::size_t> arc_offsets_;
  std::vector<Arc> arcs_;
  LocalProjection projection_;
  double bucket_size_m_ = 200;
  std::map<std::pair<long, long>, std::vector<NodeIndex>> buckets_;
  std::pair<long, long> min_bucket_{0, 0};
  std::pair<long, long> max_bucket_{0, 0};
};

// Reads nodes.csv (node_id,lat,lon) and edges.csv
// (from,to,length_m,walk,cycle).
StreetGraph load_street_graph(const std::filesystem::path& nodes_csv,
                              const std::filesystem::path& edges_csv);

enum class SiteRole { cell_centroid, school, bus_stop, rail_station };
std::string_view to_string(SiteRole r);

struct Site {
  std::string id;
  SiteRole role = SiteRole::cell_centroid;
  LatLon pos;
  std::optional<NodeIndex> node;  // unset when unsnappable
  double snap_m = 0;
};

// Attaches each site to its nearest node if within max_snap_m; otherwise the
// site stays unsnappable and a warning is recorded.
void snap_sites(const StreetGraph& graph, std::span<Site> sites,
                double max_snap_m, Diagnostics* diagnostics = nullptr);

using DurationMap = std::map<std::string, Seconds>;

// Network distance plus both snap legs, at `speed_kmh`, rounded up to whole
// seconds. Targets slower than `cap` are omitted.
DurationMap shortest_durations(const StreetGraph& graph, const Site& origin,
                               std::span<const Site> targets, Mode mode,
                               double speed_kmh, Seconds cap,
                               Diagnostics* diagnostics = nullptr);

// Seconds to cover `metres` at `speed_kmh`, rounded up.
Seconds travel_seconds(double metres, double speed_kmh);

struct AccessEntry {
  std::string from;
  std::string to;
  Seconds seconds = 0;

  bool operator==(const AccessEntry&) const = default;
};

struct AccessTable {
  std::string name;  // e.g. "cell-bus_stop"
  Mode mode = Mode::walk;
  Seconds cap = 0;
  std::vector<AccessEntry> entries;  // sorted by (from, to)
};

struct AccessParams {
  double walk_kmh = 4.0;
  double cycle_kmh = 12.0;
  Seconds bus_walk_cap = 450;       // 7.5 min
  Seconds rail_walk_cap = 900;      // 15 min
  Seconds rail_cycle_cap = 900;     // 15 min
  Seconds walk_only_cap = 900;      // 15 min
  Seconds transfer_walk_cap = 120;  // between distinct stops
  double max_snap_m = 100;
};

struct AccessTables {
  AccessTable cell_bus_walk;
  AccessTable cell_rail_walk;
  AccessTable cell_rail_cycle;
  AccessTable school_bus_walk;
  AccessTable school_rail_walk;
  AccessTable cell_school_walk;
  AccessTable stop_transfer_walk;

  std::vector<const AccessTable*> all() const;
};

// Sites must already be snapped. Bus stops never get a cycle table.
AccessTables build_access_tables(const StreetGraph& graph,
                                 std::span<const Site> cells,
                                 std::span<const Site> schools,
                                 std::span<const Site> stops,
                                 const AccessParams& params,
                                 Diagnostics* diagnostics = nullptr);

// CSV `mode,from,to,seconds`.
void write_access_tables_csv(const AccessTables& tables, std::ostream& out);

struct DesertRadii {
  double bus_stop_m = 500;
  double rail_station_m = 1000;
};

// True iff the nearest bus stop is farther than the bus radius and the
// nearest station farther than the rail radius (straight-line; a distance
// equal to the radius counts as served).
bool classify_pt_desert(LatLon cell, std::span<const LatLon> bus_stops,
                        std::span<const LatLon> rail_stations,
                        const LocalProjection& projection,
                        const DesertRadii& radii = {});

// Same rule with walking network distance (snap legs included).
bool classify_pt_desert_network(const StreetGraph& graph, const Site& cell,
                                std::span<const Site> stops,
                                const DesertRadii& radii = {});

struct Cell {
  std::string id;
  LatLon pos;
  double population = 0;
  std::string district;
  double area = 0;
};

struct School {
  std::string id;
  std::string name;
  LatLon pos;
};

std::vector<Cell> load_cells(const std::filesystem::path& path);
std::vector<School> load_schools(const std::filesystem::path& path);

std::vector<Site> cell_sites(std::span<const Cell> cells);
std::vector<Site> school_sites(std::span<const School> schools);
std::vector<Site> stop_sites(const TimetableFeed& feed);

}  // namespace transit_access
