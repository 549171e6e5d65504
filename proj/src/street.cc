#include "transit_access/street.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <queue>
#include <unordered_map>

#include <fmt/format.h>

#include "transit_access/csv.h"
#include "transit_access/parallel.h"

namespace transit_access {

namespace fs = std::filesystem;

namespace {
constexpr double kDegToRad = std::numbers::pi / 180.0;
}

LocalProjection::LocalProjection(LatLon origin)
    : origin_(origin), cos_lat_(std::cos(origin.lat * kDegToRad)) {}

LocalProjection LocalProjection::around(std::span<const LatLon> points) {
  if (points.empty()) return LocalProjection(LatLon{});
  double lat = 0, lon = 0;
  for (const auto& p : points) {
    lat += p.lat;
    lon += p.lon;
  }
  auto n = static_cast<double>(points.size());
  return LocalProjection(LatLon{lat / n, lon / n});
}

PlanarPoint LocalProjection::to_planar(LatLon p) const {
  return {(p.lon - origin_.lon) * kDegToRad * cos_lat_ * kEarthRadiusM,
          (p.lat - origin_.lat) * kDegToRad * kEarthRadiusM};
}

LatLon LocalProjection::to_latlon(PlanarPoint p) const {
  return {origin_.lat + p.y / kEarthRadiusM / kDegToRad,
          origin_.lon + p.x / (kEarthRadiusM * cos_lat_) / kDegToRad};
}

double LocalProjection::distance_m(LatLon a, LatLon b) const {
  PlanarPoint pa = to_planar(a);
  PlanarPoint pb = to_planar(b);
  return std::hypot(pa.x - pb.x, pa.y - pb.y);
}

std::string_view to_string(Mode m) {
  return m == Mode::walk ? "walk" : "cycle";
}

std::string_view to_string(SiteRole r) {
  switch (r) {
    case SiteRole::cell_centroid:
      return "cell_centroid";
    case SiteRole::school:
      return "school";
    case SiteRole::bus_stop:
      return "bus_stop";
    case SiteRole::rail_station:
      return "rail_station";
  }
  return "cell_centroid";
}

namespace {

LocalProjection projection_for(const std::vector<StreetNode>& nodes) {
  std::vector<LatLon> pts;
  pts.reserve(nodes.size());
  for (const auto& n : nodes) pts.push_back(n.pos);
  return LocalProjection::around(pts);
}

}  // namespace

StreetGraph::StreetGraph(std::vector<StreetNode> nodes,
                         const std::vector<StreetEdge>& edges)
    : nodes_(std::move(nodes)), projection_(projection_for(nodes_)) {
  std::unordered_map<std::string, NodeIndex> index;
  for (NodeIndex i = 0; i < nodes_.size(); ++i) {
    if (!index.emplace(nodes_[i].id, i).second) {
      throw InputError("duplicate street node id: " + nodes_[i].id);
    }
  }
  std::vector<std::vector<Arc>> adjacency(nodes_.size());
  for (const auto& e : edges) {
    auto a = index.find(e.from);
    auto b = index.find(e.to);
    if (a == index.end() || b == index.end()) {
      throw InputError(fmt::format("street edge {}-{} has unknown endpoint",
                                   e.from, e.to));
    }
    if (!(e.length_m > 0)) {
      throw InputError(fmt::format("street edge {}-{} has non-positive length",
                                   e.from, e.to));
    }
    adjacency[a->second].push_back({b->second, e.length_m, e.walk, e.cycle});
    adjacency[b->second].push_back({a->second, e.length_m, e.walk, e.cycle});
  }
  arc_offsets_.push_back(0);
  for (auto& list : adjacency) {
    arcs_.insert(arcs_.end(), list.begin(), list.end());
    arc_offsets_.push_back(arcs_.size());
  }
  for (NodeIndex i = 0; i < nodes_.size(); ++i) {
    PlanarPoint p = projection_.to_planar(nodes_[i].pos);
    std::pair<long, long> key{
        static_cast<long>(std::floor(p.x / bucket_size_m_)),
        static_cast<long>(std::floor(p.y / bucket_size_m_))};
    buckets_[key].push_back(i);
    if (i == 0) min_bucket_ = max_bucket_ = key;
    min_bucket_ = {std::min(min_bucket_.first, key.first),
                   std::min(min_bucket_.second, key.second)};
    max_bucket_ = {std::max(max_bucket_.first, key.first),
                   std::max(max_bucket_.second, key.second)};
  }
}

std::span<const StreetGraph::Arc> StreetGraph::arcs(NodeIndex i) const {
  return {arcs_.data() + arc_offsets_[i], arcs_.data() + arc_offsets_[i + 1]};
}

std::optional<std::pair<NodeIndex, double>> StreetGraph::nearest_node(
    LatLon p) const {
  if (nodes_.empty()) return std::nullopt;
  PlanarPoint q = projection_.to_planar(p);
  long bx = static_cast<long>(std::floor(q.x / bucket_size_m_));
  long by = static_cast<long>(std::floor(q.y / bucket_size_m_));
  std::optional<std::pair<NodeIndex, double>> best;
  // Grow the search ring until no unvisited bucket can hold a closer node.
  for (long ring = 0;; ++ring) {
    for (long dx = -ring; dx <= ring; ++dx) {
      for (long dy = -ring; dy <= ring; ++dy) {
        if (std::max(std::labs(dx), std::labs(dy)) != ring) continue;
        auto it = buckets_.find({bx + dx, by + dy});
        if (it == buckets_.end()) continue;
        for (NodeIndex n : it->second) {
          double d = projection_.distance_m(p, nodes_[n].pos);
          if (!best || d < best->second ||
              (d == best->second && n < best->first)) {
            best = {n, d};
          }
        }
      }
    }
    if (best && best->second <= static_cast<double>(ring) * bucket_size_m_) {
      return best;
    }
    long reach_x = std::max(std::labs(bx - min_bucket_.first),
                            std::labs(max_bucket_.first - bx));
    long reach_y = std::max(std::labs(by - min_bucket_.second),
                            std::labs(max_bucket_.second - by));
    if (ring >= std::max(reach_x, reach_y)) return best;
  }
}

StreetGraph load_street_graph(const fs::path& nodes_csv,
                              const fs::path& edges_csv) {
  CsvTable nt = CsvTable::read(nodes_csv);
  auto c_id = nt.require_column("node_id");
  auto c_lat = nt.require_column("lat");
  auto c_lon = nt.require_column("lon");
  std::vector<StreetNode> nodes;
  for (const auto& row : nt.rows()) {
    auto lat = parse_double(nt.get(row, c_lat));
    auto lon = parse_double(nt.get(row, c_lon));
    if (!lat || *lat < -90 || *lat > 90) {
      throw InputError(nt.source(), row.line, "lat", "malformed latitude");
    }
    if (!lon || *lon < -180 || *lon > 180) {
      throw InputError(nt.source(), row.line, "lon", "malformed longitude");
    }
    nodes.push_back({std::string(nt.get(row, c_id)), {*lat, *lon}});
  }
  CsvTable et = CsvTable::read(edges_csv);
  auto c_from = et.require_column("from");
  auto c_to = et.require_column("to");
  auto c_len = et.require_column("length_m");
  auto c_walk = et.require_column("walk");
  auto c_cycle = et.require_column("cycle");
  std::vector<StreetEdge> edges;
  for (const auto& row : et.rows()) {
    StreetEdge e;
    e.from = std::string(et.get(row, c_from));
    e.to = std::string(et.get(row, c_to));
    auto len = parse_double(et.get(row, c_len));
    if (!len || *len <= 0) {
      throw InputError(et.source(), row.line, "length_m",
                       "length must be a positive number");
    }
    e.length_m = *len;
    auto flag = [&](std::size_t col, const char* name) {
      auto v = et.get(row, col);
      if (v != "0" && v != "1") {
        throw InputError(et.source(), row.line, name, "expected 0 or 1");
      }
      return v == "1";
    };
    e.walk = flag(c_walk, "walk");
    e.cycle = flag(c_cycle, "cycle");
    edges.push_back(std::move(e));
  }
  return StreetGraph(std::move(nodes), edges);
}

void snap_sites(const StreetGraph& graph, std::span<Site> sites,
                double max_snap_m, Diagnostics* diag) {
  for (auto& site : sites) {
    site.node.reset();
    site.snap_m = 0;
    auto nearest = graph.nearest_node(site.pos);
    if (nearest && nearest->second <= max_snap_m) {
      site.node = nearest->first;
      site.snap_m = nearest->second;
    } else if (diag) {
      diag->warn(fmt::format("{} {} is unsnappable (no street node within {} m)",
                             to_string(site.role), site.id, max_snap_m));
    }
  }
}

Seconds travel_seconds(double metres, double speed_kmh) {
  double s = metres * 3600.0 / (speed_kmh * 1000.0);
  return static_cast<Seconds>(std::ceil(s - 1e-6));
}

namespace {

// Network distances from `source` to every node reachable within max_m.
std::unordered_map<NodeIndex, double> reach(const StreetGraph& graph,
                                            NodeIndex source, Mode mode,
                                            double max_m) {
  std::unordered_map<NodeIndex, double> dist;
  using Entry = std::pair<double, NodeIndex>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> queue;
  dist[source] = 0;
  queue.push({0, source});
  while (!queue.empty()) {
    auto [d, u] = queue.top();
    queue.pop();
    if (d > dist[u]) continue;
    for (const auto& arc : graph.arcs(u)) {
      if (mode == Mode::walk ? !arc.walk : !arc.cycle) continue;
      double nd = d + arc.length_m;
      if (nd > max_m) continue;
      auto it = dist.find(arc.to);
      if (it == dist.end() || nd < it->second) {
        dist[arc.to] = nd;
        queue.push({nd, arc.to});
      }
    }
  }
  return dist;
}

double max_metres(Seconds cap, double speed_kmh) {
  return static_cast<double>(cap) * speed_kmh * 1000.0 / 3600.0 + 1.0;
}

void collect(const std::unordered_map<NodeIndex, double>& dist,
             const Site& origin, std::span<const Site> targets,
             double speed_kmh, Seconds cap, bool skip_self,
             std::vector<AccessEntry>& out) {
  for (const auto& t : targets) {
    if (!t.node) continue;
    if (skip_self && t.id == origin.id) continue;
    auto it = dist.find(*t.node);
    if (it == dist.end()) continue;
    Seconds s = travel_seconds(origin.snap_m + it->second + t.snap_m, speed_kmh);
    if (s <= cap) out.push_back({origin.id, t.id, s});
  }
}

}  // namespace

DurationMap shortest_durations(const StreetGraph& graph, const Site& origin,
                               std::span<const Site> targets, Mode mode,
                               double speed_kmh, Seconds cap,
                               Diagnostics* diag) {
  DurationMap out;
  if (!origin.node) {
    if (diag) {
      diag->warn(fmt::format("origin {} is unsnappable; no durations",
                             origin.id));
    }
    return out;
  }
  auto dist = reach(graph, *origin.node, mode, max_metres(cap, speed_kmh));
  std::vector<AccessEntry> entries;
  collect(dist, origin, targets, speed_kmh, cap, false, entries);
  for (const auto& e : entries) out[e.to] = e.seconds;
  return out;
}

std::vector<const AccessTable*> AccessTables::all() const {
  return {&cell_bus_walk,    &cell_rail_walk,   &cell_rail_cycle,
          &school_bus_walk,  &school_rail_walk, &cell_school_walk,
          &stop_transfer_walk};
}

AccessTables build_access_tables(const StreetGraph& graph,
                                 std::span<const Site> cells,
                                 std::span<const Site> schools,
                                 std::span<const Site> stops,
                                 const AccessParams& p, Diagnostics* diag) {
  std::vector<Site> bus, rail;
  for (const auto& s : stops) {
    (s.role == SiteRole::rail_station ? rail : bus).push_back(s);
  }

  AccessTables tables;
  auto init = [](AccessTable& t, const char* name, Mode mode, Seconds cap) {
    t.name = name;
    t.mode = mode;
    t.cap = cap;
  };
  init(tables.cell_bus_walk, "cell-bus_stop", Mode::walk, p.bus_walk_cap);
  init(tables.cell_rail_walk, "cell-rail_station", Mode::walk, p.rail_walk_cap);
  init(tables.cell_rail_cycle, "cell-rail_station", Mode::cycle,
       p.rail_cycle_cap);
  init(tables.school_bus_walk, "school-bus_stop", Mode::walk, p.bus_walk_cap);
  init(tables.school_rail_walk, "school-rail_station", Mode::walk,
       p.rail_walk_cap);
  init(tables.cell_school_walk, "cell-school", Mode::walk, p.walk_only_cap);
  init(tables.stop_transfer_walk, "stop-stop", Mode::walk,
       p.transfer_walk_cap);

  struct CellResult {
    std::vector<AccessEntry> bus, rail, cycle, school;
  };
  std::vector<CellResult> cell_results(cells.size());
  parallel_for(cells.size(), [&](std::size_t i) {
    const Site& c = cells[i];
    if (!c.node) return;
    Seconds walk_cap =
        std::max({p.bus_walk_cap, p.rail_walk_cap, p.walk_only_cap});
    auto walk = reach(graph, *c.node, Mode::walk,
                      max_metres(walk_cap, p.walk_kmh));
    auto& r = cell_results[i];
    collect(walk, c, bus, p.walk_kmh, p.bus_walk_cap, false, r.bus);
    collect(walk, c, rail, p.walk_kmh, p.rail_walk_cap, false, r.rail);
    collect(walk, c, schools, p.walk_kmh, p.walk_only_cap, false, r.school);
    auto cyc = reach(graph, *c.node, Mode::cycle,
                     max_metres(p.rail_cycle_cap, p.cycle_kmh));
    collect(cyc, c, rail, p.cycle_kmh, p.rail_cycle_cap, false, r.cycle);
  });
  for (const auto& c : cells) {
    if (!c.node && diag) {
      diag->warn("cell " + c.id + " is unsnappable; it has no access legs");
    }
  }
  for (auto& r : cell_results) {
    auto append = [](AccessTable& t, std::vector<AccessEntry>& e) {
      t.entries.insert(t.entries.end(), e.begin(), e.end());
    };
    append(tables.cell_bus_walk, r.bus);
    append(tables.cell_rail_walk, r.rail);
    append(tables.cell_rail_cycle, r.cycle);
    append(tables.cell_school_walk, r.school);
  }

  for (const auto& s : schools) {
    if (!s.node) continue;
    auto walk = reach(graph, *s.node, Mode::walk,
                      max_metres(std::max(p.bus_walk_cap, p.rail_walk_cap),
                                 p.walk_kmh));
    collect(walk, s, bus, p.walk_kmh, p.bus_walk_cap, false,
            tables.school_bus_walk.entries);
    collect(walk, s, rail, p.walk_kmh, p.rail_walk_cap, false,
            tables.school_rail_walk.entries);
  }

  std::vector<std::vector<AccessEntry>> transfer_results(stops.size());
  parallel_for(stops.size(), [&](std::size_t i) {
    const Site& s = stops[i];
    if (!s.node) return;
    auto walk = reach(graph, *s.node, Mode::walk,
                      max_metres(p.transfer_walk_cap, p.walk_kmh));
    collect(walk, s, stops, p.walk_kmh, p.transfer_walk_cap, true,
            transfer_results[i]);
  });
  for (auto& r : transfer_results) {
    tables.stop_transfer_walk.entries.insert(
        tables.stop_transfer_walk.entries.end(), r.begin(), r.end());
  }

  for (auto* t : {&tables.cell_bus_walk, &tables.cell_rail_walk,
                  &tables.cell_rail_cycle, &tables.school_bus_walk,
                  &tables.school_rail_walk, &tables.cell_school_walk,
                  &tables.stop_transfer_walk}) {
    std::sort(t->entries.begin(), t->entries.end(),
              [](const AccessEntry& a, const AccessEntry& b) {
                return std::tie(a.from, a.to) < std::tie(b.from, b.to);
              });
  }
  return tables;
}

void write_access_tables_csv(const AccessTables& tables, std::ostream& out) {
  CsvWriter w(out);
  w.row({"mode", "from", "to", "seconds"});
  for (const auto* t : tables.all()) {
    for (const auto& e : t->entries) {
      w.row({std::string(to_string(t->mode)), e.from, e.to,
             std::to_string(e.seconds)});
    }
  }
}

bool classify_pt_desert(LatLon cell, std::span<const LatLon> bus_stops,
                        std::span<const LatLon> rail_stations,
                        const LocalProjection& projection,
                        const DesertRadii& radii) {
  for (const auto& s : bus_stops) {
    if (projection.distance_m(cell, s) <= radii.bus_stop_m) return false;
  }
  for (const auto& s : rail_stations) {
    if (projection.distance_m(cell, s) <= radii.rail_station_m) return false;
  }
  return true;
}

bool classify_pt_desert_network(const StreetGraph& graph, const Site& cell,
                                std::span<const Site> stops,
                                const DesertRadii& radii) {
  if (!cell.node) return true;
  double bound = std::max(radii.bus_stop_m, radii.rail_station_m);
  auto dist = reach(graph, *cell.node, Mode::walk, bound);
  for (const auto& s : stops) {
    if (!s.node) continue;
    auto it = dist.find(*s.node);
    if (it == dist.end()) continue;
    double m = cell.snap_m + it->second + s.snap_m;
    double radius = s.role == SiteRole::rail_station ? radii.rail_station_m
                                                     : radii.bus_stop_m;
    if (m <= radius) return false;
  }
  return true;
}

std::vector<Cell> load_cells(const fs::path& path) {
  CsvTable t = CsvTable::read(path);
  auto c_id = t.require_column("cell_id");
  auto c_lat = t.require_column("lat");
  auto c_lon = t.require_column("lon");
  auto c_pop = t.require_column("population_u15");
  auto c_district = t.require_column("district");
  auto c_area = t.column("area");
  std::vector<Cell> cells;
  for (const auto& row : t.rows()) {
    Cell c;
    c.id = std::string(t.get(row, c_id));
    auto lat = parse_double(t.get(row, c_lat));
    auto lon = parse_double(t.get(row, c_lon));
    auto pop = parse_double(t.get(row, c_pop));
    if (!lat || *lat < -90 || *lat > 90) {
      throw InputError(t.source(), row.line, "lat", "malformed latitude");
    }
    if (!lon || *lon < -180 || *lon > 180) {
      throw InputError(t.source(), row.line, "lon", "malformed longitude");
    }
    if (!pop || *pop < 0) {
      throw InputError(t.source(), row.line, "population_u15",
                       "population must be a non-negative number");
    }
    c.pos = {*lat, *lon};
    c.population = *pop;
    c.district = std::string(t.get(row, c_district));
    if (c_area) c.area = parse_double(t.get(row, *c_area)).value_or(0);
    cells.push_back(std::move(c));
  }
  return cells;
}

std::vector<School> load_schools(const fs::path& path) {
  CsvTable t = CsvTable::read(path);
  auto c_id = t.require_column("school_id");
  auto c_name = t.column("name");
  auto c_lat = t.require_column("lat");
  auto c_lon = t.require_column("lon");
  std::vector<School> schools;
  for (const auto& row : t.rows()) {
    School s;
    s.id = std::string(t.get(row, c_id));
    if (c_name) s.name = std::string(t.get(row, *c_name));
    auto lat = parse_double(t.get(row, c_lat));
    auto lon = parse_double(t.get(row, c_lon));
    if (!lat || !lon) {
      throw InputError(t.source(), row.line, "lat/lon", "malformed coordinate");
    }
    s.pos = {*lat, *lon};
    schools.push_back(std::move(s));
  }
  return schools;
}

std::vector<Site> cell_sites(std::span<const Cell> cells) {
  std::vector<Site> out;
  for (const auto& c : cells) {
    out.push_back({c.id, SiteRole::cell_centroid, c.pos, std::nullopt, 0});
  }
  return out;
}

std::vector<Site> school_sites(std::span<const School> schools) {
  std::vector<Site> out;
  for (const auto& s : schools) {
    out.push_back({s.id, SiteRole::school, s.pos, std::nullopt, 0});
  }
  return out;
}

std::vector<Site> stop_sites(const TimetableFeed& feed) {
  std::vector<Site> out;
  for (const auto& s : feed.stops()) {
    out.push_back({s.id,
                   s.kind == StopKind::rail_station ? SiteRole::rail_station
                                                    : SiteRole::bus_stop,
                   {s.lat, s.lon},
                   std::nullopt,
                   0});
  }
  return out;
}

}  // namespace transit_access
