#include "transit_access/pipeline.h"

#include <openssl/evp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include "json.hpp"
#include "transit_access/csv.h"

namespace transit_access {

namespace fs = std::filesystem;
using json = nlohmann::json;

// ---- configuration

namespace {

void check_keys(const json& j, const std::string& where,
                std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw ConfigError(where + " must be an object");
  for (const auto& [key, value] : j.items()) {
    bool ok = std::any_of(allowed.begin(), allowed.end(),
                          [&](const char* a) { return key == a; });
    if (!ok) throw ConfigError("unknown key " + where + "." + key);
  }
}

template <typename T>
T get(const json& j, const std::string& key, const std::string& where) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError("bad or missing value for " + where + "." + key);
  }
}

template <typename T>
void maybe(const json& j, const char* key, const std::string& where, T& into) {
  if (j.contains(key)) into = get<T>(j, key, where);
}

Seconds hms(const json& j, const char* key, const std::string& where) {
  auto text = get<std::string>(j, key, where);
  auto v = parse_hms(text);
  if (!v) throw ConfigError("malformed time for " + where + "." + key);
  return *v;
}

std::vector<TimeWindow> windows(const json& j, const std::string& where) {
  check_keys(j, where, {"start", "shares"});
  auto shares = get<std::vector<double>>(j, "shares", where);
  return make_windows(hms(j, "start", where), shares.size(), shares);
}

FillUnobserved parse_fill(const std::string& s) {
  if (s == "scheduled") return FillUnobserved::scheduled;
  if (s == "route-median" || s == "route_median") return FillUnobserved::route_median;
  throw ConfigError("unknown fill_unobserved mode " + s);
}

DesertMetric parse_metric(const std::string& s) {
  if (s == "radius") return DesertMetric::radius;
  if (s == "network") return DesertMetric::network;
  throw ConfigError("unknown desert metric " + s);
}

json parse_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError(path.string(), 0, "", "cannot open config file");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

}  // namespace

std::string canonical_config(const fs::path& path) {
  return parse_json_file(path).dump();
}

StudyConfig load_config(const fs::path& path) {
  json j = parse_json_file(path);
  StudyConfig c;
  c.base_dir = fs::absolute(path).parent_path();
  auto resolve = [&](const std::string& p) {
    fs::path q(p);
    return q.is_absolute() ? q : c.base_dir / q;
  };
  check_keys(j, "config",
             {"gtfs", "observations", "streets", "cells", "schools",
              "output_dir", "days", "thresholds_min", "percentile", "windows",
              "routing", "access", "delay", "indices", "desert", "grid_size_m"});

  const json& gtfs = j.contains("gtfs") ? j.at("gtfs") : json();
  if (gtfs.is_string()) {
    c.gtfs_dirs.push_back(resolve(gtfs.get<std::string>()));
  } else if (gtfs.is_array()) {
    for (const auto& g : gtfs) {
      if (!g.is_string()) throw ConfigError("config.gtfs entries must be paths");
      c.gtfs_dirs.push_back(resolve(g.get<std::string>()));
    }
  } else {
    throw ConfigError("config.gtfs must be a path or a list of paths");
  }
  if (j.contains("observations")) {
    for (const auto& [day, p] : j.at("observations").items()) {
      if (!parse_date(day)) throw ConfigError("bad observation date " + day);
      if (!p.is_string()) throw ConfigError("observation paths must be strings");
      c.observations[format_date(*parse_date(day))] = resolve(p.get<std::string>());
    }
  }
  const json& streets = j.contains("streets") ? j.at("streets") : json::object();
  check_keys(streets, "streets", {"nodes", "edges"});
  c.street_nodes = resolve(get<std::string>(streets, "nodes", "streets"));
  c.street_edges = resolve(get<std::string>(streets, "edges", "streets"));
  c.cells = resolve(get<std::string>(j, "cells", "config"));
  c.schools = resolve(get<std::string>(j, "schools", "config"));
  c.output_dir = resolve(j.value("output_dir", std::string("out")));
  for (const auto& d : get<std::vector<std::string>>(j, "days", "config")) {
    auto date = parse_date(d);
    if (!date) throw ConfigError("bad day " + d);
    c.days.push_back(*date);
  }
  maybe(j, "thresholds_min", "config", c.thresholds_min);
  if (j.contains("percentile")) {
    auto p = parse_percentile(get<std::string>(j, "percentile", "config"));
    if (!p) throw ConfigError("percentile must be p25 or p50");
    c.matrix.percentile = *p;
  }
  if (j.contains("windows")) {
    const json& w = j.at("windows");
    check_keys(w, "windows", {"morning", "evening"});
    if (w.contains("morning")) c.matrix.morning = windows(w.at("morning"), "windows.morning");
    if (w.contains("evening")) c.matrix.evening = windows(w.at("evening"), "windows.evening");
  }
  if (j.contains("routing")) {
    const json& r = j.at("routing");
    check_keys(r, "routing", {"deadline", "transfer_slack_s", "strict_window_exclusion"});
    if (r.contains("deadline")) {
      if (r.at("deadline").is_null()) {
        c.matrix.routing.outbound_deadline.reset();
      } else {
        c.matrix.routing.outbound_deadline = hms(r, "deadline", "routing");
      }
    }
    maybe(r, "transfer_slack_s", "routing", c.matrix.routing.transfer_slack);
    maybe(r, "strict_window_exclusion", "routing", c.matrix.strict_window_exclusion);
  }
  if (j.contains("access")) {
    const json& a = j.at("access");
    check_keys(a, "access",
               {"walk_kmh", "cycle_kmh", "bus_walk_cap_s", "rail_walk_cap_s",
                "rail_cycle_cap_s", "walk_only_cap_s", "transfer_walk_cap_s",
                "max_snap_m"});
    maybe(a, "walk_kmh", "access", c.access.walk_kmh);
    maybe(a, "cycle_kmh", "access", c.access.cycle_kmh);
    maybe(a, "bus_walk_cap_s", "access", c.access.bus_walk_cap);
    maybe(a, "rail_walk_cap_s", "access", c.access.rail_walk_cap);
    maybe(a, "rail_cycle_cap_s", "access", c.access.rail_cycle_cap);
    maybe(a, "walk_only_cap_s", "access", c.access.walk_only_cap);
    maybe(a, "transfer_walk_cap_s", "access", c.access.transfer_walk_cap);
    maybe(a, "max_snap_m", "access", c.access.max_snap_m);
  }
  if (j.contains("delay")) {
    const json& d = j.at("delay");
    check_keys(d, "delay",
               {"match_tolerance_s", "reversal_slack_s", "fill_unobserved", "delay_rail"});
    maybe(d, "match_tolerance_s", "delay", c.match.tolerance);
    maybe(d, "reversal_slack_s", "delay", c.synthesis.impute.reversal_slack);
    if (d.contains("fill_unobserved")) {
      c.synthesis.fill_unobserved =
          parse_fill(get<std::string>(d, "fill_unobserved", "delay"));
    }
    maybe(d, "delay_rail", "delay", c.synthesis.delay_rail);
  }
  if (j.contains("indices")) {
    const json& x = j.at("indices");
    check_keys(x, "indices",
               {"percentile_direction", "bootstrap_iterations", "seed", "bootstrap_design"});
    if (x.contains("percentile_direction")) {
      auto p = parse_percentile_direction(
          get<std::string>(x, "percentile_direction", "indices"));
      if (!p) throw ConfigError("percentile_direction must be attains or below");
      c.percentile_direction = *p;
    }
    maybe(x, "bootstrap_iterations", "indices", c.bootstrap_iterations);
    maybe(x, "seed", "indices", c.seed);
    if (x.contains("bootstrap_design")) {
      auto b = parse_bootstrap_design(get<std::string>(x, "bootstrap_design", "indices"));
      if (!b) throw ConfigError("bootstrap_design must be cells or population");
      c.bootstrap_design = *b;
    }
  }
  if (j.contains("desert")) {
    const json& d = j.at("desert");
    check_keys(d, "desert", {"metric", "bus_stop_m", "rail_station_m"});
    if (d.contains("metric")) c.desert_metric = parse_metric(get<std::string>(d, "metric", "desert"));
    maybe(d, "bus_stop_m", "desert", c.desert.bus_stop_m);
    maybe(d, "rail_station_m", "desert", c.desert.rail_station_m);
  }
  maybe(j, "grid_size_m", "config", c.grid_size_m);
  validate_config(c);
  return c;
}

void validate_config(const StudyConfig& c) {
  if (c.days.empty()) throw ConfigError("day list is empty");
  if (c.thresholds_min.empty()) throw ConfigError("no thresholds");
  for (double t : c.thresholds_min) {
    if (!(t > 0)) throw ConfigError("thresholds must be positive");
  }
  check_shares(c.matrix.morning);
  check_shares(c.matrix.evening);
  if (c.matrix.routing.transfer_slack < 0) throw ConfigError("negative transfer slack");
  if (!(c.access.walk_kmh > 0) || !(c.access.cycle_kmh > 0)) {
    throw ConfigError("speeds must be positive");
  }
  if (!(c.grid_size_m > 0)) throw ConfigError("grid size must be positive");
}

void apply_overrides(StudyConfig& c, const ConfigOverrides& o) {
  if (o.percentile) c.matrix.percentile = *o.percentile;
  if (o.seed) c.seed = *o.seed;
  if (o.strict_window_exclusion) c.matrix.strict_window_exclusion = true;
  if (o.fill_unobserved) c.synthesis.fill_unobserved = *o.fill_unobserved;
  if (o.desert_metric) c.desert_metric = *o.desert_metric;
  if (o.percentile_direction) c.percentile_direction = *o.percentile_direction;
}

// ---- digests

std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("sha256 failed");
  }
  std::ostringstream out;
  for (unsigned int i = 0; i < len; ++i) {
    out << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
  }
  return out.str();
}

std::string sha256_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError(path.string(), 0, "", "cannot open file");
  std::ostringstream buf;
  buf << in.rdbuf();
  return sha256_hex(buf.str());
}

// ---- Study

struct Study::Cache {
  std::optional<TimetableFeed> feed;
  std::optional<StreetGraph> graph;
  std::optional<std::vector<Cell>> cells;
  std::optional<std::vector<School>> schools;
  std::optional<AccessTables> tables;
  std::optional<std::vector<Site>> stop_sites;
};

Study::Study(StudyConfig config, std::string config_hash)
    : config_(std::move(config)), cache_(std::make_unique<Cache>()) {
  manifest_.config_hash = std::move(config_hash);
}

Study::~Study() = default;

const TimetableFeed& Study::scheduled_feed() {
  if (!cache_->feed) {
    std::vector<TimetableFeed> feeds;
    for (const auto& dir : config_.gtfs_dirs) {
      feeds.push_back(parse_feed(dir, diagnostics_));
    }
    cache_->feed = feeds.size() == 1 ? std::move(feeds[0]) : combine_feeds(feeds);
    auto violations = validate_feed(*cache_->feed);
    if (!violations.empty()) {
      throw InputError(config_.gtfs_dirs.front().string(), 0,
                       violations.front().entity, violations.front().rule);
    }
  }
  return *cache_->feed;
}

const StreetGraph& Study::streets() {
  if (!cache_->graph) {
    cache_->graph.emplace(load_street_graph(config_.street_nodes, config_.street_edges));
  }
  return *cache_->graph;
}

const std::vector<Cell>& Study::cells() {
  if (!cache_->cells) cache_->cells = load_cells(config_.cells);
  return *cache_->cells;
}

const std::vector<School>& Study::schools() {
  if (!cache_->schools) cache_->schools = load_schools(config_.schools);
  return *cache_->schools;
}

const AccessTables& Study::access_tables() {
  if (!cache_->tables) {
    const auto& g = streets();
    auto cs = cell_sites(cells());
    auto ss = school_sites(schools());
    auto st = stop_sites(scheduled_feed());
    snap_sites(g, cs, config_.access.max_snap_m, &diagnostics_);
    snap_sites(g, ss, config_.access.max_snap_m, &diagnostics_);
    snap_sites(g, st, config_.access.max_snap_m, &diagnostics_);
    cache_->tables = build_access_tables(g, cs, ss, st, config_.access, &diagnostics_);
    cache_->stop_sites = std::move(st);
  }
  return *cache_->tables;
}

std::vector<std::string> Study::cell_ids() {
  std::vector<std::string> out;
  for (const auto& c : cells()) out.push_back(c.id);
  return out;
}

std::vector<std::string> Study::school_ids() {
  std::vector<std::string> out;
  for (const auto& s : schools()) out.push_back(s.id);
  return out;
}

fs::path Study::out(const fs::path& relative) const {
  return config_.output_dir / relative;
}

fs::path Study::actual_feed_dir(Date day) const {
  return out(fs::path("actual") / format_date(day));
}

fs::path Study::matrix_path(Date day, bool actual) const {
  return out(fs::path("matrix") /
             ((actual ? "actual_" : "scheduled_") + format_date(day) + ".csv"));
}

fs::path Study::events_path(Date day) const {
  return out(fs::path("lucky_catch") / ("events_" + format_date(day) + ".csv"));
}

void Study::wrote(const fs::path& path) {
  auto rel = fs::relative(path, config_.output_dir).generic_string();
  manifest_.output_digests[rel] = sha256_file(path);
}

void Study::record_inputs() {
  auto add = [&](const fs::path& p) {
    if (fs::is_directory(p)) {
      std::vector<fs::path> files;
      for (const auto& e : fs::directory_iterator(p)) {
        if (e.is_regular_file()) files.push_back(e.path());
      }
      std::sort(files.begin(), files.end());
      for (const auto& f : files) manifest_.input_digests[f.generic_string()] = sha256_file(f);
    } else if (fs::exists(p)) {
      manifest_.input_digests[p.generic_string()] = sha256_file(p);
    }
  };
  for (const auto& d : config_.gtfs_dirs) add(d);
  for (const auto& [day, p] : config_.observations) add(p);
  add(config_.street_nodes);
  add(config_.street_edges);
  add(config_.cells);
  add(config_.schools);
}

void Study::write_manifest() {
  json j;
  j["config_hash"] = manifest_.config_hash;
  j["inputs"] = manifest_.input_digests;
  j["outputs"] = manifest_.output_digests;
  json timings = json::array();
  for (const auto& t : manifest_.timings) {
    timings.push_back({{"stage", t.stage}, {"seconds", t.seconds}});
  }
  j["timings"] = timings;
  j["warnings"] = diagnostics_.warnings;
  fs::create_directories(config_.output_dir);
  std::ofstream out(this->out("manifest.json"));
  out << j.dump(2) << '\n';
}

// ---- commands

namespace {

class StageTimer {
 public:
  StageTimer(Study& study, std::string stage)
      : study_(study), stage_(std::move(stage)),
        start_(std::chrono::steady_clock::now()) {}
  ~StageTimer() {
    std::chrono::duration<double> d = std::chrono::steady_clock::now() - start_;
    study_.manifest().timings.push_back({stage_, d.count()});
  }

 private:
  Study& study_;
  std::string stage_;
  std::chrono::steady_clock::time_point start_;
};

std::ofstream open_output(const fs::path& path) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

std::vector<DelayObservation> observations_for(Study& study, Date day) {
  auto it = study.config().observations.find(format_date(day));
  if (it == study.config().observations.end()) {
    study.diagnostics().warn("no observation file for " + format_date(day) +
                             "; using the schedule");
    return {};
  }
  return ingest_observations(it->second, &study.scheduled_feed(), study.diagnostics());
}

TimetableFeed load_actual_feed(Study& study, Date day) {
  auto dir = study.actual_feed_dir(day);
  if (!fs::exists(dir / "stop_times.txt")) return cmd_build_actual(study, day).feed;
  Diagnostics local;
  auto feed = parse_feed(dir, local);
  if (feed.variant() != FeedVariant::actual(day)) {
    throw InputError((dir / "feed_info.txt").string(), 0, "feed_version",
                     "expected actual feed for " + format_date(day));
  }
  return feed;
}

}  // namespace

SynthesisResult cmd_build_actual(Study& study, Date day) {
  StageTimer timer(study, "build-actual " + format_date(day));
  const auto& feed = study.scheduled_feed();
  auto obs = observations_for(study, day);
  auto matched = match_to_trips(obs, feed, day, study.config().match);
  if (!matched.unmatched.empty()) {
    study.diagnostics().warn(std::to_string(matched.unmatched.size()) +
                             " unmatched observations on " + format_date(day));
  }
  auto result = synthesize_actual_feed(feed, day, matched.traces,
                                       study.config().synthesis);
  for (const auto& t : result.dropped_trips) {
    study.diagnostics().warn("dropped trip " + t + " on " + format_date(day) +
                             " (departure reversal)");
  }
  auto violations = validate_feed(result.feed);
  if (!violations.empty()) {
    throw InputError("actual feed " + format_date(day), 0,
                     violations.front().entity, violations.front().rule);
  }
  auto dir = study.actual_feed_dir(day);
  fs::create_directories(dir);
  write_feed(result.feed, dir);
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) files.push_back(e.path());
  std::sort(files.begin(), files.end());
  for (const auto& f : files) study.wrote(f);

  auto stats_path = study.out("delay_stats_" + format_date(day) + ".csv");
  {
    auto out = open_output(stats_path);
    write_delay_stats_csv(delay_stats(feed, {result.feed}), out);
  }
  study.wrote(stats_path);
  return result;
}

void cmd_matrix(Study& study, Date day, bool actual) {
  StageTimer timer(study, std::string("matrix ") + (actual ? "actual " : "scheduled ") +
                              format_date(day));
  const auto& config = study.config();
  const auto& tables = study.access_tables();
  auto cells = study.cell_ids();
  auto schools = study.school_ids();
  auto day_s = format_date(day);

  auto sched_feed = restrict_to_date(study.scheduled_feed(), day, &study.diagnostics());
  TransitNetwork sn(sched_feed, tables.stop_transfer_walk.entries);
  AccessIndex sa(tables, sn);
  auto sched = build_matrix(sn, sa, cells, schools, config.matrix, "scheduled", day_s);
  auto sp = study.matrix_path(day, false);
  {
    auto out = open_output(sp);
    write_matrix_csv(sched, out);
  }
  study.wrote(sp);
  if (!actual) return;

  auto actual_feed = load_actual_feed(study, day);
  TransitNetwork an(actual_feed, tables.stop_transfer_walk.entries);
  AccessIndex aa(tables, an);
  auto act = build_matrix(an, aa, cells, schools, config.matrix, "actual", day_s, &sched);
  auto ap = study.matrix_path(day, true);
  {
    auto out = open_output(ap);
    write_matrix_csv(act, out);
  }
  study.wrote(ap);

  CatchInputs in{sn, sa, an, aa, config.matrix};
  auto events = detect_all(in, sched, act, day_s);
  auto ep = study.events_path(day);
  {
    auto out = open_output(ep);
    write_events_csv(events, out);
  }
  study.wrote(ep);
}

namespace {

std::vector<LuckyCatchEvent> read_event_kinds(const fs::path& path) {
  auto t = CsvTable::read(path);
  auto c_cell = t.require_column("cell_id");
  auto c_school = t.require_column("school_id");
  auto c_kind = t.require_column("kind");
  std::vector<LuckyCatchEvent> out;
  for (const auto& row : t.rows()) {
    LuckyCatchEvent e;
    e.cell = std::string(t.get(row, c_cell));
    e.school = std::string(t.get(row, c_school));
    auto k = t.get(row, c_kind);
    if (k == "new_transfer") e.kind = CatchKind::new_transfer;
    else if (k == "alternative_route") e.kind = CatchKind::alternative_route;
    else if (k == "reduced_wait") e.kind = CatchKind::reduced_wait;
    else throw InputError(path.string(), row.line, "kind", "unknown event kind");
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace

void cmd_indices(Study& study) {
  StageTimer timer(study, "indices");
  const auto& config = study.config();
  const auto& cells = study.cells();
  std::vector<std::pair<std::vector<RoundTripTime>, std::vector<RoundTripTime>>> days;
  for (Date d : config.days) {
    days.emplace_back(read_matrix_csv(study.matrix_path(d, false)),
                      read_matrix_csv(study.matrix_path(d, true)));
  }
  std::vector<CellIndexRow> rows;
  for (double tmin : config.thresholds_min) {
    for (std::size_t i = 0; i < config.days.size(); ++i) {
      auto r = cell_indices(cells, days[i].first, days[i].second, tmin * 60,
                            format_date(config.days[i]));
      std::move(r.begin(), r.end(), std::back_inserter(rows));
    }
  }
  auto medians = median_rows(rows);

  auto write = [&](const fs::path& rel, auto&& body) {
    auto p = study.out(fs::path("indices") / rel);
    {
      auto out = open_output(p);
      body(out);
    }
    study.wrote(p);
  };
  write("cell_indices.csv", [&](std::ostream& o) { write_index_csv(rows, o); });
  write("cell_indices_median.csv", [&](std::ostream& o) { write_index_csv(medians, o); });
  write("districts.csv", [&](std::ostream& o) {
    write_district_csv(district_summary(medians, config.percentile_direction), o);
  });

  std::vector<GiniResult> ginis;
  for (const char* variant : {"scheduled", "actual"}) {
    for (double tmin : config.thresholds_min) {
      std::vector<WeightedValue> values;
      for (const auto& m : medians) {
        if (m.threshold != tmin * 60) continue;
        values.push_back({std::string(variant) == "scheduled" ? m.eco_scheduled
                                                               : m.eco_actual,
                          m.population});
      }
      double total = 0;
      for (const auto& v : values) total += v.weight;
      GiniResult g;
      if (values.size() >= 2 && total > 0) {
        g = gini_bootstrap(values, config.bootstrap_iterations, config.seed,
                           config.bootstrap_design);
      }
      g.threshold = tmin * 60;
      g.variant = variant;
      g.seed = config.seed;
      ginis.push_back(g);
    }
  }
  write("gini.csv", [&](std::ostream& o) { write_gini_csv(ginis, o); });

  write("binned.csv", [&](std::ostream& o) {
    bool header = true;
    for (double tmin : config.thresholds_min) {
      std::vector<BinnedItem> sched, act, ogl_cells;
      for (const auto& m : medians) {
        if (m.threshold != tmin * 60) continue;
        sched.push_back({m.eco_scheduled, m.population});
        act.push_back({m.eco_actual, m.population});
        ogl_cells.push_back({m.unreachable ? std::nullopt : std::optional(m.ogl), 1});
      }
      write_binned_csv("eco_scheduled_population", tmin * 60,
                       bin_population(sched, eco_bins()), o, header);
      header = false;
      write_binned_csv("eco_actual_population", tmin * 60,
                       bin_population(act, eco_bins()), o, header);
      write_binned_csv("ogl_cells", tmin * 60,
                       bin_population(ogl_cells, ogl_bins(), true), o, header);
    }
  });

  std::vector<LuckyCatchEvent> events;
  for (Date d : config.days) {
    if (!fs::exists(study.events_path(d))) continue;
    auto e = read_event_kinds(study.events_path(d));
    std::move(e.begin(), e.end(), std::back_inserter(events));
  }
  write("lucky_catch_summary.csv", [&](std::ostream& o) {
    write_catch_summary_csv(summarize(events, cells, medians), o);
  });
}

bool is_pt_desert(Study& study, const Cell& cell) {
  const auto& config = study.config();
  const auto& feed = study.scheduled_feed();
  if (config.desert_metric == DesertMetric::radius) {
    std::vector<LatLon> bus, rail;
    for (const auto& s : feed.stops()) {
      (s.kind == StopKind::rail_station ? rail : bus).push_back({s.lat, s.lon});
    }
    return classify_pt_desert(cell.pos, bus, rail, study.streets().projection(),
                              config.desert);
  }
  std::vector<Site> site = cell_sites(std::span(&cell, 1));
  snap_sites(study.streets(), site, config.access.max_snap_m);
  auto stops = stop_sites(feed);
  snap_sites(study.streets(), stops, config.access.max_snap_m);
  return classify_pt_desert_network(study.streets(), site[0], stops, config.desert);
}

std::string cells_geojson(const std::vector<Cell>& cells,
                          const std::vector<CellIndexRow>& median_rows,
                          const std::vector<bool>& pt_desert,
                          double grid_size_m) {
  std::vector<LatLon> pts;
  for (const auto& c : cells) pts.push_back(c.pos);
  auto proj = LocalProjection::around(pts);
  std::map<std::string, std::vector<const CellIndexRow*>> by_cell;
  for (const auto& r : median_rows) by_cell[r.cell].push_back(&r);

  json features = json::array();
  const double h = grid_size_m / 2;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const auto& c = cells[i];
    auto centre = proj.to_planar(c.pos);
    json ring = json::array();
    for (auto [dx, dy] : {std::pair{-h, -h}, {h, -h}, {h, h}, {-h, h}, {-h, -h}}) {
      auto p = proj.to_latlon({centre.x + dx, centre.y + dy});
      ring.push_back({p.lon, p.lat});
    }
    json props;
    props["cell_id"] = c.id;
    props["population"] = c.population;
    props["district"] = c.district;
    props["pt_desert"] = static_cast<bool>(pt_desert[i]);
    for (const auto* r : by_cell[c.id]) {
      auto t = format_double(r->threshold / 60);
      props["eco_sched_" + t] = r->eco_scheduled;
      props["eco_actual_" + t] = r->eco_actual;
      props["ogl_" + t] = r->ogl;
      props["togl_" + t] = r->togl;
    }
    features.push_back({{"type", "Feature"},
                        {"geometry", {{"type", "Polygon"}, {"coordinates", {ring}}}},
                        {"properties", props}});
  }
  json fc = {{"type", "FeatureCollection"}, {"features", features}};
  return fc.dump(1) + "\n";
}

void cmd_geojson(Study& study) {
  StageTimer timer(study, "geojson");
  auto medians = read_index_csv(study.out("indices/cell_indices_median.csv"));
  const auto& cells = study.cells();
  std::vector<bool> desert;
  for (const auto& c : cells) desert.push_back(is_pt_desert(study, c));
  auto p = study.out("geojson/cells.geojson");
  {
    auto out = open_output(p);
    out << cells_geojson(cells, medians, desert, study.config().grid_size_m);
  }
  study.wrote(p);
}

namespace {

std::string pct(double share) {
  std::ostringstream o;
  o << std::fixed << std::setprecision(1) << share * 100 << "%";
  return o.str();
}

std::string fixed(double v, int digits = 3) {
  std::ostringstream o;
  o << std::fixed << std::setprecision(digits) << v;
  return o.str();
}

}  // namespace

void cmd_report(Study& study) {
  StageTimer timer(study, "report");
  const auto& config = study.config();
  auto medians = read_index_csv(study.out("indices/cell_indices_median.csv"));
  const auto& cells = study.cells();
  std::ostringstream r;
  r << "# Accessibility report\n\n";
  r << "Days: ";
  for (std::size_t i = 0; i < config.days.size(); ++i) {
    r << (i ? ", " : "") << format_date(config.days[i]);
  }
  r << "\nRepresentative travel time: " << to_string(config.matrix.percentile)
    << "\n\n## ECO population distribution (five-day median)\n\n";
  for (const char* variant : {"scheduled", "actual"}) {
    r << "### " << variant << "\n\n| ECO bin |";
    for (double t : config.thresholds_min) r << " T=" << format_double(t) << " min |";
    r << "\n|---|";
    for (std::size_t i = 0; i < config.thresholds_min.size(); ++i) r << "---|";
    r << "\n";
    std::vector<BinnedTable> tables;
    for (double t : config.thresholds_min) {
      std::vector<BinnedItem> items;
      for (const auto& m : medians) {
        if (m.threshold != t * 60) continue;
        items.push_back({std::string(variant) == "scheduled" ? m.eco_scheduled
                                                              : m.eco_actual,
                         m.population});
      }
      tables.push_back(bin_population(items, eco_bins()));
    }
    auto bins = eco_bins();
    for (std::size_t b = 0; b < bins.size(); ++b) {
      r << "| " << bins[b].label << " |";
      for (const auto& t : tables) {
        r << " " << fixed(t.rows[b].mass, 0) << " (" << pct(t.rows[b].share) << ") |";
      }
      r << "\n";
    }
    r << "\n";
  }

  double total_pop = 0, desert_pop = 0;
  std::size_t desert_cells = 0;
  for (const auto& c : cells) {
    total_pop += c.population;
    if (is_pt_desert(study, c)) {
      desert_pop += c.population;
      ++desert_cells;
    }
  }
  r << "## PT Deserts\n\n";
  r << "PT Deserts population: " << fixed(desert_pop, 0) << " ("
    << pct(total_pop > 0 ? desert_pop / total_pop : 0) << " of " << fixed(total_pop, 0)
    << ") in " << desert_cells << " cells\n\n";

  r << "## District ECO percentiles (scheduled)\n\n";
  r << "| District | Threshold | p50 | p75 | Population |\n|---|---|---|---|---|\n";
  for (const auto& d : district_summary(medians, config.percentile_direction)) {
    r << "| " << d.district << " | " << format_double(d.threshold / 60) << " | "
      << (d.p50 ? fixed(*d.p50) : "NA") << " | " << (d.p75 ? fixed(*d.p75) : "NA")
      << " | " << fixed(d.population, 0) << " |\n";
  }

  r << "\n## Gini index of ECO\n\n| Variant | Threshold | Gini | 95% CI |\n|---|---|---|---|\n";
  {
    auto t = CsvTable::read(study.out("indices/gini.csv"));
    for (const auto& row : t.rows()) {
      auto num = [&](const char* col) {
        return parse_double(t.get(row, t.require_column(col))).value_or(0);
      };
      r << "| " << t.get(row, t.require_column("variant")) << " | "
        << t.get(row, t.require_column("threshold_min")) << " | "
        << fixed(num("gini")) << " | (" << fixed(num("ci_low")) << ", "
        << fixed(num("ci_high")) << ") |\n";
    }
  }

  r << "\n## Lucky Catch\n\n";
  {
    auto t = CsvTable::read(study.out("indices/lucky_catch_summary.csv"));
    if (t.rows().empty()) {
      r << "No events.\n";
    } else {
      r << "| District | new_transfer | alternative_route | reduced_wait | "
           "cells with OGL > 0 | max OGL gain |\n|---|---|---|---|---|---|\n";
      for (const auto& row : t.rows()) {
        r << "|";
        for (std::size_t i = 0; i < t.header().size(); ++i) r << " " << t.get(row, i) << " |";
        r << "\n";
      }
    }
  }

  r << "\n## OGL range\n\n";
  for (double t : config.thresholds_min) {
    double lo = 0, hi = 0;
    bool any = false;
    for (const auto& m : medians) {
      if (m.threshold != t * 60) continue;
      lo = any ? std::min(lo, m.ogl) : m.ogl;
      hi = any ? std::max(hi, m.ogl) : m.ogl;
      any = true;
    }
    r << "T=" << format_double(t) << " min: min OGL " << fixed(lo) << ", max OGL "
      << fixed(hi) << "\n";
  }

  auto p = study.out("report.md");
  {
    auto out = open_output(p);
    out << r.str();
  }
  study.wrote(p);
}

void cmd_all(Study& study) {
  study.record_inputs();
  {
    StageTimer timer(study, "access tables");
    auto p = study.out("access_tables.csv");
    {
      auto out = open_output(p);
      write_access_tables_csv(study.access_tables(), out);
    }
    study.wrote(p);
  }
  std::vector<TimetableFeed> actual;
  for (Date d : study.config().days) actual.push_back(cmd_build_actual(study, d).feed);
  auto stats = study.out("delay_stats.csv");
  {
    auto out = open_output(stats);
    write_delay_stats_csv(delay_stats(study.scheduled_feed(), actual), out);
  }
  study.wrote(stats);
  for (Date d : study.config().days) cmd_matrix(study, d, true);
  cmd_indices(study);
  cmd_geojson(study);
  cmd_report(study);
}

}  // namespace transit_access
