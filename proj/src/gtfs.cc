#include "transit_access/gtfs.h"

#include <algorithm>
#include <fstream>
#include <map>

#include <fmt/format.h>

#include "transit_access/csv.h"

namespace transit_access {

namespace fs = std::filesystem;

std::string_view to_string(StopKind k) {
  return k == StopKind::bus_stop ? "bus_stop" : "rail_station";
}

std::string_view to_string(RouteCategory c) {
  switch (c) {
    case RouteCategory::regular:
      return "regular";
    case RouteCategory::local:
      return "local";
    case RouteCategory::rail:
      return "rail";
  }
  return "regular";
}

bool ServiceCalendar::in_range(Date d) const {
  if (start && end && *start <= d && d <= *end) return true;
  return added.contains(d) || removed.contains(d);
}

bool ServiceCalendar::covers(Date d) const {
  if (removed.contains(d)) return false;
  if (added.contains(d)) return true;
  if (!start || !end || d < *start || *end < d) return false;
  return weekdays[static_cast<std::size_t>(weekday_index(d))];
}

std::string FeedVariant::label() const {
  if (kind == Kind::scheduled || !date) return "scheduled";
  return "actual:" + format_date(*date);
}

TimetableFeed::TimetableFeed(std::vector<Stop> stops, std::vector<Route> routes,
                             std::vector<Trip> trips,
                             std::vector<ServiceCalendar> calendars,
                             FeedVariant variant)
    : stops_(std::move(stops)),
      routes_(std::move(routes)),
      trips_(std::move(trips)),
      calendars_(std::move(calendars)),
      variant_(variant) {
  for (std::size_t i = 0; i < stops_.size(); ++i) {
    stop_index_.emplace(stops_[i].id, i);
  }
  for (std::size_t i = 0; i < routes_.size(); ++i) {
    route_index_.emplace(routes_[i].id, i);
  }
  for (std::size_t i = 0; i < trips_.size(); ++i) {
    trip_index_.emplace(trips_[i].id, i);
  }
  for (std::size_t i = 0; i < calendars_.size(); ++i) {
    calendar_index_.emplace(calendars_[i].service_id, i);
  }
}

namespace {

template <typename T, typename Map>
const T* lookup(const std::vector<T>& items, const Map& index,
                const std::string& id) {
  auto it = index.find(id);
  return it == index.end() ? nullptr : &items[it->second];
}

}  // namespace

const Stop* TimetableFeed::stop(const std::string& id) const {
  return lookup(stops_, stop_index_, id);
}
const Route* TimetableFeed::route(const std::string& id) const {
  return lookup(routes_, route_index_, id);
}
const Trip* TimetableFeed::trip(const std::string& id) const {
  return lookup(trips_, trip_index_, id);
}
const ServiceCalendar* TimetableFeed::calendar(const std::string& id) const {
  return lookup(calendars_, calendar_index_, id);
}

namespace {

CsvTable read_required(const fs::path& dir, const char* name) {
  fs::path p = dir / name;
  if (!fs::exists(p)) {
    throw InputError(fmt::format("missing file: {}", p.string()));
  }
  return CsvTable::read(p);
}

[[noreturn]] void fail(const CsvTable& t, const CsvTable::Row& row,
                       std::string_view field, const std::string& what) {
  throw InputError(t.source(), row.line, std::string(field), what);
}

double read_coord(const CsvTable& t, const CsvTable::Row& row,
                  std::size_t col, std::string_view field, double limit) {
  auto v = parse_double(t.get(row, col));
  if (!v) fail(t, row, field, "malformed number");
  if (*v < -limit || *v > limit) fail(t, row, field, "coordinate out of range");
  return *v;
}

std::vector<Stop> parse_stops(const fs::path& dir, Diagnostics& diag) {
  CsvTable t = read_required(dir, "stops.txt");
  auto c_id = t.require_column("stop_id");
  auto c_name = t.column("stop_name");
  auto c_lat = t.require_column("stop_lat");
  auto c_lon = t.require_column("stop_lon");
  auto c_kind = t.column("ext_stop_kind");
  if (!c_kind) {
    diag.warn(t.source() +
              ": no ext_stop_kind column, all stops treated as bus_stop");
  }
  std::vector<Stop> stops;
  std::set<std::string> seen;
  for (const auto& row : t.rows()) {
    Stop s;
    s.id = std::string(t.get(row, c_id));
    if (s.id.empty()) fail(t, row, "stop_id", "empty stop_id");
    if (!seen.insert(s.id).second) fail(t, row, "stop_id", "duplicate stop_id");
    if (c_name) s.name = std::string(t.get(row, *c_name));
    s.lat = read_coord(t, row, c_lat, "stop_lat", 90);
    s.lon = read_coord(t, row, c_lon, "stop_lon", 180);
    if (c_kind) {
      auto kind = t.get(row, *c_kind);
      if (kind == "rail_station") {
        s.kind = StopKind::rail_station;
      } else if (kind == "bus_stop" || kind.empty()) {
        s.kind = StopKind::bus_stop;
      } else {
        fail(t, row, "ext_stop_kind", "unknown stop kind");
      }
    }
    stops.push_back(std::move(s));
  }
  return stops;
}

std::vector<Route> parse_routes(const fs::path& dir) {
  CsvTable t = read_required(dir, "routes.txt");
  auto c_id = t.require_column("route_id");
  auto c_short = t.column("route_short_name");
  auto c_long = t.column("route_long_name");
  auto c_cat = t.column("ext_category");
  std::vector<Route> routes;
  std::set<std::string> seen;
  for (const auto& row : t.rows()) {
    Route r;
    r.id = std::string(t.get(row, c_id));
    if (r.id.empty()) fail(t, row, "route_id", "empty route_id");
    if (!seen.insert(r.id).second) {
      fail(t, row, "route_id", "duplicate route_id");
    }
    if (c_short) r.name = std::string(t.get(row, *c_short));
    if (r.name.empty() && c_long) r.name = std::string(t.get(row, *c_long));
    if (c_cat) {
      auto cat = t.get(row, *c_cat);
      if (cat == "local") {
        r.category = RouteCategory::local;
      } else if (cat == "rail") {
        r.category = RouteCategory::rail;
      } else if (cat == "regular" || cat.empty()) {
        r.category = RouteCategory::regular;
      } else {
        fail(t, row, "ext_category", "unknown route category");
      }
    }
    routes.push_back(std::move(r));
  }
  return routes;
}

std::vector<ServiceCalendar> parse_calendars(const fs::path& dir) {
  std::map<std::string, ServiceCalendar> calendars;
  bool have_any = false;
  if (fs::exists(dir / "calendar.txt")) {
    have_any = true;
    CsvTable t = CsvTable::read(dir / "calendar.txt");
    auto c_id = t.require_column("service_id");
    static constexpr const char* kDays[] = {"monday", "tuesday", "wednesday",
                                            "thursday", "friday", "saturday",
                                            "sunday"};
    std::array<std::size_t, 7> day_cols{};
    for (std::size_t i = 0; i < 7; ++i) day_cols[i] = t.require_column(kDays[i]);
    auto c_start = t.require_column("start_date");
    auto c_end = t.require_column("end_date");
    for (const auto& row : t.rows()) {
      ServiceCalendar cal;
      cal.service_id = std::string(t.get(row, c_id));
      if (calendars.contains(cal.service_id)) {
        fail(t, row, "service_id", "duplicate service_id");
      }
      for (std::size_t i = 0; i < 7; ++i) {
        auto v = t.get(row, day_cols[i]);
        if (v != "0" && v != "1") fail(t, row, kDays[i], "expected 0 or 1");
        cal.weekdays[i] = v == "1";
      }
      cal.start = parse_date(t.get(row, c_start));
      if (!cal.start) fail(t, row, "start_date", "malformed date");
      cal.end = parse_date(t.get(row, c_end));
      if (!cal.end) fail(t, row, "end_date", "malformed date");
      if (*cal.end < *cal.start) fail(t, row, "end_date", "end before start");
      calendars.emplace(cal.service_id, std::move(cal));
    }
  }
  if (fs::exists(dir / "calendar_dates.txt")) {
    have_any = true;
    CsvTable t = CsvTable::read(dir / "calendar_dates.txt");
    auto c_id = t.require_column("service_id");
    auto c_date = t.require_column("date");
    auto c_type = t.require_column("exception_type");
    for (const auto& row : t.rows()) {
      std::string id(t.get(row, c_id));
      auto date = parse_date(t.get(row, c_date));
      if (!date) fail(t, row, "date", "malformed date");
      auto type = t.get(row, c_type);
      auto& cal = calendars[id];
      cal.service_id = id;
      if (type == "1") {
        cal.added.insert(*date);
      } else if (type == "2") {
        cal.removed.insert(*date);
      } else {
        fail(t, row, "exception_type", "expected 1 or 2");
      }
    }
  }
  if (!have_any) {
    throw InputError(fmt::format("missing file: {} (or calendar_dates.txt)",
                                 (dir / "calendar.txt").string()));
  }
  std::vector<ServiceCalendar> out;
  for (auto& [id, cal] : calendars) out.push_back(std::move(cal));
  return out;
}

}  // namespace

TimetableFeed parse_feed(const fs::path& dir, Diagnostics& diag) {
  if (fs::exists(dir / "frequencies.txt")) {
    throw InputError(fmt::format(
        "{}: frequency-based trips are not supported",
        (dir / "frequencies.txt").string()));
  }
  auto stops = parse_stops(dir, diag);
  auto routes = parse_routes(dir);
  auto calendars = parse_calendars(dir);

  std::set<std::string> stop_ids, route_ids, service_ids;
  for (const auto& s : stops) stop_ids.insert(s.id);
  for (const auto& r : routes) route_ids.insert(r.id);
  for (const auto& c : calendars) service_ids.insert(c.service_id);

  std::vector<Trip> trips;
  std::map<std::string, std::size_t> trip_pos;
  {
    CsvTable t = read_required(dir, "trips.txt");
    auto c_route = t.require_column("route_id");
    auto c_service = t.require_column("service_id");
    auto c_trip = t.require_column("trip_id");
    auto c_observed = t.column("ext_observed");
    for (const auto& row : t.rows()) {
      Trip trip;
      trip.id = std::string(t.get(row, c_trip));
      trip.route_id = std::string(t.get(row, c_route));
      trip.service_id = std::string(t.get(row, c_service));
      if (trip.id.empty()) fail(t, row, "trip_id", "empty trip_id");
      if (trip_pos.contains(trip.id)) {
        fail(t, row, "trip_id", "duplicate trip_id");
      }
      if (!route_ids.contains(trip.route_id)) {
        fail(t, row, "route_id", "unresolved route_id");
      }
      if (!service_ids.contains(trip.service_id)) {
        fail(t, row, "service_id", "unresolved service_id");
      }
      if (c_observed) trip.observed = t.get(row, *c_observed) == "1";
      trip_pos.emplace(trip.id, trips.size());
      trips.push_back(std::move(trip));
    }
  }

  CsvTable t = read_required(dir, "stop_times.txt");
  auto c_trip = t.require_column("trip_id");
  auto c_arr = t.require_column("arrival_time");
  auto c_dep = t.require_column("departure_time");
  auto c_stop = t.require_column("stop_id");
  auto c_seq = t.require_column("stop_sequence");
  std::vector<std::vector<std::pair<StopTime, std::size_t>>> per_trip(
      trips.size());
  for (const auto& row : t.rows()) {
    std::string trip_id(t.get(row, c_trip));
    auto it = trip_pos.find(trip_id);
    if (it == trip_pos.end()) fail(t, row, "trip_id", "unresolved trip_id");
    StopTime st;
    st.stop_id = std::string(t.get(row, c_stop));
    if (!stop_ids.contains(st.stop_id)) {
      fail(t, row, "stop_id", "unresolved stop_id");
    }
    auto seq = parse_int(t.get(row, c_seq));
    if (!seq || *seq <= 0) fail(t, row, "stop_sequence", "malformed sequence");
    st.stop_sequence = static_cast<int>(*seq);
    auto arr_text = t.get(row, c_arr);
    auto dep_text = t.get(row, c_dep);
    if (arr_text.empty()) arr_text = dep_text;
    if (dep_text.empty()) dep_text = arr_text;
    auto arr = parse_hms(arr_text);
    if (!arr) fail(t, row, "arrival_time", "malformed time string");
    auto dep = parse_hms(dep_text);
    if (!dep) fail(t, row, "departure_time", "malformed time string");
    st.arrival = *arr;
    st.departure = *dep;
    per_trip[it->second].emplace_back(std::move(st), row.line);
  }

  for (std::size_t i = 0; i < trips.size(); ++i) {
    auto& entries = per_trip[i];
    std::stable_sort(entries.begin(), entries.end(),
                     [](const auto& a, const auto& b) {
                       return a.first.stop_sequence < b.first.stop_sequence;
                     });
    if (entries.size() < 2) {
      throw InputError(t.source(), entries.empty() ? 0 : entries[0].second,
                       "trip_id",
                       fmt::format("trip {} has fewer than 2 stop_times",
                                   trips[i].id));
    }
    for (std::size_t k = 0; k < entries.size(); ++k) {
      const auto& [st, line] = entries[k];
      if (st.departure < st.arrival) {
        throw InputError(t.source(), line, "departure_time",
                         "non-monotone stop_times (departure before arrival)");
      }
      if (k > 0) {
        const auto& prev = entries[k - 1].first;
        if (prev.stop_sequence == st.stop_sequence) {
          throw InputError(t.source(), line, "stop_sequence",
                           "duplicate stop_sequence");
        }
        if (st.arrival < prev.departure) {
          throw InputError(t.source(), line, "arrival_time",
                           "non-monotone stop_times");
        }
      }
      trips[i].stop_times.push_back(st);
    }
  }

  FeedVariant variant;
  if (fs::exists(dir / "feed_info.txt")) {
    CsvTable info = CsvTable::read(dir / "feed_info.txt");
    if (auto c = info.column("feed_version"); c && !info.rows().empty()) {
      auto version = info.get(info.rows().front(), *c);
      if (version.starts_with("actual:")) {
        auto d = parse_date(version.substr(7));
        if (!d) {
          fail(info, info.rows().front(), "feed_version", "malformed date");
        }
        variant = FeedVariant::actual(*d);
      }
    }
  }

  return TimetableFeed(std::move(stops), std::move(routes), std::move(trips),
                       std::move(calendars), variant);
}

void write_feed(const TimetableFeed& feed, const fs::path& dir) {
  fs::create_directories(dir);
  auto open = [&](const char* name) {
    std::ofstream out(dir / name, std::ios::binary);
    if (!out) throw InputError("cannot write " + (dir / name).string());
    return out;
  };
  {
    auto out = open("stops.txt");
    CsvWriter w(out);
    w.row({"stop_id", "stop_name", "stop_lat", "stop_lon", "ext_stop_kind"});
    for (const auto& s : feed.stops()) {
      w.row({s.id, s.name, format_double(s.lat), format_double(s.lon),
             std::string(to_string(s.kind))});
    }
  }
  {
    auto out = open("routes.txt");
    CsvWriter w(out);
    w.row({"route_id", "route_short_name", "ext_category"});
    for (const auto& r : feed.routes()) {
      w.row({r.id, r.name, std::string(to_string(r.category))});
    }
  }
  {
    auto out = open("trips.txt");
    CsvWriter w(out);
    w.row({"route_id", "service_id", "trip_id", "ext_observed"});
    for (const auto& t : feed.trips()) {
      w.row({t.route_id, t.service_id, t.id, t.observed ? "1" : "0"});
    }
  }
  {
    auto out = open("stop_times.txt");
    CsvWriter w(out);
    w.row({"trip_id", "arrival_time", "departure_time", "stop_id",
           "stop_sequence"});
    for (const auto& t : feed.trips()) {
      for (const auto& st : t.stop_times) {
        w.row({t.id, format_hms(st.arrival), format_hms(st.departure),
               st.stop_id, std::to_string(st.stop_sequence)});
      }
    }
  }
  {
    auto cal_out = open("calendar.txt");
    auto dates_out = open("calendar_dates.txt");
    CsvWriter cal(cal_out);
    CsvWriter dates(dates_out);
    cal.row({"service_id", "monday", "tuesday", "wednesday", "thursday",
             "friday", "saturday", "sunday", "start_date", "end_date"});
    dates.row({"service_id", "date", "exception_type"});
    for (const auto& c : feed.calendars()) {
      if (c.start && c.end) {
        std::vector<std::string> row{c.service_id};
        for (bool b : c.weekdays) row.push_back(b ? "1" : "0");
        row.push_back(format_gtfs_date(*c.start));
        row.push_back(format_gtfs_date(*c.end));
        cal.row(row);
      }
      for (const auto& d : c.added) {
        dates.row({c.service_id, format_gtfs_date(d), "1"});
      }
      for (const auto& d : c.removed) {
        dates.row({c.service_id, format_gtfs_date(d), "2"});
      }
    }
  }
  {
    auto out = open("feed_info.txt");
    CsvWriter w(out);
    w.row({"feed_publisher_name", "feed_publisher_url", "feed_lang",
           "feed_version"});
    w.row({"transit-access", "https://example.invalid", "ja",
           feed.variant().label()});
  }
}

std::vector<Violation> validate_feed(const TimetableFeed& feed) {
  std::vector<Violation> out;
  std::set<std::string> seen;
  for (const auto& s : feed.stops()) {
    std::string entity = "stop " + s.id;
    if (!seen.insert(s.id).second) out.push_back({entity, "duplicate stop_id"});
    if (s.lat < -90 || s.lat > 90 || s.lon < -180 || s.lon > 180) {
      out.push_back({entity, "coordinate out of range"});
    }
  }
  seen.clear();
  for (const auto& r : feed.routes()) {
    if (!seen.insert(r.id).second) {
      out.push_back({"route " + r.id, "duplicate route_id"});
    }
  }
  seen.clear();
  for (const auto& t : feed.trips()) {
    std::string entity = "trip " + t.id;
    if (!seen.insert(t.id).second) out.push_back({entity, "duplicate trip_id"});
    if (!feed.route(t.route_id)) out.push_back({entity, "unresolved route_id"});
    if (!feed.calendar(t.service_id)) {
      out.push_back({entity, "unresolved service_id"});
    }
    if (t.stop_times.size() < 2) {
      out.push_back({entity, "fewer than 2 stop_times"});
    }
    for (std::size_t k = 0; k < t.stop_times.size(); ++k) {
      const auto& st = t.stop_times[k];
      if (!feed.stop(st.stop_id)) {
        out.push_back({entity, "unresolved stop_id"});
      }
      if (st.arrival < 0 || st.departure < 0) {
        out.push_back({entity, "negative time"});
      }
      if (st.departure < st.arrival) {
        out.push_back({entity, "departure before arrival"});
      }
      if (k > 0) {
        const auto& prev = t.stop_times[k - 1];
        if (st.stop_sequence <= prev.stop_sequence) {
          out.push_back({entity, "stop_sequence not strictly increasing"});
        }
        if (st.arrival < prev.departure) {
          out.push_back({entity, "non-monotone stop_times"});
        }
      }
    }
  }
  return out;
}

std::vector<std::string> active_trips(const TimetableFeed& feed, Date date,
                                      Diagnostics* diag) {
  bool any_in_range = false;
  std::set<std::string> active_services;
  for (const auto& cal : feed.calendars()) {
    if (cal.in_range(date)) any_in_range = true;
    if (cal.covers(date)) active_services.insert(cal.service_id);
  }
  if (!any_in_range && diag) {
    diag->warn(fmt::format("date {} is outside all service calendar ranges",
                           format_date(date)));
  }
  std::vector<std::string> out;
  for (const auto& t : feed.trips()) {
    if (active_services.contains(t.service_id)) out.push_back(t.id);
  }
  std::sort(out.begin(), out.end());
  return out;
}

TimetableFeed restrict_to_date(const TimetableFeed& feed, Date date,
                               Diagnostics* diag) {
  auto ids = active_trips(feed, date, diag);
  std::set<std::string> keep(ids.begin(), ids.end());
  std::vector<Trip> trips;
  for (const auto& t : feed.trips()) {
    if (keep.contains(t.id)) trips.push_back(t);
  }
  return TimetableFeed(feed.stops(), feed.routes(), std::move(trips),
                       feed.calendars(), feed.variant());
}

TimetableFeed combine_feeds(const std::vector<TimetableFeed>& feeds) {
  if (feeds.size() == 1) return feeds.front();
  std::vector<Stop> stops;
  std::vector<Route> routes;
  std::vector<Trip> trips;
  std::vector<ServiceCalendar> calendars;
  std::set<std::string> stop_ids, route_ids, trip_ids, service_ids;
  auto claim = [](std::set<std::string>& ids, const std::string& id,
                  const char* what) {
    if (!ids.insert(id).second) {
      throw InputError(fmt::format("{} '{}' appears in more than one feed",
                                   what, id));
    }
  };
  for (const auto& f : feeds) {
    for (const auto& s : f.stops()) {
      claim(stop_ids, s.id, "stop_id");
      stops.push_back(s);
    }
    for (const auto& r : f.routes()) {
      claim(route_ids, r.id, "route_id");
      routes.push_back(r);
    }
    for (const auto& t : f.trips()) {
      claim(trip_ids, t.id, "trip_id");
      trips.push_back(t);
    }
    for (const auto& c : f.calendars()) {
      claim(service_ids, c.service_id, "service_id");
      calendars.push_back(c);
    }
  }
  return TimetableFeed(std::move(stops), std::move(routes), std::move(trips),
                       std::move(calendars),
                       feeds.empty() ? FeedVariant{} : feeds.front().variant());
}

}  // namespace transit_access
