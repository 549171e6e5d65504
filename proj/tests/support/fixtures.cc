#include "fixtures.h"

#include <atomic>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <unistd.h>

#include "transit_access/delay.h"

namespace transit_access::testing {

namespace fs = std::filesystem;

fs::path data_dir() { return TA_TEST_DATA; }
fs::path toyville_dir() { return data_dir() / "toyville"; }

TempDir::TempDir(const std::string& tag) {
  static std::atomic<int> counter{0};
  path_ = fs::temp_directory_path() /
          ("ta-" + tag + "-" + std::to_string(::getpid()) + "-" +
           std::to_string(counter++));
  fs::remove_all(path_);
  fs::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

void write_text(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Seconds hm(int h, int m, int s) { return h * 3600 + m * 60 + s; }

Date ymd(int y, unsigned m, unsigned d) {
  return Date{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
}

FeedBuilder& FeedBuilder::stop(const std::string& id, StopKind kind, double lat,
                               double lon) {
  stops_.push_back({id, "Stop " + id, lat, lon, kind});
  return *this;
}

FeedBuilder& FeedBuilder::route(const std::string& id, RouteCategory category) {
  routes_.push_back({id, id, category});
  return *this;
}

FeedBuilder& FeedBuilder::trip(
    const std::string& id, const std::string& route,
    std::vector<std::tuple<std::string, Seconds, Seconds>> times,
    const std::string& service) {
  Trip t{id, route, service, {}, false};
  int seq = 1;
  for (auto& [stop, arr, dep] : times) t.stop_times.push_back({stop, seq++, arr, dep});
  trips_.push_back(std::move(t));
  return *this;
}

FeedBuilder& FeedBuilder::trip_at(const std::string& id, const std::string& route,
                                  std::vector<std::pair<std::string, Seconds>> times,
                                  const std::string& service) {
  std::vector<std::tuple<std::string, Seconds, Seconds>> full;
  for (auto& [stop, t] : times) full.emplace_back(stop, t, t);
  return trip(id, route, std::move(full), service);
}

FeedBuilder& FeedBuilder::calendar(ServiceCalendar c) {
  calendars_.push_back(std::move(c));
  return *this;
}

TimetableFeed FeedBuilder::build(FeedVariant variant) const {
  auto calendars = calendars_;
  bool has_all = false, uses_all = false;
  for (const auto& c : calendars) has_all |= c.service_id == "ALL";
  for (const auto& t : trips_) uses_all |= t.service_id == "ALL";
  if (uses_all && !has_all) {
    ServiceCalendar all;
    all.service_id = "ALL";
    all.weekdays.fill(true);
    all.start = ymd(2025, 1, 1);
    all.end = ymd(2026, 12, 31);
    calendars.push_back(all);
  }
  return TimetableFeed(stops_, routes_, trips_, calendars, variant);
}

Endpoints endpoints(const TransitNetwork& network, const oracle::Query& q) {
  Endpoints e;
  auto convert = [&](const std::vector<oracle::StopLeg>& from,
                     std::vector<AccessLeg>& into) {
    for (const auto& l : from) {
      if (auto s = network.stop_index(l.stop)) into.push_back({*s, l.duration, l.mode});
    }
  };
  convert(q.access, e.access);
  convert(q.egress, e.egress);
  e.walk_only = q.walk_only;
  return e;
}

MicroCase random_micro_case(std::mt19937_64& rng) {
  auto uniform = [&](int lo, int hi) {
    return std::uniform_int_distribution<int>(lo, hi)(rng);
  };
  FeedBuilder b;
  int n_stops = uniform(3, 10);
  std::vector<std::string> ids;
  for (int i = 0; i < n_stops; ++i) {
    ids.push_back("P" + std::to_string(i));
    b.stop(ids.back(), uniform(0, 3) == 0 ? StopKind::rail_station : StopKind::bus_stop);
  }
  int n_routes = uniform(1, 3);
  for (int r = 0; r < n_routes; ++r) b.route("R" + std::to_string(r));
  int n_trips = uniform(1, 6);
  for (int t = 0; t < n_trips; ++t) {
    std::vector<std::string> order = ids;
    std::shuffle(order.begin(), order.end(), rng);
    order.resize(static_cast<std::size_t>(uniform(2, std::min(5, n_stops))));
    // Half-minute granularity makes exact slack boundaries common.
    Seconds now = hm(7, 0) + 30 * uniform(-10, 100);
    std::vector<std::tuple<std::string, Seconds, Seconds>> times;
    for (const auto& s : order) {
      Seconds dwell = 30 * uniform(0, 2);
      times.emplace_back(s, now, now + dwell);
      now += dwell + 30 * uniform(0, 16);
    }
    b.trip("T" + std::to_string(t), "R" + std::to_string(uniform(0, n_routes - 1)),
           times);
  }

  MicroCase c{b.build(), {}, {}, std::nullopt, {hm(7, 0), hm(7, 30), 1.0}};
  int n_transfers = uniform(0, 4);
  for (int i = 0; i < n_transfers; ++i) {
    auto a = ids[static_cast<std::size_t>(uniform(0, n_stops - 1))];
    auto z = ids[static_cast<std::size_t>(uniform(0, n_stops - 1))];
    if (a != z) c.transfers.push_back({a, z, 30 * uniform(1, 4)});
  }
  auto legs = [&](std::vector<oracle::StopLeg>& into) {
    int n = uniform(1, 3);
    for (int i = 0; i < n; ++i) {
      into.push_back({ids[static_cast<std::size_t>(uniform(0, n_stops - 1))],
                      30 * uniform(0, 20), uniform(0, 2) == 0 ? Mode::cycle : Mode::walk});
    }
  };
  legs(c.query.access);
  legs(c.query.egress);
  if (uniform(0, 2) == 0) c.query.walk_only = 60 * uniform(10, 60);
  if (uniform(0, 3) != 0) c.deadline = hm(7, 30) + 60 * uniform(0, 60);
  return c;
}

namespace {

CatchWorld catch_world(FeedBuilder b, const std::vector<ObservedTripTrace>& traces,
                       Seconds access, Seconds minute) {
  CatchWorld w;
  w.scheduled = b.build();
  w.actual = synthesize_actual_feed(w.scheduled, ymd(2025, 12, 22), traces).feed;
  w.tables.cell_bus_walk.entries = {{"c", "A", access}};
  w.tables.school_bus_walk.entries = {{"s", "B", 0}};
  w.spec.morning = {{minute, minute + 60, 1.0}};
  return w;
}

}  // namespace

CatchWorld missed_connection_world() {
  FeedBuilder b;
  b.stop("A").stop("X").stop("B").route("F").route("C");
  b.trip_at("feeder", "F", {{"A", hm(7, 45)}, {"X", hm(8, 0)}});
  b.trip_at("connector-1", "C", {{"X", hm(7, 58)}, {"B", hm(8, 18)}});
  b.trip_at("connector-2", "C", {{"X", hm(8, 30)}, {"B", hm(8, 50)}});
  auto w = catch_world(b, {{"connector-1", {{1, hm(8, 3)}}}}, 60, hm(7, 44));
  w.spec.routing.outbound_deadline = hm(9, 0);
  return w;
}

CatchWorld shrinking_wait_world() {
  FeedBuilder b;
  b.stop("A").stop("B").route("R");
  b.trip_at("early", "R", {{"A", hm(7, 59)}, {"B", hm(8, 9)}});
  b.trip_at("late", "R", {{"A", hm(8, 10)}, {"B", hm(8, 20)}});
  return catch_world(b, {{"early", {{1, hm(8, 2)}}}}, 300, hm(7, 55));
}

StudyConfig toyville_config(const fs::path& output_dir) {
  auto config = load_config(toyville_dir() / "config.json");
  config.output_dir = output_dir;
  return config;
}

}  // namespace transit_access::testing
