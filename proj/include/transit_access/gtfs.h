#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "transit_access/common.h"

namespace transit_access {

enum class StopKind { bus_stop, rail_station };
enum class RouteCategory { regular, local, rail };

std::string_view to_string(StopKind k);
std::string_view to_string(RouteCategory c);

struct Stop {
  std::string id;
  std::string name;
  double lat = 0;
  double lon = 0;
  StopKind kind = StopKind::bus_stop;

  bool operator==(const Stop&) const = default;
};

struct Route {
  std::string id;
  std::string name;
  RouteCategory category = RouteCategory::regular;

  bool operator==(const Route&) const = default;
};

struct StopTime {
  std::string stop_id;
  int stop_sequence = 0;
  Seconds arrival = 0;
  Seconds departure = 0;

  bool operator==(const StopTime&) const = default;
};

struct Trip {
  std::string id;
  std::string route_id;
  std::string service_id;
  std::vector<StopTime> stop_times;  // ordered by stop_sequence
  // Set on actual-operations feeds for trips carrying observed delays.
  bool observed = false;

  bool operator==(const Trip&) const = default;
};

struct ServiceCalendar {
  std::string service_id;
  std::array<bool, 7> weekdays{};  // Monday first
  std::optional<Date> start;        // absent when only calendar_dates define it
  std::optional<Date> end;
  std::set<Date> added;
  std::set<Date> removed;

  bool operator==(const ServiceCalendar&) const = default;

  bool covers(Date d) const;
  bool in_range(Date d) const;
};

struct FeedVariant {
  enum class Kind { scheduled, actual };
  Kind kind = Kind::scheduled;
  std::optional<Date> date;  // set for actual feeds

  static FeedVariant scheduled() { return {}; }
  static FeedVariant actual(Date d) { return {Kind::actual, d}; }

  bool operator==(const FeedVariant&) const = default;
  std::string label() const;  // "scheduled" or "actual:YYYY-MM-DD"
};

// One network variant. Immutable after construction.
class TimetableFeed {
 public:
  TimetableFeed() = default;
  TimetableFeed(std::vector<Stop> stops, std::vector<Route> routes,
                std::vector<Trip> trips, std::vector<ServiceCalendar> calendars,
                FeedVariant variant = FeedVariant::scheduled());

  const std::vector<Stop>& stops() const { return stops_; }
  const std::vector<Route>& routes() const { return routes_; }
  const std::vector<Trip>& trips() const { return trips_; }
  const std::vector<ServiceCalendar>& calendars() const { return calendars_; }
  const FeedVariant& variant() const { return variant_; }

  const Stop* stop(const std::string& id) const;
  const Route* route(const std::string& id) const;
  const Trip* trip(const std::string& id) const;
  const ServiceCalendar* calendar(const std::string& id) const;

 private:
  std::vector<Stop> stops_;
  std::vector<Route> routes_;
  std::vector<Trip> trips_;
  std::vector<ServiceCalendar> calendars_;
  FeedVariant variant_;
  std::unordered_map<std::string, std::size_t> stop_index_;
  std::unordered_map<std::string, std::size_t> route_index_;
  std::unordered_map<std::string, std::size_t> trip_index_;
  std::unordered_map<std::string, std::size_t> calendar_index_;
};

struct Violation {
  std::string entity;  // e.g. "trip T1"
  std::string rule;    // e.g. "unresolved stop_id"

  bool operator==(const Violation&) const = default;
};

// Loads stops/routes/trips/stop_times plus calendar.txt and/or
// calendar_dates.txt. Throws InputError with file, line and field on
// structural problems or invariant violations.
TimetableFeed parse_feed(const std::filesystem::path& dir,
                         Diagnostics& diagnostics);

// Writes the modelled fields back as GTFS text files.
void write_feed(const TimetableFeed& feed, const std::filesystem::path& dir);

// Empty iff every invariant holds.
std::vector<Violation> validate_feed(const TimetableFeed& feed);

// Sorted trip ids whose service covers `date`. Warns when the date lies
// outside every calendar range.
std::vector<std::string> active_trips(const TimetableFeed& feed, Date date,
                                      Diagnostics* diagnostics = nullptr);

// The same feed keeping only trips active on `date`.
TimetableFeed restrict_to_date(const TimetableFeed& feed, Date date,
                               Diagnostics* diagnostics = nullptr);

// Union of feeds with disjoint ids (e.g. a bus feed plus a rail feed).
// Throws InputError on id collisions.
TimetableFeed combine_feeds(const std::vector<TimetableFeed>& feeds);

}  // namespace transit_access
