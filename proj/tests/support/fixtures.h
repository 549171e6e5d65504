#pragma once

#include <filesystem>
#include <initializer_list>
#include <random>
#include <string>
#include <tuple>
#include <vector>

#include "oracle.h"
#include "transit_access/gtfs.h"
#include "transit_access/pipeline.h"
#include "transit_access/router.h"

namespace transit_access::testing {

std::filesystem::path data_dir();
std::filesystem::path toyville_dir();

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag);
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& p) const { return path_ / p; }

 private:
  std::filesystem::path path_;
};

void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

Seconds hm(int h, int m, int s = 0);

// Small in-memory feeds. Trips run on service "ALL" (every day of
// 2025-2026), added on build, unless another service is named.
class FeedBuilder {
 public:
  FeedBuilder& stop(const std::string& id, StopKind kind = StopKind::bus_stop,
                    double lat = 36.0, double lon = 138.0);
  FeedBuilder& route(const std::string& id,
                     RouteCategory category = RouteCategory::regular);
  // (stop, arrival, departure) triples; sequences 1, 2, ...
  FeedBuilder& trip(const std::string& id, const std::string& route,
                    std::vector<std::tuple<std::string, Seconds, Seconds>> times,
                    const std::string& service = "ALL");
  // Same arrival and departure at each stop.
  FeedBuilder& trip_at(const std::string& id, const std::string& route,
                       std::vector<std::pair<std::string, Seconds>> times,
                       const std::string& service = "ALL");
  FeedBuilder& calendar(ServiceCalendar c);
  TimetableFeed build(FeedVariant variant = FeedVariant::scheduled()) const;

 private:
  std::vector<Stop> stops_;
  std::vector<Route> routes_;
  std::vector<Trip> trips_;
  std::vector<ServiceCalendar> calendars_;
};

Date ymd(int y, unsigned m, unsigned d);

// Translates stop ids to network indices.
Endpoints endpoints(const TransitNetwork& network, const oracle::Query& q);

// A randomized feed with at most 10 stops, 6 trips and 3 routes, plus
// random access, egress, walk-only and transfer options.
struct MicroCase {
  TimetableFeed feed;
  std::vector<AccessEntry> transfers;
  oracle::Query query;
  std::optional<Seconds> deadline;
  TimeWindow window;
};
MicroCase random_micro_case(std::mt19937_64& rng);

// One cell "c" and one school "s" with a scheduled and an actual feed for
// 2025-12-22. The morning set is the single departure minute under test.
struct CatchWorld {
  TimetableFeed scheduled;
  TimetableFeed actual;
  AccessTables tables;
  MatrixSpec spec;
};
// Feeder reaches X at 08:00; connector scheduled 07:58 runs at 08:03; the
// next connector leaves 08:30. Departure 07:44, deadline 09:00.
CatchWorld missed_connection_world();
// Stop reached at 08:00; the 07:59 bus runs at 08:02; the next one leaves
// 08:10. Departure 07:55.
CatchWorld shrinking_wait_world();

// Toyville study with output redirected to `output_dir`.
StudyConfig toyville_config(const std::filesystem::path& output_dir);

}  // namespace transit_access::testing
