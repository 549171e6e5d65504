#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "transit_access/common.h"
#include "transit_access/csv.h"
#include "transit_access/gtfs.h"

namespace transit_access {

// One polled vehicle record.
struct DelayObservation {
  LocalDateTime poll;
  std::string vehicle_id;
  std::string route_id;
  std::string prev_stop_id;
  std::string next_stop_id;
  Seconds prev_departure = 0;  // actual departure at prev_stop
  Seconds delay = 0;           // signed; negative means running early

  bool operator==(const DelayObservation&) const = default;
};

struct IngestReport {
  std::size_t rows = 0;
  std::size_t malformed = 0;
  std::size_t unknown_route = 0;
  std::size_t duplicates = 0;
};

// Reads `poll_time,vehicle_id,route_id,prev_stop_id,next_stop_id,
// prev_departure,delay_s`. Malformed rows and rows on routes unknown to
// `feed` (when given) are skipped with a warning. The result is sorted by
// poll time; polls sharing vehicle, prev_stop and prev_departure collapse to
// the latest one. Throws InputError if the file is missing.
std::vector<DelayObservation> ingest_observations(
    const std::filesystem::path& path, const TimetableFeed* feed,
    Diagnostics& diagnostics, IngestReport* report = nullptr);
std::vector<DelayObservation> ingest_observations(
    const CsvTable& table, const TimetableFeed* feed, Diagnostics& diagnostics,
    IngestReport* report = nullptr);

// Observed departures of one trip, keyed by stop_sequence.
struct ObservedTripTrace {
  std::string trip_id;
  std::map<int, Seconds> departures;

  bool operator==(const ObservedTripTrace&) const = default;
};

struct MatchOptions {
  Seconds tolerance = 20 * 60;
};

struct MatchResult {
  std::vector<ObservedTripTrace> traces;  // sorted by trip_id
  std::vector<DelayObservation> unmatched;
  std::size_t other_dates = 0;  // observations polled on a different day
};

// Assigns each observation polled on `date` to the active trip of its route
// whose scheduled departure at prev_stop is nearest to
// prev_departure - delay. Ties go to the earlier trip.
MatchResult match_to_trips(const std::vector<DelayObservation>& observations,
                           const TimetableFeed& feed, Date date,
                           const MatchOptions& options = {});

struct ImputeOptions {
  // Observed departures may decrease along the trip by at most this much.
  // Decreases within the slack are clamped up to the running maximum.
  Seconds reversal_slack = 0;
};

// Completes a partially observed trip. Missing departures downstream of an
// observation are the previous actual departure plus the scheduled segment
// duration, capped at the next observed departure. Stops upstream of the
// first observation take the schedule shifted by the first observed delay,
// never earlier than scheduled and never later than the stop after them.
// Arrival equals departure in the result. Returns nullopt when the observed
// departures themselves reverse by more than the slack.
// Throws std::invalid_argument if the trace is empty or names a
// stop_sequence the trip does not have.
std::optional<std::vector<StopTime>> impute_trace(
    const Trip& scheduled, const ObservedTripTrace& trace,
    const ImputeOptions& options = {});

enum class FillUnobserved { scheduled, route_median };

struct SynthesisOptions {
  ImputeOptions impute;
  FillUnobserved fill_unobserved = FillUnobserved::scheduled;
  bool delay_rail = false;  // apply traces to rail-category routes
};

struct SynthesisResult {
  TimetableFeed feed;
  std::size_t active = 0;
  std::size_t imputed = 0;
  std::size_t unobserved = 0;
  std::vector<std::string> dropped_trips;
};

// Builds the actual-operations feed for `date`: only trips active that day,
// observed trips carrying imputed times, unobserved trips per
// `fill_unobserved`. Trips whose trace reverses are left out.
SynthesisResult synthesize_actual_feed(
    const TimetableFeed& feed, Date date,
    const std::vector<ObservedTripTrace>& traces,
    const SynthesisOptions& options = {});

struct RouteDelaySummary {
  std::string route_id;
  RouteCategory category = RouteCategory::regular;
  // Per service (trip on a date): mean over stops of actual - scheduled
  // departure, grouped by date in input order.
  std::vector<std::vector<double>> per_day_means;
  double median = 0;
  double min = 0;
  double max = 0;
  std::size_t n_services = 0;
};

struct DelayStats {
  std::vector<RouteDelaySummary> summaries;  // sorted by route_id
  std::vector<std::string> routes_without_services;
};

// Only trips flagged as observed in the actual feeds count as services.
DelayStats delay_stats(const TimetableFeed& scheduled,
                       const std::vector<TimetableFeed>& actual_feeds);

// Median of a non-empty sample; the mean of the central pair for even sizes.
double median_of(std::vector<double> values);

void write_delay_stats_csv(const DelayStats& stats, std::ostream& out);

}  // namespace transit_access
