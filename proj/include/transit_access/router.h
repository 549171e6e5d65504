#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "transit_access/common.h"
#include "transit_access/gtfs.h"
#include "transit_access/street.h"

namespace transit_access {

using StopIndex = std::uint32_t;
using TripIndex = std::uint32_t;

inline constexpr Seconds kNever = std::numeric_limits<Seconds>::max() / 4;

enum class Direction { outbound, inbound };
std::string_view to_string(Direction d);

struct TimeWindow {
  Seconds start = 0;
  Seconds end = 0;
  double share = 0;

  static constexpr Seconds kLength = 1800;
  // Departure minutes start, start+60, ..., end-60.
  std::size_t minute_count() const {
    return static_cast<std::size_t>((end - start) / 60);
  }
};

// `count` consecutive 30-minute windows from `first_start`. Throws
// ConfigError if the shares do not sum to 1 within 1e-9.
std::vector<TimeWindow> make_windows(Seconds first_start, std::size_t count,
                                     const std::vector<double>& shares);
// 06:00-08:30 in five windows with the surveyed morning departure shares.
std::vector<TimeWindow> default_morning_windows();
// 16:00-20:00 in eight windows with equal shares.
std::vector<TimeWindow> default_evening_windows();
// Throws ConfigError unless the shares sum to 1 within 1e-9.
void check_shares(std::span<const TimeWindow> windows);

struct RoutingParams {
  Seconds transfer_slack = 60;
  // Outbound arrivals later than this are infeasible. Inbound trips have no
  // deadline.
  std::optional<Seconds> outbound_deadline = 8 * 3600 + 40 * 60;
};

struct AccessLeg {
  StopIndex stop = 0;
  Seconds duration = 0;
  Mode mode = Mode::walk;

  bool operator==(const AccessLeg&) const = default;
};

// Timetable of one feed variant in routing form. Immutable; shareable
// across threads.
class TransitNetwork {
 public:
  struct RoutingTrip {
    std::string id;
    std::string route_id;
    std::vector<StopIndex> stops;
    std::vector<Seconds> arrivals;
    std::vector<Seconds> departures;
  };
  struct Visit {
    Seconds departure;
    TripIndex trip;
    std::uint32_t position;
  };
  struct Footpath {
    StopIndex to;
    Seconds duration;
  };

  // All trips of `feed` are used; restrict the feed to a date first.
  // `transfers` are stop-to-stop walking durations (stop ids).
  TransitNetwork(const TimetableFeed& feed,
                 std::span<const AccessEntry> transfers);

  std::size_t stop_count() const { return stops_.size(); }
  std::size_t trip_count() const { return trips_.size(); }
  const Stop& stop(StopIndex i) const { return stops_[i]; }
  std::optional<StopIndex> stop_index(const std::string& id) const;
  const RoutingTrip& trip(TripIndex i) const { return trips_[i]; }
  std::optional<TripIndex> trip_index(const std::string& id) const;
  // Departures at a stop sorted by time.
  std::span<const Visit> visits(StopIndex s) const { return visits_[s]; }
  std::span<const Footpath> footpaths(StopIndex s) const {
    return footpaths_[s];
  }
  const FeedVariant& variant() const { return variant_; }

 private:
  std::vector<Stop> stops_;
  std::unordered_map<std::string, StopIndex> stop_index_;
  std::vector<RoutingTrip> trips_;
  std::unordered_map<std::string, TripIndex> trip_index_;
  std::vector<std::vector<Visit>> visits_;
  std::vector<std::vector<Footpath>> footpaths_;
  FeedVariant variant_;
};

// Access and egress options of one query.
struct Endpoints {
  std::vector<AccessLeg> access;  // origin to boarding stops
  std::vector<AccessLeg> egress;  // alighting stops to destination
  std::optional<Seconds> walk_only;
};

// Outbound bicycle use pins the return trip to the same station.
struct CyclePairing {
  // Station where the bicycle was parked on the way out; unset if the
  // outbound trip did not cycle, in which case the return cannot cycle.
  std::optional<StopIndex> station;

  bool operator==(const CyclePairing&) const = default;
};

// Access tables resolved against one network.
class AccessIndex {
 public:
  AccessIndex(const AccessTables& tables, const TransitNetwork& network);

  std::span<const AccessLeg> cell_legs(const std::string& cell) const;
  std::span<const AccessLeg> school_legs(const std::string& school) const;
  std::optional<Seconds> walk_only(const std::string& cell,
                                   const std::string& school) const;

  Endpoints endpoints(const std::string& cell, const std::string& school,
                      Direction direction,
                      const CyclePairing& pairing = {}) const;

 private:
  std::unordered_map<std::string, std::vector<AccessLeg>> cell_legs_;
  std::unordered_map<std::string, std::vector<AccessLeg>> school_legs_;
  std::map<std::pair<std::string, std::string>, Seconds> walk_only_;
};

struct Leg {
  enum class Kind { access, ride, transfer, egress, walk_only };
  Kind kind = Kind::access;
  Mode mode = Mode::walk;  // access, transfer, egress and walk_only legs
  std::string from;        // stop id, or empty for the origin/destination
  std::string to;
  std::string trip_id;     // ride legs
  std::string route_id;    // ride legs
  Seconds start = 0;
  Seconds end = 0;

  bool operator==(const Leg&) const = default;
};

struct Itinerary {
  Seconds departure = 0;
  Seconds arrival = 0;
  std::vector<Leg> legs;

  Seconds duration() const { return arrival - departure; }
  std::size_t ride_count() const;
  // Mode of the first leg if it is an access leg.
  std::optional<Mode> access_mode() const;
  // Boarding stop of the first ride when reached by bicycle.
  std::optional<std::string> cycle_station() const;
  // Last stop when the final leg is a bicycle egress.
  std::optional<std::string> cycle_egress_station() const;

  bool operator==(const Itinerary&) const = default;
};

// `mode:from->to@HH:MM:SS` per leg joined by '|'. Ride legs use the trip id
// as the mode.
std::string serialize_legs(const Itinerary& itinerary);

// Earliest-arrival search with at most two rides, run for a decreasing
// sequence of departure minutes from one origin. Labels from later minutes
// are kept, so each call only scans departures that became catchable.
class ProfileSearch {
 public:
  ProfileSearch(const TransitNetwork& network, const RoutingParams& params,
                Direction direction);

  // Starts a new sweep from the given access legs.
  void reset(std::span<const AccessLeg> access);
  // Moves the sweep to `minute`, which must be earlier than the previous
  // minute of this sweep.
  void advance_to(Seconds minute);
  Seconds minute() const { return minute_; }

  // Earliest door-to-door arrival for a destination at the current minute,
  // or nullopt if none (including deadline violations).
  std::optional<Seconds> arrival(std::span<const AccessLeg> egress,
                                 std::optional<Seconds> walk_only) const;
  std::optional<Itinerary> itinerary(std::span<const AccessLeg> egress,
                                     std::optional<Seconds> walk_only) const;

 private:
  struct RideParent {
    TripIndex trip = 0;
    std::uint32_t board = 0;
    std::uint32_t alight = 0;
  };
  struct ReadyParent {
    // Round 1: index into access_. Round 2: feeder stop and walk duration.
    std::uint32_t access_leg = 0;
    StopIndex from_stop = 0;
    Seconds walk = 0;
  };
  struct Choice {
    Seconds arrival = kNever;
    int round = -1;  // -1 walk only
    std::size_t egress = 0;
  };

  void board_from(int round, StopIndex stop, Seconds new_ready,
                  Seconds old_ready, std::vector<StopIndex>& improved);
  std::optional<Choice> best(std::span<const AccessLeg> egress,
                             std::optional<Seconds> walk_only) const;

  const TransitNetwork& network_;
  RoutingParams params_;
  Direction direction_;
  Seconds horizon_;
  std::vector<AccessLeg> access_;
  Seconds minute_ = kNever;
  std::vector<Seconds> ready_[2];
  std::vector<ReadyParent> ready_parent_[2];
  std::vector<Seconds> ride_[2];
  std::vector<RideParent> ride_parent_[2];
  std::vector<std::uint32_t> boarded_[2];
  std::vector<StopIndex> improved_;
};

// Per-minute door-to-door durations of one OD pair in one window.
struct TravelTimeProfile {
  std::string origin;
  std::string destination;
  Direction direction = Direction::outbound;
  std::string variant;
  Seconds first_minute = 0;
  std::vector<std::optional<Seconds>> durations;  // nullopt = infeasible

  Seconds minute_at(std::size_t i) const {
    return first_minute + static_cast<Seconds>(60 * i);
  }
  std::optional<Seconds> at_minute(Seconds minute) const;
};

TravelTimeProfile profile(const TransitNetwork& network,
                          const Endpoints& endpoints, Direction direction,
                          const TimeWindow& window,
                          const RoutingParams& params);

// Itinerary departing at `minute`, or nullopt if infeasible.
std::optional<Itinerary> itinerary_at(const TransitNetwork& network,
                                      const Endpoints& endpoints,
                                      Direction direction, Seconds minute,
                                      const RoutingParams& params);

enum class Percentile { p25, p50 };
std::string_view to_string(Percentile p);
std::optional<Percentile> parse_percentile(std::string_view s);

struct Representative {
  Seconds duration = 0;
  Seconds minute = 0;

  bool operator==(const Representative&) const = default;
};

// Nearest-rank percentile over the feasible minutes; the minute is the
// earliest one attaining that duration.
std::optional<Representative> representative(const TravelTimeProfile& p,
                                             Percentile percentile);

// Actual-operations duration when departing at the minute that achieved the
// scheduled representative value.
std::optional<Seconds> condition_on_actual(Seconds scheduled_minute,
                                           const TravelTimeProfile& actual);

struct WindowValue {
  std::optional<Seconds> duration;  // nullopt = infeasible
  std::optional<Seconds> minute;    // departure minute behind the value

  bool operator==(const WindowValue&) const = default;
};

// Share-weighted sum of both directions. With `strict`, any infeasible
// window makes the pair unreachable; otherwise shares are renormalised over
// the feasible windows of each direction. Returns nullopt when unreachable.
// Throws ConfigError if either share set does not sum to 1.
std::optional<double> round_trip(std::span<const WindowValue> outbound,
                                 std::span<const WindowValue> inbound,
                                 std::span<const TimeWindow> morning,
                                 std::span<const TimeWindow> evening,
                                 bool strict = false);

struct RoundTripTime {
  std::string cell;
  std::string school;
  std::string variant;  // "scheduled" or "actual"
  std::string day;
  std::optional<double> t_ik;  // nullopt = unreachable
  std::vector<WindowValue> outbound;
  std::vector<WindowValue> inbound;
};

struct MatrixSpec {
  std::vector<TimeWindow> morning = default_morning_windows();
  std::vector<TimeWindow> evening = default_evening_windows();
  Percentile percentile = Percentile::p25;
  RoutingParams routing;
  bool strict_window_exclusion = false;
};

struct OdProfiles {
  // One entry per departure minute over all windows of a direction.
  std::vector<std::optional<Seconds>> outbound;
  std::vector<std::optional<Seconds>> inbound;
  CyclePairing pairing;
};

struct MatrixResult {
  std::vector<std::string> cells;
  std::vector<std::string> schools;
  // Row-major by (cell, school) in the order given.
  std::vector<RoundTripTime> entries;
  std::vector<OdProfiles> profiles;

  const RoundTripTime& at(std::size_t cell, std::size_t school) const {
    return entries[cell * schools.size() + school];
  }
};

// Round-trip times for every (cell, school) pair. Without `reference` each
// window takes the representative value of this network's profile. With a
// scheduled `reference`, each window is conditioned on the reference's
// representative minute. Outbound bicycle use at a station, taken from the
// itinerary of the highest-share feasible morning window, restricts the
// return to cycling home from that station.
MatrixResult build_matrix(const TransitNetwork& network,
                          const AccessIndex& access,
                          const std::vector<std::string>& cells,
                          const std::vector<std::string>& schools,
                          const MatrixSpec& spec, const std::string& variant,
                          const std::string& day,
                          const MatrixResult* reference = nullptr);

// CSV `cell_id,school_id,variant,day,t_ik_s,outbound_w1_s..,return_w1_s..,
// outbound_minutes,return_minutes` with INF/UNREACH sentinels; the minute
// columns list one HH:MM:SS per window separated by ";".
void write_matrix_csv(const MatrixResult& matrix, std::ostream& out);
std::vector<RoundTripTime> read_matrix_csv(const std::filesystem::path& path);

// Departure minutes of all windows, ascending.
std::vector<Seconds> window_minutes(std::span<const TimeWindow> windows);

}  // namespace transit_access
