#include "transit_access/router.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>
#include <tuple>

#include "transit_access/csv.h"
#include "transit_access/parallel.h"

namespace transit_access {

namespace {

constexpr std::uint32_t kNotBoarded = std::numeric_limits<std::uint32_t>::max();

}  // namespace

std::string_view to_string(Direction d) {
  return d == Direction::outbound ? "outbound" : "return";
}

std::vector<TimeWindow> make_windows(Seconds first_start, std::size_t count,
                                     const std::vector<double>& shares) {
  if (shares.size() != count) {
    throw ConfigError("expected " + std::to_string(count) +
                      " window shares, got " + std::to_string(shares.size()));
  }
  std::vector<TimeWindow> out;
  for (std::size_t i = 0; i < count; ++i) {
    Seconds start = first_start + static_cast<Seconds>(i) * TimeWindow::kLength;
    out.push_back({start, start + TimeWindow::kLength, shares[i]});
  }
  check_shares(out);
  return out;
}

std::vector<TimeWindow> default_morning_windows() {
  return make_windows(6 * 3600, 5, {0.041, 0.041, 0.396, 0.396, 0.126});
}

std::vector<TimeWindow> default_evening_windows() {
  return make_windows(16 * 3600, 8, std::vector<double>(8, 0.125));
}

void check_shares(std::span<const TimeWindow> windows) {
  double sum = 0;
  for (const auto& w : windows) {
    if (w.share < 0) throw ConfigError("negative window share");
    sum += w.share;
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    throw ConfigError("window shares sum to " + format_double(sum) +
                      ", expected 1");
  }
}

std::vector<Seconds> window_minutes(std::span<const TimeWindow> windows) {
  std::vector<Seconds> out;
  for (const auto& w : windows) {
    for (Seconds m = w.start; m < w.end; m += 60) out.push_back(m);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

// ---- TransitNetwork

TransitNetwork::TransitNetwork(const TimetableFeed& feed,
                               std::span<const AccessEntry> transfers)
    : stops_(feed.stops()), variant_(feed.variant()) {
  for (StopIndex i = 0; i < stops_.size(); ++i) stop_index_[stops_[i].id] = i;
  visits_.resize(stops_.size());
  footpaths_.resize(stops_.size());

  for (const auto& t : feed.trips()) {
    if (t.stop_times.size() < 2) continue;
    RoutingTrip rt{t.id, t.route_id, {}, {}, {}};
    for (const auto& st : t.stop_times) {
      auto it = stop_index_.find(st.stop_id);
      if (it == stop_index_.end()) {
        throw InputError("unresolved stop_id " + st.stop_id + " in trip " +
                         t.id);
      }
      rt.stops.push_back(it->second);
      rt.arrivals.push_back(st.arrival);
      rt.departures.push_back(st.departure);
    }
    auto ti = static_cast<TripIndex>(trips_.size());
    trip_index_[t.id] = ti;
    for (std::uint32_t p = 0; p + 1 < rt.stops.size(); ++p) {
      visits_[rt.stops[p]].push_back({rt.departures[p], ti, p});
    }
    trips_.push_back(std::move(rt));
  }
  for (auto& v : visits_) {
    std::sort(v.begin(), v.end(), [](const Visit& a, const Visit& b) {
      return std::tie(a.departure, a.trip, a.position) <
             std::tie(b.departure, b.trip, b.position);
    });
  }

  for (const auto& e : transfers) {
    auto a = stop_index(e.from);
    auto b = stop_index(e.to);
    if (!a || !b || *a == *b) continue;
    auto& fps = footpaths_[*a];
    auto it = std::find_if(fps.begin(), fps.end(),
                           [&](const Footpath& f) { return f.to == *b; });
    if (it == fps.end()) {
      fps.push_back({*b, e.seconds});
    } else {
      it->duration = std::min(it->duration, e.seconds);
    }
  }
  for (auto& fps : footpaths_) {
    std::sort(fps.begin(), fps.end(),
              [](const Footpath& a, const Footpath& b) { return a.to < b.to; });
  }
}

std::optional<StopIndex> TransitNetwork::stop_index(const std::string& id) const {
  auto it = stop_index_.find(id);
  if (it == stop_index_.end()) return std::nullopt;
  return it->second;
}

std::optional<TripIndex> TransitNetwork::trip_index(const std::string& id) const {
  auto it = trip_index_.find(id);
  if (it == trip_index_.end()) return std::nullopt;
  return it->second;
}

// ---- AccessIndex

AccessIndex::AccessIndex(const AccessTables& tables,
                         const TransitNetwork& network) {
  auto add = [&](std::unordered_map<std::string, std::vector<AccessLeg>>& into,
                 const AccessTable& table) {
    for (const auto& e : table.entries) {
      auto s = network.stop_index(e.to);
      if (!s) continue;
      into[e.from].push_back({*s, e.seconds, table.mode});
    }
  };
  add(cell_legs_, tables.cell_bus_walk);
  add(cell_legs_, tables.cell_rail_walk);
  add(cell_legs_, tables.cell_rail_cycle);
  add(school_legs_, tables.school_bus_walk);
  add(school_legs_, tables.school_rail_walk);
  for (auto* m : {&cell_legs_, &school_legs_}) {
    for (auto& [id, legs] : *m) {
      std::sort(legs.begin(), legs.end(), [](const AccessLeg& a, const AccessLeg& b) {
        return std::tie(a.stop, a.mode, a.duration) <
               std::tie(b.stop, b.mode, b.duration);
      });
    }
  }
  for (const auto& e : tables.cell_school_walk.entries) {
    walk_only_[{e.from, e.to}] = e.seconds;
  }
}

std::span<const AccessLeg> AccessIndex::cell_legs(const std::string& cell) const {
  auto it = cell_legs_.find(cell);
  if (it == cell_legs_.end()) return {};
  return it->second;
}

std::span<const AccessLeg> AccessIndex::school_legs(
    const std::string& school) const {
  auto it = school_legs_.find(school);
  if (it == school_legs_.end()) return {};
  return it->second;
}

std::optional<Seconds> AccessIndex::walk_only(const std::string& cell,
                                              const std::string& school) const {
  auto it = walk_only_.find({cell, school});
  if (it == walk_only_.end()) return std::nullopt;
  return it->second;
}

Endpoints AccessIndex::endpoints(const std::string& cell,
                                 const std::string& school, Direction direction,
                                 const CyclePairing& pairing) const {
  Endpoints e;
  auto cl = cell_legs(cell);
  auto sl = school_legs(school);
  if (direction == Direction::outbound) {
    e.access.assign(cl.begin(), cl.end());
    e.egress.assign(sl.begin(), sl.end());
    e.walk_only = walk_only(cell, school);
    return e;
  }
  e.access.assign(sl.begin(), sl.end());
  for (const auto& leg : cl) {
    if (pairing.station) {
      if (leg.mode == Mode::cycle && leg.stop == *pairing.station) {
        e.egress.push_back(leg);
      }
    } else if (leg.mode == Mode::walk) {
      e.egress.push_back(leg);
    }
  }
  if (!pairing.station) e.walk_only = walk_only(cell, school);
  return e;
}

// ---- Itinerary

std::size_t Itinerary::ride_count() const {
  return static_cast<std::size_t>(std::count_if(
      legs.begin(), legs.end(),
      [](const Leg& l) { return l.kind == Leg::Kind::ride; }));
}

std::optional<Mode> Itinerary::access_mode() const {
  if (legs.empty() || legs.front().kind != Leg::Kind::access) return std::nullopt;
  return legs.front().mode;
}

std::optional<std::string> Itinerary::cycle_station() const {
  if (access_mode() != Mode::cycle) return std::nullopt;
  return legs.front().to;
}

std::optional<std::string> Itinerary::cycle_egress_station() const {
  if (legs.empty() || legs.back().kind != Leg::Kind::egress ||
      legs.back().mode != Mode::cycle) {
    return std::nullopt;
  }
  return legs.back().from;
}

std::string serialize_legs(const Itinerary& itinerary) {
  std::string out;
  for (const auto& l : itinerary.legs) {
    if (!out.empty()) out += '|';
    out += l.kind == Leg::Kind::ride ? l.trip_id : std::string(to_string(l.mode));
    out += ':';
    out += l.from.empty() ? "origin" : l.from;
    out += "->";
    out += l.to.empty() ? "destination" : l.to;
    out += '@';
    out += format_hms(l.start);
  }
  return out;
}

// ---- ProfileSearch

ProfileSearch::ProfileSearch(const TransitNetwork& network,
                             const RoutingParams& params, Direction direction)
    : network_(network),
      params_(params),
      direction_(direction),
      horizon_(direction == Direction::outbound && params.outbound_deadline
                   ? *params.outbound_deadline
                   : kNever) {
  for (int r = 0; r < 2; ++r) {
    ready_[r].resize(network.stop_count());
    ready_parent_[r].resize(network.stop_count());
    ride_[r].resize(network.stop_count());
    ride_parent_[r].resize(network.stop_count());
    boarded_[r].resize(network.trip_count());
  }
}

void ProfileSearch::reset(std::span<const AccessLeg> access) {
  access_.assign(access.begin(), access.end());
  minute_ = kNever;
  for (int r = 0; r < 2; ++r) {
    std::fill(ready_[r].begin(), ready_[r].end(), kNever);
    std::fill(ride_[r].begin(), ride_[r].end(), kNever);
    std::fill(boarded_[r].begin(), boarded_[r].end(), kNotBoarded);
  }
}

void ProfileSearch::board_from(int round, StopIndex stop, Seconds new_ready,
                               Seconds old_ready,
                               std::vector<StopIndex>& improved) {
  auto visits = network_.visits(stop);
  auto it = std::lower_bound(
      visits.begin(), visits.end(), new_ready,
      [](const TransitNetwork::Visit& v, Seconds t) { return v.departure < t; });
  auto& boarded = boarded_[round];
  auto& ride = ride_[round];
  auto& parent = ride_parent_[round];
  for (; it != visits.end(); ++it) {
    if (it->departure >= old_ready || it->departure > horizon_) break;
    std::uint32_t prev = boarded[it->trip];
    if (prev != kNotBoarded && it->position >= prev) continue;
    const auto& trip = network_.trip(it->trip);
    auto last = prev == kNotBoarded
                    ? static_cast<std::uint32_t>(trip.stops.size() - 1)
                    : prev;
    for (std::uint32_t k = it->position + 1; k <= last; ++k) {
      Seconds arr = trip.arrivals[k];
      if (arr > horizon_) break;
      StopIndex s = trip.stops[k];
      if (arr < ride[s]) {
        ride[s] = arr;
        parent[s] = {it->trip, it->position, k};
        if (round == 0) improved.push_back(s);
      }
    }
    boarded[it->trip] = it->position;
  }
}

void ProfileSearch::advance_to(Seconds minute) {
  if (minute >= minute_) {
    throw std::invalid_argument("sweep minutes must decrease");
  }
  minute_ = minute;
  improved_.clear();
  for (std::uint32_t i = 0; i < access_.size(); ++i) {
    const auto& leg = access_[i];
    Seconds nr = minute + leg.duration;
    if (nr < ready_[0][leg.stop]) {
      Seconds old = ready_[0][leg.stop];
      ready_[0][leg.stop] = nr;
      ready_parent_[0][leg.stop] = {i, 0, 0};
      board_from(0, leg.stop, nr, old, improved_);
    }
  }
  std::sort(improved_.begin(), improved_.end());
  improved_.erase(std::unique(improved_.begin(), improved_.end()),
                  improved_.end());
  std::vector<StopIndex> unused;
  auto relax = [&](StopIndex from, StopIndex to, Seconds walk) {
    Seconds nr = ride_[0][from] + walk + params_.transfer_slack;
    if (nr < ready_[1][to]) {
      Seconds old = ready_[1][to];
      ready_[1][to] = nr;
      ready_parent_[1][to] = {0, from, walk};
      board_from(1, to, nr, old, unused);
    }
  };
  for (StopIndex s : improved_) {
    relax(s, s, 0);
    for (const auto& fp : network_.footpaths(s)) relax(s, fp.to, fp.duration);
  }
}

std::optional<ProfileSearch::Choice> ProfileSearch::best(
    std::span<const AccessLeg> egress, std::optional<Seconds> walk_only) const {
  Choice c;
  if (walk_only) c = {minute_ + *walk_only, -1, 0};
  for (std::size_t i = 0; i < egress.size(); ++i) {
    for (int r = 0; r < 2; ++r) {
      Seconds a = ride_[r][egress[i].stop];
      if (a >= kNever) continue;
      Seconds total = a + egress[i].duration;
      if (total < c.arrival) c = {total, r, i};
    }
  }
  if (c.arrival >= kNever) return std::nullopt;
  if (direction_ == Direction::outbound && params_.outbound_deadline &&
      c.arrival > *params_.outbound_deadline) {
    return std::nullopt;
  }
  return c;
}

std::optional<Seconds> ProfileSearch::arrival(
    std::span<const AccessLeg> egress, std::optional<Seconds> walk_only) const {
  auto c = best(egress, walk_only);
  if (!c) return std::nullopt;
  return c->arrival;
}

std::optional<Itinerary> ProfileSearch::itinerary(
    std::span<const AccessLeg> egress, std::optional<Seconds> walk_only) const {
  auto c = best(egress, walk_only);
  if (!c) return std::nullopt;
  Itinerary it{minute_, c->arrival, {}};
  if (c->round < 0) {
    it.legs.push_back({Leg::Kind::walk_only, Mode::walk, "", "", "", "",
                       minute_, c->arrival});
    return it;
  }
  auto stop_id = [&](StopIndex s) { return network_.stop(s).id; };
  auto ride_leg = [&](const RideParent& p) {
    const auto& t = network_.trip(p.trip);
    return Leg{Leg::Kind::ride,      Mode::walk,
               stop_id(t.stops[p.board]), stop_id(t.stops[p.alight]),
               t.id,                 t.route_id,
               t.departures[p.board], t.arrivals[p.alight]};
  };

  const AccessLeg& out = egress[c->egress];
  std::vector<Leg> reversed;
  Seconds alight = ride_[c->round][out.stop];
  reversed.push_back({Leg::Kind::egress, out.mode, stop_id(out.stop), "", "", "",
                      alight, alight + out.duration});
  RideParent rp = ride_parent_[c->round][out.stop];
  if (c->round == 1) {
    reversed.push_back(ride_leg(rp));
    StopIndex board = network_.trip(rp.trip).stops[rp.board];
    const ReadyParent& tp = ready_parent_[1][board];
    if (tp.from_stop != board) {
      Seconds a = ride_[0][tp.from_stop];
      reversed.push_back({Leg::Kind::transfer, Mode::walk, stop_id(tp.from_stop),
                          stop_id(board), "", "", a, a + tp.walk});
    }
    rp = ride_parent_[0][tp.from_stop];
  }
  reversed.push_back(ride_leg(rp));
  StopIndex first = network_.trip(rp.trip).stops[rp.board];
  const AccessLeg& in = access_[ready_parent_[0][first].access_leg];
  reversed.push_back({Leg::Kind::access, in.mode, "", stop_id(first), "", "",
                      minute_, minute_ + in.duration});
  it.legs.assign(reversed.rbegin(), reversed.rend());
  return it;
}

// ---- profiles

std::optional<Seconds> TravelTimeProfile::at_minute(Seconds minute) const {
  Seconds offset = minute - first_minute;
  if (offset < 0 || offset % 60 != 0 ||
      static_cast<std::size_t>(offset / 60) >= durations.size()) {
    throw std::invalid_argument("minute " + format_hms(minute) +
                                " outside the profile window");
  }
  return durations[static_cast<std::size_t>(offset / 60)];
}

TravelTimeProfile profile(const TransitNetwork& network,
                          const Endpoints& endpoints, Direction direction,
                          const TimeWindow& window,
                          const RoutingParams& params) {
  TravelTimeProfile p;
  p.direction = direction;
  p.variant = network.variant().label();
  p.first_minute = window.start;
  p.durations.resize(window.minute_count());
  ProfileSearch search(network, params, direction);
  search.reset(endpoints.access);
  for (std::size_t i = p.durations.size(); i-- > 0;) {
    Seconds m = p.minute_at(i);
    search.advance_to(m);
    if (auto a = search.arrival(endpoints.egress, endpoints.walk_only)) {
      p.durations[i] = *a - m;
    }
  }
  return p;
}

std::optional<Itinerary> itinerary_at(const TransitNetwork& network,
                                      const Endpoints& endpoints,
                                      Direction direction, Seconds minute,
                                      const RoutingParams& params) {
  ProfileSearch search(network, params, direction);
  search.reset(endpoints.access);
  search.advance_to(minute);
  return search.itinerary(endpoints.egress, endpoints.walk_only);
}

std::string_view to_string(Percentile p) {
  return p == Percentile::p25 ? "p25" : "p50";
}

std::optional<Percentile> parse_percentile(std::string_view s) {
  if (s == "p25" || s == "25") return Percentile::p25;
  if (s == "p50" || s == "50" || s == "median") return Percentile::p50;
  return std::nullopt;
}

namespace {

std::optional<Representative> representative_of(
    std::span<const std::optional<Seconds>> durations, Seconds first_minute,
    Percentile percentile) {
  std::vector<Seconds> finite;
  for (const auto& d : durations) {
    if (d) finite.push_back(*d);
  }
  if (finite.empty()) return std::nullopt;
  std::sort(finite.begin(), finite.end());
  std::size_t n = finite.size();
  // Nearest rank ceil(q n), 1-based.
  std::size_t rank = percentile == Percentile::p25 ? (n + 3) / 4 : (n + 1) / 2;
  Seconds value = finite[rank - 1];
  for (std::size_t i = 0; i < durations.size(); ++i) {
    if (durations[i] == value) {
      return Representative{value, first_minute + static_cast<Seconds>(60 * i)};
    }
  }
  return std::nullopt;
}

}  // namespace

std::optional<Representative> representative(const TravelTimeProfile& p,
                                             Percentile percentile) {
  return representative_of(p.durations, p.first_minute, percentile);
}

std::optional<Seconds> condition_on_actual(Seconds scheduled_minute,
                                           const TravelTimeProfile& actual) {
  return actual.at_minute(scheduled_minute);
}

std::optional<double> round_trip(std::span<const WindowValue> outbound,
                                 std::span<const WindowValue> inbound,
                                 std::span<const TimeWindow> morning,
                                 std::span<const TimeWindow> evening,
                                 bool strict) {
  check_shares(morning);
  check_shares(evening);
  if (outbound.size() != morning.size() || inbound.size() != evening.size()) {
    throw std::invalid_argument("window values do not match the window sets");
  }
  auto direction = [&](std::span<const WindowValue> values,
                       std::span<const TimeWindow> windows)
      -> std::optional<double> {
    double weighted = 0;
    double shares = 0;
    for (std::size_t w = 0; w < values.size(); ++w) {
      if (!values[w].duration) {
        if (strict) return std::nullopt;
        continue;
      }
      weighted += windows[w].share * static_cast<double>(*values[w].duration);
      shares += windows[w].share;
    }
    if (shares <= 0) return std::nullopt;
    return weighted / shares;
  };
  auto out = direction(outbound, morning);
  auto in = direction(inbound, evening);
  if (!out || !in) return std::nullopt;
  return *out + *in;
}

// ---- matrix

namespace {

std::size_t minute_index(const std::vector<Seconds>& minutes, Seconds m) {
  auto it = std::lower_bound(minutes.begin(), minutes.end(), m);
  if (it == minutes.end() || *it != m) {
    throw std::invalid_argument("minute " + format_hms(m) + " not in any window");
  }
  return static_cast<std::size_t>(it - minutes.begin());
}

std::vector<WindowValue> window_values(
    const std::vector<std::optional<Seconds>>& durations,
    const std::vector<Seconds>& minutes, std::span<const TimeWindow> windows,
    Percentile percentile, const std::vector<WindowValue>* reference) {
  std::vector<WindowValue> out(windows.size());
  for (std::size_t w = 0; w < windows.size(); ++w) {
    if (reference) {
      const auto& ref = (*reference)[w];
      if (ref.minute) {
        out[w] = {durations[minute_index(minutes, *ref.minute)], ref.minute};
      }
      continue;
    }
    std::size_t first = minute_index(minutes, windows[w].start);
    std::span<const std::optional<Seconds>> slice(
        durations.data() + first, windows[w].minute_count());
    if (auto r = representative_of(slice, windows[w].start, percentile)) {
      out[w] = {r->duration, r->minute};
    }
  }
  return out;
}

// Highest-share window with a value, earliest on ties.
std::optional<Seconds> dominant_minute(const std::vector<WindowValue>& values,
                                       std::span<const TimeWindow> windows) {
  std::optional<std::size_t> best;
  for (std::size_t w = 0; w < values.size(); ++w) {
    if (!values[w].duration) continue;
    if (!best || windows[w].share > windows[*best].share) best = w;
  }
  if (!best) return std::nullopt;
  return values[*best].minute;
}

}  // namespace

MatrixResult build_matrix(const TransitNetwork& network,
                          const AccessIndex& access,
                          const std::vector<std::string>& cells,
                          const std::vector<std::string>& schools,
                          const MatrixSpec& spec, const std::string& variant,
                          const std::string& day,
                          const MatrixResult* reference) {
  check_shares(spec.morning);
  check_shares(spec.evening);
  if (reference &&
      (reference->cells != cells || reference->schools != schools)) {
    throw std::invalid_argument("reference matrix covers different pairs");
  }
  const std::size_t nc = cells.size();
  const std::size_t ns = schools.size();
  const auto out_minutes = window_minutes(spec.morning);
  const auto in_minutes = window_minutes(spec.evening);

  MatrixResult result;
  result.cells = cells;
  result.schools = schools;
  result.entries.resize(nc * ns);
  result.profiles.resize(nc * ns);

  // Outbound profiles, one sweep per cell.
  parallel_for(nc, [&](std::size_t c) {
    ProfileSearch search(network, spec.routing, Direction::outbound);
    search.reset(access.cell_legs(cells[c]));
    std::vector<std::optional<Seconds>> walk(ns);
    for (std::size_t s = 0; s < ns; ++s) {
      walk[s] = access.walk_only(cells[c], schools[s]);
      result.profiles[c * ns + s].outbound.resize(out_minutes.size());
    }
    for (std::size_t i = out_minutes.size(); i-- > 0;) {
      Seconds m = out_minutes[i];
      search.advance_to(m);
      for (std::size_t s = 0; s < ns; ++s) {
        if (auto a = search.arrival(access.school_legs(schools[s]), walk[s])) {
          result.profiles[c * ns + s].outbound[i] = *a - m;
        }
      }
    }
  });

  // Outbound window values and bicycle pairing from the dominant window.
  parallel_for(nc, [&](std::size_t c) {
    std::map<Seconds, std::vector<std::size_t>, std::greater<>> needed;
    for (std::size_t s = 0; s < ns; ++s) {
      auto& e = result.entries[c * ns + s];
      e.cell = cells[c];
      e.school = schools[s];
      e.variant = variant;
      e.day = day;
      e.outbound = window_values(
          result.profiles[c * ns + s].outbound, out_minutes, spec.morning,
          spec.percentile, reference ? &reference->at(c, s).outbound : nullptr);
      if (auto m = dominant_minute(e.outbound, spec.morning)) {
        needed[*m].push_back(s);
      }
    }
    if (needed.empty()) return;
    ProfileSearch search(network, spec.routing, Direction::outbound);
    search.reset(access.cell_legs(cells[c]));
    for (const auto& [m, list] : needed) {
      search.advance_to(m);
      for (std::size_t s : list) {
        auto it = search.itinerary(access.school_legs(schools[s]),
                                   access.walk_only(cells[c], schools[s]));
        if (!it) continue;
        if (auto station = it->cycle_station()) {
          result.profiles[c * ns + s].pairing.station =
              network.stop_index(*station);
        }
      }
    }
  });

  // Return profiles, one sweep per school.
  parallel_for(ns, [&](std::size_t s) {
    std::vector<Endpoints> ends(nc);
    for (std::size_t c = 0; c < nc; ++c) {
      ends[c] = access.endpoints(cells[c], schools[s], Direction::inbound,
                                 result.profiles[c * ns + s].pairing);
      result.profiles[c * ns + s].inbound.resize(in_minutes.size());
    }
    ProfileSearch search(network, spec.routing, Direction::inbound);
    search.reset(access.school_legs(schools[s]));
    for (std::size_t i = in_minutes.size(); i-- > 0;) {
      Seconds m = in_minutes[i];
      search.advance_to(m);
      for (std::size_t c = 0; c < nc; ++c) {
        if (auto a = search.arrival(ends[c].egress, ends[c].walk_only)) {
          result.profiles[c * ns + s].inbound[i] = *a - m;
        }
      }
    }
  });

  for (std::size_t c = 0; c < nc; ++c) {
    for (std::size_t s = 0; s < ns; ++s) {
      auto& e = result.entries[c * ns + s];
      e.inbound = window_values(
          result.profiles[c * ns + s].inbound, in_minutes, spec.evening,
          spec.percentile, reference ? &reference->at(c, s).inbound : nullptr);
      e.t_ik = round_trip(e.outbound, e.inbound, spec.morning, spec.evening,
                          spec.strict_window_exclusion);
    }
  }
  return result;
}

namespace {

std::string join_minutes(const std::vector<WindowValue>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ';';
    out += values[i].minute ? format_hms(*values[i].minute) : "INF";
  }
  return out;
}

}  // namespace

void write_matrix_csv(const MatrixResult& matrix, std::ostream& out) {
  CsvWriter w(out);
  std::size_t no = matrix.entries.empty() ? 0 : matrix.entries[0].outbound.size();
  std::size_t ni = matrix.entries.empty() ? 0 : matrix.entries[0].inbound.size();
  std::vector<std::string> header{"cell_id", "school_id", "variant", "day",
                                  "t_ik_s"};
  for (std::size_t i = 0; i < no; ++i) {
    header.push_back("outbound_w" + std::to_string(i + 1) + "_s");
  }
  for (std::size_t i = 0; i < ni; ++i) {
    header.push_back("return_w" + std::to_string(i + 1) + "_s");
  }
  header.push_back("outbound_minutes");
  header.push_back("return_minutes");
  w.row(header);
  for (const auto& e : matrix.entries) {
    std::vector<std::string> row{e.cell, e.school, e.variant, e.day,
                                 e.t_ik ? format_double(*e.t_ik) : "UNREACH"};
    for (const auto* values : {&e.outbound, &e.inbound}) {
      for (const auto& v : *values) {
        row.push_back(v.duration ? std::to_string(*v.duration) : "INF");
      }
    }
    row.push_back(join_minutes(e.outbound));
    row.push_back(join_minutes(e.inbound));
    w.row(row);
  }
}

std::vector<RoundTripTime> read_matrix_csv(const std::filesystem::path& path) {
  auto table = CsvTable::read(path);
  auto c_cell = table.require_column("cell_id");
  auto c_school = table.require_column("school_id");
  auto c_variant = table.require_column("variant");
  auto c_day = table.require_column("day");
  auto c_t = table.require_column("t_ik_s");
  auto c_out_min = table.require_column("outbound_minutes");
  auto c_ret_min = table.require_column("return_minutes");
  std::vector<std::size_t> out_cols, ret_cols;
  for (std::size_t i = 0; i < table.header().size(); ++i) {
    const auto& h = table.header()[i];
    if (h.starts_with("outbound_w")) out_cols.push_back(i);
    if (h.starts_with("return_w")) ret_cols.push_back(i);
  }
  std::vector<RoundTripTime> out;
  for (const auto& row : table.rows()) {
    RoundTripTime e;
    e.cell = std::string(table.get(row, c_cell));
    e.school = std::string(table.get(row, c_school));
    e.variant = std::string(table.get(row, c_variant));
    e.day = std::string(table.get(row, c_day));
    auto t = table.get(row, c_t);
    if (t != "UNREACH") {
      auto v = parse_double(t);
      if (!v) throw InputError(path.string(), row.line, "t_ik_s", "not a number");
      e.t_ik = *v;
    }
    auto values = [&](const std::vector<std::size_t>& cols, std::size_t min_col) {
      std::vector<WindowValue> vs(cols.size());
      for (std::size_t i = 0; i < cols.size(); ++i) {
        auto d = table.get(row, cols[i]);
        if (d == "INF") continue;
        auto v = parse_int(d);
        if (!v) {
          throw InputError(path.string(), row.line, table.header()[cols[i]],
                           "not an integer");
        }
        vs[i].duration = static_cast<Seconds>(*v);
      }
      std::string_view minutes = table.get(row, min_col);
      for (std::size_t i = 0; i < cols.size(); ++i) {
        auto sep = minutes.find(';');
        auto item = minutes.substr(0, sep);
        minutes = sep == std::string_view::npos ? std::string_view{}
                                                : minutes.substr(sep + 1);
        if (item == "INF" || item.empty()) continue;
        auto v = parse_hms(item);
        if (!v) {
          throw InputError(path.string(), row.line, table.header()[min_col],
                           "malformed time string");
        }
        vs[i].minute = *v;
      }
      return vs;
    };
    e.outbound = values(out_cols, c_out_min);
    e.inbound = values(ret_cols, c_ret_min);
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace transit_access
