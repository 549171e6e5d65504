#include "transit_access/lucky_catch.h"

#include <algorithm>
#include <map>
#include <set>

#include "transit_access/csv.h"
#include "transit_access/parallel.h"

namespace transit_access {

std::string_view to_string(CatchKind k) {
  switch (k) {
    case CatchKind::new_transfer: return "new_transfer";
    case CatchKind::alternative_route: return "alternative_route";
    case CatchKind::reduced_wait: return "reduced_wait";
  }
  return "reduced_wait";
}

namespace {

std::optional<std::size_t> position_of(const TransitNetwork& net,
                                       const TransitNetwork::RoutingTrip& trip,
                                       const std::string& stop_id,
                                       std::size_t from) {
  for (std::size_t p = from; p < trip.stops.size(); ++p) {
    if (net.stop(trip.stops[p]).id == stop_id) return p;
  }
  return std::nullopt;
}

bool misses_under_schedule(const std::vector<const Leg*>& rides,
                           Seconds walk, const TransitNetwork& net,
                           Seconds slack) {
  auto feeder = net.trip_index(rides[0]->trip_id);
  auto connector = net.trip_index(rides[1]->trip_id);
  if (!feeder || !connector) return false;
  const auto& f = net.trip(*feeder);
  const auto& c = net.trip(*connector);
  auto fb = position_of(net, f, rides[0]->from, 0);
  if (!fb) return false;
  auto fa = position_of(net, f, rides[0]->to, *fb + 1);
  auto cb = position_of(net, c, rides[1]->from, 0);
  if (!fa || !cb) return false;
  return c.departures[*cb] < f.arrivals[*fa] + walk + slack;
}

std::set<std::string> route_set(const Itinerary& it) {
  std::set<std::string> out;
  for (const auto& l : it.legs) {
    if (l.kind == Leg::Kind::ride) out.insert(l.route_id);
  }
  return out;
}

}  // namespace

CatchKind classify(const Itinerary& scheduled, const Itinerary& actual,
                   const TransitNetwork& scheduled_network,
                   Seconds transfer_slack) {
  std::vector<const Leg*> rides;
  Seconds walk = 0;
  for (const auto& l : actual.legs) {
    if (l.kind == Leg::Kind::ride) rides.push_back(&l);
    if (l.kind == Leg::Kind::transfer) walk = l.end - l.start;
  }
  if (rides.size() == 2 &&
      misses_under_schedule(rides, walk, scheduled_network, transfer_slack)) {
    return CatchKind::new_transfer;
  }
  if (route_set(scheduled) != route_set(actual)) {
    return CatchKind::alternative_route;
  }
  return CatchKind::reduced_wait;
}

namespace {

struct Candidate {
  Seconds minute;
  std::size_t window;
  Seconds saved;
};

std::vector<Candidate> candidates(const std::vector<std::optional<Seconds>>& sched,
                                  const std::vector<std::optional<Seconds>>& actual,
                                  std::span<const TimeWindow> windows) {
  auto minutes = window_minutes(windows);
  std::vector<Candidate> out;
  for (std::size_t i = 0; i < minutes.size(); ++i) {
    if (!sched[i] || !actual[i] || *actual[i] >= *sched[i]) continue;
    std::size_t w = 0;
    while (w < windows.size() &&
           !(minutes[i] >= windows[w].start && minutes[i] < windows[w].end)) {
      ++w;
    }
    out.push_back({minutes[i], w, *sched[i] - *actual[i]});
  }
  return out;
}

// Itineraries at the given minutes (descending) in one sweep.
std::vector<std::optional<Itinerary>> sweep_itineraries(
    const TransitNetwork& net, const Endpoints& ends, Direction direction,
    const std::vector<Candidate>& list, const RoutingParams& params) {
  std::vector<std::optional<Itinerary>> out(list.size());
  ProfileSearch search(net, params, direction);
  search.reset(ends.access);
  for (std::size_t i = list.size(); i-- > 0;) {
    search.advance_to(list[i].minute);
    out[i] = search.itinerary(ends.egress, ends.walk_only);
  }
  return out;
}

}  // namespace

std::vector<LuckyCatchEvent> detect(const CatchInputs& in,
                                    const std::string& cell,
                                    const std::string& school,
                                    const OdProfiles& scheduled,
                                    const OdProfiles& actual,
                                    const std::string& day) {
  std::vector<LuckyCatchEvent> events;
  for (Direction d : {Direction::outbound, Direction::inbound}) {
    bool out = d == Direction::outbound;
    const auto& windows = out ? in.spec.morning : in.spec.evening;
    auto list = candidates(out ? scheduled.outbound : scheduled.inbound,
                           out ? actual.outbound : actual.inbound, windows);
    if (list.empty()) continue;
    auto s_ends = in.scheduled_access.endpoints(cell, school, d, scheduled.pairing);
    auto a_ends = in.actual_access.endpoints(cell, school, d, actual.pairing);
    auto s_its = sweep_itineraries(in.scheduled_network, s_ends, d, list,
                                   in.spec.routing);
    auto a_its = sweep_itineraries(in.actual_network, a_ends, d, list,
                                   in.spec.routing);
    for (std::size_t i = 0; i < list.size(); ++i) {
      if (!s_its[i] || !a_its[i]) continue;
      LuckyCatchEvent e;
      e.cell = cell;
      e.school = school;
      e.day = day;
      e.direction = d;
      e.window = list[i].window;
      e.minute = list[i].minute;
      e.saved = list[i].saved;
      e.kind = classify(*s_its[i], *a_its[i], in.scheduled_network,
                        in.spec.routing.transfer_slack);
      e.scheduled = std::move(*s_its[i]);
      e.actual = std::move(*a_its[i]);
      events.push_back(std::move(e));
    }
  }
  return events;
}

std::vector<LuckyCatchEvent> detect_all(const CatchInputs& in,
                                        const MatrixResult& scheduled,
                                        const MatrixResult& actual,
                                        const std::string& day) {
  if (scheduled.cells != actual.cells || scheduled.schools != actual.schools) {
    throw std::invalid_argument("matrices cover different pairs");
  }
  const std::size_t n = scheduled.entries.size();
  std::vector<std::vector<LuckyCatchEvent>> per_pair(n);
  parallel_for(n, [&](std::size_t i) {
    per_pair[i] = detect(in, scheduled.entries[i].cell,
                         scheduled.entries[i].school, scheduled.profiles[i],
                         actual.profiles[i], day);
  });
  std::vector<LuckyCatchEvent> out;
  for (auto& v : per_pair) {
    std::move(v.begin(), v.end(), std::back_inserter(out));
  }
  return out;
}

std::vector<CatchSummaryRow> summarize(std::span<const LuckyCatchEvent> events,
                                       std::span<const Cell> cells,
                                       std::span<const CellIndexRow> index_rows) {
  std::map<std::string, std::string> district_of;
  for (const auto& c : cells) district_of[c.id] = c.district;
  std::map<std::string, CatchSummaryRow> rows;
  for (const auto& e : events) {
    auto it = district_of.find(e.cell);
    std::string district = it == district_of.end() ? "" : it->second;
    auto& r = rows[district];
    r.district = district;
    switch (e.kind) {
      case CatchKind::new_transfer: ++r.new_transfer; break;
      case CatchKind::alternative_route: ++r.alternative_route; break;
      case CatchKind::reduced_wait: ++r.reduced_wait; break;
    }
  }
  std::map<std::string, std::set<std::string>> positive;
  for (const auto& ir : index_rows) {
    auto it = rows.find(ir.district);
    if (it == rows.end() || !(ir.ogl > 0)) continue;
    positive[ir.district].insert(ir.cell);
    it->second.max_positive_ogl = std::max(it->second.max_positive_ogl, ir.ogl);
  }
  std::vector<CatchSummaryRow> out;
  for (auto& [district, r] : rows) {
    r.positive_ogl_cells = positive[district].size();
    out.push_back(r);
  }
  return out;
}

void write_events_csv(std::span<const LuckyCatchEvent> events, std::ostream& out) {
  CsvWriter w(out);
  w.row({"cell_id", "school_id", "day", "window", "dep_minute", "kind", "saved_s",
         "sched_legs", "actual_legs"});
  for (const auto& e : events) {
    w.row({e.cell, e.school, e.day,
           std::string(to_string(e.direction)) + "-" + std::to_string(e.window + 1),
           format_hms(e.minute), std::string(to_string(e.kind)),
           std::to_string(e.saved), serialize_legs(e.scheduled),
           serialize_legs(e.actual)});
  }
}

void write_catch_summary_csv(std::span<const CatchSummaryRow> rows,
                             std::ostream& out) {
  CsvWriter w(out);
  w.row({"district", "new_transfer", "alternative_route", "reduced_wait",
         "positive_ogl_cells", "max_positive_ogl"});
  for (const auto& r : rows) {
    w.row({r.district, std::to_string(r.new_transfer),
           std::to_string(r.alternative_route), std::to_string(r.reduced_wait),
           std::to_string(r.positive_ogl_cells), format_double(r.max_positive_ogl)});
  }
}

}  // namespace transit_access
