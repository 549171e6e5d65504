#include "transit_access/delay.h"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>
#include <tuple>
#include <unordered_map>

#include <fmt/format.h>

namespace transit_access {

namespace {

bool earlier(const LocalDateTime& a, const LocalDateTime& b) {
  return std::tie(a.date, a.time_of_day) < std::tie(b.date, b.time_of_day);
}

}  // namespace

std::vector<DelayObservation> ingest_observations(
    const std::filesystem::path& path, const TimetableFeed* feed,
    Diagnostics& diag, IngestReport* report) {
  if (!std::filesystem::exists(path)) {
    throw InputError("missing observation file: " + path.string());
  }
  return ingest_observations(CsvTable::read(path), feed, diag, report);
}

std::vector<DelayObservation> ingest_observations(const CsvTable& t,
                                                  const TimetableFeed* feed,
                                                  Diagnostics& diag,
                                                  IngestReport* report) {
  IngestReport local;
  IngestReport& rep = report ? *report : local;
  rep = {};
  std::vector<DelayObservation> obs;
  if (t.rows().empty()) {
    diag.warn(t.source() + ": no observations");
    return obs;
  }
  auto c_poll = t.require_column("poll_time");
  auto c_vehicle = t.require_column("vehicle_id");
  auto c_route = t.require_column("route_id");
  auto c_prev = t.require_column("prev_stop_id");
  auto c_next = t.require_column("next_stop_id");
  auto c_dep = t.require_column("prev_departure");
  auto c_delay = t.require_column("delay_s");

  for (const auto& row : t.rows()) {
    ++rep.rows;
    auto bad = [&](std::string_view field) {
      ++rep.malformed;
      diag.warn(fmt::format("{}:{}: malformed {}, row skipped", t.source(),
                            row.line, field));
    };
    DelayObservation o;
    auto poll = parse_local_datetime(t.get(row, c_poll));
    if (!poll) {
      bad("poll_time");
      continue;
    }
    o.poll = *poll;
    o.vehicle_id = std::string(t.get(row, c_vehicle));
    o.route_id = std::string(t.get(row, c_route));
    o.prev_stop_id = std::string(t.get(row, c_prev));
    o.next_stop_id = std::string(t.get(row, c_next));
    if (o.vehicle_id.empty() || o.route_id.empty() || o.prev_stop_id.empty()) {
      bad("identifier");
      continue;
    }
    if (o.prev_stop_id == o.next_stop_id) {
      bad("next_stop_id (equals prev_stop_id)");
      continue;
    }
    auto dep = parse_hms(t.get(row, c_dep));
    if (!dep) {
      bad("prev_departure");
      continue;
    }
    o.prev_departure = *dep;
    auto delay = parse_int(t.get(row, c_delay));
    if (!delay || std::llabs(*delay) > 86400) {
      bad("delay_s");
      continue;
    }
    o.delay = static_cast<Seconds>(*delay);
    if (feed && !feed->route(o.route_id)) {
      ++rep.unknown_route;
      diag.warn(fmt::format("{}:{}: unknown route_id '{}', row skipped",
                            t.source(), row.line, o.route_id));
      continue;
    }
    obs.push_back(std::move(o));
  }

  // Latest poll wins per (vehicle, prev_stop, prev_departure).
  std::stable_sort(obs.begin(), obs.end(),
                   [](const DelayObservation& a, const DelayObservation& b) {
                     return earlier(a.poll, b.poll);
                   });
  std::map<std::tuple<std::string, std::string, Seconds>, std::size_t> latest;
  for (std::size_t i = 0; i < obs.size(); ++i) {
    latest[{obs[i].vehicle_id, obs[i].prev_stop_id, obs[i].prev_departure}] =
        i;
  }
  std::vector<std::size_t> keep;
  for (const auto& [key, idx] : latest) keep.push_back(idx);
  std::sort(keep.begin(), keep.end());
  rep.duplicates = obs.size() - keep.size();
  std::vector<DelayObservation> out;
  out.reserve(keep.size());
  for (auto idx : keep) out.push_back(std::move(obs[idx]));
  std::stable_sort(out.begin(), out.end(),
                   [](const DelayObservation& a, const DelayObservation& b) {
                     return std::tie(a.poll.date, a.poll.time_of_day,
                                     a.vehicle_id, a.prev_stop_id) <
                            std::tie(b.poll.date, b.poll.time_of_day,
                                     b.vehicle_id, b.prev_stop_id);
                   });
  if (out.empty()) diag.warn(t.source() + ": no observations");
  return out;
}

MatchResult match_to_trips(const std::vector<DelayObservation>& observations,
                           const TimetableFeed& feed, Date date,
                           const MatchOptions& options) {
  auto active = active_trips(feed, date);
  std::unordered_map<std::string, std::vector<const Trip*>> by_route;
  for (const auto& id : active) {
    const Trip* trip = feed.trip(id);
    by_route[trip->route_id].push_back(trip);
  }

  MatchResult result;
  std::map<std::string, ObservedTripTrace> traces;
  for (const auto& o : observations) {
    if (o.poll.date != date) {
      ++result.other_dates;
      continue;
    }
    Seconds implied = o.prev_departure - o.delay;
    const Trip* best = nullptr;
    int best_seq = 0;
    Seconds best_sched = 0;
    Seconds best_diff = 0;
    auto it = by_route.find(o.route_id);
    if (it != by_route.end()) {
      for (const Trip* trip : it->second) {
        const auto& sts = trip->stop_times;
        for (std::size_t k = 0; k < sts.size(); ++k) {
          if (sts[k].stop_id != o.prev_stop_id) continue;
          // On loop routes prev_stop can repeat; the next stop disambiguates.
          if (!o.next_stop_id.empty() && k + 1 < sts.size() &&
              sts[k + 1].stop_id != o.next_stop_id) {
            bool next_matches_elsewhere = false;
            for (std::size_t j = 0; j + 1 < sts.size(); ++j) {
              if (sts[j].stop_id == o.prev_stop_id &&
                  sts[j + 1].stop_id == o.next_stop_id) {
                next_matches_elsewhere = true;
              }
            }
            if (next_matches_elsewhere) continue;
          }
          Seconds sched = sts[k].departure;
          Seconds diff = std::abs(sched - implied);
          bool better = !best || diff < best_diff ||
                        (diff == best_diff &&
                         std::tie(sched, trip->id) <
                             std::tie(best_sched, best->id));
          if (better) {
            best = trip;
            best_seq = sts[k].stop_sequence;
            best_sched = sched;
            best_diff = diff;
          }
        }
      }
    }
    if (!best || best_diff > options.tolerance) {
      result.unmatched.push_back(o);
      continue;
    }
    auto& trace = traces[best->id];
    trace.trip_id = best->id;
    trace.departures[best_seq] = o.prev_departure;
  }
  for (auto& [id, trace] : traces) result.traces.push_back(std::move(trace));
  return result;
}

std::optional<std::vector<StopTime>> impute_trace(
    const Trip& scheduled, const ObservedTripTrace& trace,
    const ImputeOptions& options) {
  const auto& sts = scheduled.stop_times;
  const std::size_t n = sts.size();
  if (trace.departures.empty()) {
    throw std::invalid_argument("trace for trip " + trace.trip_id +
                                " has no observations");
  }
  std::vector<std::optional<Seconds>> observed(n);
  for (const auto& [seq, dep] : trace.departures) {
    auto it = std::find_if(sts.begin(), sts.end(), [&](const StopTime& st) {
      return st.stop_sequence == seq;
    });
    if (it == sts.end()) {
      throw std::invalid_argument(fmt::format(
          "trip {} has no stop_sequence {}", scheduled.id, seq));
    }
    observed[static_cast<std::size_t>(it - sts.begin())] = dep;
  }

  // Reject reversals beyond the slack; clamp the ones inside it.
  std::optional<Seconds> running_max;
  for (auto& o : observed) {
    if (!o) continue;
    if (running_max) {
      if (*o < *running_max - options.reversal_slack) return std::nullopt;
      *o = std::max(*o, *running_max);
    }
    running_max = *o;
  }

  std::vector<Seconds> actual(n);
  std::size_t first = 0;
  while (!observed[first]) ++first;
  const Seconds first_delay = *observed[first] - sts[first].departure;
  actual[first] = *observed[first];
  for (std::size_t i = first; i-- > 0;) {
    Seconds shifted = std::max(sts[i].departure,
                               sts[i].departure + first_delay);
    actual[i] = std::min(shifted, actual[i + 1]);
  }

  std::optional<Seconds> next_observed;
  std::vector<std::optional<Seconds>> next_obs_after(n);
  for (std::size_t i = n; i-- > 0;) {
    next_obs_after[i] = next_observed;
    if (observed[i]) next_observed = observed[i];
  }
  for (std::size_t i = first + 1; i < n; ++i) {
    if (observed[i]) {
      actual[i] = *observed[i];
      continue;
    }
    Seconds v = actual[i - 1] + (sts[i].departure - sts[i - 1].departure);
    if (next_obs_after[i] && v > *next_obs_after[i]) v = *next_obs_after[i];
    actual[i] = v;
  }

  std::vector<StopTime> out(sts);
  for (std::size_t i = 0; i < n; ++i) {
    out[i].arrival = actual[i];
    out[i].departure = actual[i];
  }
  return out;
}

namespace {

double mean_departure_delay(const Trip& sched,
                            const std::vector<StopTime>& actual) {
  double sum = 0;
  std::size_t count = 0;
  for (const auto& a : actual) {
    for (const auto& s : sched.stop_times) {
      if (s.stop_sequence == a.stop_sequence) {
        sum += a.departure - s.departure;
        ++count;
        break;
      }
    }
  }
  return count ? sum / static_cast<double>(count) : 0.0;
}

}  // namespace

double median_of(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("median of empty sample");
  std::sort(values.begin(), values.end());
  std::size_t n = values.size();
  if (n % 2 == 1) return values[n / 2];
  return (values[n / 2 - 1] + values[n / 2]) / 2.0;
}

SynthesisResult synthesize_actual_feed(
    const TimetableFeed& feed, Date date,
    const std::vector<ObservedTripTrace>& traces,
    const SynthesisOptions& options) {
  SynthesisResult result;
  std::map<std::string, const ObservedTripTrace*> trace_by_trip;
  for (const auto& t : traces) trace_by_trip[t.trip_id] = &t;

  auto active = active_trips(feed, date);
  std::set<std::string> active_set(active.begin(), active.end());
  result.active = active.size();

  std::vector<Trip> trips;
  std::map<std::string, std::vector<double>> route_means;
  std::vector<std::size_t> unobserved_positions;
  for (const auto& trip : feed.trips()) {
    if (!active_set.contains(trip.id)) continue;
    const Route* route = feed.route(trip.route_id);
    bool may_delay = options.delay_rail || !route ||
                     route->category != RouteCategory::rail;
    auto tr = trace_by_trip.find(trip.id);
    if (may_delay && tr != trace_by_trip.end()) {
      auto imputed = impute_trace(trip, *tr->second, options.impute);
      if (!imputed) {
        result.dropped_trips.push_back(trip.id);
        continue;
      }
      route_means[trip.route_id].push_back(
          mean_departure_delay(trip, *imputed));
      Trip actual = trip;
      actual.stop_times = std::move(*imputed);
      actual.observed = true;
      trips.push_back(std::move(actual));
      ++result.imputed;
    } else {
      Trip copy = trip;
      copy.observed = false;
      unobserved_positions.push_back(trips.size());
      trips.push_back(std::move(copy));
      ++result.unobserved;
    }
  }

  if (options.fill_unobserved == FillUnobserved::route_median) {
    for (auto pos : unobserved_positions) {
      Trip& trip = trips[pos];
      const Route* route = feed.route(trip.route_id);
      if (!options.delay_rail && route &&
          route->category == RouteCategory::rail) {
        continue;
      }
      auto it = route_means.find(trip.route_id);
      if (it == route_means.end()) continue;
      auto shift = static_cast<Seconds>(std::lround(median_of(it->second)));
      for (auto& st : trip.stop_times) {
        st.arrival = std::max(0, st.arrival + shift);
        st.departure = std::max(0, st.departure + shift);
      }
    }
  }

  result.feed = TimetableFeed(feed.stops(), feed.routes(), std::move(trips),
                              feed.calendars(), FeedVariant::actual(date));
  return result;
}

DelayStats delay_stats(const TimetableFeed& scheduled,
                       const std::vector<TimetableFeed>& actual_feeds) {
  std::map<std::string, RouteDelaySummary> by_route;
  for (const auto& r : scheduled.routes()) {
    auto& s = by_route[r.id];
    s.route_id = r.id;
    s.category = r.category;
    s.per_day_means.resize(actual_feeds.size());
  }
  for (std::size_t day = 0; day < actual_feeds.size(); ++day) {
    for (const auto& trip : actual_feeds[day].trips()) {
      if (!trip.observed) continue;
      const Trip* sched = scheduled.trip(trip.id);
      if (!sched) continue;
      auto it = by_route.find(trip.route_id);
      if (it == by_route.end()) continue;
      it->second.per_day_means[day].push_back(
          mean_departure_delay(*sched, trip.stop_times));
    }
  }
  DelayStats stats;
  for (auto& [id, s] : by_route) {
    std::vector<double> all;
    for (const auto& day : s.per_day_means) {
      all.insert(all.end(), day.begin(), day.end());
    }
    if (all.empty()) {
      stats.routes_without_services.push_back(id);
      continue;
    }
    s.n_services = all.size();
    s.min = *std::min_element(all.begin(), all.end());
    s.max = *std::max_element(all.begin(), all.end());
    s.median = median_of(std::move(all));
    stats.summaries.push_back(std::move(s));
  }
  return stats;
}

void write_delay_stats_csv(const DelayStats& stats, std::ostream& out) {
  CsvWriter w(out);
  w.row({"route_id", "category", "median_s", "min_s", "max_s", "n_services"});
  for (const auto& s : stats.summaries) {
    w.row({s.route_id, std::string(to_string(s.category)),
           format_double(s.median), format_double(s.min),
           format_double(s.max), std::to_string(s.n_services)});
  }
}

}  // namespace transit_access
