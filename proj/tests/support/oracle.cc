#include "oracle.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace transit_access::oracle {

Enumerator::Enumerator(const TimetableFeed& feed,
                       std::vector<AccessEntry> transfers)
    : feed_(feed), transfers_(std::move(transfers)) {
  for (const auto& t : feed.trips()) {
    for (std::size_t p = 0; p + 1 < t.stop_times.size(); ++p) {
      boardings_[t.stop_times[p].stop_id].push_back({&t, p});
    }
  }
}

Outcome Enumerator::best(const Query& query, Seconds minute,
                         const Rules& rules) const {
  Outcome out;
  auto offer = [&](Seconds arrival, const std::optional<std::string>& cycle,
                   std::size_t rides) {
    if (rules.deadline && arrival > *rules.deadline) return;
    if (!out.arrival || arrival < *out.arrival) {
      out.arrival = arrival;
      out.cycle_stations.clear();
      out.max_rides = 0;
    }
    if (arrival == *out.arrival) {
      out.cycle_stations.insert(cycle);
      out.max_rides = std::max(out.max_rides, rides);
    }
  };
  auto egress_from = [&](const std::string& stop, Seconds at,
                         const std::optional<std::string>& cycle,
                         std::size_t rides) {
    for (const auto& e : query.egress) {
      if (e.stop == stop) offer(at + e.duration, cycle, rides);
    }
  };
  auto boardings = [&](const std::string& stop) -> const std::vector<Boarding>& {
    static const std::vector<Boarding> none;
    auto it = boardings_.find(stop);
    return it == boardings_.end() ? none : it->second;
  };

  if (query.walk_only) offer(minute + *query.walk_only, std::nullopt, 0);
  for (const auto& a : query.access) {
    std::optional<std::string> cycle;
    if (a.mode == Mode::cycle) cycle = a.stop;
    Seconds ready = minute + a.duration;
    for (const auto& b1 : boardings(a.stop)) {
      const auto& st1 = b1.trip->stop_times;
      if (st1[b1.position].departure < ready) continue;
      for (std::size_t q1 = b1.position + 1; q1 < st1.size(); ++q1) {
        const std::string& s = st1[q1].stop_id;
        Seconds arr1 = st1[q1].arrival;
        egress_from(s, arr1, cycle, 1);
        std::vector<std::pair<std::string, Seconds>> moves{{s, 0}};
        for (const auto& tr : transfers_) {
          if (tr.from == s && tr.to != s) moves.emplace_back(tr.to, tr.seconds);
        }
        for (const auto& [to, walk] : moves) {
          Seconds ready2 = arr1 + walk + rules.transfer_slack;
          for (const auto& b2 : boardings(to)) {
            const auto& st2 = b2.trip->stop_times;
            if (st2[b2.position].departure < ready2) continue;
            for (std::size_t q2 = b2.position + 1; q2 < st2.size(); ++q2) {
              egress_from(st2[q2].stop_id, st2[q2].arrival, cycle, 2);
            }
          }
        }
      }
    }
  }
  return out;
}

namespace {

void add_legs(std::vector<StopLeg>& into, const AccessTable& table,
              const std::string& from, Mode mode) {
  for (const auto& e : table.entries) {
    if (e.from == from) into.push_back({e.to, e.seconds, mode});
  }
}

std::optional<Seconds> walk_only(const AccessTables& tables,
                                 const std::string& cell,
                                 const std::string& school) {
  for (const auto& e : tables.cell_school_walk.entries) {
    if (e.from == cell && e.to == school) return e.seconds;
  }
  return std::nullopt;
}

}  // namespace

Query outbound_query(const AccessTables& tables, const std::string& cell,
                     const std::string& school) {
  Query q;
  add_legs(q.access, tables.cell_bus_walk, cell, Mode::walk);
  add_legs(q.access, tables.cell_rail_walk, cell, Mode::walk);
  add_legs(q.access, tables.cell_rail_cycle, cell, Mode::cycle);
  add_legs(q.egress, tables.school_bus_walk, school, Mode::walk);
  add_legs(q.egress, tables.school_rail_walk, school, Mode::walk);
  q.walk_only = walk_only(tables, cell, school);
  return q;
}

Query return_query(const AccessTables& tables, const std::string& cell,
                   const std::string& school,
                   const std::optional<std::string>& cycle_station) {
  Query q;
  add_legs(q.access, tables.school_bus_walk, school, Mode::walk);
  add_legs(q.access, tables.school_rail_walk, school, Mode::walk);
  if (cycle_station) {
    std::vector<StopLeg> cycle;
    add_legs(cycle, tables.cell_rail_cycle, cell, Mode::cycle);
    for (const auto& l : cycle) {
      if (l.stop == *cycle_station) q.egress.push_back(l);
    }
  } else {
    add_legs(q.egress, tables.cell_bus_walk, cell, Mode::walk);
    add_legs(q.egress, tables.cell_rail_walk, cell, Mode::walk);
    q.walk_only = walk_only(tables, cell, school);
  }
  return q;
}

std::optional<Pick> nearest_rank(const std::vector<std::optional<Seconds>>& values,
                                 Seconds first_minute, double q) {
  std::vector<Seconds> sorted;
  for (const auto& v : values) {
    if (v) sorted.push_back(*v);
  }
  if (sorted.empty()) return std::nullopt;
  std::sort(sorted.begin(), sorted.end());
  auto rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(sorted.size())));
  Seconds value = sorted[std::max<std::size_t>(rank, 1) - 1];
  for (std::size_t i = 0;; ++i) {
    if (values[i] == value) {
      return Pick{value, first_minute + static_cast<Seconds>(60 * i)};
    }
  }
}

namespace {

std::vector<WindowValue> window_values(
    const Enumerator& en, const Query& query, const Rules& rules,
    const std::vector<TimeWindow>& windows, double q,
    const std::vector<WindowValue>* reference) {
  std::vector<WindowValue> out(windows.size());
  for (std::size_t w = 0; w < windows.size(); ++w) {
    auto duration_at = [&](Seconds m) -> std::optional<Seconds> {
      auto o = en.best(query, m, rules);
      if (!o.arrival) return std::nullopt;
      return *o.arrival - m;
    };
    if (reference) {
      if (auto m = (*reference)[w].minute) out[w] = {duration_at(*m), m};
      continue;
    }
    std::vector<std::optional<Seconds>> values;
    for (Seconds m = windows[w].start; m < windows[w].end; m += 60) {
      values.push_back(duration_at(m));
    }
    if (auto p = nearest_rank(values, windows[w].start, q)) {
      out[w] = {p->duration, p->minute};
    }
  }
  return out;
}

std::optional<double> weighted(const std::vector<WindowValue>& values,
                               const std::vector<TimeWindow>& windows,
                               bool strict) {
  double sum = 0, shares = 0;
  for (std::size_t w = 0; w < values.size(); ++w) {
    if (!values[w].duration) {
      if (strict) return std::nullopt;
      continue;
    }
    sum += windows[w].share * *values[w].duration;
    shares += windows[w].share;
  }
  if (shares == 0) return std::nullopt;
  return sum / shares;
}

}  // namespace

std::vector<RoundTripTime> matrix(const TimetableFeed& feed,
                                  const AccessTables& tables,
                                  const std::vector<std::string>& cells,
                                  const std::vector<std::string>& schools,
                                  const MatrixSpec& spec,
                                  const std::string& variant,
                                  const std::string& day,
                                  const std::vector<RoundTripTime>* reference) {
  Enumerator en(feed, tables.stop_transfer_walk.entries);
  Rules out_rules{spec.routing.transfer_slack, spec.routing.outbound_deadline};
  Rules in_rules{spec.routing.transfer_slack, std::nullopt};
  double q = spec.percentile == Percentile::p25 ? 0.25 : 0.5;
  std::vector<RoundTripTime> entries;
  for (std::size_t c = 0; c < cells.size(); ++c) {
    for (std::size_t s = 0; s < schools.size(); ++s) {
      const RoundTripTime* ref =
          reference ? &(*reference)[c * schools.size() + s] : nullptr;
      RoundTripTime e{cells[c], schools[s], variant, day, std::nullopt, {}, {}};
      auto out_q = outbound_query(tables, cells[c], schools[s]);
      e.outbound = window_values(en, out_q, out_rules, spec.morning, q,
                                 ref ? &ref->outbound : nullptr);

      std::optional<std::string> station;
      std::optional<std::size_t> dominant;
      for (std::size_t w = 0; w < e.outbound.size(); ++w) {
        if (!e.outbound[w].duration) continue;
        if (!dominant || spec.morning[w].share > spec.morning[*dominant].share) {
          dominant = w;
        }
      }
      if (dominant) {
        auto o = en.best(out_q, *e.outbound[*dominant].minute, out_rules);
        if (o.cycle_stations.size() != 1) {
          throw std::runtime_error("ambiguous bicycle pairing for " + cells[c] +
                                   "/" + schools[s]);
        }
        station = *o.cycle_stations.begin();
      }
      auto in_q = return_query(tables, cells[c], schools[s], station);
      e.inbound = window_values(en, in_q, in_rules, spec.evening, q,
                                ref ? &ref->inbound : nullptr);
      auto a = weighted(e.outbound, spec.morning, spec.strict_window_exclusion);
      auto b = weighted(e.inbound, spec.evening, spec.strict_window_exclusion);
      if (a && b) e.t_ik = *a + *b;
      entries.push_back(std::move(e));
    }
  }
  return entries;
}

}  // namespace transit_access::oracle
