#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "fixtures.h"
#include "transit_access/delay.h"

using namespace transit_access;
using namespace transit_access::testing;

namespace {

const std::string kHeader =
    "poll_time,vehicle_id,route_id,prev_stop_id,next_stop_id,prev_departure,"
    "delay_s\n";

std::vector<DelayObservation> ingest(const std::string& body, Diagnostics& d,
                                     IngestReport* report = nullptr,
                                     const TimetableFeed* feed = nullptr) {
  auto table = CsvTable::parse(kHeader + body, "obs.csv");
  return ingest_observations(table, feed, d, report);
}

Trip three_stop_trip() {
  return Trip{"T", "R", "ALL",
              {{"A", 1, hm(8, 0), hm(8, 0)},
               {"B", 2, hm(8, 5), hm(8, 5)},
               {"C", 3, hm(8, 10), hm(8, 10)}},
              false};
}

std::vector<Seconds> departures(const std::vector<StopTime>& sts) {
  std::vector<Seconds> out;
  for (const auto& s : sts) out.push_back(s.departure);
  return out;
}

DelayObservation obs(const std::string& stop, Seconds prev_departure, Seconds delay,
                     const std::string& route = "R", const std::string& next = "") {
  return {{ymd(2025, 12, 22), prev_departure + 30}, "V1", route, stop, next,
          prev_departure, delay};
}

}  // namespace

TEST(Ingest, CollapsesRepeatedPolls) {
  Diagnostics d;
  IngestReport r;
  auto out = ingest(
      "2025-12-22T08:04:30,V1,R,A,B,08:04:00,240\n"
      "2025-12-22T08:05:00,V1,R,A,B,08:04:00,240\n",
      d, &r);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].poll.time_of_day, hm(8, 5));
  EXPECT_EQ(r.duplicates, 1u);
}

TEST(Ingest, SkipsMalformedRow) {
  std::string body;
  for (int i = 0; i < 10; ++i) {
    body += "2025-12-22T08:0" + std::to_string(i) + ":00,V" + std::to_string(i) +
            ",R,A,B,08:00:00," + (i == 4 ? "late" : "60") + "\n";
  }
  Diagnostics d;
  IngestReport r;
  auto out = ingest(body, d, &r);
  EXPECT_EQ(out.size(), 9u);
  EXPECT_EQ(r.malformed, 1u);
  EXPECT_EQ(d.warnings.size(), 1u);
}

TEST(Ingest, EmptyFile) {
  Diagnostics d;
  EXPECT_TRUE(ingest("", d).empty());
  ASSERT_EQ(d.warnings.size(), 1u);
  EXPECT_NE(d.warnings[0].find("no observations"), std::string::npos);
}

TEST(Ingest, UnknownRouteSkippedAndSorted) {
  auto feed = FeedBuilder().stop("A").stop("B").route("R").trip_at(
      "T", "R", {{"A", hm(8, 0)}, {"B", hm(8, 5)}}).build();
  Diagnostics d;
  IngestReport r;
  auto out = ingest(
      "2025-12-22T08:09:00,V2,R,A,B,08:08:00,480\n"
      "2025-12-22T08:01:00,V1,R,A,B,08:00:30,30\n"
      "2025-12-22T08:02:00,V3,Q,A,B,08:01:00,60\n",
      d, &r, &feed);
  ASSERT_EQ(out.size(), 2u);
  EXPECT_EQ(out[0].vehicle_id, "V1");
  EXPECT_EQ(r.unknown_route, 1u);
}

TEST(Ingest, MissingFileThrows) {
  Diagnostics d;
  EXPECT_THROW(ingest_observations("/nonexistent/obs.csv", nullptr, d), InputError);
}

TEST(Match, NearestScheduledDeparture) {
  auto feed = FeedBuilder()
                  .stop("A")
                  .stop("B")
                  .route("R")
                  .trip_at("T0800", "R", {{"A", hm(8, 0)}, {"B", hm(8, 5)}})
                  .trip_at("T0830", "R", {{"A", hm(8, 30)}, {"B", hm(8, 35)}})
                  .build();
  Date day = ymd(2025, 12, 22);

  auto exact = match_to_trips({obs("A", hm(8, 4), 240)}, feed, day);
  ASSERT_EQ(exact.traces.size(), 1u);
  EXPECT_EQ(exact.traces[0].trip_id, "T0800");
  EXPECT_EQ(exact.traces[0].departures.at(1), hm(8, 4));

  // Implies 08:12: 12 minutes from 08:00, 18 from 08:30.
  auto nearer = match_to_trips({obs("A", hm(8, 15), 180)}, feed, day);
  ASSERT_EQ(nearer.traces.size(), 1u);
  EXPECT_EQ(nearer.traces[0].trip_id, "T0800");

  // Implies 08:15: a tie goes to the earlier trip.
  auto tie = match_to_trips({obs("A", hm(8, 15), 0)}, feed, day);
  EXPECT_EQ(tie.traces[0].trip_id, "T0800");

  // Implies 07:30, 30 minutes before the first trip.
  auto far = match_to_trips({obs("A", hm(7, 35), 300)}, feed, day);
  EXPECT_TRUE(far.traces.empty());
  EXPECT_EQ(far.unmatched.size(), 1u);
}

TEST(Match, OnlyActiveTripsAndSameDay) {
  ServiceCalendar tue;
  tue.service_id = "TUE";
  tue.weekdays = {false, true, false, false, false, false, false};
  tue.start = ymd(2025, 12, 1);
  tue.end = ymd(2025, 12, 31);
  auto feed = FeedBuilder()
                  .stop("A")
                  .stop("B")
                  .route("R")
                  .calendar(tue)
                  .trip_at("Tue", "R", {{"A", hm(8, 0)}, {"B", hm(8, 5)}}, "TUE")
                  .trip_at("Any", "R", {{"A", hm(8, 10)}, {"B", hm(8, 15)}})
                  .build();
  auto r = match_to_trips({obs("A", hm(8, 0), 0)}, feed, ymd(2025, 12, 22));
  ASSERT_EQ(r.traces.size(), 1u);
  EXPECT_EQ(r.traces[0].trip_id, "Any");
  auto other = match_to_trips({obs("A", hm(8, 0), 0)}, feed, ymd(2025, 12, 23));
  EXPECT_EQ(other.other_dates, 1u);
  EXPECT_TRUE(other.traces.empty());
}

TEST(Impute, ReversalIsCappedAtNextObservation) {
  ObservedTripTrace trace{"T", {{1, hm(8, 2)}, {3, hm(8, 6)}}};
  auto out = impute_trace(three_stop_trip(), trace);
  ASSERT_TRUE(out);
  EXPECT_EQ(departures(*out), (std::vector<Seconds>{hm(8, 2), hm(8, 6), hm(8, 6)}));
  for (const auto& st : *out) EXPECT_EQ(st.arrival, st.departure);
}

TEST(Impute, FullObservationVerbatim) {
  ObservedTripTrace trace{"T", {{1, hm(8, 1, 10)}, {2, hm(8, 7)}, {3, hm(8, 9)}}};
  auto out = impute_trace(three_stop_trip(), trace);
  ASSERT_TRUE(out);
  EXPECT_EQ(departures(*out), (std::vector<Seconds>{hm(8, 1, 10), hm(8, 7), hm(8, 9)}));
}

TEST(Impute, ForwardPropagation) {
  ObservedTripTrace trace{"T", {{1, hm(8, 3)}}};
  auto out = impute_trace(three_stop_trip(), trace);
  ASSERT_TRUE(out);
  EXPECT_EQ(departures(*out), (std::vector<Seconds>{hm(8, 3), hm(8, 8), hm(8, 13)}));
}

TEST(Impute, BackwardPropagationFlooredAtSchedule) {
  ObservedTripTrace late{"T", {{3, hm(8, 13)}}};
  EXPECT_EQ(departures(*impute_trace(three_stop_trip(), late)),
            (std::vector<Seconds>{hm(8, 3), hm(8, 8), hm(8, 13)}));
  ObservedTripTrace early{"T", {{3, hm(8, 8)}}};
  EXPECT_EQ(departures(*impute_trace(three_stop_trip(), early)),
            (std::vector<Seconds>{hm(8, 0), hm(8, 5), hm(8, 8)}));
  // Never later than the stop after them, even when that stop ran early.
  ObservedTripTrace very_early{"T", {{2, hm(7, 58)}}};
  EXPECT_EQ(departures(*impute_trace(three_stop_trip(), very_early)),
            (std::vector<Seconds>{hm(7, 58), hm(7, 58), hm(8, 3)}));
}

TEST(Impute, ReversalBeyondSlackDrops) {
  ObservedTripTrace trace{"T", {{1, hm(8, 5)}, {2, hm(8, 4, 30)}}};
  EXPECT_FALSE(impute_trace(three_stop_trip(), trace));
  auto clamped = impute_trace(three_stop_trip(), trace, {.reversal_slack = 30});
  ASSERT_TRUE(clamped);
  EXPECT_EQ(departures(*clamped), (std::vector<Seconds>{hm(8, 5), hm(8, 5), hm(8, 10)}));
}

TEST(Impute, EarlyRunningKept) {
  ObservedTripTrace trace{"T", {{2, hm(8, 3)}}};
  auto out = impute_trace(three_stop_trip(), trace);
  EXPECT_EQ(departures(*out), (std::vector<Seconds>{hm(8, 0), hm(8, 3), hm(8, 8)}));
}

TEST(Impute, BadTraces) {
  EXPECT_THROW(impute_trace(three_stop_trip(), {"T", {}}), std::invalid_argument);
  EXPECT_THROW(impute_trace(three_stop_trip(), {"T", {{9, hm(8, 0)}}}),
               std::invalid_argument);
}

TEST(Impute, IdempotentOnCompleteTraces) {
  std::mt19937_64 rng(11);
  for (int k = 0; k < 200; ++k) {
    Trip t = three_stop_trip();
    ObservedTripTrace trace{"T", {}};
    std::uniform_int_distribution<int> obs_pick(0, 1), shift(-60, 600);
    for (auto& st : t.stop_times) {
      if (obs_pick(rng)) trace.departures[st.stop_sequence] = st.departure + shift(rng);
    }
    if (trace.departures.empty()) trace.departures[1] = hm(8, 0);
    auto once = impute_trace(t, trace, {.reversal_slack = 600});
    ASSERT_TRUE(once);
    ObservedTripTrace full{"T", {}};
    for (const auto& st : *once) full.departures[st.stop_sequence] = st.departure;
    auto twice = impute_trace(t, full);
    ASSERT_TRUE(twice);
    EXPECT_EQ(*twice, *once);
  }
}

TEST(Synthesize, ZeroTracesIsScheduleRestriction) {
  Diagnostics d;
  auto feed = parse_feed(toyville_dir() / "gtfs", d);
  Date day = ymd(2025, 12, 23);
  auto r = synthesize_actual_feed(feed, day, {});
  auto expected = restrict_to_date(feed, day);
  ASSERT_EQ(r.feed.trips().size(), expected.trips().size());
  for (std::size_t i = 0; i < expected.trips().size(); ++i) {
    EXPECT_EQ(r.feed.trips()[i].stop_times, expected.trips()[i].stop_times);
  }
  EXPECT_EQ(r.feed.variant(), FeedVariant::actual(day));
  EXPECT_EQ(r.unobserved, r.active);
  EXPECT_TRUE(validate_feed(r.feed).empty());
}

TEST(Synthesize, UniformShiftAndDrop) {
  auto feed = FeedBuilder()
                  .stop("A")
                  .stop("B")
                  .stop("C")
                  .route("R")
                  .trip_at("T1", "R", {{"A", hm(8, 0)}, {"B", hm(8, 5)}, {"C", hm(8, 10)}})
                  .trip_at("T2", "R", {{"A", hm(9, 0)}, {"B", hm(9, 5)}, {"C", hm(9, 10)}})
                  .trip_at("T3", "R", {{"A", hm(10, 0)}, {"B", hm(10, 5)}, {"C", hm(10, 10)}})
                  .build();
  Date day = ymd(2025, 12, 22);
  std::vector<ObservedTripTrace> traces{
      {"T1", {{1, hm(8, 5)}, {2, hm(8, 10)}, {3, hm(8, 15)}}},
      {"T3", {{1, hm(10, 5)}, {2, hm(10, 1)}}}};
  auto r = synthesize_actual_feed(feed, day, traces);
  ASSERT_EQ(r.feed.trips().size(), 2u);
  EXPECT_EQ(r.dropped_trips, std::vector<std::string>{"T3"});
  const Trip* t1 = r.feed.trip("T1");
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(t1->stop_times[i].departure, feed.trip("T1")->stop_times[i].departure + 300);
  }
  EXPECT_TRUE(t1->observed);
  EXPECT_EQ(r.feed.trip("T2")->stop_times, feed.trip("T2")->stop_times);
  EXPECT_TRUE(validate_feed(r.feed).empty());
}

TEST(Synthesize, RailUntouchedUnlessEnabled) {
  auto feed = FeedBuilder()
                  .stop("X", StopKind::rail_station)
                  .stop("Y", StopKind::rail_station)
                  .route("L", RouteCategory::rail)
                  .trip_at("U", "L", {{"X", hm(8, 0)}, {"Y", hm(8, 6)}})
                  .build();
  std::vector<ObservedTripTrace> traces{{"U", {{1, hm(8, 2)}}}};
  Date day = ymd(2025, 12, 22);
  EXPECT_EQ(synthesize_actual_feed(feed, day, traces).feed.trip("U")->stop_times[0].departure,
            hm(8, 0));
  SynthesisOptions o;
  o.delay_rail = true;
  EXPECT_EQ(synthesize_actual_feed(feed, day, traces, o).feed.trip("U")->stop_times[0].departure,
            hm(8, 2));
}

TEST(Synthesize, RouteMedianFill) {
  auto feed = FeedBuilder()
                  .stop("A")
                  .stop("B")
                  .route("R")
                  .trip_at("T1", "R", {{"A", hm(8, 0)}, {"B", hm(8, 5)}})
                  .trip_at("T2", "R", {{"A", hm(9, 0)}, {"B", hm(9, 5)}})
                  .build();
  SynthesisOptions o;
  o.fill_unobserved = FillUnobserved::route_median;
  auto r = synthesize_actual_feed(feed, ymd(2025, 12, 22),
                                  {{"T1", {{1, hm(8, 2)}, {2, hm(8, 7)}}}}, o);
  EXPECT_EQ(r.feed.trip("T2")->stop_times[0].departure, hm(9, 2));
  EXPECT_FALSE(r.feed.trip("T2")->observed);
}

TEST(DelayStats, MeansAndOrderStatistics) {
  auto sched = FeedBuilder()
                   .stop("A")
                   .stop("B")
                   .stop("C")
                   .route("R")
                   .route("Q")
                   .trip_at("T", "R", {{"A", hm(8, 0)}, {"B", hm(8, 5)}, {"C", hm(8, 10)}})
                   .build();
  auto actual_with = [&](int d, std::vector<Seconds> delays) {
    ObservedTripTrace tr{"T", {}};
    for (int i = 0; i < 3; ++i) {
      tr.departures[i + 1] = sched.trips()[0].stop_times[static_cast<std::size_t>(i)].departure +
                             delays[static_cast<std::size_t>(i)];
    }
    return synthesize_actual_feed(sched, ymd(2025, 12, 22 + d), {tr}).feed;
  };
  auto one = delay_stats(sched, {actual_with(0, {120, 180, 240})});
  ASSERT_EQ(one.summaries.size(), 1u);
  EXPECT_EQ(one.summaries[0].median, 180);
  EXPECT_EQ(one.routes_without_services, std::vector<std::string>{"Q"});

  std::vector<TimetableFeed> week;
  for (int i = 0; i < 5; ++i) {
    Seconds m = std::vector<Seconds>{100, 200, 300, 250, 150}[static_cast<std::size_t>(i)];
    week.push_back(actual_with(i, {m, m, m}));
  }
  auto w = delay_stats(sched, week);
  EXPECT_EQ(w.summaries[0].median, 200);
  EXPECT_EQ(w.summaries[0].min, 100);
  EXPECT_EQ(w.summaries[0].max, 300);
  EXPECT_EQ(w.summaries[0].n_services, 5u);

  std::ostringstream csv;
  write_delay_stats_csv(w, csv);
  EXPECT_EQ(csv.str(),
            "route_id,category,median_s,min_s,max_s,n_services\n"
            "R,regular,200,100,300,5\n");
}

TEST(DelayStats, ZeroDelayMedians) {
  auto sched = FeedBuilder().stop("A").stop("B").route("R").trip_at(
      "T", "R", {{"A", hm(8, 0)}, {"B", hm(8, 5)}}).build();
  auto actual = synthesize_actual_feed(sched, ymd(2025, 12, 22),
                                       {{"T", {{1, hm(8, 0)}, {2, hm(8, 5)}}}});
  auto s = delay_stats(sched, {actual.feed});
  EXPECT_EQ(s.summaries[0].median, 0);
}

TEST(MedianOf, EvenAndOdd) {
  EXPECT_EQ(median_of({3, 1, 2}), 2);
  EXPECT_EQ(median_of({1, 3}), 2);
  EXPECT_THROW(median_of({}), std::invalid_argument);
}
