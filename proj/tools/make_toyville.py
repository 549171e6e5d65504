#!/usr/bin/env python3
"""Writes the toyville fixture: a street grid, 20 cells, 2 schools, two bus
routes, one rail line and five days of delay observations.

Usage: make_toyville.py OUT_DIR
"""

import csv
import math
import random
import sys
from pathlib import Path

R = 6371008.8
LAT0, LON0 = 36.0, 138.0
# Planar origin placed at the mean of the street nodes so that the routing
# projection (centred on the node mean) reproduces these coordinates.
X0, Y0 = 2125.0, 250.0

DAYS = ["2025-12-22", "2025-12-23", "2025-12-24", "2025-12-25", "2025-12-26"]


def latlon(x, y):
    lat = LAT0 + math.degrees((y - Y0) / R)
    lon = LON0 + math.degrees((x - X0) / (R * math.cos(math.radians(LAT0))))
    return lat, lon


def hms(s):
    return f"{s // 3600:02d}:{s % 3600 // 60:02d}:{s % 60:02d}"


def t(h, m):
    return h * 3600 + m * 60


STOPS = {
    "S1": (0, 0, "bus_stop"),
    "S2": (500, 0, "bus_stop"),
    "S3": (1000, 0, "bus_stop"),
    "S4": (2000, 0, "bus_stop"),
    "S5": (3000, 250, "bus_stop"),
    "S6": (4000, 250, "bus_stop"),
    "T1": (0, 500, "bus_stop"),
    "T3": (1000, 500, "bus_stop"),
    "T4": (1750, 750, "bus_stop"),
    "R1": (2500, -500, "rail_station"),
    "R2": (4000, 750, "rail_station"),
}


def trips():
    out = []  # (route, service, trip_id, [(stop, time)])

    def run(route, service, tid, start, stops, minutes):
        times, now = [], start
        for i, s in enumerate(stops):
            times.append((s, now))
            if i < len(minutes):
                now += minutes[i] * 60
        out.append((route, service, tid, times))

    east = ["S1", "S2", "S3", "S4", "S5", "S6"]
    for i, start in enumerate([t(6, 5), t(6, 35), t(7, 5), t(7, 35), t(8, 5)]):
        run("B1", "WD", f"B1-E{i + 1}", start, east, [3, 3, 5, 5, 5])
    for i in range(8):
        run("B1", "WD", f"B1-W{i + 1}", t(16, 10) + i * 1800, east[::-1],
            [5, 5, 5, 3, 3])
    b2 = ["T1", "T3", "T4", "S4"]
    for i, start in enumerate([t(6, 20), t(7, 0), t(7, 40), t(8, 0)]):
        run("B2", "MWF", f"B2-N{i + 1}", start, b2, [4, 4, 4])
    for i, start in enumerate([t(16, 5), t(16, 45), t(17, 25), t(18, 5),
                               t(18, 45), t(19, 25)]):
        run("B2", "MWF", f"B2-S{i + 1}", start, b2[::-1], [4, 4, 4])
    for i in range(5):
        run("R", "WD", f"R-N{i + 1}", t(6, 10) + i * 1800, ["R1", "R2"], [6])
    for i in range(8):
        run("R", "WD", f"R-S{i + 1}", t(16, 0) + i * 1800, ["R2", "R1"], [6])
    return out


def write_csv(path, header, rows):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def write_gtfs(root, all_trips):
    g = root / "gtfs"
    write_csv(g / "stops.txt",
              ["stop_id", "stop_name", "stop_lat", "stop_lon", "ext_stop_kind"],
              [[sid, f"Stop {sid}", *map(repr, latlon(x, y)), kind]
               for sid, (x, y, kind) in STOPS.items()])
    write_csv(g / "routes.txt", ["route_id", "route_short_name", "ext_category"],
              [["B1", "1", "regular"], ["B2", "2", "local"], ["R", "Rail", "rail"]])
    write_csv(g / "calendar.txt",
              ["service_id", "monday", "tuesday", "wednesday", "thursday",
               "friday", "saturday", "sunday", "start_date", "end_date"],
              [["WD", 1, 1, 1, 1, 1, 0, 0, "20251201", "20260131"],
               ["MWF", 1, 0, 1, 0, 1, 0, 0, "20251201", "20260131"]])
    write_csv(g / "trips.txt", ["route_id", "service_id", "trip_id"],
              [[r, s, tid] for r, s, tid, _ in all_trips])
    rows = []
    for _, _, tid, times in all_trips:
        for seq, (stop, when) in enumerate(times, start=1):
            rows.append([tid, hms(when), hms(when), stop, seq])
    write_csv(g / "stop_times.txt",
              ["trip_id", "arrival_time", "departure_time", "stop_id",
               "stop_sequence"], rows)


def write_streets(root):
    xs = range(-250, 4501, 125)
    ys = range(-750, 1251, 125)
    nodes, edges = [], []
    node = lambda x, y: f"n{x}_{y}"
    for x in xs:
        for y in ys:
            nodes.append([node(x, y), *map(repr, latlon(x, y))])
            if x + 125 <= 4500:
                edges.append([node(x, y), node(x + 125, y), 125, 1, 1])
            if y + 125 <= 1250:
                edges.append([node(x, y), node(x, y + 125), 125, 1, 1])
    write_csv(root / "streets" / "nodes.csv", ["node_id", "lat", "lon"], nodes)
    write_csv(root / "streets" / "edges.csv",
              ["from", "to", "length_m", "walk", "cycle"], edges)


def write_sites(root):
    rng = random.Random(7)
    rows = []
    for j, y in enumerate(range(0, 751, 250)):
        for i, x in enumerate(range(0, 1001, 250)):
            district = "North" if y >= 500 else "South"
            rows.append([f"C{j}{i}", *map(repr, latlon(x, y)),
                         rng.randint(5, 120), district, 62500])
    write_csv(root / "cells.csv",
              ["cell_id", "lat", "lon", "population_u15", "district", "area"],
              rows)
    write_csv(root / "schools.csv", ["school_id", "name", "lat", "lon"],
              [["A", "Alpha High", *map(repr, latlon(1750, 1000))],
               ["B", "Beta High", *map(repr, latlon(4000, 500))]])


def write_observations(root, all_trips):
    weekday = {d: i for i, d in enumerate(DAYS)}  # Monday first
    for day in DAYS:
        rng = random.Random(f"obs-{day}")
        rows = []
        for route, service, tid, times in all_trips:
            if route == "R" or (service == "MWF" and weekday[day] % 2 == 1):
                continue
            if rng.random() < 0.15:
                continue
            delay = rng.randint(0, 120)
            for k in range(len(times) - 1):
                delay += rng.randint(0, 90)
                if rng.random() < 0.2:
                    continue
                stop, when = times[k]
                actual = when + delay
                poll = actual + 30
                row = [f"{day}T{hms(poll)}", f"V-{tid}", route, stop,
                       times[k + 1][0], hms(actual), delay]
                rows.append(row)
                if rng.random() < 0.1:
                    rows.append([f"{day}T{hms(poll + 20)}", *row[1:]])
        rows.sort(key=lambda r: r[0])
        write_csv(root / "observations" / f"{day}.csv",
                  ["poll_time", "vehicle_id", "route_id", "prev_stop_id",
                   "next_stop_id", "prev_departure", "delay_s"], rows)


def main():
    root = Path(sys.argv[1])
    all_trips = trips()
    write_gtfs(root, all_trips)
    write_streets(root)
    write_sites(root)
    write_observations(root, all_trips)


if __name__ == "__main__":
    main()
