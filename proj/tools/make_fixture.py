#!/usr/bin/env python3
"""Generate the synthetic fixture city shipped under data/.

The fixture mimics the shape of a small college town: 3 tracts, 6 block
groups, 40 blocks (one of them far outside the bus network), ~50 stops
including 3 transfer hubs and a few university-route stops, and 60 months
of system-wide operating data.  A second, longer monthly series (240 rows)
with strongly nonlinear targets lives in data/nonlinear/.

Output is deterministic: rerunning the script reproduces the files byte for
byte.
"""

import csv
import math
import os
import random

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
CITY = os.path.join(ROOT, "data", "fixture_city")
NONLINEAR = os.path.join(ROOT, "data", "nonlinear")

EARTH_RADIUS_MILES = 3958.7613
CENTER = (38.4496, -78.8689)

COUNT_TVV = [
    "age_65_over",
    "with_disability",
    "below_poverty",
    "speak_english_less_than_well",
    "renter_population",
    "vehicle_ownership",
    "unemployed",
    "commute_private_vehicle",
    "commute_public_transit",
    "commute_bicycle",
    "commute_walking",
    "commute_worked_at_home",
]
TVV = COUNT_TVV + ["median_income"]

# share of group population per count variable: (low, high)
SHARES = {
    "age_65_over": (0.07, 0.20),
    "with_disability": (0.07, 0.15),
    "below_poverty": (0.10, 0.35),
    "speak_english_less_than_well": (0.02, 0.09),
    "renter_population": (0.30, 0.65),
    "vehicle_ownership": (0.45, 0.90),
    "unemployed": (0.02, 0.07),
    "commute_private_vehicle": (0.40, 0.75),
    "commute_public_transit": (0.01, 0.10),
    "commute_bicycle": (0.005, 0.03),
    "commute_walking": (0.03, 0.15),
    "commute_worked_at_home": (0.02, 0.08),
}


def haversine(a, b):
    la1, lo1, la2, lo2 = map(math.radians, (a[0], a[1], b[0], b[1]))
    h = math.sin((la2 - la1) / 2) ** 2 + math.cos(la1) * math.cos(la2) * math.sin((lo2 - lo1) / 2) ** 2
    return 2 * EARTH_RADIUS_MILES * math.asin(min(1.0, math.sqrt(h)))


def fmt(x):
    if isinstance(x, float):
        return repr(round(x, 6))
    return str(x)


def write_csv(path, header, rows):
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([fmt(v) for v in r])


def make_census(rng):
    tracts = [("1.01", 5015, 0.7236), ("2.06", 4725, 0.0761), ("4.02", 6561, 0.7432)]
    groups = []
    for ti, (tid, _, _) in enumerate(tracts):
        for gi in range(2):
            groups.append((f"{tid}-{gi + 1}", tid))

    # 8 x 5 grid of blocks, 39 used in the core plus one remote block
    dlat, dlon = 0.0050, 0.0065
    cells = [(r, c) for r in range(5) for c in range(8)][:39]
    sizes = [7, 7, 6, 7, 6, 6]
    blocks = []
    idx = 0
    for g, size in zip(groups, sizes):
        for _ in range(size):
            r, c = cells[idx]
            lat = CENTER[0] + (r - 2) * dlat + rng.uniform(-0.0008, 0.0008)
            lon = CENTER[1] + (c - 3.5) * dlon + rng.uniform(-0.0008, 0.0008)
            pop = rng.randint(40, 420)
            if idx in (5, 23):
                pop = 0
            boundary = []
            if idx % 3 != 0:
                hl, ho = 0.0022, 0.0028
                boundary = [(lat - hl, lon - ho), (lat - hl, lon + ho), (lat + hl, lon + ho), (lat + hl, lon - ho)]
            blocks.append({"id": f"B{idx + 1:03d}", "group": g[0], "pop": pop, "lat": lat, "lon": lon,
                           "boundary": boundary})
            idx += 1
    # the remote block: about 3 miles east of the network, assigned to the last group
    rlat, rlon = CENTER[0] + 0.004, CENTER[1] + 0.075
    blocks.append({"id": "B040", "group": groups[-1][0], "pop": 85, "lat": rlat, "lon": rlon,
                   "boundary": [(rlat - 0.002, rlon - 0.002), (rlat - 0.002, rlon + 0.002),
                                (rlat + 0.002, rlon + 0.002), (rlat + 0.002, rlon - 0.002)]})

    group_rows = []
    group_tvv = {}
    for gid, tid in groups:
        gpop = sum(b["pop"] for b in blocks if b["group"] == gid)
        tvv = {}
        for name in COUNT_TVV:
            lo, hi = SHARES[name]
            tvv[name] = int(round(gpop * rng.uniform(lo, hi)))
        tvv["median_income"] = int(round(rng.uniform(30000, 80000), -2))
        group_tvv[gid] = (gpop, tvv)
        group_rows.append([gid, tid, gpop] + [tvv[n] for n in TVV])

    write_csv(os.path.join(CITY, "tracts.csv"), ["tract_id", "population", "svi"], [list(t) for t in tracts])
    write_csv(os.path.join(CITY, "block_groups.csv"), ["group_id", "tract_id", "population"] + TVV, group_rows)
    brows = []
    for b in blocks:
        wkt = ""
        if b["boundary"]:
            ring = b["boundary"] + [b["boundary"][0]]
            wkt = "POLYGON((" + ", ".join(f"{lo:.6f} {la:.6f}" for la, lo in ring) + "))"
        brows.append([b["id"], b["group"], b["pop"], round(b["lat"], 6), round(b["lon"], 6), wkt])
    write_csv(os.path.join(CITY, "blocks.csv"), ["block_id", "group_id", "population", "lat", "lon", "boundary_wkt"],
              brows)
    return blocks, group_tvv


def stop_profile(stop, blocks, group_tvv):
    pop = 0.0
    acc = {n: 0.0 for n in COUNT_TVV}
    for b in blocks:
        pts = [(round(b["lat"], 6), round(b["lon"], 6))] + b["boundary"]
        if min(haversine(stop, p) for p in pts) <= 0.75:
            gpop, tvv = group_tvv[b["group"]]
            w = b["pop"] / gpop if gpop > 0 else 0.0
            pop += b["pop"]
            for n in COUNT_TVV:
                acc[n] += tvv[n] * w
    return pop, acc


def make_stops(rng, blocks, group_tvv):
    rows = []
    n = 0
    for r in range(6):
        for c in range(9):
            if (r, c) in ((0, 0), (5, 8), (0, 8), (5, 0)):
                continue
            n += 1
            lat = CENTER[0] + (r - 2.5) * 0.0042 + rng.uniform(-0.0012, 0.0012)
            lon = CENTER[1] + (c - 4.0) * 0.0058 + rng.uniform(-0.0012, 0.0012)
            rows.append({"id": f"S{n:03d}", "name": f"Stop {n}", "lat": lat, "lon": lon,
                         "hub": False, "jmu": False})
    for i in (10, 25, 40):
        rows[i]["hub"] = True
        rows[i]["name"] = f"Transfer Hub {i}"
    for i in (3, 17, 33, 46):
        rows[i]["jmu"] = True
    out = []
    for s in rows:
        pop, acc = stop_profile((s["lat"], s["lon"]), blocks, group_tvv)
        transit = acc["commute_public_transit"]
        renters = acc["renter_population"]
        car_free = max(pop - acc["vehicle_ownership"], 0.0)
        routes = 365 * (3 + 6 * math.tanh(pop / 3500.0) + 2.0 * (renters / max(pop, 1.0)))
        routes *= rng.uniform(0.9, 1.1)
        riders = routes * (0.6 + 0.9 * math.sqrt(transit + 0.3 * car_free) / 10.0) * rng.uniform(0.85, 1.15)
        if s["hub"]:
            riders *= 12
            routes *= 2.5
        if s["jmu"]:
            riders *= 3
        out.append([s["id"], s["name"], round(s["lat"], 6), round(s["lon"], 6), int(round(riders)),
                    int(round(routes)), str(s["hub"]).lower(), str(s["jmu"]).lower()])
    # the engineered shortage: busy neighbourhood, almost no service
    gap = out[30]
    gap[1] = "Underserved Corner"
    gap[4] = 62000
    gap[5] = 180
    write_csv(os.path.join(CITY, "stops.csv"),
              ["stop_id", "name", "lat", "lon", "total_riders", "city_routes_ran", "is_transfer_hub", "on_jmu_route"],
              out)
    return gap[0]


def in_session(month):
    return month not in (5, 6, 7)


def monthly_series(rng, years, first, covid, nonlinear):
    rows = []
    cal = []
    base_tvv = {n: 53000 * sum(SHARES[n]) / 2 for n in COUNT_TVV}
    t = 0
    y, m = first
    for _ in range(years * 12):
        session = in_session(m)
        base_pop = 50000 + 45 * t + rng.uniform(-150, 150)
        enrollment = 19500 + 12 * t + (300 if m >= 8 else 0)
        summer = 2200 + rng.uniform(-200, 200)
        adj = base_pop if session else base_pop - 0.9 * (enrollment - summer)
        jmu_ran = (17 + rng.randint(-1, 1)) if session else (4 + rng.randint(0, 1))
        city_ran = 11 + (t // 24) % 3 + rng.randint(0, 1)
        season = math.sin(2 * math.pi * m / 12)
        if nonlinear:
            # saturating and hinged responses, not a low-order polynomial
            # (a network expansion in late 2012 is a sharp step in time)
            miles = (5200 * city_ran + 16000 / (1 + math.exp(-1.5 * (jmu_ran - 10)))
                     + 14000 / (1 + math.exp(-3.0 * (t / 12 - 9.5)))
                     + 9000 * max(0.0, (adj - 52000) / 3000))
            hours = miles / (14.5 + 2.5 * math.tanh((jmu_ran - 10) / 3))
        else:
            miles = 4200 * city_ran + 1900 * jmu_ran + 0.35 * (adj - 40000) + 900 * season
            hours = miles / (14.0 + 0.05 * jmu_ran)
        miles *= rng.uniform(0.985, 1.015)
        hours *= rng.uniform(0.985, 1.015)
        tvv = {}
        for n in COUNT_TVV:
            drift = 1 + 0.02 * math.sin(0.13 * t + len(n)) + 0.001 * t
            tvv[n] = base_tvv[n] * drift * rng.uniform(0.99, 1.01)
        tvv["median_income"] = 47000 + 90 * t + rng.uniform(-400, 400)
        if nonlinear:
            trips = (260000 / (1 + math.exp(-(hours - 5200) / 900)) + 4.0 * hours * (adj / 50000) ** 3
                     - 2.5 * tvv["vehicle_ownership"] + 60000 * season * (1 if session else -0.5))
        else:
            trips = -150000 + 70 * hours + 2.2 * (adj - 40000) - 1.5 * tvv["vehicle_ownership"]
        trips = max(trips * rng.uniform(0.98, 1.02), 1000)
        if covid and y == 2020 and m in (9, 10, 11):
            trips *= 0.35
        rows.append([y, m, int(round(trips)), round(miles, 1), round(hours, 1), int(round(enrollment)),
                     jmu_ran, city_ran, int(round(base_pop)), str(session).lower(), int(round(summer))]
                    + [round(tvv[n], 2) for n in TVV])
        cal.append([y, m, str(session).lower()])
        t += 1
        m += 1
        if m == 13:
            m = 1
            y += 1
    return rows, cal


MONTHLY_HEADER = ["year", "month", "passenger_trips", "revenue_miles", "revenue_hours", "jmu_enrollment",
                  "jmu_routes_ran", "city_routes_ran", "base_population", "in_session",
                  "summer_enrollment"] + TVV


def main():
    os.makedirs(CITY, exist_ok=True)
    os.makedirs(NONLINEAR, exist_ok=True)
    rng = random.Random(20190101)
    blocks, group_tvv = make_census(rng)
    gap = make_stops(rng, blocks, group_tvv)
    rows, cal = monthly_series(rng, 5, (2017, 7), covid=True, nonlinear=False)
    write_csv(os.path.join(CITY, "monthly.csv"), MONTHLY_HEADER, rows)
    write_csv(os.path.join(CITY, "calendar.csv"), ["year", "month", "in_session"], cal)

    rng = random.Random(424242)
    rows, cal = monthly_series(rng, 20, (2003, 1), covid=False, nonlinear=True)
    write_csv(os.path.join(NONLINEAR, "monthly.csv"), MONTHLY_HEADER, rows)
    write_csv(os.path.join(NONLINEAR, "calendar.csv"), ["year", "month", "in_session"], cal)
    print("engineered shortage stop:", gap)


if __name__ == "__main__":
    main()
