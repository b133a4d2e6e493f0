#!/usr/bin/env python3
"""Writes synthetic_debris.csv: 20 sun-synchronous-like debris orbits.

The spread of a, e, i and raan roughly follows the published statistics of
the competition catalog. Ids are 1..19 plus 23 so the default start id exists.
"""
import math
import random

rng = random.Random(20170423)
ids = list(range(1, 20)) + [23]
rows = []
for k, did in enumerate(ids):
    a_km = min(max(rng.gauss(7131.6, 58.5), 6996.1), 7274.0)
    e = min(max(abs(rng.gauss(0.0071, 0.0049)), 1.3e-4), 0.0193)
    i_deg = min(max(rng.gauss(98.415, 0.843), 96.24), 101.07)
    raan_deg = 7.6 + 340.1 * (k + rng.random()) / len(ids)
    rows.append((did, 23557.0 + rng.uniform(-2.0, 2.0), a_km * 1000.0, e, math.radians(i_deg),
                 math.radians(raan_deg), rng.uniform(0, 2 * math.pi), rng.uniform(0, 2 * math.pi)))

with open("synthetic_debris.csv", "w") as f:
    f.write("id,epoch_mjd2000,a_m,e,i_rad,raan_rad,argp_rad,m_rad\n")
    for r in rows:
        f.write("%d,%.6f,%.3f,%.8f,%.10f,%.10f,%.10f,%.10f\n" % r)
