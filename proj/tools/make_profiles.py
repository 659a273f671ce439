#!/usr/bin/env python3
"""Regenerates the synthetic base profiles shipped in configs/."""
import csv
import math
from pathlib import Path

OUT = Path(__file__).resolve().parent.parent / "configs"


def bell(hour, start, end, peak):
    if hour <= start or hour >= end:
        return 0.0
    return peak * math.sin(math.pi * (hour - start) / (end - start)) ** 2


def rec2(steps=101):
    rows = []
    for t in range(steps):
        h = t % 24
        cons = 0.35 + 0.25 * math.sin(2 * math.pi * (h - 9) / 24) + (0.15 if 17 <= h <= 21 else 0.0)
        # no production during the first hours of the simulation
        prod = bell(h, 6, 20, 1.2)
        rows.append([round(cons, 4), round(prod, 4)])
    with open(OUT / "rec2.csv", "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["M1/consumption", "M2/production"])
        w.writerows(rows)


def rec7(steps=721):
    # 3-minute steps starting at midnight
    base = {"M2": 180.0, "M3": 320.0, "M4": 90.0, "M5": 240.0, "M6": 150.0, "M7": 110.0}
    rows = []
    for t in range(steps):
        h = (t * 0.05) % 24
        office = 1.0 if 7.5 <= h <= 18.5 else 0.35
        row = []
        for k, (m, lvl) in enumerate(base.items()):
            wiggle = 1.0 + 0.08 * math.sin(2 * math.pi * (t + 17 * k) / 37)
            row.append(round(lvl * office * wiggle, 3))
        row.append(round(bell(h, 6.5, 20.0, 420.0), 3))
        row.append(round(bell(h, 7.0, 19.5, 260.0), 3))
        # M6 and M7 are metered net of their own production
        for ci, pi in ((4, 6), (5, 7)):
            common = min(row[ci], row[pi])
            row[ci] = round(row[ci] - common, 3)
            row[pi] = round(row[pi] - common, 3)
        rows.append(row)
    with open(OUT / "rec7.csv", "w", newline="") as f:
        w = csv.writer(f)
        w.writerow([f"{m}/consumption" for m in base] + ["M6/production", "M7/production"])
        w.writerows(rows)


if __name__ == "__main__":
    rec2()
    rec7()
