"""Regenerate the synthetic analyze fixtures: python3 make_fixtures.py"""

import csv
import math
import random

EVENTS = [
    "Start Trial", "Submit Application", "Contact", "Add To Cart",
    "Add Payment Information", "Search", "View Content", "Complete Registration",
    "Initiate Checkout", "Purchase", "Schedule", "Subscribe", "Lead", "Add To Wishlist",
]


def main():
    rng = random.Random(7)
    units = []
    bench = []
    for e, name in enumerate(EVENTS):
        mean = 1.5 + 0.25 * e
        sd = 0.6 + 0.05 * e
        s2 = math.log1p((sd / mean) ** 2)
        mu = math.log(mean) - 0.5 * s2
        for _ in range(400):
            pi = max(0.05, min(1.0, rng.betavariate(2.0, 2.0)))
            y = math.exp(rng.gauss(mu, math.sqrt(s2)))
            r = 1 if rng.random() < pi else 0
            units.append((name, f"{y:.6f}" if r else "NA", r, f"{pi:.6f}"))
        bench.append((name, f"{mean + rng.gauss(0, 0.05):.6f}", f"{mean + rng.gauss(0, 0.05):.6f}"))

    with open("units.csv", "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["event_name", "y", "r", "propensity"])
        w.writerows(units)
    with open("benchmarks.csv", "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["event_name", "mu_source1", "mu_source2"])
        w.writerows(bench)


if __name__ == "__main__":
    main()
