#!/usr/bin/env python3
"""Write a run configuration for a square polycrystalline plate with two circular voids."""

import argparse
import random
import sys


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--length", type=float, default=1.0, help="plate edge length L in mm")
    p.add_argument("--divisions", type=int, default=40, help="grid divisions per edge")
    p.add_argument("--grains", type=int, default=10)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--inner", default="micro_hard",
                   choices=["micro_hard", "micro_free", "micro_flexible", "damage_coupled"])
    p.add_argument("--horizon", type=float, default=1.0)
    p.add_argument("-o", "--output", default="-", help="config file (default stdout)")
    a = p.parse_args()

    L = a.length
    rng = random.Random(a.seed)
    seeds = [[rng.uniform(0, L), rng.uniform(0, L)] for _ in range(a.grains)]
    # Random orientations about the sample normal, r = tan(theta/2) e3.
    rod = [[0.0, 0.0, round(rng.uniform(-0.4, 0.4), 6)] for _ in range(a.grains)]
    radius = 0.5 * 0.045 * L
    voids = [[0.36 * L, 0.415 * L, radius], [0.49 * L, 0.425 * L, radius]]

    fmt = lambda rows: "[" + ", ".join("[" + ", ".join(repr(v) for v in r) + "]" for r in rows) + "]"
    text = f"""length_scale = {L!r}

[mesh]
generate = true
dim = 2
size = [{L!r}, {L!r}]
divisions = [{a.divisions}, {a.divisions}]
seeds = {fmt(seeds)}
voids = {fmt(voids)}

[grains]
rodrigues = {fmt(rod)}

[boundary.inner]
kind = "{a.inner}"

[boundary.void]
kind = "micro_free"

[load]
horizon = {a.horizon!r}

[output]
directory = "output"
cadence = 5
"""
    if a.output == "-":
        sys.stdout.write(text)
    else:
        with open(a.output, "w") as f:
            f.write(text)


if __name__ == "__main__":
    main()
