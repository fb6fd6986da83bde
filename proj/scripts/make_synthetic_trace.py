#!/usr/bin/env python3
"""Write a small bursty SNAP-format message trace (SRC DST UNIXTIME).

Conversations start as a Poisson process, partners are drawn with Zipf-like
popularity, and each conversation is a short burst of replies in both
directions. Defaults give a dial-model conflict fraction near the ~33% the
CollegeMsg file shows at a 300 s window. Used as its offline stand-in.
"""
import argparse
import random


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--lines", type=int, default=500)
    ap.add_argument("--users", type=int, default=40)
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--start", type=int, default=1082040961)
    ap.add_argument("--out", default="data/synthetic_trace.txt")
    args = ap.parse_args()

    rng = random.Random(args.seed)
    weights = [1.0 / (i + 1) ** 1.1 for i in range(args.users)]
    ids = list(range(1, args.users + 1))
    rows = []
    t = float(args.start)
    while len(rows) < args.lines:
        t += rng.expovariate(1 / 90.0)
        a, b = rng.choices(ids, weights, k=2)
        if a == b:
            continue
        burst = 1 + min(int(rng.expovariate(1 / 3.0)), 15)
        u = t
        for _ in range(burst):
            rows.append((a, b, int(u)))
            if rng.random() < 0.45:
                a, b = b, a
            u += rng.expovariate(1 / 25.0)
    rows = sorted(rows[: args.lines], key=lambda r: r[2])
    with open(args.out, "w") as f:
        for a, b, ts in rows:
            f.write(f"{a} {b} {ts}\n")


if __name__ == "__main__":
    main()
