#!/usr/bin/env python3
"""Render training-curve figures from harness metrics CSVs.

Reads one or more run CSVs (schema: episode,seed,gates_total,gates_completed,
stops_used,success,cum_reward,epsilon,wall_ms), smooths the cumulative-reward
and time-elapsed (stop count) series with a centered moving average, and
writes two PNGs overlaying all runs:

    <out-prefix>_reward.png   cumulative reward vs episode
    <out-prefix>_stops.png    time elapsed (stops) vs episode

Usage:
    plot_runs.py --csv a.csv:labelA --csv b.csv:labelB --window 100 \
                 --out-prefix figs/run

Exits 2 on a schema mismatch or malformed argument.
"""

from __future__ import annotations

import argparse
import csv
import os
import sys

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

EXPECTED_HEADER = ["episode", "seed", "gates_total", "gates_completed",
                   "stops_used", "success", "cum_reward", "epsilon", "wall_ms"]
FIG_DPI = 120


class RunSeries:
    def __init__(self, label: str, episodes: list[int], rewards: list[float],
                 stops: list[int]):
        if not (len(episodes) == len(rewards) == len(stops)):
            raise ValueError("series arrays must have equal length")
        if any(b <= a for a, b in zip(episodes, episodes[1:])):
            raise ValueError(f"run {label!r}: episodes must be strictly increasing")
        self.label = label
        self.episodes = np.asarray(episodes)
        self.rewards = np.asarray(rewards, dtype=float)
        self.stops = np.asarray(stops, dtype=float)


def read_run(path: str, label: str) -> RunSeries:
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != EXPECTED_HEADER:
            raise ValueError(f"{path}: unexpected header {header}")
        episodes, rewards, stops = [], [], []
        for row in reader:
            if len(row) != len(EXPECTED_HEADER):
                raise ValueError(f"{path}: malformed row {row}")
            episodes.append(int(row[0]))
            stops.append(int(row[4]))
            rewards.append(float(row[6]))
    if not episodes:
        raise ValueError(f"{path}: no episodes")
    return RunSeries(label, episodes, rewards, stops)


def moving_average(values: np.ndarray, window: int) -> np.ndarray:
    """Centered moving average; edge windows shrink to the available range,
    so a constant series stays constant."""
    if window < 1:
        raise ValueError("window must be >= 1")
    if window == 1:
        return values.astype(float)
    half = window // 2
    padded = np.concatenate([[0.0], np.cumsum(values, dtype=float)])
    n = len(values)
    out = np.empty(n)
    for i in range(n):
        lo = max(0, i - half)
        hi = min(n, i + half + 1)
        out[i] = (padded[hi] - padded[lo]) / (hi - lo)
    return out


def parse_csv_arg(arg: str) -> tuple[str, str]:
    path, sep, label = arg.rpartition(":")
    if not sep or not path:
        raise ValueError(f"--csv expects <path>:<label>, got {arg!r}")
    return path, label


def render(runs: list[RunSeries], window: int, out_prefix: str) -> tuple[str, str]:
    specs = [
        ("rewards", "Cumulative reward", f"{out_prefix}_reward.png"),
        ("stops", "Time elapsed (stops)", f"{out_prefix}_stops.png"),
    ]
    out_dir = os.path.dirname(out_prefix)
    if out_dir:
        os.makedirs(out_dir, exist_ok=True)
    paths = []
    for attr, ylabel, out_path in specs:
        fig, ax = plt.subplots(figsize=(6.4, 4.2))
        for run in runs:
            ax.plot(run.episodes, moving_average(getattr(run, attr), window),
                    label=run.label, linewidth=1.4)
        ax.set_xlabel("Episode")
        ax.set_ylabel(ylabel)
        ax.legend()
        ax.grid(True, alpha=0.3)
        fig.tight_layout()
        # strip variable metadata so identical inputs give identical bytes
        fig.savefig(out_path, dpi=FIG_DPI, metadata={"Software": None})
        plt.close(fig)
        paths.append(out_path)
    return paths[0], paths[1]


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--csv", action="append", required=True,
                        metavar="PATH:LABEL", help="metrics CSV with its legend label")
    parser.add_argument("--window", type=int, default=100,
                        help="centered moving-average window (default 100)")
    parser.add_argument("--out-prefix", required=True,
                        help="output path prefix for the two PNGs")
    args = parser.parse_args(argv)
    try:
        runs = [read_run(*parse_csv_arg(a)) for a in args.csv]
        reward_png, stops_png = render(runs, args.window, args.out_prefix)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(reward_png)
    print(stops_png)
    return 0


if __name__ == "__main__":
    sys.exit(main())
