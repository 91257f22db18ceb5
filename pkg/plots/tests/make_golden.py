#!/usr/bin/env python3
"""Regenerate the golden PNGs for test_golden_files (run after a deliberate
matplotlib version bump)."""

import os
import sys
import tempfile

import matplotlib

HERE = os.path.dirname(os.path.abspath(__file__))
sys.path.insert(0, os.path.dirname(HERE))

import plot_runs  # noqa: E402
from test_plot_runs import three_run_set  # noqa: E402


class _TmpPath:
    def __init__(self, base):
        self.base = base

    def __truediv__(self, name):
        return _Path(os.path.join(self.base, name))


class _Path(str):
    pass


def main() -> None:
    golden_dir = os.path.join(HERE, "golden")
    os.makedirs(golden_dir, exist_ok=True)
    with tempfile.TemporaryDirectory() as tmp:
        args = []
        for path, label in three_run_set(_TmpPath(tmp)):
            args += ["--csv", f"{path}:{label}"]
        prefix = os.path.join(golden_dir, "run")
        rc = plot_runs.main(args + ["--window", "100", "--out-prefix", prefix])
        if rc != 0:
            raise SystemExit(rc)
    with open(os.path.join(golden_dir, "MPL_VERSION"), "w") as fh:
        fh.write(matplotlib.__version__ + "\n")
    print(f"golden files written for matplotlib {matplotlib.__version__}")


if __name__ == "__main__":
    main()
