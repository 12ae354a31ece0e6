"""Shared helpers for the figure scripts: CSV loading with schema checks
and deterministic matplotlib output (no timestamps, fixed hash salt)."""

import csv
import sys

import matplotlib

matplotlib.use("Agg")
matplotlib.rcParams["svg.hashsalt"] = "sde-splitkit-figures"

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)
import numpy as np  # noqa: E402

COLORS = {
    "S": "#000000",
    "LT": "#00a0a0",
    "TEM": "#d62728",
    "DTEM": "#ff9896",
    "TrEM": "#1f77b4",
    "DTrEM": "#aec7e8",
    "EM": "#7f7f7f",
}


class SchemaError(Exception):
    pass


def load_csv(path, required):
    """Read a CSV with a header into a dict of column lists.

    Raises SchemaError naming any missing column, and on empty files.
    """
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: empty file, no header") from None
        missing = [c for c in required if c not in header]
        if missing:
            raise SchemaError(
                f"{path}: missing required column(s) {', '.join(missing)} "
                f"(found: {', '.join(header) or 'none'})"
            )
        rows = [row for row in reader if row]
    if not rows:
        raise SchemaError(f"{path}: no data rows")
    cols = {name: [] for name in header}
    for row in rows:
        if len(row) != len(header):
            raise SchemaError(f"{path}: ragged row {row!r}")
        for name, value in zip(header, row):
            cols[name].append(value)
    return cols


def numeric(cols, name):
    try:
        return np.asarray([float(v) for v in cols[name]])
    except ValueError as exc:
        raise SchemaError(f"column {name}: {exc}") from None


def save(fig, out_path):
    """Write the figure without volatile metadata so reruns are identical."""
    kwargs = {}
    if str(out_path).endswith(".svg"):
        kwargs["metadata"] = {"Date": None}
    fig.savefig(out_path, **kwargs)
    plt.close(fig)


def run_main(main):
    """Uniform entry point: schema problems exit 2 with a clear message."""
    try:
        main(sys.argv[1:])
    except SchemaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        sys.exit(2)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        sys.exit(1)


def split_args(argv, usage):
    if len(argv) < 2:
        print(usage, file=sys.stderr)
        sys.exit(2)
    return argv[:-1], argv[-1]
