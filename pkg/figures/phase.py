#!/usr/bin/env python3
"""Phase portrait (second component against first).

Usage: figures/phase.py <traj.csv> [<more.csv> ...] <out.svg>
Input columns: t, x1, x2.
"""

import matplotlib.pyplot as plt

from figlib import load_csv, numeric, run_main, save, split_args


def main(argv):
    inputs, out = split_args(argv, __doc__)
    fig, ax = plt.subplots(figsize=(5.4, 5.4))
    for path in inputs:
        cols = load_csv(path, required=["t", "x1", "x2"])
        ax.plot(
            numeric(cols, "x1"), numeric(cols, "x2"), lw=0.6,
            label=path.rsplit("/", 1)[-1],
        )
    ax.set_xlabel("x1")
    ax.set_ylabel("x2")
    ax.legend(frameon=False, fontsize=8)
    ax.set_title("Phase portrait")
    fig.tight_layout()
    save(fig, out)


if __name__ == "__main__":
    run_main(main)
