#!/usr/bin/env python3
"""Invariant-density estimates (kernel density of a long run).

Usage: figures/density.py <density.csv> [<more.csv> ...] <out.svg>
Input columns: x, density.
"""

import matplotlib.pyplot as plt

from figlib import load_csv, numeric, run_main, save, split_args


def main(argv):
    inputs, out = split_args(argv, __doc__)
    fig, ax = plt.subplots(figsize=(6.4, 4.8))
    for path in inputs:
        cols = load_csv(path, required=["x", "density"])
        ax.plot(
            numeric(cols, "x"), numeric(cols, "density"), lw=1.2,
            label=path.rsplit("/", 1)[-1],
        )
    ax.set_xlabel("x")
    ax.set_ylabel("density")
    ax.legend(frameon=False, fontsize=8)
    ax.set_title("Estimated invariant density")
    fig.tight_layout()
    save(fig, out)


if __name__ == "__main__":
    run_main(main)
