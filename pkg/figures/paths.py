#!/usr/bin/env python3
"""Trajectory overlay: one panel per state component, one curve per CSV.

Usage: figures/paths.py <traj.csv> [<more.csv> ...] <out.svg>
Input columns: t, x1 [, x2, ...]; overlays are labelled by file name.
"""

import matplotlib.pyplot as plt

from figlib import load_csv, numeric, run_main, save, split_args


def main(argv):
    inputs, out = split_args(argv, __doc__)
    first = load_csv(inputs[0], required=["t", "x1"])
    n_comp = sum(1 for name in first if name.startswith("x"))
    fig, axes = plt.subplots(
        n_comp, 1, figsize=(7.2, 2.6 * n_comp), sharex=True, squeeze=False
    )
    for path in inputs:
        cols = load_csv(path, required=["t", "x1"])
        t = numeric(cols, "t")
        label = path.rsplit("/", 1)[-1]
        for c in range(n_comp):
            name = f"x{c + 1}"
            if name in cols:
                axes[c, 0].plot(t, numeric(cols, name), lw=0.8, label=label)
    for c in range(n_comp):
        axes[c, 0].set_ylabel(f"x{c + 1}")
    axes[-1, 0].set_xlabel("t")
    axes[0, 0].legend(frameon=False, fontsize=8)
    fig.tight_layout()
    save(fig, out)


if __name__ == "__main__":
    run_main(main)
