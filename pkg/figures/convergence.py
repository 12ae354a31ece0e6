#!/usr/bin/env python3
"""Log2-log2 RMSE-versus-step plot with per-method order fits.

Usage: figures/convergence.py <converge.csv> <out.svg>
Input columns: method, dt, rmse.
"""

import matplotlib.pyplot as plt
import numpy as np

from figlib import COLORS, SchemaError, load_csv, numeric, run_main, save, split_args


def main(argv):
    inputs, out = split_args(argv, __doc__)
    if len(inputs) != 1:
        raise SchemaError("convergence takes exactly one input CSV")
    cols = load_csv(inputs[0], required=["method", "dt", "rmse"])
    dt = numeric(cols, "dt")
    rmse = numeric(cols, "rmse")
    methods = list(dict.fromkeys(cols["method"]))

    fig, ax = plt.subplots(figsize=(6.4, 4.8))
    for m in methods:
        sel = np.asarray([v == m for v in cols["method"]])
        x, y = np.log2(dt[sel]), np.log2(rmse[sel])
        order = np.argsort(x)
        x, y = x[order], y[order]
        color = COLORS.get(m)
        ax.plot(x, y, "o", color=color)
        if x.size >= 2:
            slope, intercept = np.polyfit(x, y, 1)
            ax.plot(
                x, slope * x + intercept, "-", color=color,
                label=f"{m} (order {slope:.2f})",
            )
        else:
            ax.plot([], [], "-", color=color, label=m)
    ax.set_xlabel(r"$\log_2 \Delta$")
    ax.set_ylabel(r"$\log_2$ RMSE")
    ax.legend(frameon=False, fontsize=9)
    ax.set_title("Mean-square convergence")
    fig.tight_layout()
    save(fig, out)


if __name__ == "__main__":
    run_main(main)
