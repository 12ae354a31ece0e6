#!/usr/bin/env python3
"""Smoothed periodogram overlay.

Usage: figures/spectrum.py <spectrum.csv> [<more.csv> ...] <out.svg>
Input columns: freq, power.
"""

import matplotlib.pyplot as plt
import numpy as np

from figlib import load_csv, numeric, run_main, save, split_args


def main(argv):
    inputs, out = split_args(argv, __doc__)
    fig, ax = plt.subplots(figsize=(6.4, 4.8))
    peak = 0.0
    for path in inputs:
        cols = load_csv(path, required=["freq", "power"])
        f = numeric(cols, "freq")
        p = numeric(cols, "power")
        ax.plot(f, p, lw=1.0, label=path.rsplit("/", 1)[-1])
        peak = max(peak, f[int(np.argmax(p))])
    ax.set_xlim(0.0, max(4.0 * peak, ax.get_xlim()[0] + 1e-9))
    ax.set_xlabel(r"frequency $\nu$ (cycles per time unit)")
    ax.set_ylabel("spectral density")
    ax.legend(frameon=False, fontsize=8)
    ax.set_title("Smoothed periodogram")
    fig.tight_layout()
    save(fig, out)


if __name__ == "__main__":
    run_main(main)
