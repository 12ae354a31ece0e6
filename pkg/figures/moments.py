#!/usr/bin/env python3
"""Second-moment estimate under the closed-form bound curves.

Usage: figures/moments.py <moments.csv> [<more.csv> ...] <out.svg>
Input columns: t, mean_sq, K_LT, K_S (one CSV per method; the bounds are
drawn from the first input).
"""

import matplotlib.pyplot as plt

from figlib import load_csv, numeric, run_main, save, split_args

STYLES = ["-", ":", "--", "-."]


def main(argv):
    inputs, out = split_args(argv, __doc__)
    fig, ax = plt.subplots(figsize=(6.4, 4.8))
    for i, path in enumerate(inputs):
        cols = load_csv(path, required=["t", "mean_sq", "K_LT", "K_S"])
        t = numeric(cols, "t")
        if i == 0:
            ax.plot(t, numeric(cols, "K_S"), "-", color="#b0b0b0", lw=2.5,
                    label=r"$\widetilde{K}^{\mathrm{S}}$")
            ax.plot(t, numeric(cols, "K_LT"), ":", color="#d62728", lw=2.0,
                    label=r"$\widetilde{K}^{\mathrm{LT}}$")
        style = STYLES[i % len(STYLES)]
        color = "#000000" if i == 0 else "#00a0a0"
        ax.plot(t, numeric(cols, "mean_sq"), style, color=color, lw=1.2,
                label=f"estimate ({path.rsplit('/', 1)[-1]})")
    ax.set_xlabel("t")
    ax.set_ylabel(r"$\hat{\mathbb{E}}[X^2(t)]$")
    ax.legend(frameon=False, fontsize=9)
    ax.set_title("Second moments and closed-form bounds")
    fig.tight_layout()
    save(fig, out)


if __name__ == "__main__":
    run_main(main)
