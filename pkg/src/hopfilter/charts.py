"""Static SVG chart of a sweep: one panel per link probability.

Rendering is kept byte-deterministic so identical sweeps produce
identical files: the Agg backend is forced, element ids are derived
from a fixed hash salt instead of object addresses, and no creation
date is embedded.
"""

import math

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt


def render_sweep_svg(points, path):
    """Draw both ratio curves against L, grouped by p, into an SVG file."""
    by_p = {}
    for pt in points:
        by_p.setdefault(pt.p, []).append(pt)
    panels = sorted(by_p)
    ncols = 2 if len(panels) > 1 else 1
    nrows = max(1, math.ceil(len(panels) / ncols))

    with plt.rc_context({"svg.hashsalt": "hopfilter"}):
        fig, axes = plt.subplots(nrows, ncols, squeeze=False,
                                 figsize=(4.0 * ncols, 3.0 * nrows))
        for ax in axes.ravel()[len(panels):]:
            ax.set_visible(False)
        for ax, p in zip(axes.ravel(), panels):
            rows = sorted(by_p[p], key=lambda r: r.L)
            caps = [r.L for r in rows]
            ax.plot(caps, [r.upsilon_e for r in rows], marker="s",
                    color="tab:orange", label="energy ratio")
            feas = [r for r in rows if r.feasible]
            if feas:
                ax.plot([r.L for r in feas], [r.upsilon_h for r in feas],
                        marker="o", color="tab:blue", label="norm ratio")
            infeas = [r.L for r in rows if not r.feasible]
            for cap in infeas:
                ax.axvline(cap, color="0.85", linewidth=0.8, zorder=0)
            ax.axhline(1.0, color="0.5", linewidth=0.8, linestyle="--")
            ax.set_title(f"p = {p:g}")
            ax.set_xlabel("retransmission cap L")
            ax.set_ylabel("ratio")
            ax.legend(loc="center right", fontsize="small")
        fig.tight_layout()
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)
