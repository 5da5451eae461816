"""SVG plot helpers (matplotlib loaded lazily, Agg backend).

Plots are conveniences for reports and the CLI ``--plot`` flags; nothing in
the numerical pipeline depends on them.
"""

from __future__ import annotations

__all__ = ["plot_diagram", "plot_vineyard"]


def _pyplot():
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    return plt


def plot_diagram(diag, path) -> None:
    """Scatter of (low, high) pairs above the diagonal."""
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(4.5, 4.5))
    if diag.points:
        lows = [p[0] for p in diag.points]
        highs = [p[1] for p in diag.points]
        ax.scatter(lows, highs, s=18, color="#1f77b4", zorder=3)
        span_lo = min(0.0, min(lows))
        span_hi = max(highs) * 1.05 if max(highs) > 0 else 1.0
    else:
        span_lo, span_hi = 0.0, 1.0
    ax.plot([span_lo, span_hi], [span_lo, span_hi],
            color="grey", linewidth=0.8, zorder=1)
    ax.set_xlabel("death")
    ax.set_ylabel("birth")
    ax.set_title(f"persistence diagram ({diag.orientation})")
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)


def plot_vineyard(vine, path, bands=None) -> None:
    """Total persistences against theta, one polyline per rank; optional
    per-rank confidence bands shaded behind the lines."""
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6.5, 4.0))
    ranks = max((len(p) for p in vine.persistences), default=0)
    thetas = vine.thetas
    for rank in range(ranks):
        ys = [p[rank] if len(p) > rank else 0.0 for p in vine.persistences]
        if bands is not None:
            lo = [b[rank][0] if len(b) > rank else 0.0 for b in bands]
            hi = [b[rank][1] if len(b) > rank else 0.0 for b in bands]
            ax.fill_between(thetas, lo, hi, alpha=0.15, linewidth=0)
        ax.plot(thetas, ys, linewidth=1.0)
    ax.set_xlabel("theta")
    ax.set_ylabel("total persistence")
    ax.set_title(vine.family_name)
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)
