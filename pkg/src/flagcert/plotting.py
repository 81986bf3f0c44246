"""Figures written alongside report output.  Uses the non-interactive Agg backend."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

STYLE = {
    "figure.figsize": (5.0, 3.4),
    "font.size": 9,
    "axes.labelsize": 9,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "savefig.dpi": 120,
}


def _save(fig, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.tight_layout()
    # fixed metadata keeps repeated renders byte-stable
    fig.savefig(path, metadata={"Software": None})
    plt.close(fig)
    return path


def plot_density_profile(rows, path, reference=0.25) -> Path:
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        xs = [float(r.delta) for r in rows]
        ys = [float(r.value) for r in rows]
        ax.plot(xs, ys, marker="o", lw=1.2, color="k")
        for r, x, y in zip(rows, xs, ys):
            if not r.exact:
                ax.plot([x], [y], marker="o", mfc="white", color="k")
        if reference is not None:
            ax.axhline(reference, ls="--", lw=0.8, color="0.5")
        ax.set_xlabel("delta")
        ax.set_ylabel("delta-linear density")
        ax.set_ylim(bottom=0)
        return _save(fig, path)


def plot_coefficients(report, path, exempt=None) -> Path:
    """Histogram of the recomputed coefficients (Turan totals or sign-pattern alphas)."""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        vals = [float(a) for a in report.alpha]
        if exempt is not None:
            free = [v for v, e in zip(vals, exempt) if not e]
            held = [v for v, e in zip(vals, exempt) if e]
            ax.hist([free, held], bins=40, stacked=True, color=["0.3", "0.75"], label=["free", "exempt"])
            ax.legend(frameon=False)
        else:
            ax.hist(vals, bins=40, color="0.3")
        ax.set_xlabel("coefficient alpha_G")
        ax.set_ylabel("count")
        if report.margin is not None:
            ax.axvline(float(report.margin), ls="--", lw=0.8, color="k")
        return _save(fig, path)
