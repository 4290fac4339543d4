"""Report figures rendered to image files next to the text reports."""

from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

_STYLE = {
    "font.size": 10,
    "axes.labelsize": 10,
    "axes.titlesize": 11,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "savefig.dpi": 120,
}

MODE_COLORS = {"iou_only": "#8c8c8c", "reid_always": "#4c72b0", "occlusion_aware": "#c44e52"}


def _figure(width=6.0, height=None):
    golden = (np.sqrt(5) - 1.0) / 2.0
    return plt.subplots(figsize=(width, height or width * golden))


def _save(fig, path):
    d = os.path.dirname(path)
    if d:
        os.makedirs(d, exist_ok=True)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return path


def plot_ablation(result, path):
    """Bar chart of ID switches per tracking mode, FP/FN in the labels."""
    with plt.rc_context(_STYLE):
        fig, ax = _figure()
        modes = list(result.rows)
        ids = [result.rows[m].ids for m in modes]
        names = [m.value for m in modes]
        bars = ax.bar(names, ids, color=[MODE_COLORS.get(n, "C0") for n in names])
        for b, m in zip(bars, modes):
            r = result.rows[m]
            ax.annotate(f"IDS {r.ids}\nFP {r.fp} / FN {r.fn}", (b.get_x() + b.get_width() / 2, b.get_height()),
                        ha="center", va="bottom", fontsize=7)
        ax.set_ylabel("ID switches")
        ax.set_title("Tracking strategy ablation")
        ax.margins(y=0.2)
        return _save(fig, path)


def plot_latency(latencies_ms, path):
    lat = np.asarray(latencies_ms)
    with plt.rc_context(_STYLE):
        fig, ax = _figure()
        ax.hist(lat, bins=40, color="#4c72b0", alpha=0.8)
        for q, ls in ((50, "-"), (90, "--"), (99, ":")):
            v = np.percentile(lat, q)
            ax.axvline(v, color="k", ls=ls, lw=1, label=f"p{q} = {v:.2f} ms")
        ax.set_xlabel("per-frame update latency (ms)")
        ax.set_ylabel("frames")
        ax.legend()
        return _save(fig, path)


def plot_scale_histogram(rows, omegas, path):
    """Grouped bars: objects per scale bin, original and valid at each factor."""
    with plt.rc_context(_STYLE):
        fig, ax = _figure(7.0)
        bins = [r["bin"] for r in rows]
        x = np.arange(len(bins))
        width = 0.8 / (len(omegas) + 1)
        ax.bar(x - 0.4 + width / 2, [r["original"] for r in rows], width, label="original", color="#8c8c8c")
        for k, w in enumerate(omegas, start=1):
            ax.bar(x - 0.4 + width / 2 + k * width, [r[f"w{w:g}_valid"] for r in rows], width, label=f"valid at x{w:g}")
        ax.set_xticks(x)
        ax.set_xticklabels(bins, rotation=30, ha="right")
        ax.set_xlabel("object scale sqrt(wh), px")
        ax.set_ylabel("objects")
        ax.legend()
        return _save(fig, path)


def plot_joint_ap(per_joint_ap, path, names=None):
    ap = np.asarray(per_joint_ap)
    with plt.rc_context(_STYLE):
        fig, ax = _figure(7.0)
        labels = names or [str(i) for i in range(ap.size)]
        ax.bar(labels, ap, color="#55a868")
        ax.axhline(float(ap.mean()) if ap.size else 0.0, color="k", lw=1, ls="--", label="mean")
        ax.set_ylim(0, 1.05)
        ax.set_ylabel("AP")
        ax.set_xlabel("joint")
        ax.tick_params(axis="x", rotation=45)
        ax.legend()
        return _save(fig, path)
