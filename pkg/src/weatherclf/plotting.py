"""Report figures written next to the JSON/text outputs."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

FIGSIZE = (6.4, 4.8)
DPI = 120

plt.rcParams.update(
    {
        "font.size": 10,
        "axes.titlesize": 11,
        "axes.labelsize": 10,
        "xtick.labelsize": 9,
        "ytick.labelsize": 9,
        "savefig.bbox": "tight",
    }
)


def _save(fig, path):
    path = Path(path)
    # fixed metadata keeps PNG bytes reproducible
    fig.savefig(path, dpi=DPI, metadata={"Software": None})
    plt.close(fig)
    return path


def plot_confusion(counts, classes, path, title="Confusion matrix"):
    counts = np.asarray(counts)
    fig, ax = plt.subplots(figsize=FIGSIZE)
    ax.imshow(counts, cmap="Blues")
    ax.set_xticks(range(len(classes)), labels=classes)
    ax.set_yticks(range(len(classes)), labels=classes)
    ax.set_xlabel("predicted")
    ax.set_ylabel("true")
    ax.set_title(title)
    hi = counts.max() if counts.size else 0
    for i in range(counts.shape[0]):
        for j in range(counts.shape[1]):
            ax.text(j, i, str(counts[i, j]), ha="center", va="center",
                    color="white" if counts[i, j] > hi / 2 else "black")
    return _save(fig, path)


def plot_importance(ranking, path, top=20, title="Permutation importance"):
    """Horizontal bars of ``(name, mean, std)`` rows, largest on top."""
    rows = list(ranking)[:top][::-1]
    fig, ax = plt.subplots(figsize=(FIGSIZE[0], max(2.5, 0.28 * len(rows) + 1)))
    names = [r[0] for r in rows]
    ax.barh(names, [r[1] for r in rows], xerr=[r[2] for r in rows], color="#4c72b0", ecolor="0.3")
    ax.axvline(0.0, color="0.5", lw=0.8)
    ax.set_xlabel("mean accuracy drop")
    ax.set_title(title)
    return _save(fig, path)


def plot_cv_curve(cv_table, best_c, path, title="Grid search over C"):
    cs = [c for c, _ in cv_table]
    accs = [a for _, a in cv_table]
    fig, ax = plt.subplots(figsize=FIGSIZE)
    ax.semilogx(cs, accs, marker="o")
    ax.axvline(best_c, color="C3", ls="--", lw=1, label=f"best C = {best_c:g}")
    ax.set_xlabel("C")
    ax.set_ylabel("mean CV accuracy")
    ax.set_title(title)
    ax.legend()
    return _save(fig, path)
