"""Figures for suite reports, written next to the JSON/CSV output."""
from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

STYLE = {
    "figure.figsize": (5.0, 3.6),
    "figure.dpi": 120,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "font.size": 9,
    "legend.fontsize": 8,
    "legend.frameon": False,
}


def _save(fig, path: Path) -> Path:
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return path


def _sandwich(res, out):
    rows = res.series["sandwich"]
    cut = np.array([x["cut"] for x in rows])
    lo = np.array([x["lower"] for x in rows])
    up = np.array([x["upper"] for x in rows])
    r = np.array([x["r"] for x in rows])
    fig, ax = plt.subplots()
    for rr, mk in ((2, "o"), (3, "s")):
        m = r == rr
        ax.scatter(cut[m], up[m], s=10, marker=mk, label=f"upper, r={rr}")
        ax.scatter(cut[m], lo[m], s=10, marker=mk, facecolors="none", edgecolors="k", linewidths=0.5,
                   label=f"lower, r={rr}")
    top = max(cut.max(initial=0), up.max(initial=0), 1e-3)
    ax.plot([0, top], [0, top], "k--", lw=0.8)
    ax.set_xlabel("cut-* norm")
    ax.set_ylabel("bound from t*(K_r^2)")
    ax.legend()
    return [_save(fig, out / "sandwich.png")]


def _wreg(res, out):
    fig, ax = plt.subplots()
    for h in res.series.get("histories", []):
        ax.plot(range(len(h)), h, lw=0.7, alpha=0.6)
    eps = res.checks[0].detail.get("eps") if res.checks else None
    if eps is not None:
        ax.axhline(eps, color="k", ls="--", lw=0.8, label="eps")
        ax.legend()
    ax.set_xlabel("refinement step")
    ax.set_ylabel("probe deviation")
    return [_save(fig, out / "wreg.png")]


def _countlemma(res, out):
    rows = res.series["pairs"]
    d = np.array([x["cut_distance"] for x in rows])
    tv = np.array([x["tv"] for x in rows])
    rhs = np.array([x["rhs"] for x in rows])
    near = np.array([x["pair"] == "near" for x in rows])
    fig, ax = plt.subplots()
    ax.scatter(d[near], tv[near], s=12, label="near pairs")
    ax.scatter(d[~near], tv[~near], s=12, marker="s", label="random pairs")
    order = np.argsort(d)
    ax.plot(d[order], np.minimum(rhs[order], 1), "k--", lw=0.8, label="bound (capped at 1)")
    ax.set_xscale("symlog", linthresh=1e-5)
    ax.set_xlabel("cut distance")
    ax.set_ylabel("total variation")
    ax.legend()
    return [_save(fig, out / "countlemma.png")]


def _deviations(res, out):
    dev = np.asarray(res.series["deviations"])
    fig, ax = plt.subplots()
    ax.hist(dev, bins=40, color="0.6", edgecolor="k", lw=0.3)
    ax.axvline(res.series["delta"], color="k", ls="--", lw=0.8, label="threshold")
    ax.set_xlabel("|sampled - exact|")
    ax.set_ylabel("trials")
    ax.legend()
    return [_save(fig, out / f"{res.name}.png")]


def _transfer(res, out):
    st = res.series["stages"]
    names = [s[0].split(":")[0] for s in st]
    meas = [s[1] for s in st]
    allowed = [s[2] for s in st]
    x = np.arange(len(st))
    fig, ax = plt.subplots()
    ax.bar(x - 0.2, meas, 0.4, label="measured")
    ax.bar(x + 0.2, allowed, 0.4, label="allowed", color="0.75")
    ax.set_xticks(x, names)
    ax.set_yscale("symlog", linthresh=1e-3)
    ax.set_ylabel("distance bound")
    ax.legend()
    return [_save(fig, out / "transfer.png")]


def _bounds(res, out):
    rows = res.tables["bounds"]
    r = [x["r"] for x in rows]
    fig, ax = plt.subplots()
    for key, mk in (("q_f_height", "o"), ("q_tv_height", "s"), ("q_linear_height", "^")):
        ax.plot(r, [x[key] for x in rows], marker=mk, label=key.replace("_height", ""))
    ax.set_xlabel("r")
    ax.set_ylabel("number of exponentials")
    ax.set_xticks(r)
    ax.legend()
    return [_save(fig, out / "bounds.png")]


_PLOTS = {"sandwich": _sandwich, "wreg": _wreg, "countlemma": _countlemma, "concentrate": _deviations,
          "sample-gse": _deviations, "transfer": _transfer, "bounds": _bounds}


def plot_suite(res, out_dir) -> list:
    """Write the figures for one suite result; returns the paths (possibly none)."""
    fn = _PLOTS.get(res.name)
    if fn is None:
        return []
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with plt.rc_context(STYLE):
        return fn(res, out)
