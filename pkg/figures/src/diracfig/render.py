"""Batch rendering of lab CSV/JSON outputs into vector figures.

Never recomputes physics: every number drawn comes verbatim from the input
files (fitted slopes included, via the CSV header metadata). One figure per
invocation; rendering the same inputs twice produces identical bytes.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
# fixed salt keeps SVG element ids (and therefore output bytes) reproducible
matplotlib.rcParams["svg.hashsalt"] = "diracfig"

import matplotlib.pyplot as plt
import numpy as np

KINDS = ("series", "spectrum", "bars", "trajectory")

UNCERTAINTY_KEYS = ("dT", "dH", "dr", "dp", "bound_eq28", "bound_eq31",
                    "mt_time", "dTdt", "pass_eq29", "pass_eq30", "pass_eq31",
                    "pass_eq36")
TRAJECTORY_COLUMNS = ("step", "eps_accum", "p_mean", "H_mean", "beta_mean",
                      "pop_plus", "pop_minus", "phase_step")


class SchemaError(ValueError):
    """Input file does not match the producing module's schema."""


@dataclass(frozen=True)
class RenderResult:
    out_path: Path
    kind: str
    n_points: int
    y_ranges: dict
    branch_gap: float | None = None


def _read_series_csv(path):
    meta = {}
    rows = []
    header = None
    with open(path, newline="") as fh:
        for raw in fh:
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                if "=" in line:
                    key, value = line.lstrip("# ").split("=", 1)
                    meta[key.strip()] = value.strip()
                continue
            if header is None:
                header = [c.strip() for c in line.split(",")]
                continue
            rows.append(line.split(","))
    if header is None:
        raise SchemaError(f"{path}: empty file, expected a 't,re,im' table")
    for col in ("t", "re", "im"):
        if col not in header:
            raise SchemaError(f"{path}: missing column {col!r}")
    if not rows:
        raise SchemaError(f"{path}: no data rows")
    idx = {c: header.index(c) for c in ("t", "re", "im")}
    data = np.array([[float(r[idx["t"]]), float(r[idx["re"]]),
                      float(r[idx["im"]])] for r in rows])
    return meta, data


def _read_table_csv(path, required):
    with open(path, newline="") as fh:
        lines = [l for l in fh if l.strip() and not l.startswith("#")]
    if not lines:
        raise SchemaError(f"{path}: empty file")
    reader = csv.DictReader(lines)
    rows = list(reader)
    if not rows:
        raise SchemaError(f"{path}: no data rows")
    for col in required:
        if col not in reader.fieldnames:
            raise SchemaError(f"{path}: missing column {col!r}")
    return {col: np.array([float(r[col]) for r in rows]) for col in reader.fieldnames}


def _save(fig, out_path: Path) -> None:
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    # a fixed empty date keeps repeated renders byte-identical
    fig.savefig(out_path, metadata={"Date": None})
    plt.close(fig)


def _render_series(paths, out_path):
    # several input series overlay on shared axes
    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    n_total = 0
    lo, hi = np.inf, -np.inf
    ylabel = "value"
    for path in paths:
        meta, data = _read_series_csv(path)
        t, re_v, im_v = data[:, 0], data[:, 1], data[:, 2]
        label = meta.get("observable", "value")
        ylabel = label
        suffix = f" ({Path(path).stem})" if len(paths) > 1 else ""
        ax.plot(t, re_v, lw=1.2, label=label + suffix)
        if np.abs(im_v).max() > 0:
            ax.plot(t, im_v, lw=1.0, alpha=0.7, label=f"Im {label}{suffix}")
        if "slope" in meta:
            slope = float(meta["slope"])
            intercept = float(meta.get("intercept", re_v[0] - slope * t[0]))
            ax.plot(t, intercept + slope * t, "--", lw=1.0, color="k",
                    label=f"fit: slope {slope:.6g}")
        n_total += len(t)
        lo, hi = min(lo, float(re_v.min())), max(hi, float(re_v.max()))
    ax.set_xlabel("t")
    ax.set_ylabel(ylabel)
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    _save(fig, out_path)
    return RenderResult(Path(out_path), "series", n_total, {"re": (lo, hi)})


def _render_spectrum(paths, out_path):
    with open(paths[0]) as fh:
        payload = json.load(fh)
    for key in ("r", "tau_plus", "tau_minus", "tau0"):
        if key not in payload:
            raise SchemaError(f"{paths[0]}: missing key {key!r}")
    r = np.asarray(payload["r"], dtype=float)
    tau_p = np.asarray(payload["tau_plus"], dtype=float)
    tau_m = np.asarray(payload["tau_minus"], dtype=float)
    if not (len(r) == len(tau_p) == len(tau_m)) or len(r) == 0:
        raise SchemaError(f"{paths[0]}: branch arrays empty or mismatched")
    tau0 = float(payload["tau0"])
    # mirror to a symmetric section through the origin
    x = np.concatenate([-r[::-1], r])
    up = np.concatenate([tau_p[::-1], tau_p])
    dn = np.concatenate([tau_m[::-1], tau_m])
    fig, ax = plt.subplots(figsize=(5.6, 4.2))
    ax.plot(x, up, lw=1.4, label="positive branch")
    ax.plot(x, dn, lw=1.4, label="negative branch")
    for y in (tau0, -tau0):
        ax.axhline(y, color="k", lw=0.6, ls=":")
    ax.annotate("", xy=(0, tau0), xytext=(0, -tau0),
                arrowprops={"arrowstyle": "<->", "lw": 0.8})
    ax.text(0.03 * x.max(), 0.0, "gap", fontsize=8, va="center")
    ax.set_xlabel("distance from origin")
    ax.set_ylabel("time eigenvalue")
    ax.legend(loc="upper center", fontsize=8)
    fig.tight_layout()
    # the rendered gap comes from the drawn line data, not the inputs
    lines = ax.get_lines()
    gap = float(np.min(lines[0].get_ydata()) - np.max(lines[1].get_ydata()))
    _save(fig, out_path)
    return RenderResult(Path(out_path), "spectrum", len(x),
                        {"tau_plus": (float(up.min()), float(up.max())),
                         "tau_minus": (float(dn.min()), float(dn.max()))},
                        branch_gap=gap)


def _render_bars(paths, out_path):
    with open(paths[0]) as fh:
        payload = json.load(fh)
    missing = [k for k in UNCERTAINTY_KEYS if k not in payload]
    if missing:
        raise SchemaError(f"{paths[0]}: missing key {missing[0]!r}")
    product = payload["dT"] * payload["dH"]
    chain = payload["dr"] * payload["dp"]
    names = ["dT*dH", "dr*dp", "bound_eq28", "bound_eq31"]
    vals = [product, chain, payload["bound_eq28"], payload["bound_eq31"]]
    fig, ax = plt.subplots(figsize=(5.2, 4.0))
    colors = ["C0", "C0", "C3", "C3"]
    ax.bar(names, vals, color=colors, width=0.6)
    ax.set_ylabel("uncertainty product")
    for i, v in enumerate(vals):
        ax.text(i, v, f"{v:.3g}", ha="center", va="bottom", fontsize=8)
    fig.tight_layout()
    _save(fig, out_path)
    return RenderResult(Path(out_path), "bars", len(vals),
                        {"values": (float(min(vals)), float(max(vals)))})


def _render_trajectory(paths, out_path):
    table = _read_table_csv(paths[0], TRAJECTORY_COLUMNS)
    eps = table["eps_accum"]
    fig, axes = plt.subplots(2, 1, figsize=(6.0, 5.6), sharex=True)
    axes[0].plot(eps, table["p_mean"], lw=1.2, label="mean momentum")
    axes[0].set_ylabel("mean momentum")
    axes[0].legend(fontsize=8)
    axes[1].plot(eps, np.cumsum(table["phase_step"]), lw=1.2,
                 label="accumulated phase")
    axes[1].plot(eps, table["pop_minus"], lw=1.0, alpha=0.8,
                 label="lower-branch weight")
    axes[1].set_xlabel("accumulated boost parameter")
    axes[1].legend(fontsize=8)
    fig.tight_layout()
    _save(fig, out_path)
    return RenderResult(Path(out_path), "trajectory", len(eps),
                        {"p_mean": (float(table["p_mean"].min()),
                                    float(table["p_mean"].max()))})


_RENDERERS = {
    "series": _render_series,
    "spectrum": _render_spectrum,
    "bars": _render_bars,
    "trajectory": _render_trajectory,
}


def render(kind: str, in_paths, out_path) -> RenderResult:
    """Render one figure of the given kind from the given inputs.

    Raises SchemaError (naming the offending column/key) before anything is
    written, so a failed render leaves no output file behind.
    """
    if kind not in _RENDERERS:
        raise ValueError(f"unknown figure kind {kind!r}; expected one of {KINDS}")
    in_paths = [Path(p) for p in (in_paths if isinstance(in_paths, (list, tuple))
                                  else [in_paths])]
    if not in_paths:
        raise ValueError("at least one input path is required")
    for p in in_paths:
        if not p.exists():
            raise SchemaError(f"input not found: {p}")
    return _RENDERERS[kind](in_paths, Path(out_path))
