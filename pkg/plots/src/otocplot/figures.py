"""Render kickedising aggregates into figures.

Input is the published CSV contract (aggregates.csv, schema 1) plus an
optional sibling summary.json for the crossover marker; nothing here imports
the simulation package. Rendering is read-only and deterministic: identical
input files and spec give byte-identical SVG output.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
matplotlib.rcParams["svg.hashsalt"] = "otocplot"
matplotlib.rcParams["svg.fonttype"] = "none"

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

AGGREGATES_SCHEMA = 1

OTOC_VS_N = "OTOC_VS_N"
OTOC_VS_X = "OTOC_VS_X"
OTOC_VS_W = "OTOC_VS_W"
VEFF_VS_N = "VEFF_VS_N"
VEFF_VS_W = "VEFF_VS_W"
ZNE_COMPARE = "ZNE_COMPARE"
FIGURE_KINDS = (OTOC_VS_N, OTOC_VS_X, OTOC_VS_W, VEFF_VS_N, VEFF_VS_W, ZNE_COMPARE)

# axis variable and base quantity per kind; ZNE_COMPARE overlays two quantities
_AXIS = {
    OTOC_VS_N: ("n", "normalized"),
    OTOC_VS_X: ("x", "normalized"),
    OTOC_VS_W: ("w", "normalized"),
    VEFF_VS_N: ("n", "veff"),
    VEFF_VS_W: ("w", "veff"),
    ZNE_COMPARE: ("n", "normalized"),
}

_AXIS_LABEL = {"n": "Floquet steps n", "x": "distance x", "w": "disorder strength w"}
_Y_LABEL = {"normalized": "normalized OTOC", "veff": "effective volume"}


class SelectionError(ValueError):
    """Filters selected no rows, or the input lacks the needed quantity."""


@dataclass(frozen=True)
class FigureSpec:
    """One figure request: kind, input CSV, output image, optional filters.

    Filter tuples keep only rows whose column equals one of the listed
    values; None leaves the column unconstrained. Output format follows the
    file suffix (.svg or .png).
    """

    figure_kind: str
    input: Path
    output: Path
    w: tuple[float, ...] | None = None
    n: tuple[int, ...] | None = None
    x: tuple[int, ...] | None = None
    f: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.figure_kind not in FIGURE_KINDS:
            raise ValueError(
                f"unknown figure kind {self.figure_kind!r}; pick one of {FIGURE_KINDS}"
            )
        suffix = Path(self.output).suffix.lower()
        if suffix not in (".svg", ".png"):
            raise ValueError(f"output must end in .svg or .png, got {suffix!r}")


def read_aggregates(path: str | Path) -> list[dict]:
    """Parse an aggregates.csv, refusing unknown schema versions."""
    with open(path, newline="") as fh:
        header = fh.readline().rstrip("\n")
        if not header.startswith("# kickedising aggregates schema="):
            raise ValueError(f"{path}: not a kickedising aggregates file")
        version = header.rsplit("=", 1)[-1]
        if version != str(AGGREGATES_SCHEMA):
            raise ValueError(f"{path}: aggregates schema {version} not supported")
        rows = []
        for row in csv.DictReader(fh):
            rows.append({
                "quantity": row["quantity"],
                "w": float(row["w"]),
                "n": int(row["n"]),
                "x": int(row["x"]),
                "f": float(row["f"]),
                "mean": float(row["mean"]) if row["mean"] else None,
                "stderr": float(row["stderr"]) if row["stderr"] else None,
            })
    return rows


def _matches(row: dict, spec: FigureSpec) -> bool:
    for col in ("w", "n", "x", "f"):
        allowed = getattr(spec, col)
        if allowed is not None and row[col] not in allowed:
            return False
    return True


def _select(rows: list[dict], quantity: str, spec: FigureSpec) -> list[dict]:
    out = [
        r for r in rows
        if r["quantity"] == quantity and r["mean"] is not None and _matches(r, spec)
    ]
    if not out:
        raise SelectionError(
            f"no {quantity} rows match the filters in {spec.input}"
        )
    return out


def _series(rows: list[dict], axis: str) -> list[tuple[tuple, list[dict]]]:
    """Group rows into plot series keyed by every non-axis coordinate."""
    keys = [c for c in ("w", "n", "x", "f") if c != axis]
    groups: dict[tuple, list[dict]] = {}
    for r in rows:
        groups.setdefault(tuple((k, r[k]) for k in keys), []).append(r)
    out = []
    for key in sorted(groups):
        out.append((key, sorted(groups[key], key=lambda r: r[axis])))
    return out


def _fmt(v) -> str:
    return f"{v:g}"


def _label(key: tuple, drop: tuple[str, ...] = ()) -> str:
    parts = [f"{k}={_fmt(v)}" for k, v in key if k not in drop]
    return ", ".join(parts)


def _crossover_marker(spec: FigureSpec):
    """w_c from a summary.json next to the input, if one is there."""
    path = Path(spec.input).parent / "summary.json"
    if not path.exists():
        return None
    try:
        entry = json.loads(path.read_text()).get("w_c")
    except (OSError, json.JSONDecodeError):
        return None
    if not entry or entry.get("w_c") is None:
        return None
    return float(entry["w_c"]), entry.get("uncertainty")


def _draw_errorbar(ax, series, axis: str, drop: tuple[str, ...] = ()) -> None:
    for key, rows in series:
        xs = [r[axis] for r in rows]
        ys = [r["mean"] for r in rows]
        es = [r["stderr"] or 0.0 for r in rows]
        ax.errorbar(xs, ys, yerr=es, marker="o", markersize=3.5,
                    linewidth=1.2, capsize=2, label=_label(key, drop))


def render(spec: FigureSpec) -> Path:
    """Draw the requested figure and write it to spec.output."""
    rows = read_aggregates(spec.input)
    axis, quantity = _AXIS[spec.figure_kind]

    fig, ax = plt.subplots(figsize=(6.0, 4.0), dpi=150)
    try:
        if spec.figure_kind == ZNE_COMPARE:
            # raw curves at each measured noise factor, overlaid with the
            # extrapolated f -> 0 curve from the zne rows
            raw = _select(rows, "normalized", spec)
            _draw_errorbar(ax, _series(raw, axis), axis)
            zne_spec = FigureSpec(
                figure_kind=spec.figure_kind, input=spec.input,
                output=spec.output, w=spec.w, n=spec.n, x=spec.x, f=None,
            )
            zne = _select(rows, "zne", zne_spec)
            for key, srows in _series(zne, axis):
                xs = [r[axis] for r in srows]
                ys = [r["mean"] for r in srows]
                es = [r["stderr"] or 0.0 for r in srows]
                ax.errorbar(xs, ys, yerr=es, marker="s", markersize=3.5,
                            linewidth=1.2, capsize=2, linestyle="--",
                            label=_label(key, drop=("f",)) + ", f->0")
            ax.set_ylabel("bare OTOC (raw and extrapolated)")
        else:
            sel = _select(rows, quantity, spec)
            _draw_errorbar(ax, _series(sel, axis), axis)
            ax.set_ylabel(_Y_LABEL[quantity])

        if spec.figure_kind == OTOC_VS_W:
            marker = _crossover_marker(spec)
            if marker is not None:
                w_c, unc = marker
                ax.axvline(w_c, color="0.3", linestyle=":", linewidth=1.4,
                           gid="w-c-marker", label=f"w_c = {w_c:g}")
                if unc:
                    ax.axvspan(w_c - unc, w_c + unc, color="0.85", zorder=0,
                               gid="w-c-band")

        ax.set_xlabel(_AXIS_LABEL[axis])
        ax.grid(alpha=0.3, linewidth=0.5)
        if len(ax.get_legend_handles_labels()[0]) <= 14:
            ax.legend(fontsize=7, ncols=2)
        fig.tight_layout()
        out = Path(spec.output)
        out.parent.mkdir(parents=True, exist_ok=True)
        # a fixed Date keeps SVG output byte-stable across runs
        fig.savefig(out, metadata={"Date": None})
    finally:
        plt.close(fig)
    return Path(spec.output)
