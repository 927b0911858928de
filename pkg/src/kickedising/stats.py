"""Disorder-ensemble statistics: weighted aggregation, ZNE, crossover locator.

Aggregation pools all records sharing (w, n, x, f) — every site at the same
butterfly distance across every disorder realization — in a single
inverse-variance weighted pass, using each record's own measurement error.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .otoc import OtocRecord

AGGREGATES_SCHEMA = 1
_AGG_HEADER = f"# kickedising aggregates schema={AGGREGATES_SCHEMA}"
AGG_COLUMNS = ["quantity", "w", "n", "x", "f", "mean", "stderr", "n_used", "n_discarded"]

NORMALIZED = "normalized"
NUMERATOR = "numerator"
DENOMINATOR = "denominator"
VEFF = "veff"
ZNE = "zne"
_QUANTITIES = (NORMALIZED, NUMERATOR, DENOMINATOR, VEFF)


@dataclass(frozen=True)
class EnsembleStats:
    """Weighted mean over (realization, site) for one (w, n, x, f) cell."""

    w: float
    n: int
    x: int
    noise_factor: float
    mean: float | None
    stderr: float | None
    n_used: int
    n_discarded: int


def _weighted_mean(values: list[float], sigmas: list[float]) -> tuple[float, float]:
    """Inverse-variance mean; zero sigmas fall back to the unweighted mean.

    With equal sigmas both branches agree (mean, sigma/sqrt(k)); the fallback
    reports the sample scatter of exact (sigma = 0) inputs instead of a
    meaningless zero-variance weight.
    """
    y = np.asarray(values, dtype=float)
    s = np.asarray(sigmas, dtype=float)
    if np.all(s > 0):
        w = 1.0 / s**2
        total = float(w.sum())
        return float((w * y).sum() / total), float(total**-0.5)
    mean = float(y.mean())
    if len(y) > 1:
        stderr = float(y.std(ddof=1) / math.sqrt(len(y)))
    else:
        stderr = 0.0
    return mean, stderr


def _veff_sigma(record: OtocRecord, p2: float | None) -> float:
    """Propagated stderr of veff = ln(F)/ln(1-p) from the denominator error.

    Records do not carry p2, so without an explicit value |ln(1-p)| is
    recovered from the record itself as |ln(F)/veff|.
    """
    F = record.denominator
    if record.err_den == 0.0:
        return 0.0
    if p2 is not None:
        scale = abs(math.log(1.0 - p2))
    elif record.veff not in (None, 0.0) and F != 1.0:
        scale = abs(math.log(F) / record.veff)
    else:
        return 0.0
    return record.err_den / (F * scale)


def aggregate(
    records: list[OtocRecord], quantity: str, p2: float | None = None
) -> list[EnsembleStats]:
    """Pool records by (w, n, x, f) with inverse-variance weights.

    DISCARDED records are excluded from NORMALIZED and VEFF means but still
    counted per cell; bare NUMERATOR/DENOMINATOR aggregation uses everything.
    Cells whose every record is discarded come back with mean/stderr None.
    The result is sorted by key and independent of input order.
    """
    if quantity not in _QUANTITIES:
        raise ValueError(f"unknown quantity {quantity!r}")
    groups: dict[tuple, list[OtocRecord]] = {}
    for r in records:
        groups.setdefault((r.w, r.n, r.x, r.noise_factor), []).append(r)

    out = []
    for key in sorted(groups):
        cell = groups[key]
        n_disc = sum(1 for r in cell if r.discarded)
        values: list[float] = []
        sigmas: list[float] = []
        for r in sorted(cell, key=lambda r: (r.realization_index, r.m)):
            if quantity == NUMERATOR:
                values.append(r.numerator)
                sigmas.append(r.err_num)
            elif quantity == DENOMINATOR:
                values.append(r.denominator)
                sigmas.append(r.err_den)
            elif quantity == NORMALIZED:
                if r.discarded or r.normalized is None:
                    continue
                values.append(r.normalized)
                den = r.denominator
                sigmas.append(
                    math.hypot(r.err_num / den, r.numerator * r.err_den / den**2)
                )
            else:  # VEFF
                if r.discarded or r.veff is None:
                    continue
                values.append(r.veff)
                sigmas.append(_veff_sigma(r, p2))
        if values:
            mean, stderr = _weighted_mean(values, sigmas)
        else:
            mean = stderr = None
        out.append(
            EnsembleStats(
                w=key[0], n=key[1], x=key[2], noise_factor=key[3],
                mean=mean, stderr=stderr,
                n_used=len(values), n_discarded=n_disc,
            )
        )
    return out


@dataclass(frozen=True)
class ZneResult:
    value: float | None
    stderr: float | None
    extrapolable: bool
    reason: str | None = None


NOT_EXTRAPOLABLE = "NOT_EXTRAPOLABLE"


def zne_extrapolate(points: list[tuple[float, float, float]]) -> ZneResult:
    """Extrapolate a * exp(-b f) to f = 0 from (f, y, sigma) samples.

    Two points give the closed form; more give a least-squares fit of ln|y|.
    Mixed signs or a zero value cannot feed the log model and come back
    flagged NOT_EXTRAPOLABLE rather than raising: the caller is expected to
    exclude such records from downstream averages.
    """
    if len(points) < 2:
        raise ValueError("need at least two noise factors")
    fs = [p[0] for p in points]
    if len(set(fs)) != len(fs):
        raise ValueError("noise factors must be distinct")
    ys = [p[1] for p in points]
    sigmas = [p[2] for p in points]
    if any(y == 0.0 for y in ys):
        return ZneResult(None, None, False, NOT_EXTRAPOLABLE)
    sign = math.copysign(1.0, ys[0])
    if any(math.copysign(1.0, y) != sign for y in ys):
        return ZneResult(None, None, False, NOT_EXTRAPOLABLE)

    if len(points) == 2:
        (f1, y1, s1), (f2, y2, s2) = sorted(points)
        b = math.log(y1 / y2) / (f2 - f1)
        a = y1 * math.exp(b * f1)
        # first-order propagation of the two closed-form partials
        da_dy1 = a / y1 * f2 / (f2 - f1)
        da_dy2 = -a / y2 * f1 / (f2 - f1)
        stderr = math.hypot(da_dy1 * s1, da_dy2 * s2)
        return ZneResult(a, stderr, True)

    f_arr = np.array(fs)
    logy = np.log(np.abs(np.array(ys)))
    sig_log = np.array([s / abs(y) for y, s in zip(ys, sigmas)])
    weights = 1.0 / sig_log**2 if np.all(sig_log > 0) else np.ones_like(sig_log)
    # weighted straight line ln|y| = c - b f
    A = np.vstack([np.ones_like(f_arr), -f_arr]).T
    Aw = A * weights[:, None]
    cov = np.linalg.inv(A.T @ Aw)
    coef = cov @ (Aw.T @ logy)
    c = float(coef[0])
    value = sign * math.exp(c)
    stderr = abs(value) * float(np.sqrt(cov[0, 0]))
    return ZneResult(value, stderr, True)


@dataclass(frozen=True)
class CrossoverResult:
    w_c: float
    uncertainty: float
    low_confidence: bool
    slopes: tuple[float, ...]


def estimate_crossover(
    curve: list[tuple[float, float, float]],
    n_bootstrap: int = 1000,
    seed: int = 0,
) -> CrossoverResult:
    """Locate the disorder strength of steepest rise of the averaged OTOC.

    curve is [(w, mean, stderr), ...]; central finite differences give the
    slope at each interior grid point and w_c is the interior point of maximal
    slope (ties broken to the smallest w and flagged low-confidence, as on a
    perfectly linear curve). The uncertainty combines half the local grid
    spacing with a seeded parametric bootstrap over the point errors.
    Invariant under adding a constant to the curve and equivariant under
    translating the w grid.
    """
    if len(curve) < 3:
        raise ValueError("need at least three w points")
    pts = sorted(curve)
    w = np.array([p[0] for p in pts])
    y = np.array([p[1] for p in pts])
    s = np.array([p[2] for p in pts])
    if np.any(np.diff(w) <= 0):
        raise ValueError("w values must be distinct")

    def argmax_slope(values: np.ndarray) -> tuple[int, np.ndarray]:
        slopes = (values[2:] - values[:-2]) / (w[2:] - w[:-2])
        return int(np.argmax(slopes)), slopes

    best, slopes = argmax_slope(y)
    scale = max(np.max(np.abs(slopes)), 1e-300)
    ties = np.flatnonzero(slopes >= slopes[best] - 1e-9 * scale)
    low_confidence = len(ties) > 1
    i = best + 1  # interior index into the grid
    w_c = float(w[i])
    grid_unc = 0.5 * float(w[i + 1] - w[i - 1]) / 2.0

    rng = np.random.default_rng(seed)
    picks = np.empty(n_bootstrap)
    for b in range(n_bootstrap):
        resampled = y + s * rng.standard_normal(len(y))
        j, _ = argmax_slope(resampled)
        picks[b] = w[j + 1]
    boot_unc = float(picks.std(ddof=1)) if n_bootstrap > 1 else 0.0

    return CrossoverResult(
        w_c=w_c,
        uncertainty=math.hypot(grid_unc, boot_unc),
        low_confidence=low_confidence,
        slopes=tuple(float(v) for v in slopes),
    )


def zne_over_records(records: list[OtocRecord]) -> list[tuple]:
    """Per-(w, realization, n, m) ZNE of the bare OTOC across noise factors.

    Returns (w, realization, n, m, x, ZneResult) tuples for every record
    group holding at least two noise factors; ZNE deliberately fits the bare
    numerator, never the normalized ratio.
    """
    groups: dict[tuple, list[OtocRecord]] = {}
    for r in records:
        groups.setdefault((r.w, r.realization_index, r.n, r.m), []).append(r)
    out = []
    for key in sorted(groups):
        cell = sorted(groups[key], key=lambda r: r.noise_factor)
        fs = [r.noise_factor for r in cell]
        if len(set(fs)) < 2:
            continue
        points = [(r.noise_factor, r.numerator, r.err_num) for r in cell]
        out.append((*key, cell[0].x, zne_extrapolate(points)))
    return out


def aggregate_zne(records: list[OtocRecord]) -> list[EnsembleStats]:
    """Pool per-record ZNE estimates by (w, n, x); f is reported as 0."""
    groups: dict[tuple, list[ZneResult]] = {}
    skipped: dict[tuple, int] = {}
    for w_, _r, n_, _m, x_, res in zne_over_records(records):
        key = (w_, n_, x_)
        if res.extrapolable:
            groups.setdefault(key, []).append(res)
            skipped.setdefault(key, 0)
        else:
            skipped[key] = skipped.get(key, 0) + 1
            groups.setdefault(key, [])
    out = []
    for key in sorted(groups):
        cell = groups[key]
        if cell:
            mean, stderr = _weighted_mean(
                [r.value for r in cell], [r.stderr for r in cell]
            )
        else:
            mean = stderr = None
        out.append(
            EnsembleStats(
                w=key[0], n=key[1], x=key[2], noise_factor=0.0,
                mean=mean, stderr=stderr,
                n_used=len(cell), n_discarded=skipped.get(key, 0),
            )
        )
    return out


def _fmt(value) -> str:
    return "" if value is None else repr(float(value))


def write_aggregates_csv(
    path: str | Path, stats_by_quantity: dict[str, list[EnsembleStats]]
) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(_AGG_HEADER + "\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(AGG_COLUMNS)
        for quantity in sorted(stats_by_quantity):
            for s in stats_by_quantity[quantity]:
                writer.writerow([
                    quantity, _fmt(s.w), s.n, s.x, _fmt(s.noise_factor),
                    _fmt(s.mean), _fmt(s.stderr), s.n_used, s.n_discarded,
                ])


def read_aggregates_csv(path: str | Path) -> list[dict]:
    """Rows as dicts with typed fields; refuses unknown schema versions."""
    with open(path, newline="") as fh:
        header = fh.readline().rstrip("\n")
        if not header.startswith("# kickedising aggregates schema="):
            raise ValueError(f"{path}: not an aggregates file")
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
                "n_used": int(row["n_used"]),
                "n_discarded": int(row["n_discarded"]),
            })
    return rows
