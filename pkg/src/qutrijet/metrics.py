"""Anomaly-detection metrics.

AUC is computed by the rank statistic (probability that a random
signal event scores above a random background event, ties at half
credit), which equals the trapezoid area under the full ROC curve.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .jets import atomic_write


def _score_arrays(background, signal) -> tuple[np.ndarray, np.ndarray]:
    b = np.asarray(background, dtype=float).reshape(-1)
    s = np.asarray(signal, dtype=float).reshape(-1)
    if b.size == 0 or s.size == 0:
        raise ValueError("need at least one background and one signal score")
    if not (np.all(np.isfinite(b)) and np.all(np.isfinite(s))):
        raise ValueError("scores must be finite")
    return b, s


def auc(background_scores, signal_scores) -> float:
    """Rank-based area under the ROC curve, higher scores flagged as
    more anomalous. Exactly 0.5 when the distributions coincide."""
    b, s = _score_arrays(background_scores, signal_scores)
    b_sorted = np.sort(b)
    wins = np.searchsorted(b_sorted, s, side="left")
    wins_or_ties = np.searchsorted(b_sorted, s, side="right")
    return float((wins.sum() + 0.5 * (wins_or_ties - wins).sum()) / (b.size * s.size))


@dataclass(frozen=True)
class RocCurve:
    thresholds: np.ndarray  # descending, leading +inf
    fpr: np.ndarray
    tpr: np.ndarray

    @property
    def auc(self) -> float:
        # np.trapz was renamed in numpy 2.0
        trapezoid = getattr(np, "trapezoid", None) or np.trapz
        return float(trapezoid(self.tpr, self.fpr))


def roc(background_scores, signal_scores, points: int | None = None) -> RocCurve:
    """ROC curve over every distinct score threshold (an event is
    flagged when score >= threshold). `points` caps the curve length by
    even subsampling; the (0,0) and (1,1) endpoints always survive."""
    b, s = _score_arrays(background_scores, signal_scores)
    thr = np.unique(np.concatenate([b, s]))[::-1]
    thresholds = np.concatenate([[np.inf], thr])
    fpr = np.empty(thresholds.size)
    tpr = np.empty(thresholds.size)
    b_sorted = np.sort(b)
    s_sorted = np.sort(s)
    for i, t in enumerate(thresholds):
        fpr[i] = (b.size - np.searchsorted(b_sorted, t, side="left")) / b.size
        tpr[i] = (s.size - np.searchsorted(s_sorted, t, side="left")) / s.size
    if points is not None and points >= 2 and thresholds.size > points:
        keep = np.unique(np.linspace(0, thresholds.size - 1, points).round().astype(int))
        thresholds, fpr, tpr = thresholds[keep], fpr[keep], tpr[keep]
    return RocCurve(thresholds=thresholds, fpr=fpr, tpr=tpr)


@dataclass(frozen=True)
class Histogram:
    class_label: str
    bin_edges: np.ndarray
    counts: np.ndarray


def fidelity_histogram(records, bins: int = 40) -> dict[str, Histogram]:
    """Per-label fidelity histograms on a fixed [0, 1] range so that
    different classes and different runs share binning."""
    if bins < 1:
        raise ValueError("bins must be positive")
    by_label: dict[str, list[float]] = {}
    for r in records:
        by_label.setdefault(r.label, []).append(r.fidelity)
    edges = np.linspace(0.0, 1.0, bins + 1)
    out = {}
    for label, vals in by_label.items():
        counts, _ = np.histogram(np.asarray(vals, dtype=float), bins=edges)
        out[label] = Histogram(class_label=label, bin_edges=edges, counts=counts)
    return out


def roc_to_csv(curve: RocCurve, path) -> None:
    with atomic_write(path) as handle:
        handle.write("threshold,fpr,tpr\n")
        for t, f, r in zip(curve.thresholds, curve.fpr, curve.tpr):
            handle.write(f"{'inf' if np.isinf(t) else repr(float(t))},{repr(float(f))},{repr(float(r))}\n")


def histogram_to_csv(hist: Histogram, path) -> None:
    with atomic_write(path) as handle:
        handle.write("bin_low,bin_high,count\n")
        for lo, hi, c in zip(hist.bin_edges[:-1], hist.bin_edges[1:], hist.counts):
            handle.write(f"{repr(float(lo))},{repr(float(hi))},{int(c)}\n")
