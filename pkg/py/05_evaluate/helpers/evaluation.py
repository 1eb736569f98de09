"""
Threshold-sweep scoring of index maps against building footprint masks.

A pixel is predicted positive when its index value is >= the threshold.
Precision, recall and F are reported at every threshold of the fixed sweep,
and the image's F-score is the best F over it. AP is integrated over the
exact sweep instead: one PR point per distinct prediction value, so it does
not depend on the sweep step.
"""

import math
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import pandas as pd

sys.path.append(str(Path(__file__).resolve().parents[2] / "common"))
from errors import ParameterError


def sweep_thresholds(step=0.01):
    """0, step, ..., 1 with every entry correctly rounded (i / n)."""
    n = int(round(1.0 / step))
    return np.arange(n + 1) / n


def exact_thresholds(pred):
    """Distinct prediction values in [0, 1] plus the sweep ends 0 and 1."""
    pred = np.asarray(pred, dtype=np.float64).ravel()
    return np.union1d(pred[(pred >= 0.0) & (pred <= 1.0)], [0.0, 1.0])


@dataclass(frozen=True)
class Confusion:
    tp: int
    fp: int
    fn: int
    tn: int

    @property
    def total(self):
        return self.tp + self.fp + self.fn + self.tn


def _check_pair(pred, gt):
    pred = np.asarray(pred, dtype=np.float64)
    gt = np.asarray(gt)
    if pred.shape != gt.shape:
        raise ParameterError(f"prediction {pred.shape} and ground truth {gt.shape} differ in shape")
    if not np.all((gt == 0) | (gt == 1)):
        raise ParameterError("ground truth must be binary (0/1)")
    return pred, gt.astype(bool)


def confusion(pred, gt, t):
    """Pixel counts at one threshold; positive iff pred >= t."""
    pred, gt = _check_pair(pred, gt)
    positive = pred >= t
    return Confusion(
        tp=int(np.sum(positive & gt)),
        fp=int(np.sum(positive & ~gt)),
        fn=int(np.sum(~positive & gt)),
        tn=int(np.sum(~positive & ~gt)),
    )


def sweep_confusion(pred, gt, thresholds):
    """tp, fp, fn, tn arrays over a threshold sweep via sorted counts."""
    pred, gt = _check_pair(pred, gt)
    thresholds = np.asarray(thresholds, dtype=np.float64)
    on = np.sort(pred[gt])
    off = np.sort(pred[~gt])
    tp = on.size - np.searchsorted(on, thresholds, side="left")
    fp = off.size - np.searchsorted(off, thresholds, side="left")
    return tp, fp, on.size - tp, off.size - fp


def precision_recall(c):
    """(precision, recall); 1 by convention when the denominator is 0."""
    precision = c.tp / (c.tp + c.fp) if c.tp + c.fp > 0 else 1.0
    recall = c.tp / (c.tp + c.fn) if c.tp + c.fn > 0 else 1.0
    return precision, recall


def _rates(tp, fp, fn):
    predicted = tp + fp
    actual = tp + fn
    precision = np.where(predicted > 0, tp / np.maximum(predicted, 1), 1.0)
    recall = np.where(actual > 0, tp / np.maximum(actual, 1), 1.0)
    return precision, recall


def f_score(precision, recall):
    if precision + recall == 0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


def average_precision(recall, precision):
    """Trapezoidal area under the PR points.

    Points are sorted by recall ascending (precision descending among equal
    recalls) and the curve is extended to recall 0 at the maximal precision.
    """
    recall = np.asarray(recall, dtype=np.float64)
    precision = np.asarray(precision, dtype=np.float64)
    if recall.size < 2:
        raise ParameterError("average precision needs at least 2 PR points")
    order = np.lexsort((-precision, recall))
    r = np.concatenate(([0.0], recall[order]))
    p = np.concatenate(([precision.max()], precision[order]))
    return float(np.sum((r[1:] - r[:-1]) * (p[1:] + p[:-1]) / 2.0))


@dataclass(frozen=True)
class EvalReport:
    thresholds: np.ndarray
    tp: np.ndarray
    fp: np.ndarray
    fn: np.ndarray
    tn: np.ndarray
    precision: np.ndarray
    recall: np.ndarray
    f: np.ndarray
    ap: float
    best_f: float
    best_threshold: float

    def to_frame(self):
        return pd.DataFrame({
            "threshold": self.thresholds,
            "precision": self.precision,
            "recall": self.recall,
            "f": self.f,
            "tp": self.tp,
            "fp": self.fp,
            "fn": self.fn,
            "tn": self.tn,
        })

    def to_dict(self):
        return {
            "ap": self.ap,
            "best_f": self.best_f,
            "best_threshold": self.best_threshold,
            "curve": self.to_frame().to_dict(orient="list"),
        }


def evaluate_image(pred, gt, thresholds=None):
    """Score one index map against its mask.

    The curve, the F values and best_f follow `thresholds` (default: the
    0.01 sweep). AP comes from the exact sweep over the distinct prediction
    values, the limit of an ever finer threshold grid.
    """
    if thresholds is None:
        thresholds = sweep_thresholds()
    thresholds = np.asarray(thresholds, dtype=np.float64)
    tp, fp, fn, tn = sweep_confusion(pred, gt, thresholds)
    precision, recall = _rates(tp, fp, fn)
    denom = precision + recall
    f = np.where(denom > 0, 2.0 * precision * recall / np.where(denom > 0, denom, 1.0), 0.0)

    exact_tp, exact_fp, exact_fn, _ = sweep_confusion(pred, gt, exact_thresholds(pred))
    exact_precision, exact_recall = _rates(exact_tp, exact_fp, exact_fn)

    best = int(np.argmax(f))
    return EvalReport(
        thresholds=thresholds, tp=tp, fp=fp, fn=fn, tn=tn,
        precision=precision, recall=recall, f=f,
        ap=average_precision(exact_recall, exact_precision),
        best_f=float(f[best]),
        best_threshold=float(thresholds[best]),
    )


@dataclass(frozen=True)
class DatasetSummary:
    mean_ap: float
    mean_f: float
    images: int


def evaluate_dataset(reports):
    """mAP and mean best-F over images (exactly rounded means)."""
    reports = list(reports)
    if not reports:
        raise ParameterError("cannot evaluate an empty dataset")
    n = len(reports)
    return DatasetSummary(
        mean_ap=math.fsum(r.ap for r in reports) / n,
        mean_f=math.fsum(r.best_f for r in reports) / n,
        images=n,
    )


def mean_curve(reports):
    """Threshold-wise mean precision and recall over images."""
    reports = list(reports)
    return pd.DataFrame({
        "threshold": reports[0].thresholds,
        "precision": np.mean([r.precision for r in reports], axis=0),
        "recall": np.mean([r.recall for r in reports], axis=0),
    })
