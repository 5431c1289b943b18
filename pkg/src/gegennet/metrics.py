"""Link sign prediction metrics: rank-based AUC and macro-averaged F1."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import rankdata


@dataclass(frozen=True)
class Metrics:
    auc: float
    macro_f1: float
    f1_positive: float
    f1_negative: float
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def n_evaluated(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    def to_dict(self) -> dict:
        return {
            "auc": self.auc,
            "macro_f1": self.macro_f1,
            "f1_positive": self.f1_positive,
            "f1_negative": self.f1_negative,
        }


def rank_auc(scores: np.ndarray, signs: np.ndarray) -> float:
    """AUC as the Mann-Whitney rank statistic with tie-averaged ranks."""
    scores = np.asarray(scores, dtype=np.float64)
    signs = np.asarray(signs)
    pos = signs == 1
    n_pos = int(pos.sum())
    n_neg = len(signs) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("AUC is undefined with a single class")
    ranks = rankdata(scores, method="average")
    return float((ranks[pos].sum() - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg))


def _f1(tp, fp, fn):
    denom = 2 * tp + fp + fn
    return 2.0 * tp / denom if denom else 0.0


def evaluate(scores, signs) -> Metrics:
    """Score predictions against signs in {-1, +1}.

    Classification uses a fixed 0.5 threshold: score > 0.5 predicts +1. The
    macro F1 averages the per-class F1 of the +1 class and of the -1 class.
    """
    scores = np.asarray(scores, dtype=np.float64)
    signs = np.asarray(signs, dtype=np.int64)
    if scores.shape != signs.shape:
        raise ValueError(f"length mismatch: {scores.shape} scores vs {signs.shape} signs")
    if not np.all(np.isin(signs, (-1, 1))):
        raise ValueError("signs must be -1 or +1")
    auc = rank_auc(scores, signs)
    pred = np.where(scores > 0.5, 1, -1)
    tp = int(np.sum((pred == 1) & (signs == 1)))
    fp = int(np.sum((pred == 1) & (signs == -1)))
    tn = int(np.sum((pred == -1) & (signs == -1)))
    fn = int(np.sum((pred == -1) & (signs == 1)))
    f1_pos = _f1(tp, fp, fn)
    f1_neg = _f1(tn, fn, fp)  # -1 treated as the positive class
    return Metrics(
        auc=auc,
        macro_f1=0.5 * (f1_pos + f1_neg),
        f1_positive=f1_pos,
        f1_negative=f1_neg,
        tp=tp, fp=fp, tn=tn, fn=fn,
    )
