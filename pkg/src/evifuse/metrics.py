"""Correlation metrics, normality diagnostic and model evaluation."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np
from scipy import stats

from .errors import InvalidInputError
from .fusion import FusionConfig, local_global_params
from .joint import QUALITY_LEVELS, task_evidence
from .nig import constrain, predictive_interval
from .scorer import scorer_forward


def _paired(pred, truth):
    pred = np.asarray(pred, dtype=float)
    truth = np.asarray(truth, dtype=float)
    if pred.shape != truth.shape or pred.ndim != 1:
        raise InvalidInputError("pred and truth must be 1-d arrays of equal length")
    if pred.size < 2:
        raise InvalidInputError("need at least two observations")
    return pred, truth


def plcc(pred, truth) -> float:
    """Pearson correlation; NaN when either input has zero variance."""
    pred, truth = _paired(pred, truth)
    dp, dt = pred - pred.mean(), truth - truth.mean()
    denom = np.sqrt(np.dot(dp, dp) * np.dot(dt, dt))
    if denom == 0:
        return float("nan")
    return float(np.clip(np.dot(dp, dt) / denom, -1.0, 1.0))


def srcc(pred, truth) -> float:
    """Spearman correlation: Pearson on average ranks (ties share a rank)."""
    pred, truth = _paired(pred, truth)
    return plcc(stats.rankdata(pred), stats.rankdata(truth))


def normality_diag(scores) -> float:
    """Correlation of sorted scores with standard normal quantiles.

    Plotting positions are ``(i - 0.5) / n``. Values near 1 mean the
    Q-Q plot is close to a straight line.
    """
    scores = np.sort(np.asarray(scores, dtype=float).ravel())
    if scores.size < 20:
        raise InvalidInputError("normality_diag needs at least 20 scores")
    if np.ptp(scores) == 0:
        raise InvalidInputError("scores are constant")
    n = scores.size
    theoretical = stats.norm.ppf((np.arange(1, n + 1) - 0.5) / n)
    return plcc(scores, theoretical)


@dataclass(frozen=True)
class MetricsReport:
    srcc: float
    plcc: float
    acc_scene: float
    acc_distortion: float
    mean_ci_width: float
    mean_ci_width_single: float
    n: int

    def as_dict(self) -> dict:
        return asdict(self)

    def to_text(self) -> str:
        return "".join(f"{k}={v!r}\n" for k, v in self.as_dict().items())


def predict(scorer, dataset):
    """Quality score, scene and distortion marginals for every sample.

    The quality marginal averages all available local crops.
    """
    loc = scorer.joint(dataset.local_features)
    pc = loc.sum(axis=(-2, -1)).mean(axis=1)
    ps = loc.sum(axis=(-3, -1)).mean(axis=1)
    pd = loc.sum(axis=(-3, -2)).mean(axis=1)
    return pc @ QUALITY_LEVELS, ps, pd


def evaluate(scorer, dataset, fusion_cfg=None, coverage: float = 0.95,
             with_intervals: bool = True) -> MetricsReport:
    """Held-out metrics for a trained scorer.

    CI widths come from the Student-t predictive of the quality NIG: the
    local-global fused one (first ``n_fuse`` crops) and, for comparison,
    the one of the first crop alone.
    """
    fusion_cfg = fusion_cfg or FusionConfig()
    q_hat, ps, pd = predict(scorer, dataset)
    acc_s = float(np.mean(ps.argmax(axis=1) == dataset.scene))
    acc_d = float(np.mean(pd.argmax(axis=1) == dataset.distortion))
    width = width_single = float("nan")
    if with_intervals:
        views = scorer_forward(scorer, dataset.local_features, dataset.global_features)
        fused = local_global_params(views, "q", scorer.proj, fusion_cfg.n_fuse)
        lo, hi = predictive_interval(fused, coverage)
        width = float(np.mean(hi - lo))
        single = constrain(task_evidence(views.locals_[:, 0], "q", scorer.proj))
        lo, hi = predictive_interval(single, coverage)
        width_single = float(np.mean(hi - lo))
    return MetricsReport(srcc(q_hat, dataset.mos), plcc(q_hat, dataset.mos), acc_s, acc_d,
                         width, width_single, len(dataset))
