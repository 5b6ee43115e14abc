"""Fidelity losses for quality ranking, scene and distortion classification,
and their dynamically weighted combination."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from scipy.special import ndtr

from .errors import InvalidInputError

_SQRT2 = np.sqrt(2.0)
_EPS = 1e-12
_RANGE_TOL = 1e-9


def thurstone_prob(q1, q2):
    """Probability that item 1 beats item 2: ``Phi((q1 - q2) / sqrt(2))``."""
    return ndtr((np.asarray(q1, float) - np.asarray(q2, float)) / _SQRT2)[()]


def _unit_interval(x, name):
    x = np.asarray(x, dtype=float)
    if np.any(x < -_RANGE_TOL) or np.any(x > 1 + _RANGE_TOL) or not np.all(np.isfinite(x)):
        raise InvalidInputError(f"{name} must lie in [0, 1]")
    return np.clip(x, 0.0, 1.0)


def fidelity(p, phat):
    """``1 - sqrt(p phat) - sqrt((1 - p)(1 - phat))`` for binary distributions."""
    p = _unit_interval(p, "p")
    phat = _unit_interval(phat, "phat")
    return _fidelity(p, phat)[()]


def _fidelity(p, phat):
    return 1.0 - np.sqrt(p * phat) - np.sqrt((1.0 - p) * (1.0 - phat))


def _fidelity_dphat(p, phat):
    ph = np.clip(phat, _EPS, 1.0 - _EPS)
    return -0.5 * np.sqrt(p / ph) + 0.5 * np.sqrt((1.0 - p) / (1.0 - ph))


def pair_label(mos1, mos2):
    """1 if the first MOS is higher, 0 if lower, 0.5 on an exact tie."""
    return (0.5 * (1.0 + np.sign(np.asarray(mos1, float) - np.asarray(mos2, float))))[()]


def quality_pair_loss(q1_hat, q2_hat, label):
    return fidelity(label, thurstone_prob(q1_hat, q2_hat))


def scene_loss(phat_s, truth):
    """Mean per-scene fidelity between a (multi-)label target and the marginal."""
    phat_s = np.asarray(phat_s, dtype=float)
    truth = np.asarray(truth, dtype=float)
    if phat_s.shape != truth.shape:
        raise InvalidInputError(f"shape mismatch {phat_s.shape} vs {truth.shape}")
    return np.mean(fidelity(truth, phat_s), axis=-1)[()]


def distortion_loss(phat_d, truth):
    """``1 - sum_d sqrt(truth_d phat_d)`` with a one-hot ``truth``."""
    phat_d = np.asarray(phat_d, dtype=float)
    truth = np.asarray(truth, dtype=float)
    if phat_d.shape != truth.shape:
        raise InvalidInputError(f"shape mismatch {phat_d.shape} vs {truth.shape}")
    if not (np.all((truth == 0) | (truth == 1)) and np.all(truth.sum(axis=-1) == 1)):
        raise InvalidInputError("distortion target must be one-hot")
    phat_d = _unit_interval(phat_d, "phat_d")
    return (1.0 - np.sum(np.sqrt(truth * phat_d), axis=-1))[()]


@dataclass(frozen=True)
class TaskWeights:
    """Multitask weights plus the last two epochs of per-task losses."""

    lambda_q: float = 1.0
    lambda_s: float = 1.0
    lambda_d: float = 1.0
    history: tuple = ()
    enabled: tuple = (True, True, True)

    def __post_init__(self):
        lam = self.as_array()
        if not (np.all(np.isfinite(lam)) and np.all(lam >= 0)):
            raise InvalidInputError("task weights must be finite and non-negative")

    @classmethod
    def initial(cls, scene: bool = True, distortion: bool = True):
        return cls(1.0, float(scene), float(distortion), (), (True, scene, distortion))

    def as_array(self) -> np.ndarray:
        return np.array([self.lambda_q, self.lambda_s, self.lambda_d])


def dwa_update(weights: TaskWeights, epoch_losses, temperature: float = 2.0) -> TaskWeights:
    """Dynamic weight averaging from the relative descent of each task loss.

    Record ``epoch_losses`` as the latest epoch; once two epochs are on
    record, ``lambda_k = K softmax(r / T)_k`` with
    ``r_k = L_k(t-1) / L_k(t-2)`` over the enabled tasks. Until then all
    enabled tasks get weight 1.
    """
    losses = tuple(float(x) for x in epoch_losses)
    if len(losses) != 3:
        raise InvalidInputError("expected one loss per task (q, s, d)")
    history = (weights.history + (losses,))[-2:]
    mask = np.array(weights.enabled, dtype=bool)
    lam = np.zeros(3)
    if len(history) < 2:
        lam[mask] = 1.0
    else:
        prev, last = np.array(history[0]), np.array(history[1])
        with np.errstate(divide="ignore", invalid="ignore"):
            r = np.where(prev != 0, last / prev, 1.0)
        r = np.where(np.isfinite(r), r, 1.0)
        z = r[mask] / temperature
        e = np.exp(z - z.max())
        lam[mask] = mask.sum() * e / e.sum()
    return replace(weights, lambda_q=lam[0], lambda_s=lam[1], lambda_d=lam[2], history=history)


@dataclass
class LossReport:
    """Per-component losses of one evaluation of the objective."""

    l_q: float = 0.0
    l_s: float = 0.0
    l_d: float = 0.0
    multitask: float = 0.0
    cross_region: float = 0.0
    local_global: float = 0.0
    total: float = 0.0
    lambda_q: float = 1.0
    lambda_s: float = 1.0
    lambda_d: float = 1.0
    quality_skipped: bool = False
    per_task: dict = field(default_factory=dict)

    FIELDS = ("l_q", "l_s", "l_d", "multitask", "cross_region", "local_global", "total",
              "lambda_q", "lambda_s", "lambda_d")

    def as_row(self) -> dict:
        return {k: getattr(self, k) for k in self.FIELDS}


def _pairs(n):
    return np.triu_indices(n, k=1)


def multitask_loss(q_hat, phat_s, phat_d, mos, scene_truth, dist_truth,
                   weights: TaskWeights, with_grad: bool = False):
    """Weighted multitask objective over one mini-batch.

    ``q_hat`` is ``(B,)``, ``phat_s`` ``(B, S)``, ``phat_d`` ``(B, D)``;
    truths are binary arrays of matching shape. The quality term averages
    the pair loss over all unordered pairs; with a single sample it is
    skipped and flagged in the report.

    Returns ``report`` or ``(report, (g_qhat, g_phat_s, g_phat_d))``.
    """
    q_hat = np.asarray(q_hat, dtype=float)
    phat_s = np.clip(np.asarray(phat_s, dtype=float), 0.0, 1.0)
    phat_d = np.clip(np.asarray(phat_d, dtype=float), 0.0, 1.0)
    mos = np.asarray(mos, dtype=float)
    scene_truth = np.asarray(scene_truth, dtype=float)
    dist_truth = np.asarray(dist_truth, dtype=float)
    n = q_hat.shape[0]
    lam_q, lam_s, lam_d = weights.as_array()
    if scene_truth.shape != phat_s.shape or dist_truth.shape != phat_d.shape:
        raise InvalidInputError("label arrays do not match the predicted marginals")

    i, j = _pairs(n)
    skipped = len(i) == 0
    g_q = np.zeros(n)
    if skipped:
        l_q = 0.0
    else:
        label = pair_label(mos[i], mos[j])
        diff = (q_hat[i] - q_hat[j]) / _SQRT2
        phat = ndtr(diff)
        per_pair = _fidelity(label, phat)
        l_q = float(per_pair.mean())
        if with_grad:
            dphat = _fidelity_dphat(label, phat) * np.exp(-0.5 * diff**2) / np.sqrt(2 * np.pi) / _SQRT2
            coef = lam_q * dphat / len(i)
            g_q = np.bincount(i, coef, minlength=n) - np.bincount(j, coef, minlength=n)

    per_s = np.mean(_fidelity(scene_truth, phat_s), axis=-1)
    true_d = np.sum(dist_truth * phat_d, axis=-1)
    per_d = 1.0 - np.sqrt(true_d)
    l_s, l_d = float(per_s.mean()), float(per_d.mean())

    total = lam_q * l_q + lam_s * l_s + lam_d * l_d
    report = LossReport(l_q=l_q, l_s=l_s, l_d=l_d, multitask=float(total), total=float(total),
                        lambda_q=lam_q, lambda_s=lam_s, lambda_d=lam_d, quality_skipped=skipped)
    if not with_grad:
        return report
    g_s = lam_s * _fidelity_dphat(scene_truth, phat_s) / (phat_s.shape[-1] * n)
    g_d = lam_d * dist_truth * (-0.5 / np.sqrt(np.maximum(true_d, _EPS)))[:, None] / n
    return report, (g_q, g_s, g_d)
