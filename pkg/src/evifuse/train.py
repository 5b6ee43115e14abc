"""Mini-batch training of :class:`TinyScorer` with hand-written backprop."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DivergenceError, InvalidInputError
from .fusion import Batch, FusionConfig, overall_loss
from .joint import TASKS
from .metrics import evaluate
from .multitask import LossReport, TaskWeights, dwa_update
from .scorer import TinyScorer, scorer_backward, scorer_forward
from .synth import Dataset

HISTORY_FIELDS = ("epoch",) + LossReport.FIELDS + ("val_srcc", "val_plcc")


@dataclass(frozen=True)
class TrainConfig:
    lr: float = 1e-2
    epochs: int = 200
    batch_size: int = 16
    seed: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    enable_scene_task: bool = True
    enable_distortion_task: bool = True

    def __post_init__(self):
        if self.lr <= 0 or self.epochs < 1 or self.batch_size < 1:
            raise InvalidInputError("lr, epochs and batch_size must be positive")


class Adam:
    def __init__(self, params: dict, lr, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}
        self.t = 0

    def step(self, params: dict, grads: dict) -> dict:
        self.t += 1
        c1 = 1.0 - self.beta1**self.t
        c2 = 1.0 - self.beta2**self.t
        out = {}
        for k, p in params.items():
            g = grads[k]
            self.m[k] = self.beta1 * self.m[k] + (1.0 - self.beta1) * g
            self.v[k] = self.beta2 * self.v[k] + (1.0 - self.beta2) * g * g
            out[k] = p - self.lr * (self.m[k] / c1) / (np.sqrt(self.v[k] / c2) + self.eps)
        return out


def make_batch(scorer: TinyScorer, data: Dataset, idx=None):
    """Forward the scorer over samples ``idx`` and package the result."""
    if idx is None:
        idx = np.arange(len(data))
    loc = data.local_features[idx]
    glob = data.global_features[idx]
    views = scorer_forward(scorer, loc, glob)
    batch = Batch(views, data.mos[idx], np.eye(data.n_scene)[data.scene[idx]],
                  np.eye(data.n_distortion)[data.distortion[idx]])
    return batch, loc, glob


def loss_and_grads(scorer: TinyScorer, data: Dataset, idx, weights: TaskWeights,
                   fusion_cfg: FusionConfig, rng=None):
    """Objective on samples ``idx`` and its gradient for every scorer parameter."""
    batch, loc, glob = make_batch(scorer, data, idx)
    total, report, g = overall_loss(batch, scorer.proj, weights, fusion_cfg, rng=rng,
                                    with_grad=True)
    grads = scorer_backward(scorer, loc, glob, batch.views, g["locals"], g["global"])
    for t in TASKS:
        grads[f"proj_w_{t}"] = g["proj_w"][t]
        grads[f"proj_b_{t}"] = g["proj_b"][t]
    return total, report, grads


def _active_tasks(cfg: TrainConfig):
    return tuple(t for t, on in zip(TASKS, (True, cfg.enable_scene_task,
                                             cfg.enable_distortion_task)) if on)


def train(data: Dataset, fusion_cfg: FusionConfig | None = None,
          cfg: TrainConfig | None = None, val_data: Dataset | None = None,
          scorer: TinyScorer | None = None):
    """Fit a scorer by Adam on the overall objective.

    Multitask weights are refreshed once per epoch by dynamic weight
    averaging of the epoch-mean task losses. Disabled auxiliary tasks
    get weight 0 and are left out of the fusion losses.

    Returns ``(scorer, history)`` where ``history`` is a list of dicts
    keyed by :data:`HISTORY_FIELDS`, one per epoch.
    """
    cfg = cfg or TrainConfig()
    fusion_cfg = fusion_cfg or FusionConfig()
    tasks = tuple(t for t in fusion_cfg.tasks if t in _active_tasks(cfg))
    if tasks != fusion_cfg.tasks:
        fusion_cfg = FusionConfig(**{**fusion_cfg.__dict__, "tasks": tasks})

    rng = np.random.default_rng(cfg.seed)
    if scorer is None:
        scorer = TinyScorer.init(data.feature_dim, data.n_scene, data.n_distortion, rng)
    opt = Adam(scorer.parameters(), cfg.lr, cfg.beta1, cfg.beta2, cfg.eps)
    weights = TaskWeights.initial(cfg.enable_scene_task, cfg.enable_distortion_task)

    history = []
    n = len(data)
    for epoch in range(cfg.epochs):
        order = rng.permutation(n)
        sums = dict.fromkeys(LossReport.FIELDS[:7], 0.0)
        n_batches = 0
        for start in range(0, n, cfg.batch_size):
            idx = order[start:start + cfg.batch_size]
            total, report, grads = loss_and_grads(scorer, data, idx, weights, fusion_cfg, rng)
            if not np.isfinite(total) or not all(np.all(np.isfinite(g)) for g in grads.values()):
                raise DivergenceError(
                    f"non-finite loss or gradient at epoch {epoch}, step {n_batches}",
                    report=report,
                )
            scorer.set_parameters(opt.step(scorer.parameters(), grads))
            for k in sums:
                sums[k] += getattr(report, k)
            n_batches += 1

        row = {"epoch": epoch, **{k: v / n_batches for k, v in sums.items()},
               "lambda_q": weights.lambda_q, "lambda_s": weights.lambda_s,
               "lambda_d": weights.lambda_d, "val_srcc": float("nan"), "val_plcc": float("nan")}
        if val_data is not None:
            m = evaluate(scorer, val_data, fusion_cfg, with_intervals=False)
            row["val_srcc"], row["val_plcc"] = m.srcc, m.plcc
        history.append(row)
        weights = dwa_update(weights, (row["l_q"], row["l_s"], row["l_d"]))
    return scorer, history
