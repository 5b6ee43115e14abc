"""Cross-sub-region and local-global evidential fusion losses and the full
training objective, with gradients w.r.t. the joint scores and the
evidence projection."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError
from .evidential import evidential_grad, evidential_loss
from .joint import (
    QUALITY_LEVELS,
    TASKS,
    EvidenceProjection,
    ViewSet,
    task_evidence,
    task_features,
    task_features_vjp,
)
from .multitask import LossReport, TaskWeights, multitask_loss
from .nig import (
    NIGParams,
    constrain,
    constrain_vjp,
    nig_average,
    nig_fuse,
    nig_fuse_along,
    nig_fuse_along_vjp,
    nig_fuse_n,
    nig_fuse_vjp,
)


@dataclass(frozen=True)
class FusionConfig:
    lambda1: float = 0.1
    lambda2: float = 0.1
    tau: float = 0.05
    n_fuse: int = 4
    tasks: tuple = TASKS
    enable_cross_region: bool = True
    enable_local_global: bool = True

    def __post_init__(self):
        if min(self.lambda1, self.lambda2, self.tau) < 0:
            raise InvalidInputError("lambda1, lambda2 and tau must be non-negative")
        if self.n_fuse < 2:
            raise InvalidInputError("n_fuse must be at least 2")
        if not set(self.tasks) <= set(TASKS) or "q" not in self.tasks:
            raise InvalidInputError(f"tasks must include 'q' and be drawn from {TASKS}")


@dataclass(frozen=True)
class Batch:
    """Joint scores and targets for a mini-batch.

    ``views.locals_`` is ``(B, N, C, S, D)`` and ``views.global_view``
    ``(B, C, S, D)``; ``scene`` is a binary ``(B, S)`` array and
    ``distortion`` one-hot ``(B, D)``.
    """

    views: ViewSet
    mos: np.ndarray
    scene: np.ndarray
    distortion: np.ndarray

    def __len__(self):
        return self.mos.shape[0]


def evidential_target(batch: Batch, task: str) -> np.ndarray:
    """Scalar regression target per task.

    Quality regresses the MOS. For scene and distortion the NIG models
    the probability mass on a true class, whose target is 1.
    """
    if task == "q":
        return batch.mos
    return np.ones(len(batch))


def fusion_indices(n_locals: int, n_fuse: int, rng=None) -> np.ndarray:
    """Which local views take part in fusion.

    With an RNG, ``n_fuse`` distinct views are drawn at random; without
    one the first ``n_fuse`` are used. Fewer available views means all.
    """
    k = min(n_fuse, n_locals)
    if k < 1:
        raise InvalidInputError("no local views available for fusion")
    if rng is None:
        return np.arange(k)
    return np.sort(rng.choice(n_locals, size=k, replace=False))


def _local_params(views: ViewSet, task, proj, idx):
    raws = [task_evidence(views.locals_[..., i, :, :, :], task, proj) for i in idx]
    return raws, [constrain(r) for r in raws]


def cross_region_params(views: ViewSet, task: str, proj: EvidenceProjection,
                        n_fuse: int = 4, rng=None) -> NIGParams:
    """Fuse the NIGs of ``n_fuse`` local views with the NIG sum operator."""
    idx = fusion_indices(views.n_locals, n_fuse, rng)
    _, params = _local_params(views, task, proj, idx)
    return nig_fuse_n(params)


def local_global_params(views: ViewSet, task: str, proj: EvidenceProjection,
                        n_fuse: int = 4, rng=None) -> NIGParams:
    """Fuse each local NIG with the global NIG, then average the results."""
    if views.global_view is None:
        raise InvalidInputError("local-global fusion needs a global view")
    idx = fusion_indices(views.n_locals, n_fuse, rng)
    _, params = _local_params(views, task, proj, idx)
    p_global = constrain(task_evidence(views.global_view, task, proj))
    return nig_average([nig_fuse(p, p_global) for p in params])


def _mean_over_views(p: NIGParams) -> NIGParams:
    return NIGParams._trusted(*(np.mean(x, axis=-1) for x in p.astuple()))


def _fusion_terms(batch: Batch, proj: EvidenceProjection, tasks, idx, cfg: FusionConfig,
                  cross: bool, local_global: bool, grads=None):
    """Batch-mean evidential losses per task for the two fusion modes.

    Tasks are stacked on a leading axis once their raw evidence is known,
    so the NIG algebra runs once for all of them. Returns two arrays of
    per-task losses ``(cross_region, local_global)``; a disabled mode
    gives zeros. When ``grads`` is given, the gradient of
    ``lambda1 * sum(cross_region) + lambda2 * sum(local_global)`` is
    accumulated into it.
    """
    views = batch.views
    n, k = len(batch), len(idx)
    y = np.stack([evidential_target(batch, t) for t in tasks])[:, :, None]
    loc = views.locals_[:, idx]
    f_loc = [task_features(loc, t) for t in tasks]
    raw_loc = np.stack([f @ proj.weights[t] + proj.biases[t] for f, t in zip(f_loc, tasks)])
    p_loc = constrain(raw_loc)                     # fields (T, B, k)
    g_loc = np.zeros_like(raw_loc) if grads is not None else None
    l_u = np.zeros(len(tasks))
    l_f = np.zeros(len(tasks))

    if cross:
        fused = nig_fuse_along(p_loc, axis=-1)
        l_u = evidential_loss(fused, y[..., 0], cfg.tau).total.mean(axis=1)
        if grads is not None:
            g = evidential_grad(fused, y[..., 0], cfg.tau).as_array() * (cfg.lambda1 / n)
            g_loc += nig_fuse_along_vjp(p_loc, g, axis=-1)

    if local_global:
        if views.global_view is None:
            raise InvalidInputError("local-global fusion needs a global view")
        f_g = [task_features(views.global_view, t) for t in tasks]
        raw_g = np.stack([f @ proj.weights[t] + proj.biases[t] for f, t in zip(f_g, tasks)])
        p_g = constrain(raw_g)                     # fields (T, B)
        p_gb = NIGParams._trusted(*(x[..., None] for x in p_g.astuple()))
        fused = _mean_over_views(nig_fuse(p_loc, p_gb))
        l_f = evidential_loss(fused, y[..., 0], cfg.tau).total.mean(axis=1)
        if grads is not None:
            g = evidential_grad(fused, y[..., 0], cfg.tau).as_array() * (cfg.lambda2 / (n * k))
            g_a, g_b = nig_fuse_vjp(p_loc, p_gb, np.broadcast_to(g[:, :, None, :], raw_loc.shape))
            g_loc += g_a
            g_raw_g = constrain_vjp(raw_g, g_b.sum(axis=2))
            for j, t in enumerate(tasks):
                grads["proj_w"][t] += f_g[j].T @ g_raw_g[j]
                grads["proj_b"][t] += g_raw_g[j].sum(axis=0)
                grads["global"] += task_features_vjp(
                    views.global_view.shape, t, g_raw_g[j] @ proj.weights[t].T)

    if grads is not None and (cross or local_global):
        g_raw = constrain_vjp(raw_loc, g_loc)
        g_view = 0.0
        for j, t in enumerate(tasks):
            w = proj.weights[t]
            grads["proj_w"][t] += f_loc[j].reshape(-1, w.shape[0]).T @ g_raw[j].reshape(-1, 4)
            grads["proj_b"][t] += g_raw[j].sum(axis=(0, 1))
            g_view = g_view + task_features_vjp(loc.shape, t, g_raw[j] @ w.T)
        grads["locals"][:, idx] += g_view
    return l_u, l_f


def cross_region_loss(batch: Batch, proj: EvidenceProjection, cfg: FusionConfig,
                      rng=None) -> float:
    """Sum over tasks of the batch-mean evidential loss on cross-region fused NIGs."""
    idx = fusion_indices(batch.views.n_locals, cfg.n_fuse, rng)
    return float(_fusion_terms(batch, proj, cfg.tasks, idx, cfg, True, False)[0].sum())


def local_global_loss(batch: Batch, proj: EvidenceProjection, cfg: FusionConfig,
                      rng=None) -> float:
    """Sum over tasks of the batch-mean evidential loss on local-global fused NIGs."""
    idx = fusion_indices(batch.views.n_locals, cfg.n_fuse, rng)
    return float(_fusion_terms(batch, proj, cfg.tasks, idx, cfg, False, True)[1].sum())


def batch_multitask_loss(batch: Batch, weights: TaskWeights, with_grad: bool = False):
    """Multitask loss with predictions averaged over every local view."""
    loc = batch.views.locals_
    n_loc = loc.shape[1]
    pc = loc.sum(axis=(-2, -1)).mean(axis=1)
    q_hat = pc @ QUALITY_LEVELS
    ps = loc.sum(axis=(-3, -1)).mean(axis=1)
    pd = loc.sum(axis=(-3, -2)).mean(axis=1)
    out = multitask_loss(q_hat, ps, pd, batch.mos, batch.scene, batch.distortion,
                         weights, with_grad=with_grad)
    if not with_grad:
        return out
    report, (g_q, g_s, g_d) = out
    g_view = (
        (g_q[:, None] * QUALITY_LEVELS)[:, :, None, None]
        + g_s[:, None, :, None]
        + g_d[:, None, None, :]
    ) / n_loc
    return report, np.broadcast_to(g_view[:, None], loc.shape)


def _zero_grads(batch: Batch, proj: EvidenceProjection):
    return {
        "locals": np.zeros_like(batch.views.locals_),
        "global": np.zeros_like(batch.views.global_view),
        "proj_w": {t: np.zeros_like(w) for t, w in proj.weights.items()},
        "proj_b": {t: np.zeros_like(b) for t, b in proj.biases.items()},
    }


def overall_loss(batch: Batch, proj: EvidenceProjection, weights: TaskWeights,
                 cfg: FusionConfig, rng=None, with_grad: bool = False):
    """``L = L_M + lambda1 L_U + lambda2 L_F`` for one mini-batch.

    Returns ``(total, report)``, or ``(total, report, grads)`` where
    ``grads`` holds gradients for the local joints, the global joints
    and every projection weight and bias.
    """
    grads = _zero_grads(batch, proj) if with_grad else None
    if with_grad:
        report, g_multi = batch_multitask_loss(batch, weights, with_grad=True)
        grads["locals"] += g_multi
    else:
        report = batch_multitask_loss(batch, weights)

    idx = fusion_indices(batch.views.n_locals, cfg.n_fuse, rng)
    u, f = _fusion_terms(batch, proj, cfg.tasks, idx, cfg, cfg.enable_cross_region,
                         cfg.enable_local_global, grads)
    for j, task in enumerate(cfg.tasks):
        if cfg.enable_cross_region:
            report.per_task[f"cross_region_{task}"] = float(u[j])
        if cfg.enable_local_global:
            report.per_task[f"local_global_{task}"] = float(f[j])
    l_u, l_f = float(u.sum()), float(f.sum())

    report.cross_region = l_u
    report.local_global = l_f
    report.total = report.multitask + cfg.lambda1 * l_u + cfg.lambda2 * l_f
    if with_grad:
        return report.total, report, grads
    return report.total, report
