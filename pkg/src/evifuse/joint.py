"""Joint quality/scene/distortion probabilities and what is read off them.

A joint score is an array whose trailing three axes are
``(C, S, D)`` = (quality levels, scenes, distortion types). Leading axes
are free, so one call can process a whole batch of views.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInputError

N_QUALITY = 5
QUALITY_LEVELS = np.arange(1, N_QUALITY + 1, dtype=float)
TASKS = ("q", "s", "d")
# full label sets; toy runs pass smaller counts
N_SCENE = 9
N_DISTORTION = 11


def joint_softmax(logits, kappa: float) -> np.ndarray:
    """Temperature softmax over the trailing ``C x S x D`` block."""
    if not kappa > 0:
        raise InvalidInputError("kappa must be positive")
    logits = np.asarray(logits, dtype=float)
    if logits.ndim < 3:
        raise InvalidInputError("logits need trailing (C, S, D) axes")
    z = logits / kappa
    z = z - z.max(axis=(-3, -2, -1), keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=(-3, -2, -1), keepdims=True)


def joint_softmax_vjp(logits, kappa: float, probs, grad):
    """Return ``(d_logits, d_kappa)`` given upstream ``grad`` on the probs.

    ``d_kappa`` is summed over every leading axis.
    """
    axes = (-3, -2, -1)
    gz = probs * (grad - (probs * grad).sum(axis=axes, keepdims=True))
    d_logits = gz / kappa
    d_kappa = -float(np.sum(gz * logits)) / kappa**2
    return d_logits, d_kappa


def quality_marginal(views) -> np.ndarray:
    """``p(c|x)``: per-view sum over scenes and distortions, averaged over views.

    ``views`` stacks the views on axis ``-4`` (or is a list of joints).
    """
    views = np.asarray(views, dtype=float)
    if views.ndim < 4 or views.shape[-4] == 0:
        raise InvalidInputError("quality_marginal needs at least one view")
    return views.sum(axis=(-2, -1)).mean(axis=-2)


def quality_expectation(pc) -> np.ndarray | float:
    """Expected quality level ``sum_c c p(c)`` over ``c = 1..5``."""
    pc = np.asarray(pc, dtype=float)
    if pc.shape[-1] != N_QUALITY:
        raise InvalidInputError(f"expected {N_QUALITY} quality levels, got {pc.shape[-1]}")
    if np.any(np.abs(pc.sum(axis=-1) - 1.0) > 1e-4):
        raise InvalidInputError("quality distribution is not normalized")
    out = pc @ QUALITY_LEVELS
    return float(out) if np.ndim(out) == 0 else out


def scene_marginal(view) -> np.ndarray:
    return np.asarray(view, dtype=float).sum(axis=(-3, -1))


def distortion_marginal(view) -> np.ndarray:
    return np.asarray(view, dtype=float).sum(axis=(-3, -2))


@dataclass(frozen=True)
class ViewSet:
    """Local crops and the global view of one image (or a batch of images).

    ``locals_`` has shape ``(..., N, C, S, D)``, ``global_view`` shape
    ``(..., C, S, D)``.
    """

    locals_: np.ndarray
    global_view: np.ndarray | None = None

    def __post_init__(self):
        if self.locals_.ndim < 4 or self.locals_.shape[-4] < 1:
            raise InvalidInputError("a view set needs at least one local view")
        glob = self.global_view
        if glob is not None and self.locals_.shape[-3:] != glob.shape[-3:]:
            raise InvalidInputError("local and global views disagree on (C, S, D)")

    @property
    def n_locals(self) -> int:
        return self.locals_.shape[-4]


@dataclass
class EvidenceProjection:
    """Per-task affine maps from a view's task marginal to 4 raw NIG values.

    The quality task sees the 5-level marginal with its expectation
    appended as a sixth input, so ``weights["q"]`` is ``(C + 1, 4)``.
    """

    weights: dict = field(default_factory=dict)
    biases: dict = field(default_factory=dict)

    @classmethod
    def init(cls, n_scene: int = N_SCENE, n_distortion: int = N_DISTORTION, rng=None,
             scale: float = 0.01):
        """Small random weights; the quality expectation feeds ``delta`` directly."""
        rng = np.random.default_rng(rng)
        dims = {"q": N_QUALITY + 1, "s": n_scene, "d": n_distortion}
        weights = {t: rng.normal(0.0, scale, size=(dims[t], 4)) for t in TASKS}
        weights["q"][N_QUALITY, 0] = 1.0
        biases = {t: np.zeros(4) for t in TASKS}
        return cls(weights, biases)

    @classmethod
    def zeros(cls, n_scene: int = N_SCENE, n_distortion: int = N_DISTORTION):
        dims = {"q": N_QUALITY + 1, "s": n_scene, "d": n_distortion}
        return cls({t: np.zeros((dims[t], 4)) for t in TASKS}, {t: np.zeros(4) for t in TASKS})

    def input_dim(self, task: str) -> int:
        return self.weights[task].shape[0]


def task_features(view, task: str) -> np.ndarray:
    """Marginal of ``view`` for ``task``; for quality, the expectation is appended."""
    view = np.asarray(view, dtype=float)
    if task == "q":
        pc = view.sum(axis=(-2, -1))
        return np.concatenate([pc, (pc @ QUALITY_LEVELS)[..., None]], axis=-1)
    if task == "s":
        return scene_marginal(view)
    if task == "d":
        return distortion_marginal(view)
    raise InvalidInputError(f"unknown task {task!r}")


def task_features_vjp(view_shape, task: str, grad) -> np.ndarray:
    """Spread a gradient on :func:`task_features` back onto the joint."""
    c, s, d = view_shape[-3:]
    grad = np.asarray(grad, dtype=float)
    if task == "q":
        g_pc = grad[..., :N_QUALITY] + grad[..., N_QUALITY:] * QUALITY_LEVELS
        out = g_pc[..., :, None, None]
    elif task == "s":
        out = grad[..., None, :, None]
    elif task == "d":
        out = grad[..., None, None, :]
    else:
        raise InvalidInputError(f"unknown task {task!r}")
    return np.broadcast_to(out, grad.shape[:-1] + (c, s, d))


def task_evidence(view, task: str, proj: EvidenceProjection) -> np.ndarray:
    """Raw (pre-constraint) NIG 4-vector for ``task`` from one or more views."""
    feats = task_features(view, task)
    w = proj.weights[task]
    if feats.shape[-1] != w.shape[0]:
        raise InvalidInputError(
            f"projection for task {task!r} expects {w.shape[0]} inputs, got {feats.shape[-1]}"
        )
    return feats @ w + proj.biases[task]
