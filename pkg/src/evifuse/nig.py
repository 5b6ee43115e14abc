"""Normal-inverse-gamma parameters and the operators acting on them.

A NIG(delta, v, alpha, beta) places ``mu ~ N(delta, sigma^2 / v)`` and
``sigma^2 ~ InvGamma(alpha, beta)``. Every function here accepts scalar
fields or numpy arrays of a common shape, so a whole mini-batch of
distributions can be handled in one call.

Gradients used by the training loop are carried as arrays of shape
``(..., 4)`` ordered ``(delta, v, alpha, beta)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce
from typing import Sequence

import numpy as np
from scipy import stats
from scipy.special import expit

from .errors import DomainError, InvalidInputError

V_FLOOR = 1e-8
BETA_FLOOR = 1e-8
ALPHA_FLOOR = 1.0 + 1e-8
_SOFTPLUS_LINEAR = 30.0
_FLOORS = np.array([V_FLOOR, ALPHA_FLOOR - 1.0, BETA_FLOOR])


@dataclass(frozen=True)
class NIGParams:
    """Parameters of a normal-inverse-gamma distribution.

    Fields may be Python floats or equally shaped numpy arrays.
    Construction validates ``v > 0``, ``alpha > 1``, ``beta > 0`` and a
    finite ``delta``.
    """

    delta: float | np.ndarray
    v: float | np.ndarray
    alpha: float | np.ndarray
    beta: float | np.ndarray

    def __post_init__(self):
        if not np.all(np.isfinite(self.delta)):
            raise InvalidInputError("delta must be finite")
        if not np.all(np.asarray(self.v) > 0):
            raise InvalidInputError("v must be > 0")
        if not np.all(np.asarray(self.alpha) > 1):
            raise InvalidInputError("alpha must be > 1")
        if not np.all(np.asarray(self.beta) > 0):
            raise InvalidInputError("beta must be > 0")

    def as_array(self) -> np.ndarray:
        """Stack the fields along a trailing axis of length 4."""
        return np.stack(
            np.broadcast_arrays(
                np.asarray(self.delta, float),
                np.asarray(self.v, float),
                np.asarray(self.alpha, float),
                np.asarray(self.beta, float),
            ),
            axis=-1,
        )

    @classmethod
    def _trusted(cls, delta, v, alpha, beta) -> "NIGParams":
        """Build without validation; for results valid by construction."""
        obj = object.__new__(cls)
        object.__setattr__(obj, "delta", delta)
        object.__setattr__(obj, "v", v)
        object.__setattr__(obj, "alpha", alpha)
        object.__setattr__(obj, "beta", beta)
        return obj

    def __getitem__(self, index) -> "NIGParams":
        """Index every (array) field alike."""
        return NIGParams._trusted(*(np.asarray(x)[index] for x in self.astuple()))

    @classmethod
    def from_array(cls, arr) -> "NIGParams":
        arr = np.asarray(arr, dtype=float)
        if arr.shape[-1] != 4:
            raise InvalidInputError(f"expected trailing axis of length 4, got {arr.shape}")
        if arr.ndim == 1:
            return cls(*(float(x) for x in arr))
        return cls(arr[..., 0], arr[..., 1], arr[..., 2], arr[..., 3])

    def astuple(self):
        return (self.delta, self.v, self.alpha, self.beta)


def softplus(x):
    """``log(1 + exp(x))``, returned as ``x`` itself above 30."""
    x = np.asarray(x, dtype=float)
    out = np.where(x > _SOFTPLUS_LINEAR, x, np.log1p(np.exp(np.minimum(x, _SOFTPLUS_LINEAR))))
    return out if out.ndim else float(out)


def _check_raw(raw) -> np.ndarray:
    raw = np.asarray(raw, dtype=float)
    if raw.shape[-1:] != (4,):
        raise InvalidInputError(f"raw evidence must have trailing length 4, got {raw.shape}")
    if not np.all(np.isfinite(raw)):
        raise InvalidInputError("raw evidence must be finite")
    return raw


def constrain(raw) -> NIGParams:
    """Map unconstrained 4-vectors onto valid NIG parameters.

    ``delta`` passes through unchanged; ``v`` and ``beta`` go through
    softplus, ``alpha`` through ``1 + softplus``. Results are floored so
    that downstream logs and divisions stay finite.
    """
    raw = _check_raw(raw)
    sp = np.maximum(softplus(raw[..., 1:]), _FLOORS)
    delta, v, alpha, beta = raw[..., 0].copy(), sp[..., 0], 1.0 + sp[..., 1], sp[..., 2]
    if raw.ndim == 1:
        return NIGParams(float(delta), float(v), float(alpha), float(beta))
    return NIGParams._trusted(delta, v, alpha, beta)


def constrain_vjp(raw, grad) -> np.ndarray:
    """Pull a ``(..., 4)`` gradient w.r.t. constrained params back to ``raw``.

    Floored entries receive zero gradient.
    """
    raw = np.asarray(raw, dtype=float)
    grad = np.asarray(grad, dtype=float)
    sig = expit(raw[..., 1:])
    sig = np.where(softplus(raw[..., 1:]) >= _FLOORS, sig, 0.0)
    out = np.empty(np.broadcast_shapes(raw.shape, grad.shape))
    out[..., 0] = grad[..., 0]
    out[..., 1:] = grad[..., 1:] * sig
    return out


def total_evidence(p: NIGParams):
    """Total evidence ``2v + alpha``."""
    return 2.0 * p.v + p.alpha


def mean_prediction(p: NIGParams):
    return p.delta


def _require_alpha(p: NIGParams):
    if not np.all(np.asarray(p.alpha) > 1):
        raise DomainError("uncertainty is undefined for alpha <= 1")


def aleatoric(p: NIGParams):
    """Expected data variance ``E[sigma^2] = beta / (alpha - 1)``."""
    _require_alpha(p)
    return p.beta / (p.alpha - 1.0)


def epistemic(p: NIGParams):
    """Variance of the mean ``Var[mu] = beta / (v (alpha - 1))``."""
    _require_alpha(p)
    return p.beta / (p.v * (p.alpha - 1.0))


def nig_fuse(a: NIGParams, b: NIGParams) -> NIGParams:
    """Combine two NIG distributions into one.

    The location is the ``v``-weighted mean, ``v`` adds, ``alpha`` adds
    plus one half, and ``beta`` adds plus the spread of the two locations
    around the fused one.
    """
    # written around the location gap so equal locations fuse exactly
    v = a.v + b.v
    gap = b.delta - a.delta
    delta = a.delta + (b.v / v) * gap
    alpha = a.alpha + b.alpha + 0.5
    beta = a.beta + b.beta + 0.5 * (a.v * b.v / v) * gap**2
    return NIGParams._trusted(delta, v, alpha, beta)


def nig_fuse_vjp(a: NIGParams, b: NIGParams, grad):
    """Gradients of ``nig_fuse(a, b)`` w.r.t. both inputs.

    ``grad`` is the ``(..., 4)`` upstream gradient; returns a pair of
    ``(..., 4)`` arrays. Uses the equivalent form
    ``beta = b1 + b2 + v1 v2 (d1 - d2)^2 / (2 (v1 + v2))``.
    """
    grad = np.asarray(grad, dtype=float)
    gd, gv, ga, gb = grad[..., 0], grad[..., 1], grad[..., 2], grad[..., 3]
    v1, v2 = np.asarray(a.v, float), np.asarray(b.v, float)
    diff = np.asarray(a.delta, float) - np.asarray(b.delta, float)
    vs = v1 + v2
    h = v1 * v2 / vs

    ga_out = np.empty(np.broadcast_shapes(grad.shape, np.shape(v1) + (4,)))
    gb_out = np.empty_like(ga_out)
    ga_out[..., 0] = gd * v1 / vs + gb * h * diff
    gb_out[..., 0] = gd * v2 / vs - gb * h * diff
    ga_out[..., 1] = gd * v2 * diff / vs**2 + gv + gb * 0.5 * diff**2 * (v2 / vs) ** 2
    gb_out[..., 1] = -gd * v1 * diff / vs**2 + gv + gb * 0.5 * diff**2 * (v1 / vs) ** 2
    ga_out[..., 2] = ga
    gb_out[..., 2] = ga
    ga_out[..., 3] = gb
    gb_out[..., 3] = gb
    return ga_out, gb_out


def nig_fuse_n(params: Sequence[NIGParams]) -> NIGParams:
    """Left fold of :func:`nig_fuse`; a single element is returned as is."""
    params = list(params)
    if not params:
        raise InvalidInputError("nig_fuse_n needs at least one distribution")
    return reduce(nig_fuse, params)


def nig_fuse_n_vjp(params: Sequence[NIGParams], grad) -> list[np.ndarray]:
    """Gradients of :func:`nig_fuse_n` w.r.t. each input, in input order."""
    params = list(params)
    if not params:
        raise InvalidInputError("nig_fuse_n needs at least one distribution")
    partials = [params[0]]
    for p in params[1:]:
        partials.append(nig_fuse(partials[-1], p))
    grads = [None] * len(params)
    g = np.asarray(grad, dtype=float)
    for k in range(len(params) - 1, 0, -1):
        g, grads[k] = nig_fuse_vjp(partials[k - 1], params[k], g)
    grads[0] = g
    return grads


def nig_fuse_along(p: NIGParams, axis: int = -1) -> NIGParams:
    """Fuse every distribution along ``axis`` of array-valued params at once.

    Equals the left fold of :func:`nig_fuse` over that axis: ``v`` and
    ``beta`` add, ``delta`` is the ``v``-weighted mean, ``alpha`` gains
    one half per pairwise fuse, and ``beta`` also collects the weighted
    spread of the locations around the fused one.
    """
    v_i = np.asarray(p.v, float)
    k = v_i.shape[axis]
    v = v_i.sum(axis=axis)
    first = np.take(p.delta, [0], axis=axis)
    delta = np.squeeze(first, axis) + (v_i * (p.delta - first)).sum(axis=axis) / v
    spread = np.asarray(p.delta) - np.expand_dims(delta, axis)
    alpha = np.sum(p.alpha, axis=axis) + 0.5 * (k - 1)
    beta = np.sum(p.beta, axis=axis) + 0.5 * (v_i * spread**2).sum(axis=axis)
    return NIGParams._trusted(delta, v, alpha, beta)


def nig_fuse_along_vjp(p: NIGParams, grad, axis: int = -1) -> np.ndarray:
    """Gradient of :func:`nig_fuse_along` w.r.t. each input, shape ``(..., 4)``.

    ``grad`` has shape ``(..., 4)`` for the fused output; the result has
    the inputs' shape plus a trailing 4.
    """
    axis = axis % np.ndim(p.v)
    v_i = np.asarray(p.v, float)
    v = v_i.sum(axis=axis, keepdims=True)
    delta = (v_i * p.delta).sum(axis=axis, keepdims=True) / v
    spread = np.asarray(p.delta) - delta
    g = np.expand_dims(np.asarray(grad, float), axis)
    gd, gv, ga, gb = g[..., 0], g[..., 1], g[..., 2], g[..., 3]
    out = np.empty(v_i.shape + (4,))
    out[..., 0] = gd * v_i / v + gb * v_i * spread
    out[..., 1] = gd * spread / v + gv + gb * 0.5 * spread**2
    out[..., 2] = ga
    out[..., 3] = gb
    return out


def nig_average(params: Sequence[NIGParams]) -> NIGParams:
    """Componentwise arithmetic mean of the four parameters."""
    params = list(params)
    if not params:
        raise InvalidInputError("nig_average needs at least one distribution")
    n = len(params)
    return NIGParams._trusted(*(sum(field) / n for field in zip(*(p.astuple() for p in params))))


def predictive_scale(p: NIGParams):
    """Scale of the Student-t predictive, ``sqrt(beta (1 + v) / (v alpha))``."""
    return np.sqrt(p.beta * (1.0 + p.v) / (p.v * p.alpha))


def predictive_interval(p: NIGParams, coverage: float = 0.95):
    """Central interval of the Student-t predictive with ``2 alpha`` dof.

    Returns ``(lo, hi)`` with the same shape as the parameter fields.
    """
    if not 0.0 < coverage < 1.0:
        raise InvalidInputError("coverage must lie in (0, 1)")
    half = stats.t.ppf(0.5 + 0.5 * coverage, 2.0 * np.asarray(p.alpha)) * predictive_scale(p)
    lo, hi = p.delta - half, p.delta + half
    if np.ndim(lo) == 0:
        return float(lo), float(hi)
    return lo, hi
