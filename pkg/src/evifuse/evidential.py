"""Evidential regression loss on NIG outputs and its analytic gradient."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import digamma, gammaln

from .errors import InvalidInputError
from .nig import NIGParams


@dataclass(frozen=True)
class EvidentialLossValue:
    nll: float | np.ndarray
    reg: float | np.ndarray
    total: float | np.ndarray
    tau: float


@dataclass(frozen=True)
class EvidentialGrad:
    d_delta: float | np.ndarray
    d_v: float | np.ndarray
    d_alpha: float | np.ndarray
    d_beta: float | np.ndarray

    def as_array(self) -> np.ndarray:
        return np.stack(
            np.broadcast_arrays(self.d_delta, self.d_v, self.d_alpha, self.d_beta), axis=-1
        )


def nll_loss(p: NIGParams, y):
    """Negative log marginal likelihood of ``y`` under the NIG evidence.

    With ``omega = 2 beta (1 + v)``::

        0.5 log(pi / v) + log(Gamma(alpha) / Gamma(alpha + 1/2))
          - alpha log(omega) + (alpha + 1/2) log((y - delta)^2 v + omega)
    """
    omega = 2.0 * p.beta * (1.0 + p.v)
    return (
        0.5 * np.log(np.pi / p.v)
        + gammaln(p.alpha)
        - gammaln(p.alpha + 0.5)
        - p.alpha * np.log(omega)
        + (p.alpha + 0.5) * np.log((y - p.delta) ** 2 * p.v + omega)
    )


def reg_loss(p: NIGParams, y):
    """Absolute error scaled by the total evidence ``2v + alpha``."""
    return np.abs(y - p.delta) * (2.0 * p.v + p.alpha)


def evidential_loss(p: NIGParams, y, tau: float) -> EvidentialLossValue:
    if tau < 0:
        raise InvalidInputError("tau must be non-negative")
    nll = nll_loss(p, y)
    reg = reg_loss(p, y)
    return EvidentialLossValue(nll=nll, reg=reg, total=nll + tau * reg, tau=tau)


def evidential_grad(p: NIGParams, y, tau: float) -> EvidentialGrad:
    """Gradient of ``nll + tau * reg`` w.r.t. ``(delta, v, alpha, beta)``.

    The kink of ``|y - delta|`` at ``y == delta`` gets subgradient 0.
    """
    if tau < 0:
        raise InvalidInputError("tau must be non-negative")
    delta, v, alpha, beta = p.delta, p.v, p.alpha, p.beta
    err = y - delta
    omega = 2.0 * beta * (1.0 + v)
    m = err**2 * v + omega
    ap = alpha + 0.5

    d_delta = -2.0 * ap * err * v / m
    d_v = -0.5 / v - alpha * 2.0 * beta / omega + ap * (err**2 + 2.0 * beta) / m
    d_alpha = digamma(alpha) - digamma(ap) - np.log(omega) + np.log(m)
    d_beta = -alpha / beta + ap * 2.0 * (1.0 + v) / m

    abs_err = np.abs(err)
    d_delta = d_delta - tau * np.sign(err) * (2.0 * v + alpha)
    d_v = d_v + tau * 2.0 * abs_err
    d_alpha = d_alpha + tau * abs_err
    return EvidentialGrad(d_delta, d_v, d_alpha, d_beta)
