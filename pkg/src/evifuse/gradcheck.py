"""Finite-difference checks of every hand-written gradient."""

from __future__ import annotations

import numpy as np

from .evidential import evidential_grad, evidential_loss
from .fusion import FusionConfig
from .joint import joint_softmax, joint_softmax_vjp
from .multitask import TaskWeights
from .nig import NIGParams, constrain, constrain_vjp, nig_fuse, nig_fuse_vjp
from .scorer import TinyScorer
from .synth import SynthConfig, generate_dataset
from .train import loss_and_grads, make_batch
from .fusion import overall_loss

MODULE_TOL = 1e-5
END_TO_END_TOL = 1e-4


def rel_error(analytic, numeric, floor: float = 1e-8) -> float:
    """Max elementwise ``|a - n| / max(|a|, |n|, floor)``."""
    a, n = np.asarray(analytic, float), np.asarray(numeric, float)
    return float(np.max(np.abs(a - n) / np.maximum(np.maximum(np.abs(a), np.abs(n)), floor)))


def numeric_grad(f, x: np.ndarray, h: float) -> np.ndarray:
    """Central differences of scalar ``f()`` w.r.t. ``x``, perturbed in place."""
    out = np.zeros_like(x)
    for k in np.ndindex(x.shape):
        orig = x[k]
        x[k] = orig + h
        fp = f()
        x[k] = orig - h
        fm = f()
        x[k] = orig
        out[k] = (fp - fm) / (2 * h)
    return out


def _random_nig(rng):
    return np.array([rng.normal(0, 2), rng.uniform(0.1, 10), rng.uniform(1.2, 10),
                     rng.uniform(0.1, 10)])


def check_evidential(n: int = 100, seed: int = 0, h: float = 1e-5, corrupt: bool = False) -> float:
    """Max relative error of the evidential loss gradient over ``n`` random points.

    Targets are kept away from the ``|y - delta|`` kink.
    """
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n):
        x = _random_nig(rng)
        y = x[0] + rng.choice([-1, 1]) * rng.uniform(0.1, 5)
        tau = rng.uniform(0, 0.5)
        f = lambda: evidential_loss(NIGParams(*x), y, tau).total  # noqa: E731
        analytic = evidential_grad(NIGParams(*x), y, tau).as_array()
        if corrupt:
            analytic = analytic * 1.5
        worst = max(worst, rel_error(analytic, numeric_grad(f, x, h), 1e-6))
    return worst


def check_fusion(n: int = 100, seed: int = 1, h: float = 1e-5) -> float:
    """Fusion operator vjp against differences of a random linear read-out."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n):
        a, b, w = _random_nig(rng), _random_nig(rng), rng.normal(size=4)
        f = lambda: float(nig_fuse(NIGParams(*a), NIGParams(*b)).as_array() @ w)  # noqa: E731
        ga, gb = nig_fuse_vjp(NIGParams(*a), NIGParams(*b), w)
        worst = max(worst, rel_error(ga, numeric_grad(f, a, h), 1e-6),
                    rel_error(gb, numeric_grad(f, b, h), 1e-6))
    return worst


def check_constrain(n: int = 100, seed: int = 2, h: float = 1e-5) -> float:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n):
        raw, w = rng.normal(0, 3, size=4), rng.normal(size=4)
        f = lambda: float(constrain(raw).as_array() @ w)  # noqa: E731
        worst = max(worst, rel_error(constrain_vjp(raw, w), numeric_grad(f, raw, h), 1e-6))
    return worst


def check_joint_softmax(n: int = 20, seed: int = 3, h: float = 1e-5) -> float:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n):
        logits = rng.normal(size=(5, 2, 3))
        kappa = np.array([rng.uniform(0.2, 2.0)])
        w = rng.normal(size=logits.shape)
        f = lambda: float(np.sum(joint_softmax(logits, kappa[0]) * w))  # noqa: E731
        probs = joint_softmax(logits, kappa[0])
        g_logits, g_kappa = joint_softmax_vjp(logits, kappa[0], probs, w)
        worst = max(worst, rel_error(g_logits, numeric_grad(f, logits, h), 1e-6),
                    rel_error(g_kappa, numeric_grad(f, kappa, h), 1e-6))
    return worst


def gradcheck_modules(seed: int = 0, corrupt: bool = False) -> dict:
    """Max relative error of each building-block gradient."""
    return {
        "evidential_loss": check_evidential(seed=seed, corrupt=corrupt),
        "nig_fuse": check_fusion(seed=seed + 1),
        "constrain": check_constrain(seed=seed + 2),
        "joint_softmax": check_joint_softmax(seed=seed + 3),
    }


def gradcheck_end_to_end(seed: int = 0, n_samples: int = 2, h: float = 1e-5,
                         fusion_cfg: FusionConfig | None = None, corrupt: bool = False,
                         floor: float = 1e-6) -> dict:
    """Compare backprop gradients of the overall loss with central differences.

    Runs on a tiny synthetic batch and returns the max relative error per
    parameter tensor. ``corrupt`` perturbs the analytic gradient so the
    check can be seen to fail.
    """
    fusion_cfg = fusion_cfg or FusionConfig()
    data = generate_dataset(SynthConfig(n_samples=n_samples, feature_dim=4, n_scene=2,
                                        n_distortion=2, seed=seed))
    rng = np.random.default_rng(seed)
    scorer = TinyScorer.init(data.feature_dim, data.n_scene, data.n_distortion, rng, scale=0.3)
    scorer.log_kappa = float(np.log(0.5))
    weights = TaskWeights(1.0, 0.7, 1.3)
    idx = np.arange(n_samples)
    _, _, grads = loss_and_grads(scorer, data, idx, weights, fusion_cfg)
    params = scorer.parameters()

    def f():
        scorer.set_parameters(params)
        batch, _, _ = make_batch(scorer, data, idx)
        return overall_loss(batch, scorer.proj, weights, fusion_cfg)[0]

    errors = {}
    for name in params:
        x = np.atleast_1d(params[name])
        params[name] = x
        numeric = numeric_grad(f, x, h).reshape(np.shape(grads[name]))
        analytic = grads[name] * (1.5 if corrupt else 1.0)
        errors[name] = rel_error(analytic, numeric, floor)
    return errors
