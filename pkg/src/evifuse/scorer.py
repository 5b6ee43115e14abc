"""A small differentiable scorer standing in for a vision-language backbone.

Each view's feature vector goes through one affine map to ``C*S*D``
logits, then a temperature softmax gives the joint score. The evidence
projections for the three tasks are part of the scorer's parameters.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError
from .joint import N_QUALITY, TASKS, EvidenceProjection, ViewSet, joint_softmax, joint_softmax_vjp

KAPPA_INIT = 0.07


@dataclass
class TinyScorer:
    weight: np.ndarray      # (F, C*S*D)
    bias: np.ndarray        # (C*S*D,)
    log_kappa: float
    proj: EvidenceProjection
    n_scene: int
    n_distortion: int

    @classmethod
    def init(cls, feature_dim: int, n_scene: int, n_distortion: int, rng=None,
             scale: float = 0.01, kappa: float = KAPPA_INIT) -> "TinyScorer":
        rng = np.random.default_rng(rng)
        k = N_QUALITY * n_scene * n_distortion
        weight = rng.normal(0.0, scale, size=(feature_dim, k))
        proj = EvidenceProjection.init(n_scene, n_distortion, rng)
        return cls(weight, np.zeros(k), float(np.log(kappa)), proj, n_scene, n_distortion)

    @classmethod
    def zeros(cls, feature_dim: int, n_scene: int, n_distortion: int,
              kappa: float = KAPPA_INIT) -> "TinyScorer":
        k = N_QUALITY * n_scene * n_distortion
        return cls(np.zeros((feature_dim, k)), np.zeros(k), float(np.log(kappa)),
                   EvidenceProjection.zeros(n_scene, n_distortion), n_scene, n_distortion)

    @property
    def kappa(self) -> float:
        return float(np.exp(self.log_kappa))

    @property
    def feature_dim(self) -> int:
        return self.weight.shape[0]

    @property
    def joint_shape(self):
        return (N_QUALITY, self.n_scene, self.n_distortion)

    def logits(self, features) -> np.ndarray:
        features = np.asarray(features, dtype=float)
        if features.shape[-1] != self.feature_dim:
            raise InvalidInputError(
                f"scorer expects {self.feature_dim} features, got {features.shape[-1]}"
            )
        flat = features @ self.weight + self.bias
        return flat.reshape(features.shape[:-1] + self.joint_shape)

    def joint(self, features) -> np.ndarray:
        return joint_softmax(self.logits(features), self.kappa)

    # parameter access used by the optimizer and serialization
    def parameters(self) -> dict:
        params = {"weight": self.weight, "bias": self.bias,
                  "log_kappa": np.array([self.log_kappa])}
        for t in TASKS:
            params[f"proj_w_{t}"] = self.proj.weights[t]
            params[f"proj_b_{t}"] = self.proj.biases[t]
        return params

    def set_parameters(self, params: dict) -> None:
        self.weight = np.array(params["weight"], dtype=float)
        self.bias = np.array(params["bias"], dtype=float)
        self.log_kappa = float(np.asarray(params["log_kappa"]).reshape(-1)[0])
        for t in TASKS:
            self.proj.weights[t] = np.array(params[f"proj_w_{t}"], dtype=float)
            self.proj.biases[t] = np.array(params[f"proj_b_{t}"], dtype=float)

    def copy(self) -> "TinyScorer":
        out = TinyScorer.zeros(self.feature_dim, self.n_scene, self.n_distortion)
        out.set_parameters({k: np.copy(v) for k, v in self.parameters().items()})
        return out


def scorer_forward(scorer: TinyScorer, local_features, global_features) -> ViewSet:
    """Joint scores for every view; works for one sample or a batch.

    ``local_features`` is ``(..., N, F)`` and ``global_features``
    ``(..., F)``.
    """
    return ViewSet(scorer.joint(local_features), scorer.joint(global_features))


def scorer_backward(scorer: TinyScorer, local_features, global_features,
                    views: ViewSet, g_locals, g_global) -> dict:
    """Gradients of the affine map and temperature from gradients on the joints."""
    grads = {}
    g_w = np.zeros_like(scorer.weight)
    g_b = np.zeros_like(scorer.bias)
    g_kappa = 0.0
    for feats, probs, g in ((local_features, views.locals_, g_locals),
                            (global_features, views.global_view, g_global)):
        logits = scorer.logits(feats)
        g_logits, gk = joint_softmax_vjp(logits, scorer.kappa, probs, g)
        flat = g_logits.reshape(-1, int(np.prod(scorer.joint_shape)))
        x = np.asarray(feats, dtype=float).reshape(-1, scorer.feature_dim)
        g_w += x.T @ flat
        g_b += flat.sum(axis=0)
        g_kappa += gk
    grads["weight"] = g_w
    grads["bias"] = g_b
    grads["log_kappa"] = np.array([g_kappa * scorer.kappa])
    return grads


def save_scorer(scorer: TinyScorer, path) -> None:
    """Write parameters as text: one line per tensor, ``name<TAB>shape<TAB>values``.

    Values are row-major and printed with ``repr`` so they round-trip
    exactly.
    """
    lines = [_tensor_line("dims", np.array([scorer.feature_dim, N_QUALITY,
                                            scorer.n_scene, scorer.n_distortion], dtype=float))]
    for name, value in scorer.parameters().items():
        lines.append(_tensor_line(name, np.asarray(value, dtype=float)))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def _tensor_line(name, arr):
    shape = ",".join(str(s) for s in arr.shape)
    values = " ".join(repr(float(x)) for x in arr.ravel())
    return f"{name}\t{shape}\t{values}"


def load_scorer(path) -> TinyScorer:
    tensors = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if not line:
                continue
            try:
                name, shape, values = line.split("\t")
                dims = tuple(int(s) for s in shape.split(",") if s)
                arr = np.array([float(x) for x in values.split()], dtype=float).reshape(dims)
            except ValueError as exc:
                raise InvalidInputError(f"{path}:{lineno}: malformed tensor line") from exc
            tensors[name] = arr
    if "dims" not in tensors:
        raise InvalidInputError(f"{path}: missing dims record")
    feature_dim, _, n_scene, n_distortion = (int(x) for x in tensors.pop("dims"))
    scorer = TinyScorer.zeros(feature_dim, n_scene, n_distortion)
    expected = scorer.parameters()
    missing = set(expected) - set(tensors)
    if missing:
        raise InvalidInputError(f"{path}: missing tensors {sorted(missing)}")
    for name, value in expected.items():
        if tensors[name].shape != np.shape(value):
            raise InvalidInputError(f"{path}: tensor {name} has shape {tensors[name].shape}")
    scorer.set_parameters(tensors)
    return scorer
