"""Flat ``key = value`` run configuration."""

from __future__ import annotations

from dataclasses import asdict, dataclass, fields

from .errors import InvalidInputError
from .fusion import FusionConfig
from .synth import SynthConfig
from .train import TrainConfig

_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


@dataclass(frozen=True)
class RunConfig:
    # data
    n_samples: int = 2000
    n_subregions: int = 4
    feature_dim: int = 16
    n_scene: int = 3
    n_distortion: int = 3
    noise_scale: float = 0.05
    seed: int = 0
    val_fraction: float = 0.2
    # objective
    lambda1: float = 0.1
    lambda2: float = 0.1
    tau: float = 0.05
    n_fuse: int = 4
    # optimizer
    lr: float = 1e-2
    epochs: int = 200
    batch_size: int = 16
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    # ablations
    enable_LU: bool = True
    enable_LF: bool = True
    enable_scene_task: bool = True
    enable_distortion_task: bool = True
    out: str = "out"

    def __post_init__(self):
        if not 0.0 <= self.val_fraction < 1.0:
            raise InvalidInputError("val_fraction must lie in [0, 1)")
        # building the component configs runs their validation
        self.synth(), self.fusion(), self.train()

    def synth(self) -> SynthConfig:
        return SynthConfig(self.n_samples, self.n_subregions, self.feature_dim, self.n_scene,
                           self.n_distortion, self.noise_scale, self.seed)

    def fusion(self) -> FusionConfig:
        return FusionConfig(lambda1=self.lambda1, lambda2=self.lambda2, tau=self.tau,
                            n_fuse=self.n_fuse, enable_cross_region=self.enable_LU,
                            enable_local_global=self.enable_LF)

    def train(self) -> TrainConfig:
        return TrainConfig(lr=self.lr, epochs=self.epochs, batch_size=self.batch_size,
                           seed=self.seed, beta1=self.beta1, beta2=self.beta2, eps=self.eps,
                           enable_scene_task=self.enable_scene_task,
                           enable_distortion_task=self.enable_distortion_task)

    def to_text(self) -> str:
        return "".join(f"{k} = {v}\n" for k, v in asdict(self).items())


def _coerce(raw: str, kind, key: str):
    try:
        if kind is bool:
            low = raw.lower()
            if low in _TRUE:
                return True
            if low in _FALSE:
                return False
            raise ValueError(raw)
        if kind is int:
            return int(raw, 0)
        return kind(raw)
    except ValueError as exc:
        raise InvalidInputError(f"bad value for {key}: {raw!r}") from exc


_KINDS = {"int": int, "float": float, "bool": bool, "str": str}
_TYPES = {f.name: _KINDS[f.type] for f in fields(RunConfig)}


def parse_config(text: str, **overrides) -> RunConfig:
    """Parse ``key = value`` lines; ``#`` starts a comment. Unknown keys are errors."""
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InvalidInputError(f"line {lineno}: expected key = value")
        key, raw = (s.strip() for s in line.split("=", 1))
        if key not in _TYPES:
            raise InvalidInputError(f"line {lineno}: unknown key {key!r}")
        if key in values:
            raise InvalidInputError(f"line {lineno}: duplicate key {key!r}")
        values[key] = _coerce(raw, _TYPES[key], key)
    values.update({k: v for k, v in overrides.items() if v is not None})
    return RunConfig(**values)


def load_config(path=None, **overrides) -> RunConfig:
    if path is None:
        return parse_config("", **overrides)
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise InvalidInputError(f"cannot read config {path}: {exc.strerror}") from exc
    return parse_config(text, **overrides)
