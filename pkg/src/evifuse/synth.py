"""Seeded synthetic multi-region quality benchmark.

Every sample has a latent quality factor shared by its sub-regions. Each
sub-region perturbs it slightly; the MOS is an affine function of the
mean region quality plus heteroscedastic noise, clamped to ``[1, 5]``.
Features encode region quality along a fixed direction and are shifted
by scene and distortion embeddings, so all three labels are learnable
from the features. A per-image content vector with large variance, shared
by all views of the image, fills the remaining feature directions: it
carries no label information, so a random linear scorer is close to
uncorrelated with MOS while a trained one can project it out.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError

MOS_CENTER = 3.0
MOS_GAIN = 0.8
REGION_SPREAD = 0.15
FEATURE_NOISE = 0.1
GLOBAL_FEATURE_NOISE = 0.2
CONTENT_SCALE = 5.0


@dataclass(frozen=True)
class SynthConfig:
    n_samples: int = 2000
    n_subregions: int = 4
    feature_dim: int = 16
    n_scene: int = 3
    n_distortion: int = 3
    noise_scale: float = 0.05
    seed: int = 0

    def __post_init__(self):
        for name in ("n_samples", "n_subregions", "feature_dim", "n_scene", "n_distortion"):
            if int(getattr(self, name)) < 1:
                raise InvalidInputError(f"{name} must be positive")
        if self.noise_scale < 0:
            raise InvalidInputError("noise_scale must be non-negative")
        if not 0 <= int(self.seed) < 2**64:
            raise InvalidInputError("seed must be an unsigned 64-bit integer")


@dataclass(frozen=True)
class Sample:
    local_features: np.ndarray   # (N, F)
    global_features: np.ndarray  # (F,)
    mos: float
    scene: int
    distortion: int


@dataclass(frozen=True)
class Dataset:
    """Column-oriented store of samples; indexing yields :class:`Sample`."""

    local_features: np.ndarray   # (n, N, F)
    global_features: np.ndarray  # (n, F)
    mos: np.ndarray
    scene: np.ndarray
    distortion: np.ndarray
    n_scene: int
    n_distortion: int
    latent: np.ndarray | None = None  # mean region quality; MOS is affine in it before noise

    def __len__(self):
        return self.mos.shape[0]

    def __getitem__(self, i) -> Sample:
        return Sample(self.local_features[i], self.global_features[i], float(self.mos[i]),
                      int(self.scene[i]), int(self.distortion[i]))

    def __iter__(self):
        return (self[i] for i in range(len(self)))

    @property
    def n_subregions(self) -> int:
        return self.local_features.shape[1]

    @property
    def feature_dim(self) -> int:
        return self.local_features.shape[2]

    def subset(self, idx) -> "Dataset":
        idx = np.asarray(idx)
        return Dataset(self.local_features[idx], self.global_features[idx], self.mos[idx],
                       self.scene[idx], self.distortion[idx], self.n_scene, self.n_distortion,
                       None if self.latent is None else self.latent[idx])

    def split(self, test_fraction: float = 0.2, seed: int = 0):
        """Random ``(train, test)`` partition."""
        order = np.random.default_rng(seed).permutation(len(self))
        n_test = int(round(test_fraction * len(self)))
        return self.subset(np.sort(order[n_test:])), self.subset(np.sort(order[:n_test]))

    def scene_onehot(self) -> np.ndarray:
        return np.eye(self.n_scene)[self.scene]

    def distortion_onehot(self) -> np.ndarray:
        return np.eye(self.n_distortion)[self.distortion]


def _directions(rng, dim, count):
    """``count`` label directions and an orthonormal basis of the rest.

    Label directions are orthonormal whenever ``count <= dim``; otherwise
    they are random unit vectors and the content basis is empty.
    """
    raw = rng.standard_normal((dim, max(dim, count)))
    if count <= dim:
        q, _ = np.linalg.qr(raw)
        return q.T[:count], q.T[count:]
    raw = raw[:, :count]
    return (raw / np.linalg.norm(raw, axis=0)).T, np.zeros((0, dim))


def generate_dataset(cfg: SynthConfig) -> Dataset:
    rng = np.random.default_rng(int(cfg.seed))
    dirs, content_basis = _directions(rng, cfg.feature_dim, 1 + cfg.n_scene + cfg.n_distortion)
    quality_dir = dirs[0]
    scene_emb = dirs[1:1 + cfg.n_scene]
    dist_emb = dirs[1 + cfg.n_scene:]

    n, m = cfg.n_samples, cfg.n_subregions
    shared = rng.standard_normal(n)
    region_q = shared[:, None] + REGION_SPREAD * rng.standard_normal((n, m))
    latent = region_q.mean(axis=1)
    noise = cfg.noise_scale * (0.5 + 0.5 * np.abs(shared)) * rng.standard_normal(n)
    mos = np.clip(MOS_CENTER + MOS_GAIN * latent + noise, 1.0, 5.0)

    scene = rng.integers(cfg.n_scene, size=n)
    distortion = rng.integers(cfg.n_distortion, size=n)
    content = CONTENT_SCALE * rng.standard_normal((n, len(content_basis))) @ content_basis
    shift = scene_emb[scene] + dist_emb[distortion] + content

    local = (region_q[..., None] * quality_dir + shift[:, None, :]
             + FEATURE_NOISE * rng.standard_normal((n, m, cfg.feature_dim)))
    glob = (latent[:, None] * quality_dir + shift
            + GLOBAL_FEATURE_NOISE * rng.standard_normal((n, cfg.feature_dim)))
    return Dataset(local, glob, mos, scene, distortion, cfg.n_scene, cfg.n_distortion, latent)


def _header(dim):
    return ["sample_id", "view_id"] + [f"f{k}" for k in range(dim)] + ["mos", "scene", "distortion"]


def write_dataset_csv(ds: Dataset, path) -> None:
    """One row per view: locals get ``view_id`` 0..N-1, the global view -1."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(_header(ds.feature_dim))
        for i in range(len(ds)):
            tail = [repr(float(ds.mos[i])), int(ds.scene[i]), int(ds.distortion[i])]
            for v in range(ds.n_subregions):
                w.writerow([i, v, *map(repr, ds.local_features[i, v].tolist()), *tail])
            w.writerow([i, -1, *map(repr, ds.global_features[i].tolist()), *tail])


def read_dataset_csv(path, n_scene: int | None = None, n_distortion: int | None = None) -> Dataset:
    """Inverse of :func:`write_dataset_csv`.

    Label counts default to ``max label + 1`` when not given.
    """
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or header[:2] != ["sample_id", "view_id"] or header[-3:] != ["mos", "scene", "distortion"]:
            raise InvalidInputError(f"{path}: not a dataset CSV")
        dim = len(header) - 5
        rows = {}
        for lineno, row in enumerate(reader, 2):
            if len(row) != len(header):
                raise InvalidInputError(f"{path}:{lineno}: expected {len(header)} columns")
            try:
                sid, vid = int(row[0]), int(row[1])
                feats = np.array([float(x) for x in row[2:2 + dim]])
                record = (feats, float(row[-3]), int(row[-2]), int(row[-1]))
            except ValueError as exc:
                raise InvalidInputError(f"{path}:{lineno}: {exc}") from exc
            views = rows.setdefault(sid, {})
            if vid in views:
                raise InvalidInputError(f"{path}:{lineno}: duplicate view {vid} of sample {sid}")
            views[vid] = record
    if not rows:
        raise InvalidInputError(f"{path}: no samples")
    ids = sorted(rows)
    n_views = {len(v) for v in rows.values()}
    if len(n_views) != 1:
        raise InvalidInputError(f"{path}: samples disagree on view count")
    n_local = n_views.pop() - 1
    local = np.empty((len(ids), n_local, dim))
    glob = np.empty((len(ids), dim))
    mos = np.empty(len(ids))
    scene = np.empty(len(ids), dtype=int)
    distortion = np.empty(len(ids), dtype=int)
    for k, sid in enumerate(ids):
        views = rows[sid]
        if -1 not in views or set(views) - {-1} != set(range(n_local)):
            raise InvalidInputError(f"{path}: sample {sid} has malformed view ids")
        for v in range(n_local):
            local[k, v] = views[v][0]
        glob[k], mos[k], scene[k], distortion[k] = views[-1]
    n_scene = n_scene or int(scene.max()) + 1
    n_distortion = n_distortion or int(distortion.max()) + 1
    if scene.min() < 0 or scene.max() >= n_scene or distortion.min() < 0 \
            or distortion.max() >= n_distortion:
        raise InvalidInputError(f"{path}: labels outside the configured label sets")
    return Dataset(local, glob, mos, scene, distortion, n_scene, n_distortion)
