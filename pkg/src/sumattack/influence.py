"""Gradient-dump influence scoring.

Reads GDMP dumps, computes DataInf-style closed-form influence per layer,
and ships two oracles for validation: a dense damped-Hessian solve and a
leave-one-out retraining loop on a small built-in logistic model.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path
from typing import BinaryIO, Sequence

import numpy as np

from sumattack.errors import (
    BadMagicError,
    DumpError,
    InfluenceError,
    NonFiniteDumpError,
    TruncatedDumpError,
)

MAGIC = b"GDMP"
VERSION = 1
EXACT_DIM_GUARD = 512


@dataclass(frozen=True)
class GradientDump:
    """Per-example, per-layer flattened float32 gradients.

    ``train_grads`` and ``test_grads`` are (rows, sum(layer_dims)) arrays;
    layers are concatenated in ``layer_dims`` order.
    """

    layer_dims: tuple[int, ...]
    train_grads: np.ndarray
    test_grads: np.ndarray
    train_ids: tuple[str, ...]

    @property
    def n_train(self) -> int:
        return self.train_grads.shape[0]

    @property
    def n_test(self) -> int:
        return self.test_grads.shape[0]

    @property
    def total_dim(self) -> int:
        return int(sum(self.layer_dims))

    def __post_init__(self):
        total = sum(self.layer_dims)
        if any(d < 1 for d in self.layer_dims) or not self.layer_dims:
            raise DumpError("layer_dims must be non-empty positive integers")
        if self.train_grads.ndim != 2 or self.train_grads.shape[1] != total:
            raise DumpError(
                f"train gradients have width {self.train_grads.shape}, expected {total}"
            )
        if self.test_grads.ndim != 2 or self.test_grads.shape[1] != total:
            raise DumpError(
                f"test gradients have width {self.test_grads.shape}, expected {total}"
            )
        if len(self.train_ids) != self.train_grads.shape[0]:
            raise DumpError(
                f"{len(self.train_ids)} train ids for {self.train_grads.shape[0]} gradient rows"
            )
        if not np.isfinite(self.train_grads).all() or not np.isfinite(self.test_grads).all():
            raise NonFiniteDumpError("gradient dump contains non-finite values")

    def layer_slices(self) -> list[slice]:
        out, offset = [], 0
        for d in self.layer_dims:
            out.append(slice(offset, offset + d))
            offset += d
        return out


def write_dump(dump: GradientDump, path: str | Path) -> None:
    with open(path, "wb") as fh:
        _write_stream(dump, fh)


def _write_stream(dump: GradientDump, fh: BinaryIO) -> None:
    fh.write(MAGIC)
    fh.write(struct.pack("<IIII", VERSION, dump.n_train, dump.n_test, len(dump.layer_dims)))
    fh.write(struct.pack(f"<{len(dump.layer_dims)}I", *dump.layer_dims))
    fh.write(np.ascontiguousarray(dump.train_grads, dtype="<f4").tobytes())
    fh.write(np.ascontiguousarray(dump.test_grads, dtype="<f4").tobytes())
    for tid in dump.train_ids:
        raw = tid.encode("utf-8")
        fh.write(struct.pack("<I", len(raw)))
        fh.write(raw)


class _Cursor:
    """Byte reader that converts shortfalls into truncation errors."""

    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int, what: str) -> bytes:
        if self.pos + n > len(self.data):
            raise TruncatedDumpError(
                f"dump truncated reading {what}: needed {n} bytes at offset {self.pos}, "
                f"file has {len(self.data)}"
            )
        chunk = self.data[self.pos : self.pos + n]
        self.pos += n
        return chunk

    def u32(self, what: str) -> int:
        return struct.unpack("<I", self.take(4, what))[0]


def read_dump(path: str | Path) -> GradientDump:
    """Parse and fully validate a GDMP file.

    Bad magic, truncation, and non-finite payloads raise distinct error
    types so callers can tell corruption modes apart.
    """
    data = Path(path).read_bytes()
    cur = _Cursor(data)
    magic = cur.take(4, "magic")
    if magic != MAGIC:
        raise BadMagicError(f"not a gradient dump: magic {magic!r}, expected {MAGIC!r}")
    version = cur.u32("version")
    if version != VERSION:
        raise DumpError(f"unsupported dump version {version}, expected {VERSION}")
    n_train = cur.u32("n_train")
    n_test = cur.u32("n_test")
    n_layers = cur.u32("n_layers")
    if n_layers == 0:
        raise DumpError("dump declares zero layers")
    dims = struct.unpack(f"<{n_layers}I", cur.take(4 * n_layers, "layer dims"))
    total = int(sum(dims))
    if total == 0:
        raise DumpError("dump declares zero total dimension")

    def grid(rows: int, what: str) -> np.ndarray:
        raw = cur.take(rows * total * 4, what)
        return np.frombuffer(raw, dtype="<f4").reshape(rows, total).astype(np.float64)

    train = grid(n_train, "train gradients")
    test = grid(n_test, "test gradients")
    ids = []
    for i in range(n_train):
        length = cur.u32(f"id length {i}")
        ids.append(cur.take(length, f"id {i}").decode("utf-8"))
    if cur.pos != len(data):
        raise DumpError(f"dump has {len(data) - cur.pos} trailing bytes")
    if not np.isfinite(train).all() or not np.isfinite(test).all():
        raise NonFiniteDumpError("gradient dump contains non-finite values")
    return GradientDump(
        layer_dims=tuple(int(d) for d in dims),
        train_grads=train,
        test_grads=test,
        train_ids=tuple(ids),
    )


@dataclass(frozen=True)
class InfluenceConfig:
    damping_scale: float = 0.1
    aggregation: str = "mean_test_gradient"

    def __post_init__(self):
        if self.damping_scale <= 0:
            raise InfluenceError(f"damping_scale must be positive, got {self.damping_scale}")
        if self.aggregation != "mean_test_gradient":
            raise InfluenceError(f"unknown aggregation {self.aggregation!r}")


@dataclass(frozen=True)
class InfluenceScores:
    scores: dict[str, float]
    ranking: tuple[str, ...]  # descending |score|, ties by id

    def as_array(self, ids: Sequence[str]) -> np.ndarray:
        return np.array([self.scores[i] for i in ids])


def _build_scores(ids: Sequence[str], values: np.ndarray) -> InfluenceScores:
    scores = {i: float(v) for i, v in zip(ids, values)}
    ranking = tuple(sorted(scores, key=lambda i: (-abs(scores[i]), i)))
    return InfluenceScores(scores=scores, ranking=ranking)


def _layer_damping(grads: np.ndarray, scale: float, layer: int) -> float:
    n, d = grads.shape
    total_sq = float(np.sum(grads * grads))
    if total_sq == 0.0:
        raise InfluenceError(f"degenerate layer {layer}: all training gradients are zero")
    return scale * total_sq / (n * d)


def datainf_scores(dump: GradientDump, cfg: InfluenceConfig | None = None) -> InfluenceScores:
    """Closed-form DataInf influence against the mean test gradient.

    Per layer l with damping lambda_l = scale * (sum_i ||g_i||^2)/(n*d):
    r_l = (1/lambda_l) [v_l - (1/n) sum_i ((g_i . v_l)/(lambda_l + ||g_i||^2)) g_i]
    and score(k) = -sum_l g_{l,k} . r_l. Sherman-Morrison makes this exact
    for a single training row.
    """
    cfg = cfg or InfluenceConfig()
    if dump.n_train < 1 or dump.n_test < 1:
        raise InfluenceError("dump must contain at least one train and one test row")
    v_full = dump.test_grads.mean(axis=0)
    totals = np.zeros(dump.n_train)
    for layer, sl in enumerate(dump.layer_slices()):
        g = dump.train_grads[:, sl]
        v = v_full[sl]
        lam = _layer_damping(g, cfg.damping_scale, layer)
        sq_norms = np.einsum("ij,ij->i", g, g)
        coeff = (g @ v) / (lam + sq_norms)
        r = (v - (g.T @ coeff) / dump.n_train) / lam
        totals -= g @ r
    return _build_scores(dump.train_ids, totals)


def exact_scores(dump: GradientDump, cfg: InfluenceConfig | None = None) -> InfluenceScores:
    """Dense oracle: solve (G^T G / n + lambda_l I) x = v_l per layer.

    Refuses dumps wider than 512 total dimensions; use datainf_scores there.
    """
    cfg = cfg or InfluenceConfig()
    if dump.total_dim > EXACT_DIM_GUARD:
        raise InfluenceError(
            f"total dimension {dump.total_dim} exceeds the dense guard "
            f"({EXACT_DIM_GUARD}); use datainf_scores for dumps this large"
        )
    if dump.n_train < 1 or dump.n_test < 1:
        raise InfluenceError("dump must contain at least one train and one test row")
    v_full = dump.test_grads.mean(axis=0)
    totals = np.zeros(dump.n_train)
    for layer, sl in enumerate(dump.layer_slices()):
        g = dump.train_grads[:, sl]
        v = v_full[sl]
        lam = _layer_damping(g, cfg.damping_scale, layer)
        d = g.shape[1]
        hessian = g.T @ g / dump.n_train + lam * np.eye(d)
        x = np.linalg.solve(hessian, v)
        totals -= g @ x
    return _build_scores(dump.train_ids, totals)


def select_influential(scores: InfluenceScores, k: int) -> list[str]:
    """First k ids of the |score|-descending ranking."""
    if k < 0:
        raise InfluenceError(f"k must be non-negative, got {k}")
    if k > len(scores.ranking):
        raise InfluenceError(f"k={k} exceeds the {len(scores.ranking)} scored rows")
    return list(scores.ranking[:k])


# Leave-one-out oracle: ridge logistic regression, full-batch gradient
# descent. Small-problem guard keeps retraining n+1 models cheap.

LOO_MAX_ROWS = 200
LOO_MAX_DIM = 20
GRAD_TOL = 1e-8
MAX_ITERATIONS = 500_000


def _log1pexp(z: np.ndarray) -> np.ndarray:
    # log(1 + exp(z)) without overflow for large z
    out = np.empty_like(z)
    big = z > 30
    out[big] = z[big]
    out[~big] = np.log1p(np.exp(z[~big]))
    return out


def logistic_loss(w: np.ndarray, x: np.ndarray, y: np.ndarray, reg: float = 0.0) -> float:
    """Mean log-loss for labels in {0,1} plus (reg/2)||w||^2."""
    signs = 2.0 * y - 1.0
    margins = -signs * (x @ w)
    return float(np.mean(_log1pexp(margins)) + 0.5 * reg * (w @ w))


def logistic_gradient(w: np.ndarray, x: np.ndarray, y: np.ndarray, reg: float = 0.0) -> np.ndarray:
    signs = 2.0 * y - 1.0
    sig = 1.0 / (1.0 + np.exp(signs * (x @ w)))
    return -(x.T @ (signs * sig)) / len(y) + reg * w


def per_example_gradients(w: np.ndarray, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Unregularized per-row loss gradients at w, shape (n, d)."""
    signs = 2.0 * y - 1.0
    sig = 1.0 / (1.0 + np.exp(signs * (x @ w)))
    return -(signs * sig)[:, None] * x


def train_logistic(
    x: np.ndarray, y: np.ndarray, reg: float, w0: np.ndarray | None = None
) -> np.ndarray:
    """Full-batch gradient descent to gradient norm <= 1e-8.

    Step size 1/L with L = ||X||_F^2 / (4n) + reg (a Lipschitz bound for the
    ridge logistic objective), so descent is monotone without line search.
    """
    n, d = x.shape
    lipschitz = float(np.sum(x * x)) / (4.0 * n) + reg
    step = 1.0 / lipschitz
    w = np.zeros(d) if w0 is None else w0.copy()
    for _ in range(MAX_ITERATIONS):
        grad = logistic_gradient(w, x, y, reg)
        norm = float(np.linalg.norm(grad))
        if norm <= GRAD_TOL:
            return w
        w = w - step * grad
    raise InfluenceError(
        f"logistic training did not reach gradient norm {GRAD_TOL} "
        f"within {MAX_ITERATIONS} iterations (last norm {norm:.3e})"
    )


def loo_oracle(
    features: np.ndarray,
    labels: np.ndarray,
    test_features: np.ndarray,
    test_labels: np.ndarray,
    regularization: float = 0.01,
) -> np.ndarray:
    """delta(k) = test_loss(trained without row k) - test_loss(full model).

    Positive delta means row k was helping. Retrains from the full solution
    for speed; convergence is to the same unique ridge optimum either way.
    """
    n, d = features.shape
    if n > LOO_MAX_ROWS or d > LOO_MAX_DIM:
        raise InfluenceError(
            f"loo_oracle is limited to n<={LOO_MAX_ROWS}, d<={LOO_MAX_DIM}; got n={n}, d={d}"
        )
    if regularization <= 0:
        raise InfluenceError("loo_oracle needs positive regularization")
    w_full = train_logistic(features, labels, regularization)
    base = logistic_loss(w_full, test_features, test_labels, reg=0.0)
    deltas = np.empty(n)
    mask = np.ones(n, dtype=bool)
    for k in range(n):
        mask[k] = False
        w_k = train_logistic(features[mask], labels[mask], regularization, w0=w_full)
        deltas[k] = logistic_loss(w_k, test_features, test_labels, reg=0.0) - base
        mask[k] = True
    return deltas


def make_synthetic_problem(
    n_train: int = 60,
    n_test: int = 24,
    d: int = 8,
    seed: int = 7,
    flip_fraction: float = 0.15,
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Two-Gaussian classification data with a few flipped training labels.

    The flipped rows become strongly (harmfully) influential, giving the
    influence estimators a real signal to rank.
    """
    rng = np.random.default_rng(seed)
    center = rng.normal(size=d)
    center /= np.linalg.norm(center)

    def draw(n: int) -> tuple[np.ndarray, np.ndarray]:
        y = rng.integers(0, 2, size=n).astype(np.float64)
        signs = 2.0 * y - 1.0
        x = rng.normal(scale=0.9, size=(n, d)) + signs[:, None] * center * 1.6
        return x, y

    x_train, y_train = draw(n_train)
    x_test, y_test = draw(n_test)
    n_flip = int(round(flip_fraction * n_train))
    if n_flip:
        flip_idx = rng.choice(n_train, size=n_flip, replace=False)
        y_train[flip_idx] = 1.0 - y_train[flip_idx]
    return x_train, y_train, x_test, y_test


def dump_from_problem(
    x_train: np.ndarray,
    y_train: np.ndarray,
    x_test: np.ndarray,
    y_test: np.ndarray,
    regularization: float = 0.01,
    id_prefix: str = "row",
) -> GradientDump:
    """Train the built-in model and package per-example gradients at the
    optimum as a single-layer dump."""
    w = train_logistic(x_train, y_train, regularization)
    train_g = per_example_gradients(w, x_train, y_train)
    test_g = per_example_gradients(w, x_test, y_test)
    width = len(str(max(1, len(y_train) - 1)))
    ids = tuple(f"{id_prefix}-{i:0{width}d}" for i in range(len(y_train)))
    return GradientDump(
        layer_dims=(x_train.shape[1],),
        train_grads=train_g.astype(np.float32).astype(np.float64),
        test_grads=test_g.astype(np.float32).astype(np.float64),
        train_ids=ids,
    )
