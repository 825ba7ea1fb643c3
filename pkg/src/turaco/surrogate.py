"""One-hidden-layer ReLU networks trained with Adam, and the stratified surrogate.

Networks are plain numpy: forward pass, hand-written backprop of the mean
squared error, and a bias-corrected Adam update.
"""

from __future__ import annotations

import json
import zlib
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .desugar import desugar
from .interp import ERROR_PATH, run_batch
from .syntax import Program, TuracoError


class SurrogateError(TuracoError):
    pass


class DispatchError(SurrogateError):
    pass


@dataclass
class MlpParams:
    W1: np.ndarray  # (hidden, in)
    b1: np.ndarray  # (hidden,)
    W2: np.ndarray  # (out, hidden)
    b2: np.ndarray  # (out,)

    @property
    def dims(self) -> tuple[int, int, int]:
        return self.W1.shape[1], self.W1.shape[0], self.W2.shape[0]

    def arrays(self) -> list[np.ndarray]:
        return [self.W1, self.b1, self.W2, self.b2]

    def to_json(self) -> dict:
        n_in, hidden, n_out = self.dims
        return {
            "dims": {"in": n_in, "hidden": hidden, "out": n_out},
            **{k: getattr(self, k).tolist() for k in ("W1", "b1", "W2", "b2")},
        }

    @classmethod
    def from_json(cls, obj: dict) -> "MlpParams":
        try:
            d = obj["dims"]
            p = cls(
                np.array(obj["W1"], dtype=float).reshape(d["hidden"], d["in"]),
                np.array(obj["b1"], dtype=float).reshape(d["hidden"]),
                np.array(obj["W2"], dtype=float).reshape(d["out"], d["hidden"]),
                np.array(obj["b2"], dtype=float).reshape(d["out"]),
            )
        except (KeyError, ValueError) as exc:
            raise SurrogateError(f"malformed model: {exc}") from None
        return p


@dataclass(frozen=True)
class TrainConfig:
    hidden: int = 256
    lr: float = 5e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    batch: int = 128
    steps: int = 2000
    seed: int = 0

    def __post_init__(self):
        for k in ("hidden", "lr", "batch", "steps", "eps"):
            if not getattr(self, k) > 0:
                raise SurrogateError(f"{k} must be positive")
        if not (0 <= self.beta1 < 1 and 0 <= self.beta2 < 1):
            raise SurrogateError("Adam betas must lie in [0, 1)")


PAPER_SCALE = TrainConfig(hidden=1024, steps=10_000)


def init_params(n_in: int, hidden: int, n_out: int, seed) -> MlpParams:
    """Glorot-uniform weights, zero biases."""
    if min(n_in, hidden, n_out) < 1:
        raise SurrogateError("network dimensions must be positive")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    a1 = np.sqrt(6.0 / (n_in + hidden))
    a2 = np.sqrt(6.0 / (hidden + n_out))
    return MlpParams(
        rng.uniform(-a1, a1, size=(hidden, n_in)),
        np.zeros(hidden),
        rng.uniform(-a2, a2, size=(n_out, hidden)),
        np.zeros(n_out),
    )


def forward(params: MlpParams, x) -> np.ndarray:
    """``W2 relu(W1 x + b1) + b2``; ``x`` is one input or a ``(n, in)`` batch."""
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    X = x[None, :] if single else x
    if X.ndim != 2 or X.shape[1] != params.W1.shape[1]:
        raise SurrogateError(f"expected inputs of width {params.W1.shape[1]}, got shape {x.shape}")
    H = np.maximum(X @ params.W1.T + params.b1, 0.0)
    Y = H @ params.W2.T + params.b2
    return Y[0] if single else Y


def mse_and_grads(params: MlpParams, X: np.ndarray, Y: np.ndarray) -> tuple[float, MlpParams]:
    """Mean squared error over all output entries and its gradient."""
    Z = X @ params.W1.T
    Z += params.b1
    H = np.maximum(Z, 0.0)
    err = H @ params.W2.T
    err += params.b2
    err -= Y
    loss = float(np.mean(err**2))
    dY = err * (2.0 / err.size)
    dZ = dY @ params.W2
    dZ *= Z > 0
    return loss, MlpParams(dZ.T @ X, dZ.sum(axis=0), dY.T @ H, dY.sum(axis=0))


@dataclass
class Adam:
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = 0
    m: list = field(default_factory=list)
    v: list = field(default_factory=list)

    def step(self, params: list, grads: list) -> None:
        """Update ``params`` in place."""
        if not self.m:
            self.m = [np.zeros_like(p) for p in params]
            self.v = [np.zeros_like(p) for p in params]
        self.t += 1
        c1 = 1 - self.beta1**self.t
        c2 = 1 - self.beta2**self.t
        for p, g, m, v in zip(params, grads, self.m, self.v):
            m *= self.beta1
            m += (1 - self.beta1) * g
            v *= self.beta2
            v += (1 - self.beta2) * g * g
            p -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)


@dataclass
class TrainResult:
    params: MlpParams
    losses: np.ndarray  # minibatch loss per step


def train(X, Y, cfg: TrainConfig = TrainConfig()) -> TrainResult:
    """Fit one network to ``(X, Y)`` with minibatches drawn with replacement."""
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    if len(X) == 0:
        raise SurrogateError("cannot train on an empty dataset")
    if Y.ndim == 1:
        Y = Y[:, None]
    rng = np.random.default_rng(cfg.seed)
    params = init_params(X.shape[1], cfg.hidden, Y.shape[1], rng)
    opt = Adam(cfg.lr, cfg.beta1, cfg.beta2, cfg.eps)
    arrays = params.arrays()
    losses = np.empty(cfg.steps)
    for s in range(cfg.steps):
        idx = rng.integers(0, len(X), size=cfg.batch)
        losses[s], g = mse_and_grads(params, X[idx], Y[idx])
        opt.step(arrays, g.arrays())
    return TrainResult(params, losses)


def evaluate_error(params: MlpParams, X, Y) -> float:
    """Mean absolute error, averaged over outputs then records."""
    X = np.asarray(X, dtype=float)
    if len(X) == 0:
        raise SurrogateError("cannot evaluate on an empty test set")
    Y = np.asarray(Y, dtype=float).reshape(len(X), -1)
    return float(np.mean(np.abs(forward(params, X) - Y)))


@dataclass
class StratifiedSurrogate:
    program: Program  # dispatch runs this program's control flow
    models: dict  # path -> MlpParams

    def __post_init__(self):
        self.program = desugar(self.program)


def train_stratified(
    p: Program, dataset, cfg: TrainConfig, paths, n_in: int, n_out: int
) -> StratifiedSurrogate:
    """One network per path in ``paths``; a path without data keeps its untrained init."""
    models = {}
    for path in paths:
        X, Y = dataset.stratum(path)
        path_cfg = replace(cfg, seed=_path_seed(cfg.seed, path))
        if len(X):
            models[path] = train(X, Y, path_cfg).params
        else:
            models[path] = init_params(n_in, cfg.hidden, n_out, path_cfg.seed)
    return StratifiedSurrogate(p, models)


def _path_seed(seed, path: str) -> np.random.SeedSequence:
    return np.random.SeedSequence(seed, spawn_key=(zlib.crc32(path.encode()),))


def predict_batch(ss: StratifiedSurrogate, X) -> tuple[np.ndarray, np.ndarray]:
    """Dispatch each row on its program path; returns ``(Y, paths)``."""
    X = np.asarray(X, dtype=float)
    paths = run_batch(ss.program, X).paths
    n_out = next(iter(ss.models.values())).dims[2] if ss.models else 0
    Y = np.empty((len(X), n_out))
    for path in sorted(set(paths)):
        if path == ERROR_PATH:
            raise DispatchError("input makes the program fail; no path to dispatch on")
        model = ss.models.get(path)
        if model is None:
            raise DispatchError(f"no surrogate for path {path!r} (dormant during training)")
        rows = paths == path
        Y[rows] = forward(model, X[rows])
    return Y, paths


def stratified_predict(ss: StratifiedSurrogate, x) -> tuple[np.ndarray, str]:
    Y, paths = predict_batch(ss, np.asarray(x, dtype=float).reshape(1, -1))
    return Y[0], str(paths[0])


def stratified_error(ss: StratifiedSurrogate, X, Y) -> float:
    pred, _ = predict_batch(ss, X)
    return float(np.mean(np.abs(pred - np.asarray(Y).reshape(pred.shape))))


def labeled_test_set(p: Program, spec, m: int, rng) -> tuple[np.ndarray, np.ndarray]:
    """``m`` fresh uniform draws labeled by the interpreter (failing rows redrawn)."""
    if m < 1:
        raise SurrogateError("need at least one test draw")
    core = desugar(p)
    xs, ys, have = [], [], 0
    for _ in range(100):
        X = spec.sample(rng, m - have)
        res = run_batch(core, X)
        ok = res.paths != ERROR_PATH
        xs.append(X[ok])
        ys.append(res.outputs[ok])
        have += int(ok.sum())
        if have == m:
            return np.concatenate(xs), np.concatenate(ys)
    raise SurrogateError("program fails on almost every input")


def stratified_evaluate(ss: StratifiedSurrogate, p: Program, spec, m: int, rng) -> float:
    X, Y = labeled_test_set(p, spec, m, rng)
    return stratified_error(ss, X, Y)


def save_models(ss: StratifiedSurrogate, path, extra: dict | None = None) -> None:
    obj = {"models": {k: v.to_json() for k, v in sorted(ss.models.items())}, **(extra or {})}
    Path(path).write_text(json.dumps(obj, indent=1) + "\n")


def load_models(p: Program, path) -> StratifiedSurrogate:
    obj = json.loads(Path(path).read_text())
    if "models" not in obj:
        raise SurrogateError(f"{path}: not a model file")
    return StratifiedSurrogate(p, {k: MlpParams.from_json(v) for k, v in obj["models"].items()})
