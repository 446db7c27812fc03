"""Calibrated one-vs-all linear concept probers and the MLP baseline.

Each prober is a 5-fold ensemble of L1-regularized logistic classifiers
trained by proximal SGD; every fold carries sigmoid calibration
parameters fitted on its held-out split. The CAV is the unit-normalized
mean of the fold weight vectors.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.optimize import minimize

from .errors import MissingArtifactError, RainconceptsError, SkipConcept
from .features import FeatureStore
from .labels import ConceptLabelSet

BUNDLE_MAGIC = b"PRBR"

DEFAULT_MIN_SAMPLES = 20
SPLIT_SEED = 42
VALIDATION_FRACTION = 0.1
N_FOLDS = 5


@dataclass
class ProberTrainConfig:
    l1_lambda: float = 1e-4
    epochs: int = 50
    eta0: float = 0.05
    power_t: float = 0.5
    seed: int = 42
    min_samples: int = DEFAULT_MIN_SAMPLES


@dataclass(frozen=True)
class FoldMember:
    weights: np.ndarray
    bias: float
    platt_a: float
    platt_b: float

    def margin(self, x: np.ndarray) -> np.ndarray:
        return np.asarray(x, dtype=np.float64) @ self.weights + self.bias

    def probability(self, x: np.ndarray) -> np.ndarray:
        return _sigmoid(self.platt_a * self.margin(x) + self.platt_b)


@dataclass(frozen=True)
class ConceptProber:
    concept_id: int
    folds: tuple[FoldMember, ...]
    cav: np.ndarray
    converged: bool = True

    @property
    def dim(self) -> int:
        return self.cav.size


@dataclass(frozen=True)
class ProbeResult:
    concept_id: int
    probability: float
    uncertainty: float


@dataclass(frozen=True)
class BinaryDataset:
    """Per-concept one-vs-all dataset with a fixed 9:1 stratified split."""

    x_train: np.ndarray
    y_train: np.ndarray
    x_val: np.ndarray
    y_val: np.ndarray
    positive_rows: np.ndarray  # store row indices of the positive class
    negative_rows: np.ndarray


def _sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * np.asarray(z, dtype=np.float64)))


def build_binary_dataset(
    labels: ConceptLabelSet,
    concept_id: int,
    store: FeatureStore,
    min_samples: int = DEFAULT_MIN_SAMPLES,
    seed: int = SPLIT_SEED,
) -> BinaryDataset:
    """All positives of the concept plus a stratified matched negative sample."""
    key_to_row = {store.key(i): i for i in range(len(store))}
    pos_rows = [key_to_row[k] for k in labels.keys_for(concept_id) if k in key_to_row]
    if len(pos_rows) < min_samples:
        raise SkipConcept(concept_id, len(pos_rows), min_samples)

    # stratify negatives over the other concepts
    rng = np.random.default_rng(seed)
    pos_set = set(pos_rows)
    by_concept: dict[int, list[int]] = {}
    for key, ids in labels.assignments.items():
        row = key_to_row.get(key)
        if row is None or row in pos_set:
            continue
        for cid in ids:
            if cid != concept_id:
                by_concept.setdefault(cid, []).append(row)
    pool_sizes = {cid: len(rows) for cid, rows in by_concept.items()}
    total = sum(pool_sizes.values())
    if total == 0:
        raise SkipConcept(concept_id, len(pos_rows), min_samples)
    want = len(pos_rows)
    neg_rows: list[int] = []
    for cid in sorted(by_concept):
        share = max(1, round(want * pool_sizes[cid] / total))
        rows = sorted(by_concept[cid])
        take = min(share, len(rows))
        neg_rows.extend(rng.choice(rows, size=take, replace=False).tolist())
    neg_rows = sorted(set(neg_rows))[:want]

    pos_rows = np.array(sorted(pos_rows))
    neg_rows = np.array(neg_rows)

    def split(rows):
        rows = rng.permutation(rows)
        n_val = int(len(rows) * VALIDATION_FRACTION)
        return rows[n_val:], rows[:n_val]

    pos_tr, pos_va = split(pos_rows)
    neg_tr, neg_va = split(neg_rows)
    x = store.vectors.astype(np.float64)
    return BinaryDataset(
        x_train=np.concatenate([x[pos_tr], x[neg_tr]]),
        y_train=np.concatenate([np.ones(len(pos_tr)), np.zeros(len(neg_tr))]),
        x_val=np.concatenate([x[pos_va], x[neg_va]]),
        y_val=np.concatenate([np.ones(len(pos_va)), np.zeros(len(neg_va))]),
        positive_rows=pos_rows,
        negative_rows=neg_rows,
    )


def _sgd_l1_logistic(x, y, config: ProberTrainConfig, rng) -> tuple[np.ndarray, float, bool]:
    """Proximal SGD on logistic loss + l1_lambda * ||w||_1.

    The soft-threshold step after each update produces exact zeros.
    """
    n, dim = x.shape
    w = np.zeros(dim)
    b = 0.0
    t = 0
    lam = config.l1_lambda
    last_delta = np.inf
    for _ in range(config.epochs):
        prev = w.copy()
        for i in rng.permutation(n):
            t += 1
            lr = config.eta0 / t ** config.power_t
            p = _sigmoid(x[i] @ w + b)
            g = p - y[i]
            w -= lr * g * x[i]
            b -= lr * g
            if lam > 0:
                w = np.sign(w) * np.maximum(np.abs(w) - lr * lam, 0.0)
        last_delta = float(np.abs(w - prev).max())
        if last_delta < 1e-8:
            break
    return w, b, last_delta < 1e-3


def fit_platt(margins: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    """Fit sigmoid calibration p = sigma(A*margin + B) by NLL minimization.

    Uses the corrected targets (N+ + 1)/(N+ + 2) and 1/(N- + 2) to keep
    tiny folds from collapsing to hard 0/1 targets.
    """
    margins = np.asarray(margins, dtype=np.float64)
    y = np.asarray(y)
    n_pos = float((y > 0.5).sum())
    n_neg = float(len(y) - n_pos)
    target = np.where(y > 0.5, (n_pos + 1.0) / (n_pos + 2.0), 1.0 / (n_neg + 2.0))

    def nll(theta):
        a, b = theta
        z = a * margins + b
        # log(1+e^z) computed stably
        log1pe = np.logaddexp(0.0, z)
        return float(np.sum(log1pe - target * z))

    def grad(theta):
        a, b = theta
        p = _sigmoid(a * margins + b)
        d = p - target
        return np.array([np.dot(d, margins), d.sum()])

    res = minimize(nll, x0=np.array([1.0, 0.0]), jac=grad, method="BFGS")
    return float(res.x[0]), float(res.x[1])


def _stratified_folds(y: np.ndarray, n_folds: int, rng) -> list[np.ndarray]:
    folds: list[list[int]] = [[] for _ in range(n_folds)]
    for cls in (1.0, 0.0):
        idx = rng.permutation(np.nonzero(y == cls)[0])
        for j, i in enumerate(idx):
            folds[j % n_folds].append(int(i))
    return [np.array(sorted(f)) for f in folds]


def train_prober(
    x: np.ndarray,
    y: np.ndarray,
    concept_id: int = 0,
    config: ProberTrainConfig | None = None,
) -> ConceptProber:
    """Train the 5-fold calibrated ensemble for one concept.

    ``x``/``y`` are the training split of a BinaryDataset (y in {0, 1}).
    """
    config = config or ProberTrainConfig()
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if not ((y > 0.5).any() and (y < 0.5).any()):
        raise RainconceptsError("both classes must be present")
    rng = np.random.default_rng(config.seed)
    folds_idx = _stratified_folds(y, N_FOLDS, rng)
    members = []
    converged = True
    for k in range(N_FOLDS):
        held = folds_idx[k]
        train = np.concatenate([folds_idx[j] for j in range(N_FOLDS) if j != k])
        # a fixed-seed shuffler per fold keeps each member a pure function
        # of its training data: identical folds give identical members
        fold_rng = np.random.default_rng(config.seed + 1)
        w, b, ok = _sgd_l1_logistic(x[train], y[train], config, fold_rng)
        converged = converged and ok
        # quantize to the f32 wire precision before calibration so the
        # persisted prober reproduces the in-memory probabilities
        w = w.astype(np.float32).astype(np.float64)
        a, pb = fit_platt(x[held] @ w + b, y[held])
        members.append(FoldMember(weights=w, bias=float(b), platt_a=a, platt_b=pb))
    mean_w = np.mean([m.weights for m in members], axis=0)
    norm = np.linalg.norm(mean_w)
    if norm == 0:
        raise RainconceptsError("degenerate prober: all fold weights are zero")
    return ConceptProber(concept_id=concept_id,
                         folds=tuple(members),
                         cav=(mean_w / norm).astype(np.float64),
                         converged=converged)


def probe(prober: ConceptProber, vector: np.ndarray) -> ProbeResult:
    vector = np.asarray(getattr(vector, "vector", vector), dtype=np.float64)
    if vector.size != prober.dim:
        raise RainconceptsError(
            f"feature dim {vector.size} != prober dim {prober.dim}"
        )
    probs = np.array([m.probability(vector) for m in prober.folds])
    return ProbeResult(concept_id=prober.concept_id,
                       probability=float(probs.mean()),
                       uncertainty=float(probs.var()))


def probe_all(probers: list[ConceptProber], vector: np.ndarray) -> list[ProbeResult]:
    if not probers:
        raise RainconceptsError("no probers available")
    results = [probe(p, vector) for p in probers]
    return sorted(results, key=lambda r: (-r.probability, r.concept_id))


# --- MLP baseline ---------------------------------------------------------

@dataclass
class MlpConfig:
    hidden: int = 64
    learning_rate: float = 1e-3
    epochs: int = 300
    seed: int = 42


class MlpProber:
    """Two-layer softmax baseline with temperature-scaled outputs."""

    def __init__(self, w1, b1, w2, b2, temperature: float = 1.0):
        self.w1, self.b1, self.w2, self.b2 = w1, b1, w2, b2
        self.temperature = temperature

    def logits(self, x: np.ndarray) -> np.ndarray:
        h = np.maximum(np.asarray(x, dtype=np.float64) @ self.w1 + self.b1, 0.0)
        return h @ self.w2 + self.b2

    def predict_proba(self, x: np.ndarray) -> np.ndarray:
        z = self.logits(x) / self.temperature
        z = z - z.max(axis=-1, keepdims=True)
        e = np.exp(z)
        return (e / e.sum(axis=-1, keepdims=True))[..., 1]


def train_mlp_baseline(
    x: np.ndarray,
    y: np.ndarray,
    config: MlpConfig | None = None,
    x_val: np.ndarray | None = None,
    y_val: np.ndarray | None = None,
) -> MlpProber:
    """Full-batch Adam on softmax cross-entropy; temperature fitted on the
    validation split when one is given."""
    config = config or MlpConfig()
    rng = np.random.default_rng(config.seed)
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y).astype(int)
    dim = x.shape[1]
    w1 = rng.normal(0, np.sqrt(2.0 / dim), (dim, config.hidden))
    b1 = np.zeros(config.hidden)
    w2 = rng.normal(0, np.sqrt(2.0 / config.hidden), (config.hidden, 2))
    b2 = np.zeros(2)
    params = [w1, b1, w2, b2]
    m = [np.zeros_like(p) for p in params]
    v = [np.zeros_like(p) for p in params]
    beta1, beta2, eps = 0.9, 0.999, 1e-8
    onehot = np.eye(2)[y]
    for t in range(1, config.epochs + 1):
        h_pre = x @ params[0] + params[1]
        h = np.maximum(h_pre, 0.0)
        z = h @ params[2] + params[3]
        z = z - z.max(axis=1, keepdims=True)
        e = np.exp(z)
        p = e / e.sum(axis=1, keepdims=True)
        dz = (p - onehot) / len(x)
        grads = [None] * 4
        grads[2] = h.T @ dz
        grads[3] = dz.sum(axis=0)
        dh = dz @ params[2].T
        dh[h_pre <= 0] = 0.0
        grads[0] = x.T @ dh
        grads[1] = dh.sum(axis=0)
        for i in range(4):
            m[i] = beta1 * m[i] + (1 - beta1) * grads[i]
            v[i] = beta2 * v[i] + (1 - beta2) * grads[i] ** 2
            mhat = m[i] / (1 - beta1 ** t)
            vhat = v[i] / (1 - beta2 ** t)
            params[i] = params[i] - config.learning_rate * mhat / (np.sqrt(vhat) + eps)
    mlp = MlpProber(*params)
    if x_val is not None and len(x_val):
        mlp.temperature = _fit_temperature(mlp.logits(x_val), np.asarray(y_val).astype(int))
    return mlp


def _fit_temperature(logits: np.ndarray, y: np.ndarray) -> float:
    def nll(log_t):
        z = logits / np.exp(log_t[0])
        z = z - z.max(axis=1, keepdims=True)
        logp = z - np.log(np.exp(z).sum(axis=1, keepdims=True))
        return -float(logp[np.arange(len(y)), y].sum())

    res = minimize(nll, x0=np.array([0.0]), method="Nelder-Mead")
    return float(np.exp(res.x[0]))


# --- bundle serialization -------------------------------------------------

def save_bundle(path: Path, probers: list[ConceptProber]) -> None:
    if not probers:
        raise RainconceptsError("refusing to write an empty prober bundle")
    dim = probers[0].dim
    with open(path, "wb") as fh:
        fh.write(struct.pack("<4sII", BUNDLE_MAGIC, len(probers), dim))
        for p in sorted(probers, key=lambda p: p.concept_id):
            if p.dim != dim or len(p.folds) != N_FOLDS:
                raise RainconceptsError("inconsistent prober in bundle")
            fh.write(struct.pack("<I", p.concept_id))
            for fm in p.folds:
                fh.write(np.asarray(fm.weights, dtype="<f4").tobytes())
                fh.write(struct.pack("<ddd", fm.bias, fm.platt_a, fm.platt_b))
            fh.write(np.asarray(p.cav, dtype="<f4").tobytes())


def load_bundle(path: Path) -> list[ConceptProber]:
    path = Path(path)
    if not path.exists():
        raise MissingArtifactError(f"prober bundle not found: {path}")
    data = path.read_bytes()
    magic, count, dim = struct.unpack_from("<4sII", data)
    if magic != BUNDLE_MAGIC:
        raise RainconceptsError(f"{path}: bad magic {magic!r}")
    off = 12
    probers = []
    for _ in range(count):
        (cid,) = struct.unpack_from("<I", data, off)
        off += 4
        folds = []
        for _ in range(N_FOLDS):
            w = np.frombuffer(data, dtype="<f4", count=dim, offset=off).astype(np.float64)
            off += 4 * dim
            bias, a, b = struct.unpack_from("<ddd", data, off)
            off += 24
            folds.append(FoldMember(weights=w, bias=bias, platt_a=a, platt_b=b))
        cav = np.frombuffer(data, dtype="<f4", count=dim, offset=off).astype(np.float64)
        off += 4 * dim
        probers.append(ConceptProber(concept_id=cid, folds=tuple(folds), cav=cav))
    return probers
