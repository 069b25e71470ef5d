"""From-scratch classifiers behind one fit/predict contract.

Implemented kinds: multinomial Naive Bayes over tf-idf mass, linear SVM and
logistic regression trained by mini-batch SGD, k-nearest-neighbors with
cosine distance, and a one-hidden-layer ReLU MLP with inverted dropout and
momentum SGD. Kinds the wider experiment tables mention but this package
does not train (tree ensembles, exact solvers, CNNs) are registered so that
sweep configs naming them fail fast with a clear message.

Every fit is deterministic given (spec, seed, data); prediction returns both
hard labels and a real decision score (margin, log-odds, vote fraction, or
probability).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np
from scipy import sparse

MARGIN_KINDS = {"svm_sgd", "lr_sgd", "mnb"}  # score thresholded at 0
PROBABILITY_KINDS = {"knn", "mlp"}           # score thresholded at 0.5

DEFAULT_HYPERPARAMS: dict[str, dict[str, Any]] = {
    "mnb": {"alpha": 1.0},
    "svm_sgd": {"learning_rate": 0.01, "decay": 1e-3, "l2": 1e-4, "epochs": 10, "batch_size": 32},
    "lr_sgd": {"learning_rate": 0.01, "decay": 1e-3, "l2": 1e-4, "epochs": 10, "batch_size": 32},
    "knn": {"k": 5},
    "mlp": {
        "hidden": 100,
        "dropout": 0.5,
        "momentum": 0.9,
        "epochs": 20,
        "batch_size": 32,
        "learning_rate": 0.1,
    },
}

UNAVAILABLE_KINDS: dict[str, str] = {
    "linear_svm": "exact-solver linear SVM",
    "newton_lr": "Newton-solver logistic regression",
    "lbfgs_lr": "L-BFGS logistic regression",
    "random_forest": "random forest",
    "adaboost": "AdaBoost",
    "xgboost": "XGBoost",
    "cnn1": "one-layer CNN with in-network embeddings",
    "cnn2": "two-layer CNN with in-network embeddings",
}


class UnavailableClassifierError(ValueError):
    """A recognized classifier kind that this package does not train."""


@dataclass(frozen=True)
class ClassifierSpec:
    kind: str
    params: dict = field(default_factory=dict)
    seed: int = 0

    def resolved_params(self) -> dict[str, Any]:
        if self.kind in UNAVAILABLE_KINDS:
            raise UnavailableClassifierError(
                f"classifier {self.kind!r} ({UNAVAILABLE_KINDS[self.kind]}) is recognized "
                f"but not trainable here; implemented kinds: "
                + ", ".join(sorted(DEFAULT_HYPERPARAMS))
            )
        if self.kind not in DEFAULT_HYPERPARAMS:
            raise ValueError(
                f"unknown classifier kind {self.kind!r}; implemented kinds: "
                + ", ".join(sorted(DEFAULT_HYPERPARAMS))
            )
        defaults = DEFAULT_HYPERPARAMS[self.kind]
        unknown = set(self.params) - set(defaults)
        if unknown:
            raise ValueError(
                f"unknown hyperparameter(s) for {self.kind}: {', '.join(sorted(unknown))}"
            )
        merged = {**defaults, **self.params}
        _validate_params(self.kind, merged)
        return merged


def _validate_params(kind: str, p: dict[str, Any]) -> None:
    def positive(name):
        if not p[name] > 0:
            raise ValueError(f"{kind}.{name} must be > 0, got {p[name]}")

    if kind == "mnb":
        positive("alpha")
    elif kind in ("svm_sgd", "lr_sgd"):
        positive("learning_rate")
        positive("epochs")
        if p["decay"] < 0:
            raise ValueError(f"{kind}.decay must be >= 0")
        if p["l2"] < 0:
            raise ValueError(f"{kind}.l2 must be >= 0")
        if p["batch_size"] is not None and p["batch_size"] < 1:
            raise ValueError(f"{kind}.batch_size must be >= 1 or None for full batch")
    elif kind == "knn":
        if int(p["k"]) < 1:
            raise ValueError(f"knn.k must be >= 1, got {p['k']}")
    elif kind == "mlp":
        positive("hidden")
        positive("epochs")
        positive("batch_size")
        positive("learning_rate")
        if not 0.0 <= p["dropout"] < 1.0:
            raise ValueError(f"mlp.dropout must be in [0, 1), got {p['dropout']}")
        if not 0.0 <= p["momentum"] < 1.0:
            raise ValueError(f"mlp.momentum must be in [0, 1), got {p['momentum']}")


@dataclass
class TrainedModel:
    kind: str
    n_features: int
    params: dict[str, Any]
    meta: dict[str, Any] = field(default_factory=dict)


def fit(spec: ClassifierSpec, X: sparse.csr_matrix, y: np.ndarray) -> TrainedModel:
    """Train a classifier; deterministic given the classifier spec's seed."""
    hp = spec.resolved_params()
    X = sparse.csr_matrix(X)
    y = np.asarray(y, dtype=np.int64)
    if X.shape[0] != y.shape[0]:
        raise ValueError(f"X has {X.shape[0]} rows but y has {y.shape[0]} labels")
    if X.shape[0] < 2:
        raise ValueError("need at least two training rows")
    present = np.unique(y)
    if not np.array_equal(present, np.array([0, 1])):
        raise ValueError(f"training labels must contain both classes 0 and 1, got {present}")

    fitter = _FITTERS[spec.kind]
    model = fitter(hp, X, y, spec.seed)
    model.meta.setdefault("seed", spec.seed)
    model.meta.setdefault("hyperparams", dict(hp))
    return model


def predict(model: TrainedModel, X: sparse.csr_matrix) -> tuple[np.ndarray, np.ndarray]:
    """Labels plus decision scores for each row.

    Margin-style scores threshold at 0, probability-style at 0.5; equality
    goes to the positive class.
    """
    X = sparse.csr_matrix(X)
    if X.shape[1] != model.n_features:
        raise ValueError(
            f"feature dimension mismatch: model expects {model.n_features}, got {X.shape[1]}"
        )
    scores = _SCORERS[model.kind](model, X)
    thresh = 0.5 if model.kind in PROBABILITY_KINDS else 0.0
    labels = (scores >= thresh).astype(np.int64)
    return labels, scores


# ---------------------------------------------------------------------------
# Multinomial Naive Bayes
# ---------------------------------------------------------------------------

def _fit_mnb(hp, X, y, seed) -> TrainedModel:
    alpha = float(hp["alpha"])
    if X.nnz and X.data.min() < 0:
        raise ValueError("mnb needs non-negative feature values (tf-idf mass)")
    n, V = X.shape
    log_prior = np.empty(2)
    log_lik = np.empty((2, V))
    for c in (0, 1):
        rows = X[y == c]
        log_prior[c] = np.log(rows.shape[0] / n)
        mass = np.asarray(rows.sum(axis=0)).ravel()
        # V == 0 (a filter emptied every document) leaves no likelihood terms
        log_lik[c] = np.log(mass + alpha) - (np.log(mass.sum() + alpha * V) if V else 0.0)
    return TrainedModel(
        kind="mnb",
        n_features=V,
        params={"log_prior": log_prior, "log_lik": log_lik},
    )


def _score_mnb(model, X) -> np.ndarray:
    lp = model.params["log_prior"]
    ll = model.params["log_lik"]
    joint1 = lp[1] + X @ ll[1]
    joint0 = lp[0] + X @ ll[0]
    return np.asarray(joint1 - joint0).ravel()


# ---------------------------------------------------------------------------
# Linear models by SGD (hinge / log loss + L2)
# ---------------------------------------------------------------------------

def _fit_sgd_linear(kind, hp, X, y, seed) -> TrainedModel:
    n, V = X.shape
    rng = np.random.default_rng(seed)
    w = np.zeros(V)
    b = 0.0
    lr0 = float(hp["learning_rate"])
    decay = float(hp["decay"])
    l2 = float(hp["l2"])
    epochs = int(hp["epochs"])
    batch_size = hp["batch_size"]
    full_batch = batch_size is None
    loss_fn = _hinge_objective if kind == "svm_sgd" else _log_objective
    grad_fn = _hinge_grad if kind == "svm_sgd" else _log_grad

    curve = []
    t = 0
    if full_batch:
        obj = loss_fn(X, y, w, b, l2)
        curve.append(obj)
        for _ in range(epochs):
            gw, gb = grad_fn(X, y, w, b, l2)
            lr = lr0 / (1.0 + decay * t)
            t += 1
            # Back the step off until the objective does not increase; the
            # monitored full-batch curve is non-increasing by construction.
            for _ in range(40):
                w2, b2 = w - lr * gw, b - lr * gb
                new_obj = loss_fn(X, y, w2, b2, l2)
                if new_obj <= obj + 1e-12:
                    w, b, obj = w2, b2, new_obj
                    break
                lr *= 0.5
            curve.append(obj)
    else:
        bs = int(batch_size)
        for _ in range(epochs):
            order = rng.permutation(n)
            for start in range(0, n, bs):
                batch = order[start : start + bs]
                gw, gb = grad_fn(X[batch], y[batch], w, b, l2)
                lr = lr0 / (1.0 + decay * t)
                w -= lr * gw
                b -= lr * gb
                t += 1
        curve.append(loss_fn(X, y, w, b, l2))

    final = curve[-1]
    if not np.isfinite(final):
        raise RuntimeError(f"{kind}: non-finite objective {final!r} after {t} updates")
    return TrainedModel(
        kind=kind,
        n_features=V,
        params={"w": w, "b": b},
        meta={"updates": t, "final_loss": final, "objective_curve": curve},
    )


def _hinge_objective(X, y, w, b, l2) -> float:
    sign = 2.0 * y - 1.0
    margins = 1.0 - sign * (X @ w + b)
    return 0.5 * l2 * float(w @ w) + float(np.maximum(margins, 0.0).mean())


def _hinge_grad(X, y, w, b, l2):
    sign = 2.0 * y - 1.0
    viol = (1.0 - sign * (X @ w + b)) > 0.0
    m = X.shape[0]
    if viol.any():
        coef = np.where(viol, -sign, 0.0) / m
        gw = np.asarray(X.T @ coef).ravel() + l2 * w
        gb = float(coef.sum())
    else:
        gw = l2 * w
        gb = 0.0
    return gw, gb


def _log_objective(X, y, w, b, l2) -> float:
    z = X @ w + b
    return 0.5 * l2 * float(w @ w) + float(np.mean(np.logaddexp(0.0, z) - y * z))


def _log_grad(X, y, w, b, l2):
    z = X @ w + b
    resid = (_sigmoid(z) - y) / X.shape[0]
    gw = np.asarray(X.T @ resid).ravel() + l2 * w
    gb = float(resid.sum())
    return gw, gb


def _sigmoid(z: np.ndarray) -> np.ndarray:
    return 0.5 * (1.0 + np.tanh(0.5 * np.clip(z, -500, 500)))


def _score_linear(model, X) -> np.ndarray:
    return np.asarray(X @ model.params["w"] + model.params["b"]).ravel()


# ---------------------------------------------------------------------------
# k-nearest neighbors (cosine distance on tf-idf rows)
# ---------------------------------------------------------------------------

def _fit_knn(hp, X, y, seed) -> TrainedModel:
    return TrainedModel(
        kind="knn",
        n_features=X.shape[1],
        params={"rows": X.copy(), "labels": y.copy(), "k": min(int(hp["k"]), X.shape[0])},
    )


def _score_knn(model, X) -> np.ndarray:
    train = model.params["rows"]
    labels = model.params["labels"]
    k = model.params["k"]
    sims = (X @ train.T).toarray()
    dist = 1.0 - sims
    n_train = train.shape[0]
    idx = np.broadcast_to(np.arange(n_train), dist.shape)
    order = np.lexsort((idx, dist), axis=1)[:, :k]
    return labels[order].mean(axis=1).astype(np.float64)


# ---------------------------------------------------------------------------
# One-hidden-layer MLP (ReLU, inverted dropout, momentum SGD)
# ---------------------------------------------------------------------------

def _init_mlp_params(V: int, H: int, rng: np.random.Generator) -> dict[str, np.ndarray]:
    r1 = np.sqrt(6.0 / (V + H))
    r2 = np.sqrt(6.0 / (H + 1))
    return {
        "W1": rng.uniform(-r1, r1, size=(V, H)),
        "b1": np.zeros(H),
        "w2": rng.uniform(-r2, r2, size=H),
        "b2": 0.0,
    }


def _mlp_forward(params, X, dropout_mask=None):
    Z1 = X @ params["W1"] + params["b1"]
    A1 = np.maximum(Z1, 0.0)
    if dropout_mask is not None:
        A1 = A1 * dropout_mask
    z2 = A1 @ params["w2"] + params["b2"]
    return Z1, A1, z2


def _mlp_loss(params, X, y, dropout_mask=None) -> float:
    _, _, z2 = _mlp_forward(params, X, dropout_mask)
    return float(np.mean(np.logaddexp(0.0, z2) - y * z2))


def _mlp_grads(params, X, y, dropout_mask=None):
    Z1, A1, z2 = _mlp_forward(params, X, dropout_mask)
    m = X.shape[0]
    dz2 = (_sigmoid(z2) - y) / m
    gw2 = A1.T @ dz2
    gb2 = float(dz2.sum())
    dA1 = np.outer(dz2, params["w2"])
    if dropout_mask is not None:
        dA1 = dA1 * dropout_mask
    dZ1 = dA1 * (Z1 > 0.0)
    gW1 = np.asarray(X.T @ dZ1)
    gb1 = dZ1.sum(axis=0)
    return {"W1": gW1, "b1": gb1, "w2": gw2, "b2": gb2}


def _fit_mlp(hp, X, y, seed) -> TrainedModel:
    n, V = X.shape
    H = int(hp["hidden"])
    p_drop = float(hp["dropout"])
    lr = float(hp["learning_rate"])
    mu = float(hp["momentum"])
    epochs = int(hp["epochs"])
    bs = int(hp["batch_size"])
    rng = np.random.default_rng(seed)
    params = _init_mlp_params(V, H, rng)
    velocity = {k: np.zeros_like(v) if isinstance(v, np.ndarray) else 0.0 for k, v in params.items()}

    curve = []
    for _ in range(epochs):
        order = rng.permutation(n)
        for start in range(0, n, bs):
            batch = order[start : start + bs]
            Xb = X[batch]
            yb = y[batch]
            mask = None
            if p_drop > 0.0:
                # Inverted scaling at train time; inference needs no rescale.
                mask = (rng.random((Xb.shape[0], H)) >= p_drop) / (1.0 - p_drop)
            grads = _mlp_grads(params, Xb, yb, mask)
            for key in params:
                velocity[key] = mu * velocity[key] - lr * grads[key]
                params[key] = params[key] + velocity[key]
        epoch_loss = _mlp_loss(params, X, y)
        if not np.isfinite(epoch_loss):
            raise RuntimeError(f"mlp: non-finite loss {epoch_loss!r} at epoch {len(curve) + 1}")
        curve.append(epoch_loss)

    return TrainedModel(
        kind="mlp",
        n_features=V,
        params=params,
        meta={"loss_curve": curve, "final_loss": curve[-1]},
    )


def _score_mlp(model, X) -> np.ndarray:
    _, _, z2 = _mlp_forward(model.params, X)
    return _sigmoid(np.asarray(z2).ravel())


def mlp_gradient_check(
    spec: ClassifierSpec, X: np.ndarray | sparse.spmatrix, y: np.ndarray, h: float = 1e-5
) -> float:
    """Max relative error between analytic MLP gradients and central finite
    differences over every parameter, with dropout disabled.

    Meant for tiny dense instances (a handful of rows and features).
    """
    hp = spec.resolved_params()
    X = np.asarray(X.todense() if sparse.issparse(X) else X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    rng = np.random.default_rng(spec.seed)
    params = _init_mlp_params(X.shape[1], int(hp["hidden"]), rng)
    analytic = _mlp_grads(params, X, y)

    worst = 0.0
    for key in ("W1", "b1", "w2", "b2"):
        value = params[key]
        if isinstance(value, float):
            num = _central_diff_scalar(params, key, X, y, h)
            worst = max(worst, _rel_err(analytic[key], num))
            continue
        flat = value.reshape(-1)
        grad_flat = np.asarray(analytic[key]).reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + h
            up = _mlp_loss(params, X, y)
            flat[i] = orig - h
            down = _mlp_loss(params, X, y)
            flat[i] = orig
            num = (up - down) / (2.0 * h)
            worst = max(worst, _rel_err(grad_flat[i], num))
    return worst


def _central_diff_scalar(params, key, X, y, h) -> float:
    orig = params[key]
    params[key] = orig + h
    up = _mlp_loss(params, X, y)
    params[key] = orig - h
    down = _mlp_loss(params, X, y)
    params[key] = orig
    return (up - down) / (2.0 * h)


def _rel_err(a: float, n: float) -> float:
    return abs(a - n) / max(abs(a) + abs(n), 1e-8)


_FITTERS = {
    "mnb": _fit_mnb,
    "svm_sgd": lambda hp, X, y, seed: _fit_sgd_linear("svm_sgd", hp, X, y, seed),
    "lr_sgd": lambda hp, X, y, seed: _fit_sgd_linear("lr_sgd", hp, X, y, seed),
    "knn": _fit_knn,
    "mlp": _fit_mlp,
}

_SCORERS = {
    "mnb": _score_mnb,
    "svm_sgd": _score_linear,
    "lr_sgd": _score_linear,
    "knn": _score_knn,
    "mlp": _score_mlp,
}
