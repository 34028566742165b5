"""Probabilistic binary classifiers over dense feature rows.

Three model families, all emitting normalized (p_not_relevant, p_relevant)
pairs: multinomial naive Bayes on count vectors, logistic regression trained
by full-batch gradient descent, and a linear SVM trained by primal
stochastic subgradient descent with its margins calibrated through a fitted
sigmoid.

Trained models are immutable and prediction is pure, so models can be shared
across threads.  Each training run is single-threaded and a deterministic
function of (data, hyperparameters, seed).
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .features import FeatureMatrix

_SUM_TOL = 1e-9


@dataclass(frozen=True)
class PosteriorPair:
    """Normalized class posteriors: (p_not_relevant, p_relevant)."""

    p_neg: float
    p_pos: float

    def __post_init__(self) -> None:
        if not (0.0 <= self.p_neg <= 1.0 and 0.0 <= self.p_pos <= 1.0):
            raise ValueError(f"posteriors must lie in [0, 1], got ({self.p_neg}, {self.p_pos})")
        if abs(self.p_neg + self.p_pos - 1.0) > _SUM_TOL:
            raise ValueError(
                f"posteriors must sum to 1, got {self.p_neg} + {self.p_pos}"
            )


@dataclass(frozen=True)
class NBModel:
    """Multinomial naive Bayes with Laplace smoothing."""

    log_prior: np.ndarray  # shape (2,)
    log_likelihood: np.ndarray  # shape (2, V)
    alpha: float


@dataclass(frozen=True)
class LRModel:
    """Logistic regression weights plus the hyperparameters that produced them."""

    weights: np.ndarray
    bias: float
    learning_rate: float
    epochs: int
    l2: float
    seed: int


@dataclass(frozen=True)
class SVMModel:
    """Linear SVM weights with sigmoid calibration parameters."""

    weights: np.ndarray
    bias: float
    lambda_: float
    epochs: int
    seed: int
    platt_a: float
    platt_b: float


def _rows_of(X) -> np.ndarray:
    rows = X.rows if isinstance(X, FeatureMatrix) else np.asarray(X, dtype=np.float64)
    if rows.ndim != 2:
        raise ValueError(f"expected a 2-D feature array, got shape {rows.shape}")
    return rows


def _labels_of(y, n: int) -> np.ndarray:
    labels = np.asarray(y)
    if labels.shape != (n,):
        raise ValueError(f"expected {n} labels, got shape {labels.shape}")
    if not np.all((labels == 0) | (labels == 1)):
        raise ValueError("labels must be 0 or 1")
    return labels.astype(np.float64)


def _require_both_classes(labels: np.ndarray) -> None:
    if not (np.any(labels == 0) and np.any(labels == 1)):
        raise ValueError("training requires both classes to be present")


def _sigmoid(z: np.ndarray | float) -> np.ndarray | float:
    z = np.asarray(z, dtype=np.float64)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out if out.ndim else float(out)


# ---------------------------------------------------------------------------
# Naive Bayes


def nb_train(counts: FeatureMatrix | np.ndarray, y: Sequence[int], alpha: float = 1.0) -> NBModel:
    """Fit multinomial naive Bayes on (possibly fractional) count rows.

    Per class c: log prior = log(n_c / n) over document counts, and
    log likelihood[t] = log((mass_c[t] + alpha) / (total_c + alpha * V)).
    """
    if alpha <= 0.0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    X = _rows_of(counts)
    labels = _labels_of(y, X.shape[0])
    if np.any(X < 0):
        raise ValueError("count features must be nonnegative")
    _require_both_classes(labels)
    V = X.shape[1]
    log_prior = np.empty(2)
    log_likelihood = np.empty((2, V))
    for c in (0, 1):
        members = X[labels == c]
        log_prior[c] = np.log(members.shape[0] / X.shape[0])
        mass = members.sum(axis=0)
        log_likelihood[c] = np.log((mass + alpha) / (mass.sum() + alpha * V))
    return NBModel(log_prior, log_likelihood, alpha)


def nb_predict(model: NBModel, x: np.ndarray) -> PosteriorPair:
    """Posterior for one count vector, computed in log space."""
    x = np.asarray(x, dtype=np.float64)
    V = model.log_likelihood.shape[1]
    if x.shape != (V,):
        raise ValueError(f"expected a vector of length {V}, got shape {x.shape}")
    if np.any(x < 0):
        raise ValueError("count features must be nonnegative")
    joint = model.log_prior + model.log_likelihood @ x
    joint -= joint.max()
    p = np.exp(joint)
    p /= p.sum()
    return PosteriorPair(float(p[0]), float(p[1]))


# ---------------------------------------------------------------------------
# Logistic regression


def _lr_grads(
    w: np.ndarray, b: float, X: np.ndarray, y: np.ndarray, l2: float
) -> tuple[np.ndarray, float, float]:
    n = X.shape[0]
    z = X @ w + b
    p = _sigmoid(z)
    # mean cross-entropy: softplus(z) - y*z, summed stably via logaddexp
    loss = float(np.mean(np.logaddexp(0.0, z) - y * z) + 0.5 * l2 * float(w @ w))
    residual = p - y
    grad_w = X.T @ residual / n + l2 * w
    grad_b = float(residual.mean())
    return grad_w, grad_b, loss


def lr_gradient(
    model: LRModel, X: FeatureMatrix | np.ndarray, y: Sequence[int]
) -> tuple[np.ndarray, float, float]:
    """Exact analytic gradient and loss of the regularized cross-entropy."""
    rows = _rows_of(X)
    if rows.shape[0] == 0:
        raise ValueError("gradient is undefined on an empty batch")
    labels = _labels_of(y, rows.shape[0])
    if rows.shape[1] != model.weights.shape[0]:
        raise ValueError(
            f"feature dim {rows.shape[1]} does not match model dim {model.weights.shape[0]}"
        )
    return _lr_grads(model.weights, model.bias, rows, labels, model.l2)


def lr_train(
    X: FeatureMatrix | np.ndarray,
    y: Sequence[int],
    learning_rate: float = 0.1,
    epochs: int = 500,
    l2: float = 1e-4,
    seed: int = 0,
) -> LRModel:
    """Full-batch gradient descent from zero initialization.

    Zero epochs are allowed and return the zero model (uniform predictions).
    """
    if learning_rate <= 0.0:
        raise ValueError(f"learning_rate must be positive, got {learning_rate}")
    if epochs < 0:
        raise ValueError(f"epochs must be >= 0, got {epochs}")
    if l2 < 0.0:
        raise ValueError(f"l2 must be >= 0, got {l2}")
    rows = _rows_of(X)
    labels = _labels_of(y, rows.shape[0])
    _require_both_classes(labels)
    w = np.zeros(rows.shape[1])
    b = 0.0
    for _ in range(epochs):
        grad_w, grad_b, _ = _lr_grads(w, b, rows, labels, l2)
        w = w - learning_rate * grad_w
        b = b - learning_rate * grad_b
    return LRModel(w, b, learning_rate, epochs, l2, seed)


def lr_predict(model: LRModel, x: np.ndarray) -> PosteriorPair:
    x = np.asarray(x, dtype=np.float64)
    if x.shape != model.weights.shape:
        raise ValueError(
            f"expected a vector of length {model.weights.shape[0]}, got shape {x.shape}"
        )
    p = float(_sigmoid(float(model.weights @ x) + model.bias))
    return PosteriorPair(1.0 - p, p)


# ---------------------------------------------------------------------------
# Linear SVM with sigmoid calibration


def svm_train(
    X: FeatureMatrix | np.ndarray,
    y: Sequence[int],
    lambda_: float = 1e-3,
    epochs: int = 200,
    seed: int = 0,
) -> SVMModel:
    """Primal hinge-loss SGD (step 1/(lambda*t) at update t), then calibration.

    One pass per epoch over a seeded shuffle; labels are mapped to +/-1
    internally.  The calibration sigmoid is fitted on the training margins.
    Zero epochs return the zero-margin model.
    """
    if lambda_ <= 0.0:
        raise ValueError(f"lambda must be positive, got {lambda_}")
    if epochs < 0:
        raise ValueError(f"epochs must be >= 0, got {epochs}")
    rows = _rows_of(X)
    labels = _labels_of(y, rows.shape[0])
    _require_both_classes(labels)
    ypm = np.where(labels == 1.0, 1.0, -1.0)
    n, d = rows.shape
    rng = np.random.default_rng(seed)
    w = np.zeros(d)
    b = 0.0
    t = 0
    for _ in range(epochs):
        for i in rng.permutation(n):
            t += 1
            eta = 1.0 / (lambda_ * t)
            violated = ypm[i] * (rows[i] @ w + b) < 1.0
            w *= 1.0 - eta * lambda_
            if violated:
                w += eta * ypm[i] * rows[i]
                b += eta * ypm[i]  # bias is not regularized
    margins = rows @ w + b
    a, platt_b = platt_fit(margins, labels)
    return SVMModel(w, b, lambda_, epochs, seed, a, platt_b)


def svm_margin(model: SVMModel, x: np.ndarray) -> float:
    """Uncalibrated decision value w.x + b."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != model.weights.shape:
        raise ValueError(
            f"expected a vector of length {model.weights.shape[0]}, got shape {x.shape}"
        )
    return float(model.weights @ x) + model.bias


def svm_predict(model: SVMModel, x: np.ndarray) -> PosteriorPair:
    m = svm_margin(model, x)
    p = float(_sigmoid(-(model.platt_a * m + model.platt_b)))
    return PosteriorPair(1.0 - p, p)


def platt_fit(
    margins: Sequence[float], y: Sequence[int], max_iter: int = 200, tol: float = 1e-8
) -> tuple[float, float]:
    """Fit p(y=1|m) = 1 / (1 + exp(a*m + b)) by damped Newton iterations.

    Targets are smoothed: (N_pos+1)/(N_pos+2) for positives, 1/(N_neg+2) for
    negatives.  Iterates until the gradient norm drops below ``tol`` or
    ``max_iter`` steps.
    """
    m = np.asarray(margins, dtype=np.float64)
    labels = _labels_of(y, m.shape[0])
    _require_both_classes(labels)
    n_pos = int(labels.sum())
    n_neg = len(labels) - n_pos
    target = np.where(labels == 1.0, (n_pos + 1.0) / (n_pos + 2.0), 1.0 / (n_neg + 2.0))

    def objective(a: float, b: float) -> tuple[float, np.ndarray]:
        q = a * m + b
        p = _sigmoid(-q)
        # cross-entropy in a stable form: t*softplus(q) + (1-t)*softplus(-q)
        value = float(np.sum(target * np.logaddexp(0.0, q) + (1.0 - target) * np.logaddexp(0.0, -q)))
        return value, p

    a, b = 0.0, float(np.log((n_neg + 1.0) / (n_pos + 1.0)))
    value, p = objective(a, b)
    damping = 1e-10
    for _ in range(max_iter):
        diff = target - p
        grad = np.array([float(diff @ m), float(diff.sum())])
        if float(np.linalg.norm(grad)) < tol:
            break
        h = p * (1.0 - p)
        h_aa = float(h @ (m * m))
        h_ab = float(h @ m)
        h_bb = float(h.sum())
        accepted = False
        while damping <= 1e12:
            det = (h_aa + damping) * (h_bb + damping) - h_ab * h_ab
            if det > 0.0:
                step_a = -((h_bb + damping) * grad[0] - h_ab * grad[1]) / det
                step_b = -((h_aa + damping) * grad[1] - h_ab * grad[0]) / det
                new_value, new_p = objective(a + step_a, b + step_b)
                if new_value <= value + 1e-12:
                    a, b = a + step_a, b + step_b
                    value, p = new_value, new_p
                    damping = max(damping * 0.1, 1e-12)
                    accepted = True
                    break
            damping *= 10.0
        if not accepted:
            break
    return float(a), float(b)


# ---------------------------------------------------------------------------
# Persistence

_MODEL_KINDS = ("nb", "lr", "svm")


def _fmt_vector(values: np.ndarray) -> str:
    return " ".join(format(float(v), ".17g") for v in np.atleast_1d(values))


def save_model(model: NBModel | LRModel | SVMModel, path: str | Path) -> None:
    """Write a model as self-describing text; reload preserves predictions."""
    path = Path(path)
    lines: list[str] = []
    if isinstance(model, NBModel):
        lines.append("#model=nb")
        lines.append(f"#alpha={format(model.alpha, '.17g')}")
        lines.append("log_prior\t" + _fmt_vector(model.log_prior))
        lines.append("log_likelihood_neg\t" + _fmt_vector(model.log_likelihood[0]))
        lines.append("log_likelihood_pos\t" + _fmt_vector(model.log_likelihood[1]))
    elif isinstance(model, LRModel):
        lines.append("#model=lr")
        lines.append(f"#learning_rate={format(model.learning_rate, '.17g')}")
        lines.append(f"#epochs={model.epochs}")
        lines.append(f"#l2={format(model.l2, '.17g')}")
        lines.append(f"#seed={model.seed}")
        lines.append("weights\t" + _fmt_vector(model.weights))
        lines.append("bias\t" + _fmt_vector(np.array([model.bias])))
    elif isinstance(model, SVMModel):
        lines.append("#model=svm")
        lines.append(f"#lambda={format(model.lambda_, '.17g')}")
        lines.append(f"#epochs={model.epochs}")
        lines.append(f"#seed={model.seed}")
        lines.append("weights\t" + _fmt_vector(model.weights))
        lines.append("bias\t" + _fmt_vector(np.array([model.bias])))
        lines.append("platt\t" + _fmt_vector(np.array([model.platt_a, model.platt_b])))
    else:
        raise TypeError(f"cannot save model of type {type(model).__name__}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _parse_model_text(text: str, name: str) -> tuple[str, dict[str, str], dict[str, np.ndarray]]:
    lines = [ln.rstrip("\r\n") for ln in text.splitlines()]
    lines = [ln for ln in lines if ln.strip()]
    if not lines or not lines[0].startswith("#model="):
        raise ValueError(f"{name}: missing '#model=<kind>' header")
    kind = lines[0][len("#model="):]
    if kind not in _MODEL_KINDS:
        raise ValueError(f"{name}: unknown model kind {kind!r}")
    params: dict[str, str] = {}
    vectors: dict[str, np.ndarray] = {}
    for ln in lines[1:]:
        if ln.startswith("#"):
            key, _, val = ln[1:].partition("=")
            params[key] = val
        else:
            vname, _, payload = ln.partition("\t")
            vectors[vname] = np.array([float(v) for v in payload.split()], dtype=np.float64)
    return kind, params, vectors


def load_model(path: str | Path) -> NBModel | LRModel | SVMModel:
    path = Path(path)
    kind, params, vectors = _parse_model_text(path.read_text(encoding="utf-8"), path.name)
    try:
        if kind == "nb":
            ll = np.vstack([vectors["log_likelihood_neg"], vectors["log_likelihood_pos"]])
            return NBModel(vectors["log_prior"], ll, float(params["alpha"]))
        if kind == "lr":
            return LRModel(
                vectors["weights"],
                float(vectors["bias"][0]),
                float(params["learning_rate"]),
                int(params["epochs"]),
                float(params["l2"]),
                int(params["seed"]),
            )
        return SVMModel(
            vectors["weights"],
            float(vectors["bias"][0]),
            float(params["lambda"]),
            int(params["epochs"]),
            int(params["seed"]),
            float(vectors["platt"][0]),
            float(vectors["platt"][1]),
        )
    except KeyError as exc:
        raise ValueError(f"{path.name}: missing field {exc} for model kind {kind!r}") from None
