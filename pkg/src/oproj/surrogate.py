"""Stand-in predictors for black boxes that cannot be re-queried.

When only a recorded (X, y) pair is available, a ridge or logistic model is
fitted to imitate the black box and the audit runs against the imitation.
Fidelity on a held-out split is always reported so a poor stand-in cannot
masquerade as the real thing.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .adapters import InProcessModel, ModelHandle
from .errors import DimensionError, SingularSystemError
from .linalg import FeatureMatrix

GRADIENT_TOL = 1e-6


def _design(X: FeatureMatrix | np.ndarray) -> np.ndarray:
    arr = X.as_array() if isinstance(X, FeatureMatrix) else np.asarray(X, dtype=np.float64)
    if arr.ndim != 2:
        raise DimensionError(f"expected a 2-D design, got shape {arr.shape}")
    return arr


@dataclass(frozen=True)
class RidgeModel:
    """Closed-form ridge fit; the intercept column is unpenalized."""

    coefficients: np.ndarray
    intercept: float
    lam: float
    fit_r2: float

    def predict(self, X: FeatureMatrix | np.ndarray) -> np.ndarray:
        return _design(X) @ self.coefficients + self.intercept


@dataclass(frozen=True)
class LogisticModel:
    """Full-batch gradient-descent logistic fit on mean log-loss."""

    coefficients: np.ndarray
    intercept: float
    iterations: int
    final_grad_norm: float
    converged: bool
    losses: tuple[float, ...]

    def predict_proba(self, X: FeatureMatrix | np.ndarray) -> np.ndarray:
        z = _design(X) @ self.coefficients + self.intercept
        return 1.0 / (1.0 + np.exp(-z))

    def predict(self, X: FeatureMatrix | np.ndarray) -> np.ndarray:
        return self.predict_proba(X)


@dataclass(frozen=True)
class FidelityScore:
    """Held-out agreement between the stand-in and the recorded outputs.

    kind is "r2" for ridge and "agreement" for logistic. The holdout rows
    were never seen during fitting.
    """

    kind: str
    value: float
    split_seed: int
    holdout_fraction: float
    n_holdout: int


def _r_squared(y: np.ndarray, pred: np.ndarray) -> float:
    ss_res = float(np.sum((y - pred) ** 2))
    ss_tot = float(np.sum((y - np.mean(y)) ** 2))
    if ss_tot == 0.0:
        return 1.0 if ss_res == 0.0 else 0.0
    return 1.0 - ss_res / ss_tot


def fit_ridge(X: FeatureMatrix | np.ndarray, y, lam: float = 1e-3) -> RidgeModel:
    """Solve the ridge normal equations by Cholesky factorization.

    Minimizes ||y - (b + X w)||^2 + lam * ||w||^2; the intercept b is not
    penalized. A singular system (possible only at lam = 0) raises
    SingularSystemError suggesting a positive penalty.
    """
    if lam < 0:
        raise ValueError(f"lam must be >= 0, got {lam}")
    A = _design(X)
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    n, k = A.shape
    if y.shape[0] != n:
        raise DimensionError(f"target length {y.shape[0]} vs {n} rows")
    if n <= k:
        warnings.warn(
            f"fitting {k} coefficients on {n} samples; expect an unstable fit",
            stacklevel=2,
        )
    Z = np.column_stack([np.ones(n), A])
    penalty = np.full(k + 1, lam)
    penalty[0] = 0.0  # intercept unpenalized
    gram = Z.T @ Z + np.diag(penalty)
    rhs = Z.T @ y
    try:
        w = cho_solve(cho_factor(gram, lower=True), rhs)
    except np.linalg.LinAlgError as exc:
        raise SingularSystemError(
            "normal equations are singular; retry with lam > 0"
        ) from exc
    intercept = float(w[0])
    coefficients = w[1:].copy()
    coefficients.flags.writeable = False
    pred = Z @ w
    return RidgeModel(
        coefficients=coefficients,
        intercept=intercept,
        lam=float(lam),
        fit_r2=_r_squared(y, pred),
    )


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _log_loss(y: np.ndarray, p: np.ndarray) -> float:
    eps = 1e-15
    p = np.clip(p, eps, 1.0 - eps)
    return float(-np.mean(y * np.log(p) + (1.0 - y) * np.log(1.0 - p)))


def fit_logistic(
    X: FeatureMatrix | np.ndarray,
    y,
    max_iter: int = 500,
    step: float = 0.1,
) -> LogisticModel:
    """Gradient descent on mean log-loss until the gradient max-norm drops
    below 1e-6 or the iteration cap is hit.

    Hitting the cap (e.g. on separable data, where the optimum is at
    infinity) returns the model with ``converged=False`` rather than
    raising. Inputs should be standardized for the default step to be safe.
    """
    A = _design(X)
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    n, k = A.shape
    if y.shape[0] != n:
        raise DimensionError(f"target length {y.shape[0]} vs {n} rows")
    if not np.all((y == 0.0) | (y == 1.0)):
        raise ValueError("logistic targets must be 0/1")
    Z = np.column_stack([np.ones(n), A])
    w = np.zeros(k + 1)
    losses: list[float] = []
    grad_norm = math.inf
    iterations = 0
    for iterations in range(1, max_iter + 1):
        p = _sigmoid(Z @ w)
        losses.append(_log_loss(y, p))
        grad = Z.T @ (p - y) / n
        grad_norm = float(np.max(np.abs(grad)))
        if grad_norm <= GRADIENT_TOL:
            break
        w = w - step * grad
    coefficients = w[1:].copy()
    coefficients.flags.writeable = False
    return LogisticModel(
        coefficients=coefficients,
        intercept=float(w[0]),
        iterations=iterations,
        final_grad_norm=grad_norm,
        converged=grad_norm <= GRADIENT_TOL,
        losses=tuple(losses),
    )


def surrogate_handle(m: RidgeModel | LogisticModel) -> ModelHandle:
    """Wrap a fitted stand-in as a concurrent, score-mode model handle."""
    return InProcessModel(m.predict, kind="surrogate", output_mode="score")


@dataclass(frozen=True)
class SurrogateFit:
    """A trained stand-in plus its held-out fidelity and query handle."""

    model: RidgeModel | LogisticModel
    fidelity: FidelityScore
    handle: ModelHandle


def train_surrogate(
    X: FeatureMatrix,
    y,
    family: str = "ridge",
    *,
    lam: float = 1e-3,
    seed: int = 0,
    holdout_fraction: float = 0.2,
    max_iter: int = 500,
    step: float = 0.1,
) -> SurrogateFit:
    """Fit a stand-in on a seeded 80/20 split and score it on the holdout.

    The audited model is the train-split fit, so the fidelity rows stay
    untouched by fitting.
    """
    if family not in ("ridge", "logistic"):
        raise ValueError(f"unknown surrogate family '{family}'")
    if not (0.0 < holdout_fraction < 1.0):
        raise ValueError(f"holdout_fraction must lie in (0,1), got {holdout_fraction}")
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    n = X.n
    if y.shape[0] != n:
        raise DimensionError(f"target length {y.shape[0]} vs {n} rows")
    rng = np.random.default_rng(seed)
    perm = rng.permutation(n)
    n_hold = max(1, int(round(holdout_fraction * n)))
    if n - n_hold < 2:
        raise DimensionError(f"{n} samples is too few for a {holdout_fraction} holdout")
    hold_rows, train_rows = perm[:n_hold], perm[n_hold:]
    X_train = X.take_rows(train_rows)
    X_hold = X.as_array()[hold_rows]

    if family == "ridge":
        model: RidgeModel | LogisticModel = fit_ridge(X_train, y[train_rows], lam)
        fidelity_value = _r_squared(y[hold_rows], model.predict(X_hold))
        kind = "r2"
    else:
        model = fit_logistic(X_train, y[train_rows], max_iter=max_iter, step=step)
        agree = (model.predict_proba(X_hold) >= 0.5) == (y[hold_rows] >= 0.5)
        fidelity_value = float(np.mean(agree))
        kind = "agreement"

    fidelity = FidelityScore(
        kind=kind,
        value=fidelity_value,
        split_seed=seed,
        holdout_fraction=holdout_fraction,
        n_holdout=int(n_hold),
    )
    return SurrogateFit(model=model, fidelity=fidelity, handle=surrogate_handle(model))
