"""
Wikityp Logistic Regression

Binäre logistische Regression mit L2-Strafterm, von Grund auf in numpy.

Loss = mittlere Kreuzentropie + l2/2 * ||w||^2 (Bias ohne Strafterm).
Start bei w = 0, b = 0; Abbruch bei ||grad||_inf < tolerance oder
nach max_iter Schritten. Jeder Schritt senkt den Loss (Armijo-Backtracking).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal

import numpy as np
import structlog

from wikityp.errors import TrainingError

logger = structlog.get_logger(__name__)

Solver = Literal["newton", "gd"]

_ARMIJO = 1e-4
_MIN_STEP = 1e-14


@dataclass(frozen=True)
class LogisticFit:
    """Ergebnis eines Trainingslaufs."""

    weights: np.ndarray
    bias: float
    loss: float
    iterations: int
    converged: bool
    l2: float
    gradient_norm: float = field(default=0.0)


def sigmoid(z: np.ndarray | float) -> np.ndarray:
    """Numerisch stabile Sigmoid-Funktion."""
    z = np.asarray(z, dtype=np.float64)
    e = np.exp(-np.abs(z))
    return np.where(z >= 0, 1.0 / (1.0 + e), e / (1.0 + e))


def decision_function(X: np.ndarray, weights: np.ndarray, bias: float) -> np.ndarray:
    """w·x + b pro Zeile, zeilenweise summiert (unabhängig von der Zeilenzahl)."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    return np.sum(X * np.asarray(weights, dtype=np.float64), axis=1) + bias


def log_loss(
    X: np.ndarray, y: np.ndarray, weights: np.ndarray, bias: float, l2: float
) -> float:
    """Mittlere Kreuzentropie plus L2-Term."""
    z = decision_function(X, weights, bias)
    data = float(np.mean(np.logaddexp(0.0, z) - y * z))
    return data + 0.5 * l2 * float(weights @ weights)


def loss_gradient(
    X: np.ndarray, y: np.ndarray, weights: np.ndarray, bias: float, l2: float
) -> tuple[np.ndarray, float]:
    """Analytischer Gradient (dL/dw, dL/db)."""
    residual = sigmoid(decision_function(X, weights, bias)) - y
    n = X.shape[0]
    grad_w = X.T @ residual / n + l2 * weights
    grad_b = float(np.mean(residual))
    return grad_w, grad_b


def _validate(X: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64).ravel()
    if X.ndim != 2 or X.shape[0] != y.shape[0]:
        raise TrainingError(f"X shape {X.shape} does not match {y.shape[0]} labels")
    if X.shape[0] == 0:
        raise TrainingError("cannot train on zero examples")
    if not np.all(np.isfinite(X)):
        raise TrainingError("feature matrix contains non-finite values")
    if not np.all((y == 0) | (y == 1)):
        raise TrainingError("labels must be 0 or 1")
    if y.min() == y.max():
        raise TrainingError(f"single-class labels (all {int(y[0])}), both classes required")
    return X, y


def _newton_direction(
    X: np.ndarray, weights: np.ndarray, bias: float, l2: float, gradient: np.ndarray
) -> np.ndarray:
    p = sigmoid(decision_function(X, weights, bias))
    s = p * (1.0 - p)
    design = np.hstack([X, np.ones((X.shape[0], 1))])
    hessian = (design.T * s) @ design / X.shape[0]
    hessian[:-1, :-1] += l2 * np.eye(X.shape[1])
    try:
        return np.linalg.solve(hessian, gradient)
    except np.linalg.LinAlgError:
        return np.linalg.lstsq(hessian, gradient, rcond=None)[0]


def train_logistic(
    X: np.ndarray,
    y: np.ndarray,
    *,
    l2: float | None = None,
    tolerance: float = 1e-6,
    max_iter: int = 10_000,
    solver: Solver = "newton",
) -> LogisticFit:
    """
    Minimiert die regularisierte Kreuzentropie.

    Args:
        X: Merkmalsmatrix (n, d)
        y: Labels 0/1
        l2: Strafterm, None = 1/n
        solver: "newton" (gedämpftes Newton) oder "gd" (Gradientenabstieg)

    Raises:
        TrainingError: nur eine Klasse, nicht-endlicher Loss
    """
    X, y = _validate(X, y)
    n, d = X.shape
    lam = 1.0 / n if l2 is None else float(l2)

    theta = np.zeros(d + 1, dtype=np.float64)
    step = 1.0

    def _loss(t: np.ndarray) -> float:
        return log_loss(X, y, t[:-1], float(t[-1]), lam)

    def _grad(t: np.ndarray) -> np.ndarray:
        gw, gb = loss_gradient(X, y, t[:-1], float(t[-1]), lam)
        return np.append(gw, gb)

    loss = _loss(theta)
    gradient = _grad(theta)
    converged = False
    iteration = 0

    for iteration in range(max_iter):
        if float(np.max(np.abs(gradient))) < tolerance:
            converged = True
            break

        if solver == "newton":
            direction = _newton_direction(X, theta[:-1], float(theta[-1]), lam, gradient)
            if float(direction @ gradient) <= 0:
                direction = gradient
            step = 1.0
        else:
            direction = gradient
            step = min(step * 2.0, 1e6)

        slope = float(direction @ gradient)
        while True:
            candidate = theta - step * direction
            candidate_loss = _loss(candidate)
            if candidate_loss <= loss - _ARMIJO * step * slope:
                break
            step *= 0.5
            if step < _MIN_STEP:
                break

        if not np.isfinite(candidate_loss):
            raise TrainingError(
                f"non-finite loss at iteration {iteration}: loss={candidate_loss}, "
                f"|w|={float(np.linalg.norm(theta[:-1])):.3g}, step={step:.3g}"
            )
        if step < _MIN_STEP:
            # keine Verbesserung mehr in Maschinengenauigkeit
            converged = True
            break

        theta = candidate
        loss = candidate_loss
        gradient = _grad(theta)
    else:
        iteration = max_iter
        converged = float(np.max(np.abs(gradient))) < tolerance

    if not converged:
        logger.warning("logistic_not_converged", iterations=iteration, gradient=float(np.max(np.abs(gradient))))

    return LogisticFit(
        weights=theta[:-1].copy(),
        bias=float(theta[-1]),
        loss=float(loss),
        iterations=iteration,
        converged=converged,
        l2=lam,
        gradient_norm=float(np.max(np.abs(gradient))),
    )
