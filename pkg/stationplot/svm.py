"""Binary kernel SVM trained with sequential minimal optimization."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import StrEnum

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.spatial.distance import cdist

from .const import (
    DEFAULT_C,
    DEFAULT_COEF0,
    DEFAULT_DEGREE,
    DEFAULT_SIGMA,
    DEFAULT_TOL,
    KERNEL_LINEAR,
    KERNEL_NAMES,
    KERNEL_POLYNOMIAL,
    KERNEL_QUADRATIC,
    KERNEL_RBF,
    MAX_PASSES_PER_ROW,
)
from .exceptions import ConfigValidationError, DataError, TrainingError

_LOGGER = logging.getLogger(__name__)

# Curvature floor for pairs with a non-positive definite kernel block.
_TAU = 1e-12


class KernelKind(StrEnum):
    LINEAR = "linear"
    POLYNOMIAL = "polynomial"
    RBF = "rbf"


@dataclass(frozen=True)
class KernelSpec:
    """Kernel family plus its parameters.

    Polynomial is inhomogeneous ``(u.v + coef0) ** degree``; rbf is
    ``exp(-|u - v|**2 / (2 sigma**2))``.
    """

    kind: KernelKind = KernelKind.LINEAR
    degree: int = DEFAULT_DEGREE
    sigma: float = DEFAULT_SIGMA
    coef0: float = DEFAULT_COEF0

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", KernelKind(self.kind))
        if self.kind is KernelKind.POLYNOMIAL and self.degree < 2:
            raise ConfigValidationError(
                "Polynomial kernel degree must be >= 2", {"degree": str(self.degree)}
            )
        if self.kind is KernelKind.RBF and not self.sigma > 0:
            raise ConfigValidationError(
                "RBF kernel sigma must be positive", {"sigma": str(self.sigma)}
            )

    @classmethod
    def from_name(
        cls,
        name: str,
        *,
        degree: int = DEFAULT_DEGREE,
        sigma: float = DEFAULT_SIGMA,
        coef0: float = DEFAULT_COEF0,
    ) -> KernelSpec:
        """Build one of the named presets: linear, quadratic, polynomial, rbf."""
        if name == KERNEL_LINEAR:
            return cls(KernelKind.LINEAR)
        if name == KERNEL_QUADRATIC:
            return cls(KernelKind.POLYNOMIAL, degree=2, coef0=coef0)
        if name == KERNEL_POLYNOMIAL:
            return cls(KernelKind.POLYNOMIAL, degree=degree, coef0=coef0)
        if name == KERNEL_RBF:
            return cls(KernelKind.RBF, sigma=sigma)
        raise ConfigValidationError(
            f"Unknown kernel {name!r}; valid kinds: {', '.join(KERNEL_NAMES)}",
            {"kernels": name},
        )

    @property
    def name(self) -> str:
        if self.kind is KernelKind.POLYNOMIAL:
            return KERNEL_QUADRATIC if self.degree == 2 else KERNEL_POLYNOMIAL
        return str(self.kind)


def kernel_eval(spec: KernelSpec, u: ArrayLike, v: ArrayLike) -> float:
    a = np.asarray(u, dtype=np.float64).ravel()
    b = np.asarray(v, dtype=np.float64).ravel()
    if a.shape != b.shape:
        raise TrainingError(
            f"Kernel arguments differ in dimension: {a.size} vs {b.size}"
        )
    if spec.kind is KernelKind.LINEAR:
        return float(np.dot(a, b))
    if spec.kind is KernelKind.POLYNOMIAL:
        return float((np.dot(a, b) + spec.coef0) ** spec.degree)
    diff = a - b
    return float(np.exp(-np.dot(diff, diff) / (2.0 * spec.sigma**2)))


def kernel_matrix(
    spec: KernelSpec, left: ArrayLike, right: ArrayLike
) -> NDArray[np.float64]:
    """Gram block ``K[i, j] = k(left[i], right[j])``."""
    a = np.atleast_2d(np.asarray(left, dtype=np.float64))
    b = np.atleast_2d(np.asarray(right, dtype=np.float64))
    if a.shape[1] != b.shape[1]:
        raise TrainingError(
            f"Kernel arguments differ in dimension: {a.shape[1]} vs {b.shape[1]}"
        )
    if spec.kind is KernelKind.LINEAR:
        return a @ b.T
    if spec.kind is KernelKind.POLYNOMIAL:
        return (a @ b.T + spec.coef0) ** spec.degree
    return np.exp(-cdist(a, b, "sqeuclidean") / (2.0 * spec.sigma**2))


@dataclass(frozen=True, eq=False)
class Scaler:
    """Per-feature z-score parameters; ``constant`` columns map to 0."""

    mean: NDArray[np.float64]
    scale: NDArray[np.float64]
    constant: NDArray[np.bool_]

    @classmethod
    def identity(cls, dimension: int) -> Scaler:
        return cls(
            mean=np.zeros(dimension),
            scale=np.ones(dimension),
            constant=np.zeros(dimension, dtype=bool),
        )

    @property
    def dimension(self) -> int:
        return int(self.mean.size)

    def apply(self, rows: ArrayLike) -> NDArray[np.float64]:
        data = np.atleast_2d(np.asarray(rows, dtype=np.float64))
        if data.shape[1] != self.dimension:
            raise TrainingError(
                f"Rows have {data.shape[1]} features, scaler expects {self.dimension}"
            )
        scaled = (data - self.mean) / self.scale
        scaled[:, self.constant] = 0.0
        return scaled


def standardize_fit(rows: ArrayLike) -> Scaler:
    data = np.asarray(rows, dtype=np.float64)
    if data.ndim != 2 or data.shape[0] < 2:
        raise DataError(f"Standardization needs at least 2 rows, got shape {data.shape}")
    mean = data.mean(axis=0)
    std = data.std(axis=0)
    constant = std <= 1e-12 * np.maximum(1.0, np.abs(mean))
    if np.any(constant):
        _LOGGER.warning(
            "Zero-variance feature columns %s standardized to 0",
            np.flatnonzero(constant).tolist(),
        )
    return Scaler(mean=mean, scale=np.where(constant, 1.0, std), constant=constant)


def standardize_apply(scaler: Scaler, rows: ArrayLike) -> NDArray[np.float64]:
    return scaler.apply(rows)


@dataclass(frozen=True, eq=False)
class SvmModel:
    """Trained classifier; support vectors are stored in scaled feature space."""

    support_vectors: NDArray[np.float64]
    alphas: NDArray[np.float64]
    labels: NDArray[np.float64]
    bias: float
    kernel: KernelSpec
    scaler: Scaler
    C: float = DEFAULT_C
    converged: bool = True
    iterations: int = 0
    objective_history: tuple[float, ...] = field(default=(), repr=False)

    @property
    def dimension(self) -> int:
        return self.scaler.dimension

    def decision_values(self, rows: ArrayLike) -> NDArray[np.float64]:
        scaled = self.scaler.apply(rows)
        if self.alphas.size == 0:
            return np.full(scaled.shape[0], self.bias)
        gram = kernel_matrix(self.kernel, scaled, self.support_vectors)
        return gram @ (self.alphas * self.labels) + self.bias

    def predict_many(self, rows: ArrayLike) -> NDArray[np.int_]:
        # exact zero breaks toward the positive class
        return np.where(self.decision_values(rows) >= 0.0, 1, -1)


def decision_value(model: SvmModel, row: ArrayLike) -> float:
    return float(model.decision_values(np.asarray(row, dtype=np.float64).reshape(1, -1))[0])


def predict(model: SvmModel, row: ArrayLike) -> int:
    """+1 or -1; a decision value of exactly 0 is labeled +1."""
    return 1 if decision_value(model, row) >= 0.0 else -1


def _canonical_order(rows: NDArray[np.float64], labels: NDArray[np.float64]) -> NDArray[np.intp]:
    keys = (labels, *(rows[:, j] for j in reversed(range(rows.shape[1]))))
    return np.lexsort(keys)


class _SmoSolver:
    """Maximal-gain working pairs (second-order selection) over a precomputed Gram matrix.

    ``grad[i]`` holds ``sum_j alpha_j y_j K[i, j]`` so ``f(x_i) = grad[i] + b``.
    """

    def __init__(
        self,
        gram: NDArray[np.float64],
        y: NDArray[np.float64],
        C: float,
        tol: float,
    ) -> None:
        self.K = gram
        self.y = y
        self.C = C
        self.tol = tol
        self.n = y.size
        self.diag = np.diag(gram).copy()
        self.alpha = np.zeros(self.n)
        self.grad = np.zeros(self.n)
        self.steps = 0
        self.history: list[float] = [0.0]

    def objective(self) -> float:
        return float(np.sum(self.alpha) - 0.5 * np.dot(self.alpha * self.y, self.grad))

    def select_pair(self) -> tuple[int, int] | None:
        """Most violating ``i`` and the partner with the largest second-order gain.

        None once the violation gap is below ``tol``.
        """
        y, alpha, C = self.y, self.alpha, self.C
        margin = y - self.grad
        positive = y > 0
        up = (positive & (alpha < C)) | (~positive & (alpha > 0.0))
        low = (positive & (alpha > 0.0)) | (~positive & (alpha < C))
        if not up.any() or not low.any():
            return None
        up_idx = np.flatnonzero(up)
        i = int(up_idx[np.argmax(margin[up_idx])])
        gmax = margin[i]
        low_idx = np.flatnonzero(low)
        if gmax - margin[low_idx].min() < self.tol:
            return None

        gain = gmax - margin[low_idx]
        ok = gain > 0.0
        if not ok.any():
            return None
        cand, gain = low_idx[ok], gain[ok]
        curvature = self.diag[i] + self.diag[cand] - 2.0 * self.K[i, cand]
        curvature = np.where(curvature > 0.0, curvature, _TAU)
        j = int(cand[np.argmax(gain * gain / curvature)])
        return i, j

    def update(self, i: int, j: int) -> bool:
        """Solve the pair subproblem; False when rounding left both alphas unchanged."""
        C = self.C
        yi, yj = self.y[i], self.y[j]
        ai, aj = self.alpha[i], self.alpha[j]
        # gradient of the minimization-form dual
        gi = yi * self.grad[i] - 1.0
        gj = yj * self.grad[j] - 1.0
        quad = self.diag[i] + self.diag[j] - 2.0 * self.K[i, j]
        if quad <= 0.0:
            quad = _TAU

        if yi != yj:
            delta = (-gi - gj) / quad
            diff = ai - aj
            ai_new, aj_new = ai + delta, aj + delta
            if diff > 0:
                if aj_new < 0:
                    aj_new, ai_new = 0.0, diff
            elif ai_new < 0:
                ai_new, aj_new = 0.0, -diff
            if diff > 0:
                if ai_new > C:
                    ai_new, aj_new = C, C - diff
            elif aj_new > C:
                aj_new, ai_new = C, C + diff
        else:
            delta = (gi - gj) / quad
            total = ai + aj
            ai_new, aj_new = ai - delta, aj + delta
            if total > C:
                if ai_new > C:
                    ai_new, aj_new = C, total - C
            elif aj_new < 0:
                aj_new, ai_new = 0.0, total
            if total > C:
                if aj_new > C:
                    aj_new, ai_new = C, total - C
            elif ai_new < 0:
                ai_new, aj_new = 0.0, total

        if ai_new == ai and aj_new == aj:
            return False
        self.grad += (ai_new - ai) * yi * self.K[:, i] + (aj_new - aj) * yj * self.K[:, j]
        self.alpha[i] = ai_new
        self.alpha[j] = aj_new
        self.steps += 1
        self.history.append(self.objective())
        return True

    def solve(self, max_steps: int) -> bool:
        """Run until the violation gap closes; False when ``max_steps`` ran out or a step stalled."""
        while True:
            pair = self.select_pair()
            if pair is None:
                return True
            if self.steps >= max_steps:
                return False
            if not self.update(*pair):
                _LOGGER.debug("SMO stalled on pair %s after %d steps", pair, self.steps)
                return False

    def _unbound(self) -> NDArray[np.intp]:
        return np.flatnonzero((self.alpha > 0.0) & (self.alpha < self.C))

    def final_bias(self) -> float:
        """Average over free vectors, else the midpoint of the feasible interval."""
        margin = self.y - self.grad
        unbound = self._unbound()
        if unbound.size:
            return float(np.mean(margin[unbound]))
        at_zero = self.alpha <= 0.0
        at_c = ~at_zero
        positive = self.y > 0
        lower = margin[(at_zero & positive) | (at_c & ~positive)]
        upper = margin[(at_zero & ~positive) | (at_c & positive)]
        if lower.size and upper.size:
            return float(0.5 * (lower.max() + upper.min()))
        if lower.size:
            return float(lower.max())
        return float(upper.min())


def train_smo(
    rows: ArrayLike,
    labels: ArrayLike,
    kernel: KernelSpec,
    C: float = DEFAULT_C,
    tol: float = DEFAULT_TOL,
    max_passes: int | None = None,
    seed: int | np.random.Generator | None = 0,
    scaler: Scaler | None = None,
) -> SvmModel:
    """Fit a soft-margin SVM on ``rows`` (already in the scaler's output space).

    ``max_passes`` caps training at that many sweeps of ``n`` pair updates
    each (default ``50 * n`` sweeps). Hitting the cap returns the current
    model with ``converged=False``.
    """
    data = np.asarray(rows, dtype=np.float64)
    y = np.asarray(labels, dtype=np.float64).ravel()
    if data.ndim != 2 or data.shape[0] != y.size:
        raise TrainingError(
            f"Rows of shape {data.shape} do not match {y.size} labels"
        )
    if data.shape[0] < 2:
        raise TrainingError("Training needs at least 2 rows", rows=data.shape[0])
    if not np.all(np.isin(y, (-1.0, 1.0))):
        raise TrainingError("Labels must be +1 or -1")
    if np.unique(y).size < 2:
        raise TrainingError("Training input holds a single class", label=int(y[0]))
    if not C > 0:
        raise TrainingError(f"C must be positive, got {C}")
    if max_passes is not None and max_passes < 1:
        raise TrainingError(f"max_passes must be >= 1, got {max_passes}")
    if scaler is None:
        scaler = Scaler.identity(data.shape[1])
    elif scaler.dimension != data.shape[1]:
        raise TrainingError(
            f"Scaler expects {scaler.dimension} features, rows have {data.shape[1]}"
        )

    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    # seeded shuffle of the canonical order breaks selection ties
    order = _canonical_order(data, y)[rng.permutation(y.size)]
    data = data[order]
    y = y[order]
    n = y.size
    passes = max_passes if max_passes is not None else MAX_PASSES_PER_ROW * n
    max_steps = passes * n

    solver = _SmoSolver(kernel_matrix(kernel, data, data), y, C, tol)
    converged = solver.solve(max_steps)
    if not converged:
        _LOGGER.warning(
            "SMO stopped after %d steps without meeting KKT tolerance %g (%s kernel)",
            solver.steps,
            tol,
            kernel.name,
        )

    support = solver.alpha > 0.0
    _LOGGER.debug(
        "Trained %s SVM on %d rows: %d support vectors, %d steps",
        kernel.name,
        n,
        int(np.sum(support)),
        solver.steps,
    )
    return SvmModel(
        support_vectors=data[support].copy(),
        alphas=solver.alpha[support].copy(),
        labels=y[support].copy(),
        bias=solver.final_bias(),
        kernel=kernel,
        scaler=scaler,
        C=C,
        converged=converged,
        iterations=solver.steps,
        objective_history=tuple(solver.history),
    )
