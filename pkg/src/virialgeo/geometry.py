"""Pointwise tensor algebra on a single chart.

All functions take chart coordinates ``q`` as 1-d arrays and return plain
numpy arrays.  Index conventions: ``deriv[i, j, k] = d g_ij / d q^k``,
``christoffel[i, j, k] = Gamma^i_{jk}``, ``jacobian[i, j] = d X^i / d q^j``.
"""

from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from .errors import GuardViolation, InsufficientSamples, SingularMetric
from .fields import MetricField, ScalarField, VectorFieldDef, _as_point, central_difference

KILLING = "Killing"
HOMOTHETIC = "Homothetic"
PROPER_CONFORMAL = "ProperConformal"
NON_CONFORMAL = "NonConformal"
KINDS = (KILLING, HOMOTHETIC, PROPER_CONFORMAL, NON_CONFORMAL)

MIN_SAMPLES = 8


def metric_inverse(g, floor=1e-12):
    """Inverse metric ``g^{ij}``.

    Raises :class:`SingularMetric` when ``|det g|`` falls below
    ``floor * max|g_ij|**n`` or the matrix is not finite.
    """
    g = np.asarray(g, dtype=np.float64)
    if g.ndim != 2 or g.shape[0] != g.shape[1]:
        raise ValueError(f"metric must be a square matrix, got shape {g.shape}")
    if not np.all(np.isfinite(g)):
        raise SingularMetric("metric has non-finite entries")
    n = g.shape[0]
    scale = np.max(np.abs(g))
    det = np.linalg.det(g)
    if scale == 0.0 or abs(det) < floor * scale**n:
        raise SingularMetric(f"metric is degenerate (det={det:.3e})")
    return np.linalg.inv(g)


def _check(guard, q):
    if guard is not None and not guard(q):
        raise GuardViolation(f"point {q.tolist()} is outside the chart domain")


def lie_derivative_metric(X: VectorFieldDef, g: MetricField, q, guard=None):
    """Components of ``L_X g`` at ``q``.

    ``X^k d_k g_ij + g_ik d_j X^k + g_jk d_i X^k``; exactly symmetric.
    """
    q = _as_point(q)
    _check(guard, q)
    gq = g.eval(q)
    gj = gq @ X.jacobian(q)
    return np.einsum("k,ijk->ij", X.eval(q), g.deriv(q)) + (gj + gj.T)


def christoffel(g: MetricField, q, guard=None):
    """Christoffel symbols of the second kind, ``out[i, j, k] = Gamma^i_{jk}``."""
    q = _as_point(q)
    _check(guard, q)
    ginv = metric_inverse(g.eval(q))
    dg = g.deriv(q)
    # first kind, [l, j, k] = d_k g_lj + d_j g_lk - d_l g_jk
    lower = dg + dg.transpose(0, 2, 1) - dg.transpose(2, 0, 1)
    gamma = 0.5 * np.einsum("il,ljk->ijk", ginv, lower)
    return 0.5 * (gamma + gamma.transpose(0, 2, 1))


def kinetic_energy(g: MetricField, q, v, guard=None):
    q = _as_point(q)
    _check(guard, q)
    v = np.asarray(v, dtype=np.float64)
    return 0.5 * float(v @ g.eval(q) @ v)


def flat_map(g: MetricField, X: VectorFieldDef, q, guard=None):
    """Covector ``alpha_i = g_ij X^j`` associated with ``X``."""
    q = _as_point(q)
    _check(guard, q)
    return g.eval(q) @ X.eval(q)


def sharp_map(g: MetricField, alpha, q):
    """Vector ``g^{ij} alpha_j``; inverse of :func:`flat_map`."""
    return metric_inverse(g.eval(_as_point(q))) @ np.asarray(alpha, dtype=np.float64)


def covariant_derivative_flat(g: MetricField, X: VectorFieldDef, q):
    """``(nabla alpha)[j, k] = d_k alpha_j - alpha_i Gamma^i_{jk}`` for ``alpha = flat(X)``.

    Antisymmetric exactly when ``X`` is a Killing field.
    """
    q = _as_point(q)
    gq, dg, x = g.eval(q), g.deriv(q), X.eval(q)
    alpha = gq @ x
    dalpha = np.einsum("jmk,m->jk", dg, x) + gq @ X.jacobian(q)
    return dalpha - np.einsum("i,ijk->jk", alpha, christoffel(g, q))


@dataclass(frozen=True)
class ConformalClassification:
    """Outcome of :func:`classify_vector_field`.

    ``lam`` is the homothety constant (0 for Killing fields, ``None`` for the
    non-constant cases); ``f_samples`` pairs each sample point with its fitted
    conformal factor.
    """

    kind: str
    max_residual: float
    samples_used: int
    lam: Optional[float] = None
    f_samples: List[Tuple[np.ndarray, float]] = field(default_factory=list)
    skipped: List[np.ndarray] = field(default_factory=list)
    spread: float = 0.0

    @property
    def is_conformal(self):
        return self.kind != NON_CONFORMAL


def fit_conformal_factor(X: VectorFieldDef, g: MetricField, q):
    """Pointwise fit ``c = tr(g^{-1} L_X g) / n`` and its relative residual.

    Returns ``(c, residual)`` with residual ``max|L_X g - c g| / (1 + max|g|)``.
    """
    q = _as_point(q)
    gq = g.eval(q)
    lxg = lie_derivative_metric(X, g, q)
    c = float(np.trace(metric_inverse(gq) @ lxg)) / g.dim
    residual = float(np.max(np.abs(lxg - c * gq))) / (1.0 + float(np.max(np.abs(gq))))
    return c, residual


def default_tolerance(X: VectorFieldDef, g: MetricField):
    analytic = X.jacobian_mode == "analytic" and g.deriv_mode == "analytic"
    return 1e-8 if analytic else 1e-5


def classify_vector_field(X: VectorFieldDef, g: MetricField, samples, tol=None, guard=None):
    """Classify ``X`` as Killing, homothetic, proper conformal or non-conformal.

    Parameters
    ----------
    X, g : VectorFieldDef, MetricField
    samples : iterable of points
        At least 8 of them must pass ``guard``; the rest are skipped and
        listed in the result.
    tol : float, optional
        Threshold for the fit residual, for ``|lambda|`` and for the spread of
        the fitted factor across samples.  Defaults to 1e-8 with analytic
        derivatives and 1e-5 otherwise.
    guard : callable, optional
        Chart-domain predicate.
    """
    if tol is None:
        tol = default_tolerance(X, g)
    if tol <= 0:
        raise ValueError("tol must be positive")
    used, skipped = [], []
    for q in samples:
        q = _as_point(q)
        if guard is not None and not guard(q):
            skipped.append(q)
        else:
            used.append(q)
    if len(used) < MIN_SAMPLES:
        raise InsufficientSamples(f"need at least {MIN_SAMPLES} guarded samples, got {len(used)}")

    fits = [fit_conformal_factor(X, g, q) for q in used]
    factors = np.array([c for c, _ in fits])
    residuals = np.array([r for _, r in fits])
    max_residual = float(residuals.max())
    f_samples = list(zip(used, factors.tolist()))
    spread = float(factors.max() - factors.min())
    common = dict(max_residual=max_residual, samples_used=len(used), skipped=skipped, spread=spread)

    if max_residual > tol:
        return ConformalClassification(NON_CONFORMAL, **common)
    if spread > tol:
        return ConformalClassification(PROPER_CONFORMAL, f_samples=f_samples, **common)
    lam = float(factors.mean())
    if abs(lam) <= tol:
        return ConformalClassification(KILLING, lam=0.0, f_samples=f_samples, **common)
    return ConformalClassification(HOMOTHETIC, lam=lam, f_samples=f_samples, **common)


def derivative_crosscheck(field, q, step=1e-5):
    """Largest ``|analytic - central difference|`` over all derivative entries at ``q``."""
    q = _as_point(q)
    if isinstance(field, MetricField):
        pair = field.deriv_fn, field.deriv, lambda p: field.eval(p)
    elif isinstance(field, VectorFieldDef):
        pair = field.jacobian_fn, field.jacobian, lambda p: field.eval(p)
    elif isinstance(field, ScalarField):
        pair = field.gradient_fn, field.gradient, lambda p: field.eval(p)
    else:
        raise TypeError(f"unsupported field type {type(field).__name__}")
    analytic_fn, analytic, value = pair
    if analytic_fn is None:
        raise ValueError("field has no analytic derivative to check")
    numeric = central_difference(value, q, step)
    if isinstance(field, MetricField):
        numeric = 0.5 * (numeric + numeric.transpose(1, 0, 2))
    return float(np.max(np.abs(analytic(q) - numeric)))
