"""Metric, vector and scalar fields on a single coordinate chart.

Each field is built either from plain Python callables (derivatives optional,
falling back to central differences) or from a compiled kernel with one of the
fixed signatures in :mod:`virialgeo._kernels`.  Compiled fields take the fast
path in integration and time averaging; both kinds expose the same pointwise
interface.
"""

import threading
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from numba import njit
from numba.core.dispatcher import Dispatcher

from . import _kernels

DEFAULT_STEP = 1e-5


class LazyKernel:
    """A numba kernel compiled for one fixed signature on first use.

    Building a system then costs nothing until a kernel actually runs.
    """

    def __init__(self, func, signature):
        self.func = func
        self.signature = signature
        self._dispatcher = None
        self._lock = threading.Lock()

    @property
    def dispatcher(self):
        if self._dispatcher is None:
            with self._lock:
                if self._dispatcher is None:
                    self._dispatcher = njit(self.signature)(self.func)
        return self._dispatcher

    def __call__(self, *args):
        # compiled signatures take writable arrays only
        args = [np.array(a) if isinstance(a, np.ndarray) and not a.flags.writeable else a for a in args]
        return self.dispatcher(*args)


def _as_point(q):
    return np.array(q, dtype=np.float64).reshape(-1)


def fd_steps(q, step=DEFAULT_STEP):
    """Per-coordinate central-difference steps ``step * max(1, |q^k|)``."""
    return step * np.maximum(1.0, np.abs(q))


def central_difference(func, q, step=DEFAULT_STEP):
    """Derivative of ``func`` at ``q`` with the coordinate index appended last.

    ``func`` may return a scalar or an array of any shape ``S``; the result
    has shape ``S + (n,)``.
    """
    q = _as_point(q)
    h = fd_steps(q, step)
    cols = []
    for k in range(q.size):
        e = np.zeros_like(q)
        e[k] = h[k]
        cols.append((np.asarray(func(q + e)) - np.asarray(func(q - e))) / (2.0 * h[k]))
    return np.stack(cols, axis=-1)


@dataclass(frozen=True, eq=False)
class MetricField:
    """A (pseudo-)Riemannian metric ``g_ij(q)`` on an ``dim``-dimensional chart.

    Parameters
    ----------
    dim : int
        Chart dimension.
    value_fn : callable
        ``q -> (dim, dim)`` array.  The returned matrix is symmetrized.
    deriv_fn : callable, optional
        ``q -> (dim, dim, dim)`` array with entry ``[i, j, k] = d g_ij / d q^k``.
        Central differences are used when omitted.
    step : float
        Relative step for central differences.
    kernel : numba dispatcher, optional
        Compiled ``(q, g, dg)`` kernel (a :class:`LazyKernel`); set by
        :meth:`compiled`.
    """

    dim: int
    value_fn: Callable
    deriv_fn: Optional[Callable] = None
    step: float = DEFAULT_STEP
    kernel: Optional[Callable] = None

    @classmethod
    def compiled(cls, dim, func):
        """Build from a ``(q, g, dg)`` function compatible with ``numba.njit``."""
        kernel = LazyKernel(func, _kernels.METRIC_SIG)

        def value(q):
            g = np.zeros((dim, dim))
            kernel(_as_point(q), g, np.zeros((dim, dim, dim)))
            return g

        def deriv(q):
            dg = np.zeros((dim, dim, dim))
            kernel(_as_point(q), np.zeros((dim, dim)), dg)
            return dg

        return cls(dim, value, deriv, kernel=kernel)

    @property
    def deriv_mode(self):
        return "analytic" if self.deriv_fn is not None else "central-difference"

    def eval(self, q):
        g = np.asarray(self.value_fn(_as_point(q)), dtype=np.float64)
        return 0.5 * (g + g.T)

    def deriv(self, q):
        if self.deriv_fn is None:
            return self.fd_deriv(q)
        dg = np.asarray(self.deriv_fn(_as_point(q)), dtype=np.float64)
        return 0.5 * (dg + dg.transpose(1, 0, 2))

    def fd_deriv(self, q):
        return central_difference(self.eval, q, self.step)


@dataclass(frozen=True, eq=False)
class VectorFieldDef:
    """Vector field ``X^i(q)`` with Jacobian ``[i, j] = d X^i / d q^j``."""

    dim: int
    value_fn: Callable
    jacobian_fn: Optional[Callable] = None
    step: float = DEFAULT_STEP
    kernel: Optional[Callable] = None

    @classmethod
    def compiled(cls, dim, func):
        """Build from a ``(q, x, jac)`` function compatible with ``numba.njit``."""
        kernel = LazyKernel(func, _kernels.VECTOR_SIG)

        def value(q):
            x = np.zeros(dim)
            kernel(_as_point(q), x, np.zeros((dim, dim)))
            return x

        def jacobian(q):
            jac = np.zeros((dim, dim))
            kernel(_as_point(q), np.zeros(dim), jac)
            return jac

        return cls(dim, value, jacobian, kernel=kernel)

    @property
    def jacobian_mode(self):
        return "analytic" if self.jacobian_fn is not None else "central-difference"

    def eval(self, q):
        return np.asarray(self.value_fn(_as_point(q)), dtype=np.float64).reshape(self.dim)

    def jacobian(self, q):
        if self.jacobian_fn is None:
            return self.fd_jacobian(q)
        return np.asarray(self.jacobian_fn(_as_point(q)), dtype=np.float64).reshape(self.dim, self.dim)

    def fd_jacobian(self, q):
        return central_difference(self.eval, q, self.step)

    # Linear combinations lose the compiled kernel but keep analytic Jacobians.
    def __mul__(self, c):
        c = float(c)
        jac = None if self.jacobian_fn is None else (lambda q: c * self.jacobian(q))
        return VectorFieldDef(self.dim, lambda q: c * self.eval(q), jac, self.step)

    __rmul__ = __mul__

    def __add__(self, other):
        if other.dim != self.dim:
            raise ValueError("vector fields live on charts of different dimension")
        jac = None
        if self.jacobian_fn is not None and other.jacobian_fn is not None:
            jac = lambda q: self.jacobian(q) + other.jacobian(q)  # noqa: E731
        return VectorFieldDef(self.dim, lambda q: self.eval(q) + other.eval(q), jac, self.step)


@dataclass(frozen=True, eq=False)
class ScalarField:
    """Scalar function on the chart (potentials, conformal factors)."""

    dim: int
    value_fn: Callable
    gradient_fn: Optional[Callable] = None
    step: float = DEFAULT_STEP
    kernel: Optional[Callable] = None

    @classmethod
    def compiled(cls, dim, func):
        """Build from a ``(q, grad) -> value`` function compatible with ``numba.njit``."""
        kernel = LazyKernel(func, _kernels.SCALAR_SIG)

        def value(q):
            return kernel(_as_point(q), np.zeros(dim))

        def gradient(q):
            grad = np.zeros(dim)
            kernel(_as_point(q), grad)
            return grad

        return cls(dim, value, gradient, kernel=kernel)

    @classmethod
    def constant(cls, dim, c):
        c = float(c)
        return cls.compiled(dim, _constant_scalar(c))

    @property
    def gradient_mode(self):
        return "analytic" if self.gradient_fn is not None else "central-difference"

    def eval(self, q):
        return float(self.value_fn(_as_point(q)))

    def gradient(self, q):
        if self.gradient_fn is None:
            return self.fd_gradient(q)
        return np.asarray(self.gradient_fn(_as_point(q)), dtype=np.float64).reshape(self.dim)

    def fd_gradient(self, q):
        return central_difference(self.eval, q, self.step)


def _constant_scalar(c):
    def func(q, grad):
        for i in range(grad.shape[0]):
            grad[i] = 0.0
        return c

    return func


def compiled_guard(func):
    """Compile a ``q -> bool`` chart guard for use inside the integrator."""
    return LazyKernel(func, _kernels.GUARD_SIG)


def is_compiled(*objs):
    """True when every field carries a kernel and every guard is compiled."""
    for obj in objs:
        if isinstance(obj, (MetricField, VectorFieldDef, ScalarField)):
            if obj.kernel is None:
                return False
        elif not isinstance(obj, (LazyKernel, Dispatcher)):
            return False
    return True


def native(obj):
    """The numba dispatcher behind a compiled field or guard."""
    if isinstance(obj, (MetricField, VectorFieldDef, ScalarField)):
        obj = obj.kernel
    if isinstance(obj, LazyKernel):
        return obj.dispatcher
    if isinstance(obj, Dispatcher):
        return obj
    raise TypeError(f"{obj!r} has no compiled kernel")
