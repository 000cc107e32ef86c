"""The perturbed doubling map and its inverse branches.

The chart ``phi_delta`` is the normalised primitive of ``exp(delta * Phi)``
for the tent observable ``Phi``; the map is ``f(x) = phi_delta(2x mod 1)``.
Everything here is closed form (exponentials and logarithms), so the only
error is floating-point round-off.

Branch order: ``g_a = g_{a_1} o ... o g_{a_n}``. The first letter picks the
coarse half of the circle, the last letter is applied first.

The Birkhoff sums returned by :func:`birkhoff_sum` are sums of
``Phi(2y mod 1)`` along the forward orbit ``y = f^k(g_a x)``. With that
observable the identity

    -ln g_a'(x) = n (ln 2 + ln z_delta) + delta * S_n(x)

holds exactly (up to round-off); :func:`cohomology_residual` measures it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels as K
from .errors import DomainError
from .words import Word

DELTA_MAX = 1.0 / 20.0
# the random-walk anti-concentration estimate needs the tighter bound
DELTA_WALK_MAX = 1.0 / 200.0


def check_delta(delta, bound=DELTA_MAX) -> float:
    d = float(delta)
    if math.isnan(d) or not (0.0 <= d < bound):
        raise DomainError(
            f"delta={delta!r} is not admissible: the map family is supported for "
            f"0 <= delta < 1/20, and the anti-concentration estimates assume delta < 1/200"
        )
    return d


def _check_unit(x, name="x"):
    a = np.asarray(x, dtype=np.float64)
    if np.any(~np.isfinite(a)) or np.any(a < 0.0) or np.any(a > 1.0):
        raise DomainError(f"{name} must lie in [0, 1]")
    return a


def _scalar_or_array(a):
    return float(a) if np.ndim(a) == 0 else a


def tent_phi(x):
    """Tent observable: ``x - 1/4`` on ``[0, 1/2)``, ``3/4 - x`` on ``[1/2, 1)``, 1-periodic."""
    return _scalar_or_array(K.tent_v(np.asarray(x, dtype=np.float64)))


def normalizer(delta) -> float:
    d = check_delta(delta)
    if d == 0.0:
        return 1.0
    return d / (4.0 * math.sinh(0.25 * d))


@dataclass(frozen=True)
class PerturbedMap:
    delta: float = 0.0
    z_delta: float = field(init=False)
    branch_order_convention: str = field(init=False, default="first letter = coarse cylinder")

    def __post_init__(self):
        object.__setattr__(self, "delta", check_delta(self.delta))
        object.__setattr__(self, "z_delta", normalizer(self.delta))

    @property
    def args(self):
        return self.delta, self.z_delta

    def phi(self, x):
        return phi_delta(x, self.delta)

    def phi_inv(self, y):
        return phi_delta_inv(y, self.delta)

    def f(self, x):
        return f_map(x, self.delta)

    def branch(self, word, x):
        return branch(word, x, self.delta)

    def branch_derivative(self, word, x):
        return branch_derivative(word, x, self.delta)

    def birkhoff_sum(self, word, x):
        return birkhoff_sum(word, x, self.delta)


def as_map(m) -> PerturbedMap:
    return m if isinstance(m, PerturbedMap) else PerturbedMap(m)


def phi_delta(x, delta):
    m = as_map(delta)
    return _scalar_or_array(K.phi_v(_check_unit(x), *m.args))


def phi_delta_inv(y, delta):
    m = as_map(delta)
    return _scalar_or_array(K.phi_inv_v(_check_unit(y, "y"), *m.args))


def phi_delta_prime(x, delta):
    m = as_map(delta)
    x = _check_unit(x)
    return _scalar_or_array(m.z_delta * np.exp(m.delta * K.tent_v(x)))


def f_map(x, delta):
    """One step of the perturbed map on the circle ``[0, 1)``."""
    m = as_map(delta)
    x = np.mod(np.asarray(x, dtype=np.float64), 1.0)
    return _scalar_or_array(np.mod(K.f_v(x, *m.args), 1.0))


def f_iterate(x, n, delta):
    m = as_map(delta)
    y = np.mod(np.asarray(x, dtype=np.float64), 1.0)
    for _ in range(int(n)):
        y = np.mod(K.f_v(y, *m.args), 1.0)
    return _scalar_or_array(y)


def _word_pass(word, x, delta):
    w = Word.coerce(word)
    if w.n < 1:
        raise DomainError("branch words must have at least one letter")
    m = as_map(delta)
    xa = _check_unit(x)
    flat = np.ascontiguousarray(np.atleast_1d(xa).ravel())
    out = K.apply_word(flat, w.bits, w.n, *m.args)
    return w, m, [o.reshape(xa.shape) for o in out]


def branch(word, x, delta):
    """``g_a(x)``; lands in the cylinder of ``a``."""
    return _scalar_or_array(_word_pass(word, x, delta)[2][0])


def branch_derivative(word, x, delta):
    return _scalar_or_array(_word_pass(word, x, delta)[2][1])


def birkhoff_sum(word, x, delta, method="branches"):
    """``S_n(g_a x)`` for the orbit observable ``Phi(2y mod 1)``.

    ``method="branches"`` reads the orbit ``f^k(g_a x) = g_{a_{k+1}..a_n}(x)``
    off the inverse branches (stable for any ``n``). ``method="forward"``
    iterates ``f`` from ``g_a(x)`` and sums with ``math.fsum``; forward
    iteration doubles round-off each step, so it is an oracle for small
    ``n`` only.
    """
    if method == "branches":
        return _scalar_or_array(_word_pass(word, x, delta)[2][2])
    if method != "forward":
        raise DomainError(f"unknown method {method!r}")
    w, m, (pts, *_rest) = _word_pass(word, x, delta)
    flat = np.atleast_1d(pts).ravel()
    out = np.empty_like(flat)
    for i, y in enumerate(flat):
        terms = []
        for _ in range(w.n):
            terms.append(float(K.tent_v(2.0 * y)))
            y = float(np.mod(K.f_v(y, *m.args), 1.0))
        out[i] = math.fsum(terms)
    return _scalar_or_array(out.reshape(np.shape(pts)))


def birkhoff_derivative(word, x, delta):
    """``d/dx S_n(g_a x)``, from the expansion ``2 * sum_i sign_i * (g_{a_i..a_n})'(x)``."""
    return _scalar_or_array(_word_pass(word, x, delta)[2][3])


def branch_difference(word, x, y, delta):
    """``g_a(x) - g_a(y)`` without cancellation, for ``x`` close to ``y``."""
    w = Word.coerce(word)
    m = as_map(delta)
    xa = np.atleast_1d(_check_unit(x)).ravel()
    ya = np.atleast_1d(_check_unit(y, "y")).ravel()
    xa, ya = np.broadcast_arrays(xa, ya)
    bits = np.full(xa.shape, w.bits, dtype=np.int64)
    dif, _ = K.branch_diff(bits, w.n, np.ascontiguousarray(xa), np.ascontiguousarray(ya), *m.args)
    return _scalar_or_array(dif.reshape(np.broadcast(np.asarray(x), np.asarray(y)).shape))


def cohomology_residual(word, x, delta):
    """``|-ln g_a'(x) - n(ln 2 + ln z) - delta * S_n(g_a x)|``."""
    w, m, (_, der, bsum, _) = _word_pass(word, x, delta)
    lhs = -np.log(der)
    rhs = w.n * (math.log(2.0) + math.log(m.z_delta)) + m.delta * bsum
    return _scalar_or_array(np.abs(lhs - rhs))


@dataclass(frozen=True)
class BranchTable:
    """All ``2^n`` branches of depth ``n`` evaluated at one point, in word order."""

    n: int
    x: float
    points: np.ndarray
    derivatives: np.ndarray
    birkhoff: np.ndarray
    birkhoff_derivative: np.ndarray


def branch_table(n, x, delta) -> BranchTable:
    m = as_map(delta)
    n = int(n)
    if n < 0 or n > 28:
        raise DomainError(f"table depth must lie in [0, 28], got {n}")
    x = float(_check_unit(x))
    return BranchTable(n, x, *K.branch_tree(n, x, *m.args))


def base_points(n, delta, x=0.0) -> np.ndarray:
    """``g_a(x)`` for every word of length ``n`` (default ``x = 0``: left endpoints)."""
    m = as_map(delta)
    return K.base_points(int(n), float(x), *m.args)


@dataclass(frozen=True)
class Cylinder:
    word: Word
    left: float
    right: float
    base_point: float
    depth: int

    @property
    def diameter(self) -> float:
        return self.right - self.left

    @property
    def mass(self) -> float:
        return math.ldexp(1.0, -self.depth)

    def contains(self, x) -> bool:
        return self.left <= x < self.right


def cylinder(word, delta) -> Cylinder:
    """``S_a = g_a([0, 1))``; ``left`` is the base point ``g_a(0)``."""
    w = Word.coerce(word)
    if w.n == 0:
        return Cylinder(w, 0.0, 1.0, 0.0, 0)
    left = branch(w, 0.0, delta)
    right = branch(w, 1.0, delta)
    return Cylinder(w, left, right, left, w.n)


def cylinder_endpoints(n, delta):
    """Left and right endpoints of all depth-``n`` cylinders, in word order."""
    m = as_map(delta)
    return K.base_points(int(n), 0.0, *m.args), K.base_points(int(n), 1.0, *m.args)
