"""The conjugacy between the doubling map and the perturbed map.

``psi`` sends a point with binary digits ``a_1 a_2 ...`` to the point of the
perturbed circle with the same itinerary, approximated by the base point
``g_a(0)`` of its depth-``n`` cylinder. ``psi_inv`` reads the itinerary of
``y`` off forward iterates of ``f``. The measure of maximal entropy is
``mu = psi_* Lebesgue``, so ``mu([u, v]) = psi_inv(v) - psi_inv(u)``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from . import kernels as K
from .dynamics import PerturbedMap, as_map, f_map
from .errors import DomainError, InsufficientRangeError, PrecisionWarning
from .io import write_csv
from .words import leading_bits

MAX_PSI_DEPTH = 52
SAFE_INV_DEPTH = 40


def _check_depth(n, cap=MAX_PSI_DEPTH):
    n = int(n)
    if n < 1 or n > cap:
        raise DomainError(f"depth must lie in [1, {cap}], got {n}")
    return n


def diameter_bound(n, delta) -> float:
    """Upper bound ``2^-n e^{2 delta n}`` on the diameter of a depth-``n`` cylinder."""
    return math.ldexp(math.exp(2.0 * float(delta) * n), -n)


def psi(x, n, delta):
    m = as_map(delta)
    n = _check_depth(n)
    xa = np.mod(np.asarray(x, dtype=np.float64), 1.0)
    flat = np.atleast_1d(xa).ravel()
    bits = leading_bits(flat, n)
    out, _, _ = K.branch_many(bits, n, np.zeros_like(flat), *m.args)
    out = out.reshape(xa.shape)
    return float(out) if out.ndim == 0 else out


def psi_inv(y, n, delta, warn=True):
    """Lifted inverse: ``floor(y) + sum_j a_j 2^-j`` with ``a_j = [f^{j-1}(y) >= 1/2]``.

    The lift makes ``psi_inv(1) = 1`` so interval masses need no special
    case at the right end. Forward iteration loses about one bit per step;
    a :class:`PrecisionWarning` is emitted beyond depth 40.
    """
    m = as_map(delta)
    n = _check_depth(n)
    if warn and n > SAFE_INV_DEPTH and m.delta > 0.0:
        warnings.warn(
            f"psi_inv depth {n} exceeds {SAFE_INV_DEPTH}: round-off may exceed 2^-{n}",
            PrecisionWarning,
            stacklevel=2,
        )
    ya = np.asarray(y, dtype=np.float64)
    flat = np.atleast_1d(ya).ravel()
    fl = np.floor(flat)
    out = fl + K.itinerary_value(np.ascontiguousarray(flat - fl), n, *m.args)
    out = out.reshape(ya.shape)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class ConjugacyEvaluator:
    map: PerturbedMap
    depth: int = 30
    C: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "map", as_map(self.map))
        object.__setattr__(self, "depth", _check_depth(self.depth))

    @property
    def error_bound(self) -> float:
        return self.C * diameter_bound(self.depth, self.map.delta)

    def psi(self, x):
        return psi(x, self.depth, self.map)

    def psi_inv(self, y):
        return psi_inv(y, self.depth, self.map)

    def residual(self, x) -> float:
        """``max |psi(2x mod 1) - f(psi(x))|`` in circle distance."""
        x = np.asarray(x, dtype=np.float64)
        lhs = self.psi(np.mod(2.0 * x, 1.0))
        rhs = f_map(self.psi(x), self.map)
        gap = np.abs(np.asarray(lhs) - np.asarray(rhs))
        return float(np.max(np.minimum(gap, 1.0 - gap)))

    def export_csv(self, path, x, provenance=None):
        x = np.asarray(x, dtype=np.float64)
        p = np.atleast_1d(self.psi(x))
        eb = self.error_bound
        rows = ((xi, pi, eb) for xi, pi in zip(np.atleast_1d(x), p))
        return write_csv(path, ["x", "psi", "error_bound"], rows, provenance)


@dataclass(frozen=True)
class MeasureQuery:
    x: float
    r: float
    mass: float
    holder_exponent_estimate: float | None = None


def measure_interval(x, r, n, delta):
    """``mu([x - r, x + r])`` on the circle, to within ``4 * 2^-n``."""
    ra = np.asarray(r, dtype=np.float64)
    if np.any(~(ra > 0.0)) or np.any(ra > 0.5):
        raise DomainError("radius must satisfy 0 < r <= 1/2")
    xa = np.asarray(x, dtype=np.float64)
    hi = psi_inv(xa + ra, n, delta)
    lo = psi_inv(xa - ra, n, delta)
    mass = np.clip(np.asarray(hi) - np.asarray(lo), 0.0, 1.0)
    return float(mass) if mass.ndim == 0 else mass


def measure_query(x, r, n, delta) -> MeasureQuery:
    return MeasureQuery(float(x), float(r), measure_interval(x, r, n, delta))


def cylinder_masses(word_length, n, delta):
    """``mu(S_a)`` for every word of the given length, through ``psi_inv`` at depth ``n``."""
    m = as_map(delta)
    left = K.base_points(int(word_length), 0.0, *m.args)
    right = K.base_points(int(word_length), 1.0, *m.args)
    return np.asarray(psi_inv(right, n, m)) - np.asarray(psi_inv(left, n, m))


@dataclass(frozen=True)
class HolderFit:
    C: float
    delta_mu: float
    r: np.ndarray
    sup_mass: np.ndarray
    r_squared: float


def holder_mass_fit(x_grid, r_grid, n, delta, min_points=6) -> HolderFit:
    """Log-log fit of ``sup_x mu([x - r, x + r])`` against ``r``.

    Radii whose masses are within a few truncation errors of zero carry no
    information and are dropped; at least ``min_points`` must remain.
    """
    x = np.asarray(x_grid, dtype=np.float64).ravel()
    r = np.sort(np.asarray(r_grid, dtype=np.float64).ravel())
    floor = 16.0 * math.ldexp(1.0, -int(n))
    sup = np.array([np.max(measure_interval(x, ri, n, delta)) for ri in r])
    keep = (r >= floor) & (sup > floor)
    if keep.sum() < min_points:
        raise InsufficientRangeError(
            f"only {int(keep.sum())} usable radii (need {min_points}); raise depth or widen the grid"
        )
    lr, lm = np.log(r[keep]), np.log(sup[keep])
    slope, icpt = np.polyfit(lr, lm, 1)
    pred = slope * lr + icpt
    ss = float(((lm - lm.mean()) ** 2).sum())
    r2 = 1.0 - float(((lm - pred) ** 2).sum()) / ss if ss > 0 else 1.0
    return HolderFit(float(math.exp(icpt)), float(slope), r[keep], sup[keep], r2)


def window_mass_census(r, n, delta):
    """Exact ``sup_x mu([x - r, x + r])`` up to ``2 * 2^-n``.

    Counts depth-``n`` base points in the heaviest window of width ``2r``; an
    independent route to the same quantity as :func:`holder_mass_fit`.
    """
    m = as_map(delta)
    pts = K.base_points(int(n), 0.0, *m.args)
    ext = np.concatenate([pts, pts + 1.0])
    out = []
    for ri in np.atleast_1d(np.asarray(r, dtype=np.float64)):
        hi = np.searchsorted(ext, pts + 2.0 * ri, side="right")
        out.append(float((hi - np.arange(pts.size)).max()) * math.ldexp(1.0, -int(n)))
    return np.array(out)
