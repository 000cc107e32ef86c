"""Fourier transform of the measure of maximal entropy.

Every depth-``n`` cylinder carries mass exactly ``2^-n``, so

    mu_hat(xi) ~ 2^-n sum_a exp(i xi g_a(0))

with error at most ``|xi| * max diam S_a``. Alongside that rigorous bound
each sample carries an a-posteriori estimate ``2 |mu_hat_n - mu_hat_{n+1}|``;
the depth-``(n+1)`` sum reuses the depth-``n`` one because
``g_{a0}(0) = g_a(0)`` and ``g_{a1}(0) = g_a(1/2)``.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels as K
from .dynamics import as_map
from .errors import BudgetError, DepthOverflowError, FitRefusedError, InsufficientRangeError, ValidationError
from .io import write_csv, write_json

MAX_DEPTH = 30
CACHE_DEPTH = 24
TARGET_ERROR = 0.1


def rigorous_bound(xi, n, delta) -> float:
    """``|xi| * 2^-n * exp(n (|ln z| + delta / 4))``, which dominates ``|xi| max diam S_a``."""
    m = as_map(delta)
    lnz = abs(math.log(m.z_delta))
    return abs(float(xi)) * math.ldexp(math.exp(n * (lnz + 0.25 * m.delta)), -n)


def default_depth(xi, delta) -> int:
    """``ceil(log2 |xi|) + 4``, raised until the rigorous bound is at most 0.1."""
    a = abs(float(xi))
    if a == 0.0:
        return 1
    n = max(1, math.ceil(math.log2(a)) + 4)
    while rigorous_bound(a, n, delta) > TARGET_ERROR:
        n += 1
        if n > MAX_DEPTH:
            break
    if n > MAX_DEPTH:
        raise DepthOverflowError(f"|xi|={a:g} needs depth {n} > {MAX_DEPTH}")
    return n


@functools.lru_cache(maxsize=4)
def _table(n, x, delta, z):
    t = K.base_points(n, x, delta, z)
    t.setflags(write=False)
    return t


def _sum_at(xi, n, x, m):
    """``sum_{|a| = n} exp(i xi g_a(x))`` as ``(re, im)``."""
    if n <= CACHE_DEPTH:
        return K.exp_sum(xi, _table(n, x, *m.args))
    head = n - CACHE_DEPTH
    tail = _table(CACHE_DEPTH, x, *m.args)
    re = im = 0.0
    for p in range(1 << head):
        pts, _, _, _ = K.apply_word(tail, p, head, *m.args)
        r, i = K.exp_sum(xi, pts)
        re += r
        im += i
    return re, im


@dataclass(frozen=True)
class SpectrumSample:
    xi: float
    value: complex
    error_bound: float
    depth: int
    error_estimate: float = 0.0

    @property
    def modulus(self) -> float:
        return abs(self.value)


def mu_hat(xi, depth=None, delta=0.0, estimate=True) -> SpectrumSample:
    m = as_map(delta)
    xi = float(xi)
    if not math.isfinite(xi):
        raise ValidationError("xi must be finite")
    if xi == 0.0:
        return SpectrumSample(0.0, 1.0 + 0.0j, 0.0, int(depth or 0), 0.0)
    a = abs(xi)
    n = default_depth(a, m) if depth is None else int(depth)
    if n < 1 or n > MAX_DEPTH:
        raise DepthOverflowError(f"depth {n} outside [1, {MAX_DEPTH}]")
    r0, i0 = _sum_at(a, n, 0.0, m)
    scale = math.ldexp(1.0, -n)
    value = complex(r0 * scale, i0 * scale)
    est = 0.0
    if estimate:
        r1, i1 = _sum_at(a, n, 0.5, m)
        finer = complex((r0 + r1) * 0.5 * scale, (i0 + i1) * 0.5 * scale)
        est = 2.0 * abs(value - finer)
    if xi < 0:
        value = value.conjugate()
    return SpectrumSample(xi, value, rigorous_bound(a, n, m), n, est)


def spectrum(xi_grid, delta, depth=None, estimate=True):
    xs = np.asarray(xi_grid, dtype=np.float64).ravel()
    order = np.argsort(np.abs(xs), kind="stable")
    out = [None] * xs.size
    for i in order:
        out[i] = mu_hat(xs[i], depth, delta, estimate)
    return out


def log_grid(xi_min, xi_max, points):
    if not (0 < xi_min < xi_max) or points < 2:
        raise ValidationError("need 0 < xi_min < xi_max and at least two points")
    return np.logspace(math.log10(xi_min), math.log10(xi_max), int(points))


@dataclass(frozen=True)
class DecayFit:
    rho: float
    C: float
    xi_range: tuple
    fit_mode: str
    r_squared: float
    n_samples: int
    samples: list = field(default_factory=list, repr=False, compare=False)

    def to_json(self) -> dict:
        return {
            "rho": self.rho,
            "C": self.C,
            "xi_min": self.xi_range[0],
            "xi_max": self.xi_range[1],
            "mode": self.fit_mode,
            "n_samples": self.n_samples,
            "r_squared": self.r_squared,
        }


def envelope(values) -> np.ndarray:
    """Running supremum from the right."""
    v = np.asarray(values, dtype=np.float64)
    return np.maximum.accumulate(v[::-1])[::-1]


def loglog_fit(x, y):
    lx, ly = np.log(x), np.log(y)
    slope, icpt = np.polyfit(lx, ly, 1)
    pred = slope * lx + icpt
    ss = float(((ly - ly.mean()) ** 2).sum())
    r2 = 1.0 - float(((ly - pred) ** 2).sum()) / ss if ss > 0 else 1.0
    return float(slope), float(icpt), r2


def fit_samples(samples, fit_mode="envelope", refuse_on="estimate", max_rel_error=0.1) -> DecayFit:
    """Power-law fit ``|mu_hat| ~ C |xi|^-rho`` to existing samples.

    ``refuse_on="estimate"`` compares the a-posteriori error with the fitted
    quantity; ``"rigorous"`` uses the worst-case bound instead, which at
    large ``|xi|`` is far above the true error and refuses nearly always.
    """
    if fit_mode not in ("envelope", "all-points"):
        raise ValidationError(f"unknown fit mode {fit_mode!r}")
    samples = sorted(samples, key=lambda s: abs(s.xi))
    xi = np.array([abs(s.xi) for s in samples])
    if xi.size < 12:
        raise InsufficientRangeError(f"decay fit needs at least 12 samples, got {xi.size}")
    if np.any(xi <= 0) or math.log10(xi[-1] / xi[0]) < 3.0 - 1e-9:
        raise InsufficientRangeError("decay fit needs a positive grid spanning at least 3 decades")
    mod = np.array([s.modulus for s in samples])
    y = envelope(mod) if fit_mode == "envelope" else mod
    err = np.array([s.error_estimate if refuse_on == "estimate" else s.error_bound for s in samples])
    bad = err > max_rel_error * y
    if np.any(bad):
        j = int(np.argmax(bad))
        raise FitRefusedError(
            f"discretisation error {err[j]:.3g} exceeds {max_rel_error:.0%} of {y[j]:.3g} at xi={xi[j]:.6g}"
        )
    if np.any(y <= 0):
        raise FitRefusedError("zero modulus on the grid; use the envelope mode")
    slope, icpt, r2 = loglog_fit(xi, y)
    return DecayFit(-slope, math.exp(icpt), (float(xi[0]), float(xi[-1])), fit_mode, r2, int(xi.size), samples)


def decay_fit(xi_grid, delta, fit_mode="envelope", depth=None, refuse_on="estimate") -> DecayFit:
    return fit_samples(spectrum(xi_grid, delta, depth), fit_mode, refuse_on)


def export_spectrum_csv(path, samples, provenance=None):
    rows = (
        (s.xi, s.value.real, s.value.imag, s.modulus, s.error_bound, s.depth, s.error_estimate)
        for s in samples
    )
    header = ["xi", "re", "im", "abs", "error_bound", "depth", "error_estimate"]
    return write_csv(path, header, rows, provenance)


def export_fit_json(path, fit: DecayFit, provenance=None):
    obj = fit.to_json()
    if provenance is not None:
        obj["provenance"] = provenance
    return write_json(path, obj)


# ---------------------------------------------------------------------------
# classical van der Corput baseline
# ---------------------------------------------------------------------------

GL_ORDER = 10
VDC_MAX_XI = 1e8


def resolve_phase(phase):
    """Callable phase from a callable, an integer power, or text like ``"x^2"``."""
    if callable(phase):
        return phase
    if isinstance(phase, (int, np.integer)):
        k = int(phase)
        return lambda x: x**k
    s = str(phase).replace(" ", "").replace("**", "^")
    if s == "x":
        return lambda x: x
    if s.startswith("x^"):
        k = float(s[2:])
        return lambda x: x**k
    raise ValidationError(f"unrecognised phase {phase!r}")


def _gl_integral(phase, xi, panels):
    nodes, weights = np.polynomial.legendre.leggauss(GL_ORDER)
    h = 1.0 / panels
    re = im = 0.0
    step = max(1, (1 << 20) // GL_ORDER)
    for lo in range(0, panels, step):
        left = h * np.arange(lo, min(panels, lo + step), dtype=np.float64)
        x = left[:, None] + 0.5 * h * (nodes[None, :] + 1.0)
        t = xi * phase(x)
        w = 0.5 * h * weights[None, :]
        re += float((w * np.cos(t)).sum())
        im += float((w * np.sin(t)).sum())
    return complex(re, im)


def vdc_baseline(phase, k, xi, tol=1e-10, max_refinements=6) -> float:
    """``|int_0^1 exp(i xi phase(x)) dx|`` by composite Gauss-Legendre.

    Starts from at least ``10 xi / 2 pi`` panels and doubles until two
    successive values agree to ``tol``. ``k`` records the derivative order
    the caller vouches for; it only enters the reference bound ``xi^-1/k``.
    """
    if int(k) < 1:
        raise ValidationError("k must be a positive integer")
    xi = abs(float(xi))
    if xi > VDC_MAX_XI:
        raise BudgetError(f"xi={xi:g} exceeds the quadrature budget {VDC_MAX_XI:g}")
    ph = resolve_phase(phase)
    panels = max(16, math.ceil(10.0 * xi / (2.0 * math.pi)))
    prev = _gl_integral(ph, xi, panels)
    for _ in range(max_refinements):
        panels *= 2
        cur = _gl_integral(ph, xi, panels)
        if abs(cur - prev) <= tol * max(1.0, abs(cur)):
            return abs(cur)
        prev = cur
    return abs(prev)
