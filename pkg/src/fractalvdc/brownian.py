"""Wiener paths from a truncated Fourier series and their oscillatory integrals.

    W(t) = X_0 t + sqrt(2) sum_{n <= N} (X_n sin(2 pi n t) + Y_n (1 - cos(2 pi n t))) / (2 pi n)

with ``2N + 1`` standard normals drawn from a Philox stream keyed by the
seed. On the grid ``t_m = m / M`` the series is a single inverse FFT.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ResolutionError, ValidationError
from .io import write_csv, write_json


@dataclass(frozen=True)
class WienerPath:
    X0: float
    X: np.ndarray
    Y: np.ndarray
    N: int
    seed: int

    def _scales(self):
        n = np.arange(1, self.N + 1, dtype=np.float64)
        return math.sqrt(2.0) / (2.0 * math.pi * n)

    def evaluate(self, t):
        """Series value at arbitrary ``t`` (direct summation)."""
        t = np.atleast_1d(np.asarray(t, dtype=np.float64))
        n = np.arange(1, self.N + 1, dtype=np.float64)
        s = self._scales()
        out = np.empty_like(t)
        for i, ti in enumerate(t):
            th = 2.0 * math.pi * np.mod(n * ti, 1.0)
            out[i] = self.X0 * ti + float(np.sum(s * (self.X * np.sin(th) + self.Y * (1.0 - np.cos(th)))))
        return out

    def grid(self, M) -> np.ndarray:
        """``W(m / M)`` for ``m = 0 .. M`` (``M + 1`` values)."""
        M = int(M)
        if M <= self.N:
            raise ResolutionError(f"grid size M={M} cannot hold N={self.N} modes")
        s = self._scales()
        c = np.zeros(M, dtype=np.complex128)
        c[1 : self.N + 1] = s * (-self.Y - 1j * self.X)
        z = np.fft.ifft(c) * M
        w = np.empty(M + 1)
        w[:M] = z.real + float(np.sum(s * self.Y))
        w[:M] += self.X0 * (np.arange(M) / M)
        w[0] = 0.0
        w[M] = self.X0
        return w


def sample_path(N, seed) -> WienerPath:
    N = int(N)
    if N < 1:
        raise ValidationError("N must be at least 1")
    if seed is None:
        raise ValidationError("a seed is required")
    g = np.random.Generator(np.random.Philox(key=int(seed)))
    z = g.standard_normal(2 * N + 1)
    return WienerPath(float(z[0]), z[1 : N + 1], z[N + 1 :], N, int(seed))


def oscillatory_integral(path: WienerPath, xi, M, method="linear-phase", W=None) -> float:
    """``|int_0^1 exp(i xi W(t)) dt|`` from the path sampled on ``M`` intervals.

    ``linear-phase`` integrates ``exp(i xi W)`` exactly for ``W`` linear on
    each interval (a Filon-type rule), which stays accurate when ``xi dW``
    is of order one; ``trapezoid`` is the plain rule.
    """
    M = int(M)
    if M < 10 * path.N:
        raise ResolutionError(f"grid M={M} is below 10 N = {10 * path.N}")
    xi = float(xi)
    if xi == 0.0:
        return 1.0
    w = path.grid(M) if W is None else W
    ph = np.exp(1j * xi * w)
    if method == "trapezoid":
        val = (ph[:-1] + ph[1:]).sum() * 0.5 / M
    elif method == "linear-phase":
        u = xi * np.diff(w)
        small = np.abs(u) < 1e-6
        us = np.where(small, 1.0, u)
        fac = np.where(small, 1.0 + 0.5j * u - u * u / 6.0, np.expm1(1j * us) / (1j * us))
        val = (ph[:-1] * fac).sum() / M
    else:
        raise ValidationError(f"unknown method {method!r}")
    return min(1.0, float(abs(val)))


def decay_bound(xi, constant=5.0) -> float:
    """``constant * xi^-1 sqrt(ln xi)``."""
    xi = abs(float(xi))
    return constant / xi * math.sqrt(math.log(xi))


@dataclass
class BrownianStudy:
    xi: list
    seeds: list
    moduli: np.ndarray  # (len(seeds), len(xi))
    N: int
    M: int
    method: str

    def medians(self):
        return [float(v) for v in np.median(self.moduli, axis=0)]

    def median_slope(self) -> float:
        lx = np.log(np.asarray(self.xi))
        slope, _ = np.polyfit(lx, np.log(self.medians()), 1)
        return float(slope)

    def quantiles(self, qs=(0.1, 0.25, 0.5, 0.75, 0.9)):
        out = {}
        for j, xi in enumerate(self.xi):
            col = self.moduli[:, j]
            out[repr(float(xi))] = {f"q{int(round(q * 100)):02d}": float(np.quantile(col, q)) for q in qs}
        return out

    def summary(self) -> dict:
        return {
            "xi": list(self.xi),
            "N": self.N,
            "M": self.M,
            "method": self.method,
            "n_seeds": len(self.seeds),
            "median": self.medians(),
            "median_slope": self.median_slope() if len(self.xi) > 1 else None,
            "bound": [decay_bound(x) for x in self.xi],
            "quantiles": self.quantiles(),
        }

    def write_csv(self, path, provenance=None):
        rows = ((xi, s, self.moduli[i, j]) for i, s in enumerate(self.seeds) for j, xi in enumerate(self.xi))
        return write_csv(path, ["xi", "seed", "modulus"], rows, provenance)

    def write_json(self, path, provenance=None):
        obj = self.summary()
        if provenance is not None:
            obj["provenance"] = provenance
        return write_json(path, obj)


def brownian_study(xis, seeds, N=10_000, M=1 << 17, method="linear-phase") -> BrownianStudy:
    xis = [float(x) for x in xis]
    seeds = [int(s) for s in seeds]
    mod = np.empty((len(seeds), len(xis)))
    for i, s in enumerate(seeds):
        p = sample_path(N, s)
        w = p.grid(M)
        for j, xi in enumerate(xis):
            mod[i, j] = oscillatory_integral(p, xi, M, method, W=w)
    return BrownianStudy(xis, seeds, mod, int(N), int(M), method)
