"""Multiplicative-phase exponential sums and the linearisation of the phase.

For tables ``zeta_1 .. zeta_k`` (each ``2^n`` values) the object of study is

    |2^-kn sum_{b_1..b_k} exp(i eta zeta_1(b_1) ... zeta_k(b_k))|.

``direct`` enumerates every product. ``binned`` histograms each table on a
common log grid (linear-interpolation deposit), convolves the histograms
and sums the phase over the bin centres.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import fftconvolve

from . import kernels as K
from .census import ReductionParams, regular_couple_test, zeta_table
from .dynamics import as_map
from .errors import BudgetError, ResolutionError, ValidationError
from .fourier import envelope, loglog_fit
from .io import write_csv
from .words import Word

DIRECT_LIMIT = 26
DEFAULT_BINS = 1 << 20
PHASE_RESOLUTION = 0.01


@dataclass
class ExpSumInput:
    zeta_tables: list
    eta: float
    k: int | None = None
    n: int | None = None
    method: str = "direct"
    bins: int = DEFAULT_BINS
    epsilon1: float = 0.1

    def __post_init__(self):
        self.zeta_tables = [np.asarray(t, dtype=np.float64).ravel() for t in self.zeta_tables]
        if not self.zeta_tables:
            raise ValidationError("at least one zeta table is required")
        size = self.zeta_tables[0].size
        if any(t.size != size for t in self.zeta_tables) or size & (size - 1):
            raise ValidationError("zeta tables must share one power-of-two length")
        if self.k is None:
            self.k = len(self.zeta_tables)
        if self.n is None:
            self.n = size.bit_length() - 1
        if self.k != len(self.zeta_tables) or (1 << self.n) != size:
            raise ValidationError("k and n do not match the supplied tables")
        if self.method not in ("direct", "binned"):
            raise ValidationError(f"unknown method {self.method!r}")
        self.eta = float(self.eta)

    def hypothesis_ok(self) -> bool:
        """Tables inside ``[|eta|^{-eps1/2}, |eta|^{eps1/2}]``."""
        a = abs(self.eta)
        if a <= 1.0:
            return bool(all(np.all(t == 1.0) for t in self.zeta_tables))
        lo, hi = a ** (-0.5 * self.epsilon1), a ** (0.5 * self.epsilon1)
        return bool(all(t.min() >= lo and t.max() <= hi for t in self.zeta_tables))


def _direct(inp: ExpSumInput) -> complex:
    if inp.k * inp.n > DIRECT_LIMIT:
        raise BudgetError(f"direct enumeration needs k n <= {DIRECT_LIMIT}, got {inp.k * inp.n}")
    outer = np.ones(1)
    for t in inp.zeta_tables[:-1]:
        outer = np.multiply.outer(outer, t).ravel()
    re, im = K.product_phase_sum(abs(inp.eta), outer, inp.zeta_tables[-1])
    scale = math.ldexp(1.0, -inp.k * inp.n)
    return complex(re * scale, im * scale)


def _deposit(logs, origin, width, size):
    """Linear-interpolation histogram of ``logs`` on ``origin + width * j``."""
    pos = (logs - origin) / width
    j = np.floor(pos).astype(np.int64)
    frac = pos - j
    h = np.zeros(size + 1)
    np.add.at(h, j, 1.0 - frac)
    np.add.at(h, j + 1, frac)
    return h


def _binned(inp: ExpSumInput) -> complex:
    logs = [np.log(t) for t in inp.zeta_tables]
    lo = [float(l.min()) for l in logs]
    spans = [float(l.max()) - a for a, l in zip(lo, logs)]
    total = sum(spans)
    bins = int(inp.bins)
    width = total / bins if total > 0 else 1.0
    p_max = math.exp(sum(float(l.max()) for l in logs))
    if total > 0 and width * p_max * abs(inp.eta) > PHASE_RESOLUTION:
        raise ResolutionError(
            f"bin width {width * p_max:.3g} in the product domain times |eta| exceeds {PHASE_RESOLUTION}; "
            f"raise the bin count above {bins}"
        )
    hist = None
    for l, a, s in zip(logs, lo, spans):
        h = _deposit(l, a, width, int(math.ceil(s / width)) + 1)
        hist = h if hist is None else fftconvolve(hist, h)
    hist = np.clip(hist, 0.0, None)
    centres = sum(lo) + width * np.arange(hist.size)
    phase = abs(inp.eta) * np.exp(centres)
    mass = hist.sum()
    return complex(float((hist * np.cos(phase)).sum() / mass), float((hist * np.sin(phase)).sum() / mass))


def exp_sum_value(inp: ExpSumInput) -> complex:
    if inp.eta == 0.0:
        return 1.0 + 0.0j
    v = _direct(inp) if inp.method == "direct" else _binned(inp)
    return v.conjugate() if inp.eta < 0 else v


def exp_sum(inp: ExpSumInput) -> float:
    """Modulus of the normalised sum, clipped to ``[0, 1]``."""
    return min(1.0, abs(exp_sum_value(inp)))


def block_tables(block, n, delta):
    """``zeta_j = zeta_{(a_{j-1}, a_j)}`` for ``j = 1..k`` of a block ``a_0 .. a_k``."""
    words = [Word.coerce(w) for w in block]
    if len(words) < 2 or any(w.n != n for w in words):
        raise ValidationError(f"a block needs at least two words of length n={n}")
    m = as_map(delta)
    return [zeta_table(words[j - 1], words[j], n, m) for j in range(1, len(words))]


def block_is_regular(block, params: ReductionParams) -> bool:
    words = [Word.coerce(w) for w in block]
    return all(regular_couple_test(words[j - 1], words[j], params) for j in range(1, len(words)))


def eta_window(params: ReductionParams):
    return math.exp(0.5 * params.epsilon0 * params.n), math.exp(2.0 * params.epsilon0 * params.n)


@dataclass
class ScanResult:
    eta: list
    modulus: list
    method: str
    hypothesis_ok: list
    epsilon1_hat: float
    block_regular: bool
    in_window: bool
    extra: dict = field(default_factory=dict)

    def write_csv(self, path, provenance=None):
        rows = ((e, m, self.method, int(h)) for e, m, h in zip(self.eta, self.modulus, self.hypothesis_ok))
        return write_csv(path, ["eta", "modulus", "method", "hypothesis_ok"], rows, provenance)


def decay_scan(block, params: ReductionParams, eta_grid, method="direct", bins=DEFAULT_BINS) -> ScanResult:
    """Modulus along ``eta_grid`` and a log-log envelope fit ``eps1_hat``.

    Scales outside the window ``[e^{eps0 n / 2}, e^{2 eps0 n}]`` are scanned
    anyway and reported through ``in_window``.
    """
    tables = block_tables(block, params.n, params.delta)
    etas = sorted(float(e) for e in np.atleast_1d(eta_grid))
    mods, hyp = [], []
    for e in etas:
        inp = ExpSumInput(tables, e, method=method, bins=bins, epsilon1=params.epsilon1)
        mods.append(exp_sum(inp))
        hyp.append(inp.hypothesis_ok())
    lo, hi = eta_window(params)
    eps = 0.0
    pos = [e for e in etas if e > 0]
    if len(pos) >= 2:
        env = envelope([m for e, m in zip(etas, mods) if e > 0])
        if np.all(env > 0):
            slope, _, _ = loglog_fit(np.array(pos), env)
            eps = max(0.0, -slope)
    return ScanResult(
        etas,
        mods,
        method,
        hyp,
        eps,
        block_is_regular(block, params),
        bool(all(lo <= abs(e) <= hi for e in etas)),
        {"eta_window": [lo, hi]},
    )


# ---------------------------------------------------------------------------
# linearisation of the phase
# ---------------------------------------------------------------------------

def diagonal_cut(params: ReductionParams) -> float:
    """Pairs with ``|x - y|`` at or below ``e^{-(eps0/2 - alpha delta) n}`` form the diagonal."""
    return math.exp(-(0.5 * params.epsilon0 - params.alpha * params.delta) * params.n)


def _pack(words, n):
    bits = np.zeros(words[0].shape, dtype=np.int64)
    for w in words:
        bits = (bits << n) | w
    return bits


def linearization_residuals(A, B, x, y, n, k, delta):
    """Vectorised residuals.

    ``A`` is ``(M, k+1)`` and ``B`` is ``(M, k)``, both holding word integers;
    ``x`` and ``y`` have length ``M``. Returns
    ``|g_{A*B}(x) - g_{A*B}(y) - 4^{-kn} prod_j zeta_j(b_j) (x^ - y^)|``.
    """
    m = as_map(delta)
    A = np.asarray(A, dtype=np.int64).reshape(-1, k + 1)
    B = np.asarray(B, dtype=np.int64).reshape(-1, k)
    if 2 * k * n > 62:
        raise BudgetError("interleaved word A#B must fit in 62 letters")
    x = np.ascontiguousarray(x, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    size = x.size
    zero = np.zeros(size)
    dxy, y_hat = K.branch_diff(np.ascontiguousarray(A[:, k]), n, x, y, *m.args)
    pieces = []
    for j in range(k):
        pieces += [A[:, j], B[:, j]]
    ab = _pack(pieces, n)
    dfull, _ = K.diff_propagate(ab, 2 * k * n, y_hat, dxy, *m.args)
    prod = np.ones(size)
    for j in range(1, k + 1):
        xa, _, _ = K.branch_many(np.ascontiguousarray(A[:, j]), n, zero, *m.args)
        word = (A[:, j - 1] << n) | B[:, j - 1]
        _, der, _ = K.branch_many(np.ascontiguousarray(word), 2 * n, xa, *m.args)
        prod *= np.ldexp(der, 2 * n)
    return np.abs(dfull - np.ldexp(prod, -2 * k * n) * dxy)


def linearization_check(A, B, x, y, params: ReductionParams) -> float:
    n, k = params.n, params.k
    a_words = [Word.coerce(w) for w in A]
    b_words = [Word.coerce(w) for w in B]
    if len(a_words) != k + 1 or len(b_words) != k or any(w.n != n for w in a_words + b_words):
        raise ValidationError(f"need k+1={k + 1} words A and k={k} words B of length n={n}")
    cut = diagonal_cut(params)
    if abs(float(x) - float(y)) <= cut:
        raise ValidationError(f"|x - y| must exceed the diagonal cut {cut:.4g}")
    r = linearization_residuals(
        [[w.bits for w in a_words]], [[w.bits for w in b_words]], [float(x)], [float(y)], n, k, params
        .delta,
    )
    return float(r[0])


def linearization_scale(params: ReductionParams) -> float:
    """``e^{alpha delta n} 2^{-(2k+2)n}``."""
    return math.ldexp(math.exp(params.alpha * params.delta * params.n), -(2 * params.k + 2) * params.n)


def sample_offdiagonal(rng, size, cut):
    """Pairs in ``[0,1)^2`` with ``|x - y| > cut``, by rejection."""
    xs, ys = [], []
    got = 0
    while got < size:
        x = rng.random(4 * size + 64)
        y = rng.random(4 * size + 64)
        keep = np.abs(x - y) > cut
        xs.append(x[keep])
        ys.append(y[keep])
        got += int(keep.sum())
    return np.concatenate(xs)[:size], np.concatenate(ys)[:size]


def linearization_study(params: ReductionParams, configs=None, seed=0):
    """Maximum scaled residual ``residual / (e^{alpha delta n} 2^{-(2k+2)n})``.

    ``configs=None`` enumerates every ``(A, B)`` with one off-diagonal pair
    each; otherwise ``configs`` random configurations are drawn.
    """
    n, k = params.n, params.k
    rng = np.random.Generator(np.random.Philox(key=int(seed)))
    if configs is None:
        total = 1 << ((2 * k + 1) * n)
        if total > (1 << 22):
            raise BudgetError("exhaustive linearisation study is limited to 2^22 configurations")
        idx = np.arange(total, dtype=np.int64)
        mask = (1 << n) - 1
        cols = [(idx >> (n * (2 * k - j))) & mask for j in range(2 * k + 1)]
        A = np.stack(cols[: k + 1], axis=1)
        B = np.stack(cols[k + 1:], axis=1)
    else:
        total = int(configs)
        A = rng.integers(0, 1 << n, size=(total, k + 1), dtype=np.int64)
        B = rng.integers(0, 1 << n, size=(total, k), dtype=np.int64)
    x, y = sample_offdiagonal(rng, total, diagonal_cut(params))
    res = linearization_residuals(A, B, x, y, n, k, params.delta)
    return float(res.max() / linearization_scale(params)), res
