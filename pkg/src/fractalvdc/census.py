"""Non-concentration censuses.

Conventions. A couple ``(a, d)`` of words of length ``n`` defines the table

    zeta(b) = 4^n g_{ab}'(x_d),    x_d = g_d(0),    b in {0,1}^n,

and a block ``a_0 ... a_k`` is the chain of couples ``(a_{j-1}, a_j)``.
Pair counts are over ordered pairs ``(b, c)`` including ``b = c``. They are
exact 64-bit integers from a sort plus two-pointer sweep, and fractions are
formed only when a report is built.

Birkhoff sums use the observable ``Phi(2y mod 1)`` (see :mod:`dynamics`), so
``ln zeta(b) = -2n ln z - delta * S_{2n}(g_{ab} x_d)`` holds to round-off.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels as K
from .dynamics import DELTA_WALK_MAX, as_map, branch, check_delta
from .errors import BudgetError, ScaleError, ValidationError
from .io import write_csv, write_json
from .words import Word

EXHAUSTIVE_BUDGET = 1 << 30


# ---------------------------------------------------------------------------
# parameters and reports
# ---------------------------------------------------------------------------

def measure_alpha(delta, n=12) -> float:
    """Smallest ``alpha`` with ``|ln(2^n g_a'(x))| <= alpha * delta * n`` over all
    words of length ``n`` and ``x`` in ``{0, 1/4, 1/2, 3/4}``.

    Computed as ``max |S_n / n + ln(z) / delta|`` so that ``delta = 0`` has
    its limiting value.
    """
    m = as_map(delta)
    lz = math.log(m.z_delta) / m.delta if m.delta > 0 else 0.0
    worst = 0.0
    for x in (0.0, 0.25, 0.5, 0.75):
        _, _, s, _ = K.branch_tree(int(n), x, *m.args)
        worst = max(worst, float(np.max(np.abs(s / n + lz))))
    return worst


@dataclass(frozen=True)
class ReductionParams:
    n: int
    k: int = 2
    epsilon0: float = 1.0 / 20.0
    epsilon1: float = 0.1
    delta: float = 0.01
    alpha: float | None = None
    gamma: float = 1.0 / 100.0
    sigma_grid: tuple | None = None

    def __post_init__(self):
        if int(self.n) < 1 or int(self.k) < 1:
            raise ValidationError("n and k must be positive")
        object.__setattr__(self, "delta", check_delta(self.delta))
        if self.alpha is None:
            object.__setattr__(self, "alpha", measure_alpha(self.delta, min(int(self.n), 12)))
        if self.sigma_grid is not None:
            object.__setattr__(self, "sigma_grid", tuple(sorted(float(s) for s in self.sigma_grid)))

    def couple_sigma_range(self):
        return math.exp(-4.0 * self.epsilon0 * self.n), math.exp(-0.5 * self.epsilon0 * self.epsilon1 * self.n)

    def couple_sigmas(self) -> tuple:
        """Dyadic scales inside the couple window, ascending (or the override)."""
        if self.sigma_grid is not None:
            return self.sigma_grid
        lo, hi = self.couple_sigma_range()
        j_min = max(1, math.ceil(-math.log2(hi)))
        j_max = math.floor(-math.log2(lo))
        return tuple(math.ldexp(1.0, -j) for j in range(j_max, j_min - 1, -1))

    def derivative_sigma_range(self):
        lo = math.exp(-5.0 * self.epsilon0 * self.n)
        hi = math.inf if self.delta == 0 else math.exp(-self.epsilon0 * self.epsilon1 * self.n / 3.0) / self.delta
        return lo, hi

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "k": self.k,
            "epsilon0": self.epsilon0,
            "epsilon1": self.epsilon1,
            "delta": self.delta,
            "alpha": self.alpha,
            "gamma": self.gamma,
            "sigma_grid": list(self.couple_sigmas()),
        }


@dataclass
class CensusReport:
    sigma: list
    counts: list
    population: int
    mode: str = "exhaustive"
    gamma_hat: float | None = None
    seed: int | None = None
    samples: int | None = None
    extra: dict = field(default_factory=dict)
    populations: list | None = None

    @property
    def fractions(self) -> list:
        pops = self.populations or [self.population] * len(self.counts)
        return [c / p for c, p in zip(self.counts, pops)]

    def to_json(self) -> dict:
        out = {
            "sigma": list(self.sigma),
            "counts": [int(c) for c in self.counts],
            "fractions": self.fractions,
            "gamma_hat": self.gamma_hat,
            "population": int(self.population),
            "mode": self.mode,
        }
        if self.populations is not None:
            out["populations"] = [int(p) for p in self.populations]
        if self.seed is not None:
            out["seed"] = int(self.seed)
        if self.samples is not None:
            out["samples"] = int(self.samples)
        out.update(self.extra)
        return out

    def write_json(self, path, provenance=None):
        obj = self.to_json()
        if provenance is not None:
            obj["provenance"] = provenance
        return write_json(path, obj)

    def write_csv(self, path, provenance=None):
        rows = zip(self.sigma, self.counts, self.fractions)
        return write_csv(path, ["sigma", "count", "fraction"], rows, provenance)


def dyadic_sigmas(j_min, j_max):
    """``2^-j`` for ``j = j_max .. j_min`` (ascending values)."""
    return [math.ldexp(1.0, -j) for j in range(int(j_max), int(j_min) - 1, -1)]


def fit_exponent(sigmas, fractions) -> float:
    """Least-squares slope of ``log fraction`` against ``log sigma``."""
    s = np.asarray(sigmas, dtype=np.float64)
    f = np.asarray(fractions, dtype=np.float64)
    keep = (s > 0) & (f > 0)
    if keep.sum() < 2:
        return 0.0
    slope, _ = np.polyfit(np.log(s[keep]), np.log(f[keep]), 1)
    return float(slope)


def philox(seed) -> np.random.Generator:
    if seed is None:
        raise ValidationError("monte-carlo sampling needs an explicit seed")
    return np.random.Generator(np.random.Philox(key=int(seed)))


def wilson_interval(successes, trials, level=0.95):
    from scipy.stats import binomtest

    if trials == 0:
        return 0.0, 1.0
    ci = binomtest(int(successes), int(trials)).proportion_ci(confidence_level=level, method="wilson")
    return float(ci.low), float(ci.high)


# ---------------------------------------------------------------------------
# zeta tables and pair counts
# ---------------------------------------------------------------------------

def _words(a, d, n):
    a, d = Word.coerce(a), Word.coerce(d)
    if a.n != n or d.n != n:
        raise ValidationError(f"couple words must both have length n={n}")
    return a, d


def zeta_table(a, d, n=None, delta=0.0, with_log=False):
    """``zeta(b)`` for every ``b`` of length ``n``, in word order."""
    a, d = Word.coerce(a), Word.coerce(d)
    n = a.n if n is None else int(n)
    a, d = _words(a, d, n)
    m = as_map(delta)
    xd = branch(d, 0.0, m)
    pts, der_b, s_b, _ = K.branch_tree(n, xd, *m.args)
    _, der_a, s_a, _ = K.apply_word(pts, a.bits, n, *m.args)
    z = np.ldexp(der_a * der_b, 2 * n)
    if not with_log:
        return z
    log_z = -2.0 * n * math.log(m.z_delta) - m.delta * (s_b + s_a)
    return z, log_z


def zeta(a_prev, a_next, b, delta) -> float:
    """``4^n g_{a_prev b}'(x_{a_next})`` for one word ``b``."""
    a_prev, a_next, b = (Word.coerce(w) for w in (a_prev, a_next, b))
    n = b.n
    _words(a_prev, a_next, n)
    m = as_map(delta)
    xd = branch(a_next, 0.0, m)
    _, der, _, _ = K.apply_word(np.array([xd]), (a_prev + b).bits, 2 * n, *m.args)
    return math.ldexp(float(der[0]), 2 * n)


def pair_counts(values, sigmas):
    """Ordered pairs with ``|v_i - v_j| <= sigma`` for each ``sigma``."""
    u = np.sort(np.asarray(values, dtype=np.float64))
    return [int(K.count_close_pairs(u, float(s))) for s in np.atleast_1d(sigmas)]


def pair_count_bruteforce(values, sigma) -> int:
    v = np.asarray(values, dtype=np.float64)
    total = 0
    for lo in range(0, v.size, 1024):
        total += int((np.abs(v[lo:lo + 1024, None] - v[None, :]) <= sigma).sum())
    return total


def pair_concentration(a_prev, a_next, sigma, n, delta):
    counts = pair_counts(zeta_table(a_prev, a_next, n, delta), sigma)
    return counts[0] if np.ndim(sigma) == 0 else counts


def couple_census(a, d, params: ReductionParams, sigmas=None) -> CensusReport:
    n = params.n
    sig = list(params.couple_sigmas() if sigmas is None else sorted(sigmas))
    counts = pair_counts(zeta_table(a, d, n, params.delta), sig)
    pop = 1 << (2 * n)
    rep = CensusReport(sig, counts, pop, "exhaustive")
    rep.gamma_hat = fit_exponent(sig, rep.fractions)
    rep.extra["bound"] = [s**params.gamma for s in sig]
    return rep


def full_sweep_sigmas(n):
    """Every dyadic scale ``2^-j``, ``j = 1 .. 2n``."""
    return dyadic_sigmas(1, 2 * n)


def couple_gamma_hat(a, d, n, delta, sigmas=None) -> float:
    sig = full_sweep_sigmas(n) if sigmas is None else sigmas
    counts = pair_counts(zeta_table(a, d, n, delta), sig)
    return fit_exponent(sig, [c / float(1 << (2 * n)) for c in counts])


def _first_failure(z, params, sig):
    """Index of the smallest failing scale in ``sig`` (``len(sig)`` if none fails)."""
    pop = float(1 << (2 * params.n))
    counts = pair_counts(z, sig)
    for i, (c, s) in enumerate(zip(counts, sig)):
        if c / pop > s**params.gamma:
            return i
    return len(sig)


def regular_couple_test(a, d, params: ReductionParams) -> bool:
    sig = params.couple_sigmas()
    return _first_failure(zeta_table(a, d, params.n, params.delta), params, sig) == len(sig)


# ---------------------------------------------------------------------------
# regular blocks
# ---------------------------------------------------------------------------

def couple_failure_matrix(params: ReductionParams) -> np.ndarray:
    """``F[a, d]`` = first failing scale index of the couple ``(a, d)``."""
    n = params.n
    size = 1 << n
    if size * size * size > EXHAUSTIVE_BUDGET:
        raise BudgetError(f"exhaustive couple matrix at n={n} exceeds the enumeration budget")
    sig = params.couple_sigmas()
    m = as_map(params.delta)
    xs = K.base_points(n, 0.0, *m.args)
    out = np.empty((size, size), dtype=np.int16)
    for di in range(size):
        pts, der_b, _, _ = K.branch_tree(n, float(xs[di]), *m.args)
        for ai in range(size):
            _, der_a, _, _ = K.apply_word(pts, ai, n, *m.args)
            out[ai, di] = _first_failure(np.ldexp(der_a * der_b, 2 * n), params, sig)
    return out


def regular_block_census(params: ReductionParams, sampler="exhaustive", samples=None, seed=None) -> CensusReport:
    """Census of blocks ``a_0 .. a_k`` whose couples are all regular.

    ``counts[i]`` is the number of blocks with some couple failing at a scale
    ``<= sigma[i]``; the last entry is the number of irregular blocks.
    """
    n, k = params.n, params.k
    sig = list(params.couple_sigmas())
    nsig = len(sig)
    if sampler == "exhaustive":
        if (k + 1) * n > 24:
            raise BudgetError("exhaustive block census needs (k+1) n <= 24; use monte-carlo")
        fail = couple_failure_matrix(params)
        pop = 1 << ((k + 1) * n)
        counts = []
        for i in range(nsig):
            ok = (fail > i).astype(np.int64)
            v = np.ones(1 << n, dtype=np.int64)
            for _ in range(k):
                v = ok @ v
            counts.append(pop - int(v.sum()))
        rep = CensusReport(sig, counts, pop, "exhaustive")
    elif sampler == "monte-carlo":
        if samples is None or int(samples) < 1:
            raise ValidationError("monte-carlo census needs a positive sample count")
        rng = philox(seed)
        blocks = rng.integers(0, 1 << n, size=(int(samples), k + 1), dtype=np.int64)
        m = as_map(params.delta)
        cache = {}
        first = np.empty(int(samples), dtype=np.int64)
        for s in range(int(samples)):
            worst = nsig
            for j in range(1, k + 1):
                key = (int(blocks[s, j - 1]), int(blocks[s, j]))
                if key not in cache:
                    z = zeta_table(Word(key[0], n), Word(key[1], n), n, m)
                    cache[key] = _first_failure(z, params, sig)
                worst = min(worst, cache[key])
                if worst == 0:
                    break
            first[s] = worst
        counts = [int((first <= i).sum()) for i in range(nsig)]
        rep = CensusReport(sig, counts, int(samples), "monte-carlo", seed=int(seed), samples=int(samples))
        lo, hi = wilson_interval(counts[-1] if counts else 0, int(samples))
        rep.extra["irregular_ci95"] = [lo, hi]
    else:
        raise ValidationError(f"unknown sampler {sampler!r}")
    irregular = rep.counts[-1] if rep.counts else 0
    rep.extra["irregular_fraction"] = irregular / rep.population
    rep.extra["params"] = params.to_json()
    return rep


# ---------------------------------------------------------------------------
# derivative and Birkhoff-sum censuses
# ---------------------------------------------------------------------------

def _check_scale(sigma, params):
    lo, hi = params.derivative_sigma_range()
    s = float(sigma)
    if not (lo <= s <= hi):
        raise ScaleError(f"sigma={s:g} outside the admissible range [{lo:.4g}, {hi:.4g}] at n={params.n}")
    return s


def refinement_depth(sigma) -> int:
    """``floor(|log2 sigma| / 2)``."""
    return int(math.floor(abs(math.log2(float(sigma))) / 2.0))


def _expansion_lipschitz(n, delta):
    """Lipschitz constant in ``x`` of ``d/dx S_{2n}(g_{ab} x)`` on a half circle."""
    if delta == 0.0:
        return 0.0
    ell = np.arange(1, n + 1, dtype=np.float64)
    lip_d = 2.0 * float(np.sum(3.0 * delta * np.exp2(-ell) * np.exp(4.0 * delta * ell)))
    sup_d = 2.0 * float(np.sum(np.exp2(-ell) * np.exp(2.0 * delta * ell)))
    g1 = math.ldexp(math.exp(2.0 * delta * n), -n)
    g2 = g1 * 3.0 * delta * math.exp(2.0 * delta * n)
    return lip_d + lip_d * g1 * g1 + sup_d * g2


def _derivative_values(a, n, x, m):
    pts, der_b, _, d_b = K.branch_tree(n, x, *m.args)
    _, _, _, d_a = K.apply_word(pts, a.bits, n, *m.args)
    return d_b + d_a * der_b


def _union_pair_count(u0, u1, thr0, thr1):
    total = 0
    for lo in range(0, u0.size, 512):
        h0 = np.abs(u0[lo:lo + 512, None] - u0[None, :]) <= thr0
        h1 = np.abs(u1[lo:lo + 512, None] - u1[None, :]) <= thr1
        total += int((h0 | h1).sum())
    return total


def derivative_census(a, sigma, n, delta, params=None, check_scale=True) -> CensusReport:
    """Triples ``(b, c, d)`` with ``inf_{x in S_d} |(S_{2n} o g_{ab} - S_{2n} o g_{ac})'(x)| <= sigma^{1/10}``.

    ``d`` has length ``floor(|log2 sigma| / 2)``. The infimum is bounded
    below by the value at the left end of ``S_d`` minus a Lipschitz
    correction, so the counts are upper bounds for the true ones.
    """
    a = Word.coerce(a)
    n = int(n)
    if a.n != n:
        raise ValidationError("word a must have length n")
    if n > 12:
        raise BudgetError("derivative census is exhaustive and limited to n <= 12")
    params = params or ReductionParams(n, delta=delta)
    m = as_map(delta)
    lip = _expansion_lipschitz(n, m.delta)
    sig = sorted(float(s) for s in np.atleast_1d(sigma))
    counts, pops, depths = [], [], []
    for s in sig:
        if check_scale:
            _check_scale(s, params)
        nt = refinement_depth(s)
        thr = s**0.1
        if nt == 0:
            u0 = _derivative_values(a, n, 0.0, m)
            u1 = _derivative_values(a, n, 0.5, m)
            r0 = 2.0 * lip * (branch("0", 1.0, m) - 0.0)
            r1 = 2.0 * lip * (1.0 - 0.5)
            c = _union_pair_count(u0, u1, thr + r0, thr + r1)
        else:
            left = K.base_points(nt, 0.0, *m.args)
            right = K.base_points(nt, 1.0, *m.args)
            c = 0
            for x, y in zip(left, right):
                u = np.sort(_derivative_values(a, n, float(x), m))
                c += int(K.count_close_pairs(u, thr + 2.0 * lip * float(y - x)))
        counts.append(c)
        pops.append(1 << (2 * n + nt))
        depths.append(nt)
    rep = CensusReport(sig, counts, max(pops), "exhaustive", populations=pops)
    rep.extra.update(
        refinement_depth=depths,
        lipschitz=lip,
        bound=[m.delta ** -0.5 * s ** (1.0 / 50.0) for s in sig] if m.delta > 0 else None,
    )
    rep.gamma_hat = fit_exponent(sig, rep.fractions)
    return rep


def xd_spacing(n, delta) -> float:
    """Smallest circular gap between the base points ``x_d``, ``|d| = n``."""
    m = as_map(delta)
    x = K.base_points(int(n), 0.0, *m.args)
    gaps = np.diff(np.concatenate([x, [x[0] + 1.0]]))
    return float(gaps.min())


def birkhoff_proximity_census(a, sigma, n, delta, params=None, sampler="exhaustive",
                              samples=None, seed=None, check_scale=True) -> CensusReport:
    """Triples ``(b, c, d)`` with ``|S_{2n}(g_{ab} x_d) - S_{2n}(g_{ac} x_d)| <= sigma``."""
    a = Word.coerce(a)
    n = int(n)
    if a.n != n:
        raise ValidationError("word a must have length n")
    params = params or ReductionParams(n, delta=delta)
    m = as_map(delta)
    sig = sorted(float(s) for s in np.atleast_1d(sigma))
    if check_scale:
        for s in sig:
            _check_scale(s, params)
    if sampler == "exhaustive":
        if n > 12:
            raise BudgetError("exhaustive Birkhoff census is limited to n <= 12")
        xs = K.base_points(n, 0.0, *m.args)
        counts = np.zeros(len(sig), dtype=np.int64)
        for x in xs:
            pts, _, s_b, _ = K.branch_tree(n, float(x), *m.args)
            _, _, s_a, _ = K.apply_word(pts, a.bits, n, *m.args)
            counts += np.array(pair_counts(s_b + s_a, sig), dtype=np.int64)
        rep = CensusReport(sig, [int(c) for c in counts], 1 << (3 * n), "exhaustive")
    elif sampler == "monte-carlo":
        if samples is None or int(samples) < 1:
            raise ValidationError("monte-carlo census needs a positive sample count")
        rng = philox(seed)
        trip = rng.integers(0, 1 << n, size=(int(samples), 3), dtype=np.int64)
        xd, _, _ = K.branch_many(np.ascontiguousarray(trip[:, 2]), n, np.zeros(int(samples)), *m.args)
        abits = np.full(int(samples), a.bits, dtype=np.int64)
        tot = []
        for col in (0, 1):
            p, _, s_b = K.branch_many(np.ascontiguousarray(trip[:, col]), n, xd, *m.args)
            _, _, s_a = K.branch_many(abits, n, p, *m.args)
            tot.append(s_b + s_a)
        gap = np.abs(tot[0] - tot[1])
        counts = [int((gap <= s).sum()) for s in sig]
        rep = CensusReport(sig, counts, int(samples), "monte-carlo", seed=int(seed), samples=int(samples))
        rep.extra["ci95"] = [list(wilson_interval(c, int(samples))) for c in counts]
    else:
        raise ValidationError(f"unknown sampler {sampler!r}")
    spacing = xd_spacing(n, m)
    floor = math.ldexp(math.exp(-4.0 * m.delta * n), -n)
    rep.extra.update(
        xd_spacing=spacing,
        xd_spacing_floor=floor,
        xd_spacing_ok=bool(spacing >= floor),
        bound=[2.0 * m.delta ** -0.5 * s ** (1.0 / 50.0) for s in sig] if m.delta > 0 else None,
    )
    rep.gamma_hat = fit_exponent(sig, rep.fractions)
    return rep


# ---------------------------------------------------------------------------
# random-walk anti-concentration
# ---------------------------------------------------------------------------

ALPHA0 = 1.0 - math.log(3.0) / math.log(4.0)


def anticoncentration_bound(n, sigma) -> float:
    return (4.0 / 3.0) ** 2 * float(sigma) ** ALPHA0 + 2.0 * 0.75 ** (n / 2.0)


def constant_rho(n, value=0.5) -> np.ndarray:
    return np.full((int(n), 1 << int(n)), float(value))


def random_rho_tables(n, delta, points, sigma, seed) -> np.ndarray:
    """Tables for ``points`` base points that respect the window and fluctuation hypotheses."""
    d = check_delta(delta, DELTA_WALK_MAX)
    rng = philox(seed)
    n = int(n)
    lo, hi = 0.5 * math.exp(-2.0 * d), 0.5 * math.exp(2.0 * d)
    base = lo + (hi - lo) * (0.25 + 0.5 * rng.random((n, 1 << n)))
    room = (hi - lo) * 0.25
    out = np.empty((int(points), n, 1 << n))
    for e in range(int(points)):
        amp = np.minimum((hi ** np.arange(1, n + 1))[:, None] * float(sigma) ** 3 / 2.0, room)
        out[e] = base + amp * (2.0 * rng.random((n, 1 << n)) - 1.0)
    return out


def rademacher_anticoncentration(n, rho_tables, target, sigma, delta=None):
    """``2^-n #{s in {-1,1}^n : exists x in E, |X^x(s) - a(x)| <= sigma}``.

    ``rho_tables`` is ``(n, 2^n)`` for one point or ``(|E|, n, 2^n)``; row
    ``i`` holds ``rho_{i+1}`` indexed by the first ``i+1`` signs packed with
    ``+1`` as bit 1, first sign most significant.
    """
    n = int(n)
    if n < 1 or n > 20:
        raise BudgetError("enumeration over {-1,1}^n is limited to 1 <= n <= 20")
    rho = np.asarray(rho_tables, dtype=np.float64)
    if rho.ndim == 0:
        rho = np.full((1, n, 1 << n), float(rho))
    elif rho.ndim == 2:
        rho = rho[None]
    if rho.shape[1] < n or rho.shape[2] < (1 << n):
        raise ValidationError("rho tables must have shape (|E|, n, 2^n)")
    if delta is not None:
        d = check_delta(delta, DELTA_WALK_MAX)
        lo, hi = 0.5 * math.exp(-2.0 * d), 0.5 * math.exp(2.0 * d)
        if np.any(rho < lo * (1 - 1e-15)) or np.any(rho > hi * (1 + 1e-15)):
            raise ValidationError("rho values must lie in [e^{-2 delta}/2, e^{2 delta}/2]")
    tgt = np.broadcast_to(np.asarray(target, dtype=np.float64), (rho.shape[0],))
    sig = np.atleast_1d(np.asarray(sigma, dtype=np.float64))
    hits = np.zeros((sig.size, 1 << n), dtype=bool)
    for e in range(rho.shape[0]):
        x = K.signed_sums(np.ascontiguousarray(rho[e, :n, : 1 << n]), n)
        dist = np.abs(x - tgt[e])
        hits |= dist[None, :] <= sig[:, None]
    frac = hits.sum(axis=1) / float(1 << n)
    return float(frac[0]) if np.ndim(sigma) == 0 else frac


def dyadic_subset_sum_fraction(n, sigma):
    """Exact ``P(|sum_i s_i 2^-i| <= sigma)`` for uniform signs, by convolving counts."""
    n = int(n)
    span = 1 << n
    counts = np.zeros(2 * span + 1, dtype=np.int64)
    counts[span] = 1
    for i in range(1, n + 1):
        step = 1 << (n - i)
        nxt = np.zeros_like(counts)
        nxt[step:] += counts[:-step]
        nxt[:-step] += counts[step:]
        counts = nxt
    values = (np.arange(2 * span + 1) - span) / float(span)
    sig = np.atleast_1d(np.asarray(sigma, dtype=np.float64))
    frac = np.array([counts[np.abs(values) <= s].sum() for s in sig]) / float(span)
    return float(frac[0]) if np.ndim(sigma) == 0 else frac
