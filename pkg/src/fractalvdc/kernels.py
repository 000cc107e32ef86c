"""Hot loops of the package, in two interchangeable backends.

Every kernel exists as a numba loop (``_nb_*``) and a vectorised numpy
function (``_np_*``). Module-level names bind to the numba versions unless
``FRACTALVDC_DISABLE_JIT`` is set; ``NUMBA`` and ``NUMPY`` expose both sets
explicitly for equivalence tests and the benchmark.

Conventions shared by all kernels:

* ``d`` is the perturbation size delta and ``z`` its normaliser.
* Word tables are in lexicographic order with the first letter as the most
  significant bit, so entry ``i`` of a depth-``n`` table belongs to the
  ``i``-th cylinder from the left.
* Letters are prepended one at a time (``g_{cw} = g_c o g_w``), which is how
  the tables are grown.
* Reductions are accumulated in fixed-size blocks combined in index order,
  so results do not depend on the number of worker threads.
"""

from __future__ import annotations

import math
from types import SimpleNamespace

import numpy as np

from ._jit import USE_JIT, njit

SUM_BLOCK = 1 << 16


# ---------------------------------------------------------------------------
# scalar closed forms (compiled when numba is present)
# ---------------------------------------------------------------------------

@njit
def tent_s(x):
    x = x - math.floor(x)
    if x < 0.5:
        return x - 0.25
    return 0.75 - x


@njit
def phi_s(x, d, z):
    if d == 0.0:
        return x
    if x <= 0.5:
        return z * math.exp(-0.25 * d) * math.expm1(d * x) / d
    return 1.0 - z * math.exp(-0.25 * d) * math.expm1(d * (1.0 - x)) / d


@njit
def phi_inv_s(y, d, z):
    if d == 0.0:
        return y
    if y <= 0.5:
        return math.log1p(y * d * math.exp(0.25 * d) / z) / d
    return 1.0 - math.log1p((1.0 - y) * d * math.exp(0.25 * d) / z) / d


@njit
def dphi_inv_s(y, d, z):
    """Derivative of the inverse chart, ``1 / (z exp(d Phi(phi^-1(y))))``."""
    if d == 0.0:
        return 1.0
    w = y if y <= 0.5 else 1.0 - y
    return 1.0 / (z * math.exp(-0.25 * d) + d * w)


@njit
def f_s(x, d, z):
    u = 2.0 * x
    u = u - math.floor(u)
    return phi_s(u, d, z)


# ---------------------------------------------------------------------------
# vectorised closed forms
# ---------------------------------------------------------------------------

def tent_v(x):
    x = np.mod(x, 1.0)
    return np.where(x < 0.5, x - 0.25, 0.75 - x)


def phi_v(x, d, z):
    x = np.asarray(x, dtype=np.float64)
    if d == 0.0:
        return x.copy()
    c = z * math.exp(-0.25 * d) / d
    lo = c * np.expm1(d * np.minimum(x, 1.0 - x))
    return np.where(x <= 0.5, lo, 1.0 - lo)


def phi_inv_v(y, d, z):
    y = np.asarray(y, dtype=np.float64)
    if d == 0.0:
        return y.copy()
    c = d * math.exp(0.25 * d) / z
    lo = np.log1p(c * np.where(y <= 0.5, y, 1.0 - y)) / d
    return np.where(y <= 0.5, lo, 1.0 - lo)


def dphi_inv_v(y, d, z):
    y = np.asarray(y, dtype=np.float64)
    if d == 0.0:
        return np.ones_like(y)
    w = np.where(y <= 0.5, y, 1.0 - y)
    return 1.0 / (z * math.exp(-0.25 * d) + d * w)


def f_v(x, d, z):
    u = np.mod(2.0 * np.asarray(x, dtype=np.float64), 1.0)
    return phi_v(u, d, z)


# ---------------------------------------------------------------------------
# branch tree: g_w(x), g_w'(x), Birkhoff sum and its derivative for all w
# ---------------------------------------------------------------------------

@njit
def _nb_branch_tree(n, x, d, z):
    size = 1 << n
    pts = np.empty(size)
    der = np.empty(size)
    bsum = np.empty(size)
    dsum = np.empty(size)
    pts[0] = x
    der[0] = 1.0
    bsum[0] = 0.0
    dsum[0] = 0.0
    m = 1
    for _ in range(n):
        for i in range(m):
            y = pts[i]
            u = phi_inv_s(y, d, z)
            h = 0.5 * dphi_inv_s(y, d, z) * der[i]
            t = tent_s(u)
            s = 2.0 if y < 0.5 else -2.0
            b = bsum[i] + t
            q = dsum[i] + s * h
            pts[i] = 0.5 * u
            pts[i + m] = 0.5 * (u + 1.0)
            der[i] = h
            der[i + m] = h
            bsum[i] = b
            bsum[i + m] = b
            dsum[i] = q
            dsum[i + m] = q
        m *= 2
    return pts, der, bsum, dsum


def _np_branch_tree(n, x, d, z):
    pts = np.array([x], dtype=np.float64)
    der = np.ones(1)
    bsum = np.zeros(1)
    dsum = np.zeros(1)
    for _ in range(n):
        u = phi_inv_v(pts, d, z)
        h = 0.5 * dphi_inv_v(pts, d, z) * der
        b = bsum + tent_v(u)
        q = dsum + np.where(pts < 0.5, 2.0, -2.0) * h
        pts = np.concatenate([0.5 * u, 0.5 * (u + 1.0)])
        der = np.concatenate([h, h])
        bsum = np.concatenate([b, b])
        dsum = np.concatenate([q, q])
    return pts, der, bsum, dsum


@njit
def _nb_base_points(n, x, d, z):
    size = 1 << n
    pts = np.empty(size)
    pts[0] = x
    m = 1
    for _ in range(n):
        for i in range(m):
            u = phi_inv_s(pts[i], d, z)
            pts[i] = 0.5 * u
            pts[i + m] = 0.5 * (u + 1.0)
        m *= 2
    return pts


def _np_base_points(n, x, d, z):
    pts = np.array([x], dtype=np.float64)
    for _ in range(n):
        u = phi_inv_v(pts, d, z)
        pts = np.concatenate([0.5 * u, 0.5 * (u + 1.0)])
    return pts


# ---------------------------------------------------------------------------
# one word applied to many points / many words applied to many points
# ---------------------------------------------------------------------------

@njit
def _nb_apply_word(pts, bits, n, d, z):
    """``g_w`` (fixed word ``w`` of length ``n``) applied to every point, with
    its derivative and Birkhoff sum along the way."""
    size = pts.shape[0]
    out = np.empty(size)
    der = np.empty(size)
    bsum = np.empty(size)
    dsum = np.empty(size)
    for i in range(size):
        y = pts[i]
        h = 1.0
        b = 0.0
        q = 0.0
        for j in range(n):
            c = (bits >> j) & 1
            u = phi_inv_s(y, d, z)
            h *= 0.5 * dphi_inv_s(y, d, z)
            b += tent_s(u)
            q += (2.0 if y < 0.5 else -2.0) * h
            y = 0.5 * (u + c)
        out[i] = y
        der[i] = h
        bsum[i] = b
        dsum[i] = q
    return out, der, bsum, dsum


def _np_apply_word(pts, bits, n, d, z):
    y = np.array(pts, dtype=np.float64, copy=True)
    h = np.ones_like(y)
    b = np.zeros_like(y)
    q = np.zeros_like(y)
    for j in range(n):
        c = (bits >> j) & 1
        u = phi_inv_v(y, d, z)
        h = h * 0.5 * dphi_inv_v(y, d, z)
        b = b + tent_v(u)
        q = q + np.where(y < 0.5, 2.0, -2.0) * h
        y = 0.5 * (u + c)
    return y, h, b, q


@njit
def _nb_branch_many(bits, n, x, d, z):
    """``g_{w_i}(x_i)``, ``g_{w_i}'(x_i)`` and the Birkhoff sum, for paired words and points."""
    size = bits.shape[0]
    out = np.empty(size)
    der = np.empty(size)
    bsum = np.empty(size)
    for i in range(size):
        y = x[i]
        h = 1.0
        b = 0.0
        w = bits[i]
        for j in range(n):
            c = (w >> j) & 1
            u = phi_inv_s(y, d, z)
            h *= 0.5 * dphi_inv_s(y, d, z)
            b += tent_s(u)
            y = 0.5 * (u + c)
        out[i] = y
        der[i] = h
        bsum[i] = b
    return out, der, bsum


def _np_branch_many(bits, n, x, d, z):
    bits = np.asarray(bits, dtype=np.int64)
    y = np.array(x, dtype=np.float64, copy=True)
    h = np.ones_like(y)
    b = np.zeros_like(y)
    for j in range(n):
        c = ((bits >> j) & 1).astype(np.float64)
        u = phi_inv_v(y, d, z)
        h = h * 0.5 * dphi_inv_v(y, d, z)
        b = b + tent_v(u)
        y = 0.5 * (u + c)
    return y, h, b


@njit
def _nb_diff_propagate(bits, n, v0, dv0, d, z):
    """Carry ``(g_w(v + dv) - g_w(v), g_w(v))`` through per-sample words.

    Subtracting two composed branches loses every digit once the images are
    closer than the ulp of their common value; carrying the difference avoids
    that and is exact for affine branches.
    """
    size = bits.shape[0]
    dif = np.empty(size)
    base = np.empty(size)
    for i in range(size):
        v = v0[i]
        dv = dv0[i]
        w = bits[i]
        for j in range(n):
            c = (w >> j) & 1
            dv = 0.5 * _phi_inv_diff_s(v, dv, d, z)
            v = 0.5 * (phi_inv_s(v, d, z) + c)
        dif[i] = dv
        base[i] = v
    return dif, base


def _nb_branch_diff(bits, n, x, y, d, z):
    """``g_w(x) - g_w(y)`` without cancellation, plus ``g_w(y)``."""
    return _nb_diff_propagate(bits, n, y, x - y, d, z)


@njit
def _phi_inv_diff_s(v, dv, d, z):
    """``phi^-1(v + dv) - phi^-1(v)`` without cancellation."""
    if d == 0.0:
        return dv
    u = v + dv
    if (v <= 0.5) == (u <= 0.5):
        c = d * math.exp(0.25 * d) / z
        if v <= 0.5:
            return math.log1p(c * dv / (1.0 + c * v)) / d
        return -math.log1p(-c * dv / (1.0 + c * (1.0 - v))) / d
    return (phi_inv_s(u, d, z) - 0.5) + (0.5 - phi_inv_s(v, d, z))


def _np_phi_inv_diff(v, dv, d, z):
    if d == 0.0:
        return np.array(dv, dtype=np.float64, copy=True)
    c = d * math.exp(0.25 * d) / z
    u = v + dv
    same = (v <= 0.5) == (u <= 0.5)
    lower = v <= 0.5
    sgn = np.where(lower, 1.0, -1.0)
    base = np.where(lower, v, 1.0 - v)
    near = sgn * np.log1p(sgn * c * dv / (1.0 + c * base)) / d
    far = (phi_inv_v(u, d, z) - 0.5) + (0.5 - phi_inv_v(v, d, z))
    return np.where(same, near, far)


def _np_diff_propagate(bits, n, v0, dv0, d, z):
    bits = np.asarray(bits, dtype=np.int64)
    v = np.array(v0, dtype=np.float64, copy=True)
    dv = np.array(dv0, dtype=np.float64, copy=True)
    for j in range(n):
        c = ((bits >> j) & 1).astype(np.float64)
        dv = 0.5 * _np_phi_inv_diff(v, dv, d, z)
        v = 0.5 * (phi_inv_v(v, d, z) + c)
    return dv, v


def _np_branch_diff(bits, n, x, y, d, z):
    return _np_diff_propagate(bits, n, y, np.asarray(x) - np.asarray(y), d, z)


# ---------------------------------------------------------------------------
# forward itinerary (inverse conjugacy)
# ---------------------------------------------------------------------------

@njit
def _nb_itinerary_value(y, n, d, z):
    size = y.shape[0]
    out = np.empty(size)
    for i in range(size):
        v = y[i] - math.floor(y[i])
        acc = 0.0
        scale = 0.5
        for _ in range(n):
            if v >= 0.5:
                acc += scale
            scale *= 0.5
            v = f_s(v, d, z)
        out[i] = acc
    return out


def _np_itinerary_value(y, n, d, z):
    v = np.mod(np.asarray(y, dtype=np.float64), 1.0)
    acc = np.zeros_like(v)
    scale = 0.5
    for _ in range(n):
        acc = acc + np.where(v >= 0.5, scale, 0.0)
        scale *= 0.5
        v = f_v(v, d, z)
    return acc


# ---------------------------------------------------------------------------
# exponential sums
# ---------------------------------------------------------------------------

@njit
def _nb_exp_sum(xi, pts):
    """``sum_j exp(i xi p_j)`` with block-ordered accumulation."""
    size = pts.shape[0]
    nblk = (size + SUM_BLOCK - 1) // SUM_BLOCK
    re = np.zeros(nblk)
    im = np.zeros(nblk)
    for b in range(nblk):
        lo = b * SUM_BLOCK
        hi = min(size, lo + SUM_BLOCK)
        sr = 0.0
        si = 0.0
        for j in range(lo, hi):
            t = xi * pts[j]
            sr += math.cos(t)
            si += math.sin(t)
        re[b] = sr
        im[b] = si
    tr = 0.0
    ti = 0.0
    for b in range(nblk):
        tr += re[b]
        ti += im[b]
    return tr, ti


def _np_exp_sum(xi, pts):
    tr = 0.0
    ti = 0.0
    for lo in range(0, pts.shape[0], SUM_BLOCK):
        t = xi * pts[lo:lo + SUM_BLOCK]
        tr += float(np.cos(t).sum())
        ti += float(np.sin(t).sum())
    return tr, ti


@njit
def _nb_product_phase_sum(eta, outer, inner):
    """``sum_{p in outer, q in inner} exp(i eta p q)``."""
    tr = 0.0
    ti = 0.0
    for a in range(outer.shape[0]):
        sr = 0.0
        si = 0.0
        pa = eta * outer[a]
        for b in range(inner.shape[0]):
            t = pa * inner[b]
            sr += math.cos(t)
            si += math.sin(t)
        tr += sr
        ti += si
    return tr, ti


def _np_product_phase_sum(eta, outer, inner):
    tr = 0.0
    ti = 0.0
    step = max(1, SUM_BLOCK // max(1, inner.shape[0]))
    for lo in range(0, outer.shape[0], step):
        t = eta * np.multiply.outer(outer[lo:lo + step], inner)
        tr += float(np.cos(t).sum())
        ti += float(np.sin(t).sum())
    return tr, ti


# ---------------------------------------------------------------------------
# pair counting
# ---------------------------------------------------------------------------

@njit
def _nb_count_close_pairs(u, sigma):
    """Ordered pairs ``(i, j)`` with ``|u_i - u_j| <= sigma``; ``u`` sorted."""
    size = u.shape[0]
    j = 0
    half = 0
    for i in range(size):
        if j < i + 1:
            j = i + 1
        while j < size and u[j] - u[i] <= sigma:
            j += 1
        half += j - i - 1
    return 2 * half + size


def _np_count_close_pairs(u, sigma):
    size = u.shape[0]
    hi = np.searchsorted(u, u + sigma, side="right")
    half = int((hi - np.arange(1, size + 1)).sum())
    return 2 * half + size


# ---------------------------------------------------------------------------
# signed weighted sums over {-1, 1}^n (random-walk anti-concentration)
# ---------------------------------------------------------------------------

@njit
def _nb_signed_sums(rho, n):
    """All ``X(s) = sum_i s_i kappa_i(s)`` for ``s in {-1,1}^n``.

    ``rho`` is indexed ``[i-1, p]`` with ``p`` the first ``i`` signs packed
    (``+1`` as bit 1, first sign most significant), so ``kappa_i`` is the
    product of ``rho`` along the prefix path.
    """
    size = 1 << n
    x = np.zeros(size)
    k = np.ones(size)
    m = 1
    for i in range(n):
        for p in range(m - 1, -1, -1):
            xo = x[p]
            ko = k[p]
            k0 = ko * rho[i, 2 * p]
            k1 = ko * rho[i, 2 * p + 1]
            x[2 * p] = xo - k0
            k[2 * p] = k0
            x[2 * p + 1] = xo + k1
            k[2 * p + 1] = k1
        m *= 2
    return x


def _np_signed_sums(rho, n):
    x = np.zeros(1)
    k = np.ones(1)
    for i in range(n):
        m = x.shape[0]
        r = rho[i, : 2 * m].reshape(m, 2)
        k = (k[:, None] * r).reshape(-1)
        x = (x[:, None] + np.array([-1.0, 1.0])[None, :] * k.reshape(m, 2)).reshape(-1)
    return x


NUMBA = SimpleNamespace(
    name="numba",
    branch_tree=_nb_branch_tree,
    base_points=_nb_base_points,
    apply_word=_nb_apply_word,
    branch_many=_nb_branch_many,
    branch_diff=_nb_branch_diff,
    diff_propagate=_nb_diff_propagate,
    itinerary_value=_nb_itinerary_value,
    exp_sum=_nb_exp_sum,
    product_phase_sum=_nb_product_phase_sum,
    count_close_pairs=_nb_count_close_pairs,
    signed_sums=_nb_signed_sums,
)

NUMPY = SimpleNamespace(
    name="numpy",
    branch_tree=_np_branch_tree,
    base_points=_np_base_points,
    apply_word=_np_apply_word,
    branch_many=_np_branch_many,
    branch_diff=_np_branch_diff,
    diff_propagate=_np_diff_propagate,
    itinerary_value=_np_itinerary_value,
    exp_sum=_np_exp_sum,
    product_phase_sum=_np_product_phase_sum,
    count_close_pairs=_np_count_close_pairs,
    signed_sums=_np_signed_sums,
)

ACTIVE = NUMBA if USE_JIT else NUMPY

branch_tree = ACTIVE.branch_tree
base_points = ACTIVE.base_points
apply_word = ACTIVE.apply_word
branch_many = ACTIVE.branch_many
branch_diff = ACTIVE.branch_diff
diff_propagate = ACTIVE.diff_propagate
itinerary_value = ACTIVE.itinerary_value
exp_sum = ACTIVE.exp_sum
product_phase_sum = ACTIVE.product_phase_sum
count_close_pairs = ACTIVE.count_close_pairs
signed_sums = ACTIVE.signed_sums
