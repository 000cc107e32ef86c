"""Both kernel backends must agree; the JIT backend is skipped without numba."""

import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fractalvdc import kernels as K
from fractalvdc._jit import HAVE_NUMBA
from fractalvdc.dynamics import PerturbedMap

pytestmark = pytest.mark.skipif(not HAVE_NUMBA, reason="numba not installed")
ARGS = PerturbedMap(0.01).args


def close(a, b, tol=1e-13):
    for u, v in zip(np.atleast_1d(a) if not isinstance(a, tuple) else a, np.atleast_1d(b) if not isinstance(b, tuple) else b):
        np.testing.assert_allclose(u, v, rtol=tol, atol=tol)


@pytest.mark.parametrize("x", [0.0, 0.3, 1.0])
def test_branch_tree(x):
    close(K.NUMBA.branch_tree(9, x, *ARGS), K.NUMPY.branch_tree(9, x, *ARGS))
    close(K.NUMBA.base_points(9, x, *ARGS), K.NUMPY.base_points(9, x, *ARGS))


def test_word_kernels(rng):
    pts = rng.random(300)
    close(K.NUMBA.apply_word(pts, 0b1011001, 7, *ARGS), K.NUMPY.apply_word(pts, 0b1011001, 7, *ARGS))
    bits = rng.integers(0, 1 << 20, 300)
    close(K.NUMBA.branch_many(bits, 20, pts, *ARGS), K.NUMPY.branch_many(bits, 20, pts, *ARGS))
    y = np.clip(pts + 1e-9 * rng.standard_normal(300), 0, 1)
    close(K.NUMBA.branch_diff(bits, 20, pts, y, *ARGS), K.NUMPY.branch_diff(bits, 20, pts, y, *ARGS), 1e-12)
    close(K.NUMBA.itinerary_value(pts, 30, *ARGS), K.NUMPY.itinerary_value(pts, 30, *ARGS))


def test_sums(rng):
    pts = rng.random(200_000)
    close(K.NUMBA.exp_sum(731.5, pts), K.NUMPY.exp_sum(731.5, pts), 1e-9)
    a, b = 1 + 0.05 * rng.random(500), 1 + 0.05 * rng.random(400)
    close(K.NUMBA.product_phase_sum(1e4, a, b), K.NUMPY.product_phase_sum(1e4, a, b), 1e-9)
    rho = 0.5 + 0.001 * rng.random((10, 1 << 10))
    close(K.NUMBA.signed_sums(rho, 10), K.NUMPY.signed_sums(rho, 10))


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(-1, 1), min_size=1, max_size=80), st.floats(0, 0.5))
def test_close_pairs_property(vals, sigma):
    u = np.sort(np.asarray(vals))
    brute = int((np.abs(u[:, None] - u[None, :]) <= sigma).sum())
    assert K.NUMBA.count_close_pairs(u, sigma) == brute
    assert K.NUMPY.count_close_pairs(u, sigma) == brute


def test_env_flag_selects_numpy():
    code = "import fractalvdc._jit as j, fractalvdc.kernels as k; print(j.backend_name(), k.ACTIVE.name)"
    out = subprocess.run(
        [sys.executable, "-c", code], env={"FRACTALVDC_DISABLE_JIT": "1", "PATH": ""}, capture_output=True, text=True
    )
    assert out.stdout.split() == ["numpy", "numpy"]
