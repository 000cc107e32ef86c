import math

import numpy as np
import pytest

from fractalvdc import brownian as B
from fractalvdc.errors import ResolutionError, ValidationError


def test_grid_matches_series():
    p = B.sample_path(64, 11)
    w = p.grid(1024)
    idx = np.array([0, 1, 37, 512, 1000, 1024])
    np.testing.assert_allclose(w[idx], p.evaluate(idx / 1024), atol=1e-13)
    assert w[0] == 0.0 and w[-1] == p.X0


def test_seeded_paths_are_deterministic():
    a, b = B.sample_path(100, 5), B.sample_path(100, 5)
    np.testing.assert_array_equal(a.X, b.X)
    assert a.X0 == pytest.approx(1.4377730333055703, abs=1e-15)
    assert B.oscillatory_integral(a, 100.0, 2048) == pytest.approx(0.03118152603524807, abs=1e-14)
    with pytest.raises(ValidationError):
        B.sample_path(10, None)


def test_linear_phase_rule_is_exact_for_linear_paths():
    p = B.WienerPath(2.5, np.zeros(10), np.zeros(10), 10, 0)
    xi = 300.0
    exact = abs(math.sin(xi * 2.5 / 2) / (xi * 2.5 / 2))
    assert B.oscillatory_integral(p, xi, 128) == pytest.approx(exact, abs=1e-13)
    assert B.oscillatory_integral(p, 0.0, 128) == 1.0


def test_rules_agree_when_resolved():
    p = B.sample_path(200, 3)
    a = B.oscillatory_integral(p, 50.0, 1 << 16, "linear-phase")
    b = B.oscillatory_integral(p, 50.0, 1 << 16, "trapezoid")
    assert a == pytest.approx(b, abs=1e-4)


def test_resolution_guards():
    p = B.sample_path(100, 1)
    with pytest.raises(ResolutionError):
        B.oscillatory_integral(p, 10.0, 999)
    with pytest.raises(ResolutionError):
        p.grid(50)
    with pytest.raises(ValidationError):
        B.oscillatory_integral(p, 10.0, 2000, method="simpson")


def test_study_outputs(tmp_path):
    st = B.brownian_study([1e2, 1e3], range(4), N=200, M=4096)
    assert st.moduli.shape == (4, 2)
    s = st.summary()
    assert s["bound"][0] == pytest.approx(5 / 100 * math.sqrt(math.log(100)))
    st.write_csv(tmp_path / "b.csv")
    assert len((tmp_path / "b.csv").read_text().splitlines()) == 9
