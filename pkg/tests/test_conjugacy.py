import math
import warnings

import numpy as np
import pytest

from fractalvdc import conjugacy as C
from fractalvdc.errors import DomainError, InsufficientRangeError, PrecisionWarning


def test_unperturbed_conjugacy_is_dyadic_truncation():
    x = np.array([0.0, 0.3, 0.71, 0.999])
    np.testing.assert_array_equal(C.psi(x, 10, 0.0), np.floor(x * 1024) / 1024)
    np.testing.assert_array_equal(C.psi_inv(x, 10, 0.0), np.floor(x * 1024) / 1024)


def test_frozen_values():
    assert C.psi(0.3, 30, 0.01) == pytest.approx(0.29998000577709694, abs=1e-15)
    assert C.psi_inv(0.3, 30, 0.01) == pytest.approx(0.30002013873308897, abs=1e-15)


def test_psi_inv_inverts_psi():
    x = np.linspace(0, 1, 1001, endpoint=False)
    back = C.psi_inv(C.psi(x, 30, 0.01), 30, 0.01)
    assert np.max(np.abs(back - x)) <= 2.0**-29


def test_lift_keeps_right_end():
    assert C.psi_inv(1.0, 20, 0.01) == 1.0
    assert C.psi_inv(0.0, 20, 0.01) == 0.0


def test_residual_within_bound():
    ev = C.ConjugacyEvaluator(0.01, 30)
    x = np.linspace(0, 1, 2000, endpoint=False)
    assert ev.residual(x) <= 3 * ev.error_bound
    assert ev.error_bound == pytest.approx(2.0**-30 * math.exp(0.6))


def test_depth_warning_and_limits():
    with pytest.warns(PrecisionWarning):
        C.psi_inv(0.3, 45, 0.01)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        C.psi_inv(0.3, 45, 0.0)
    with pytest.raises(DomainError):
        C.psi(0.3, 0, 0.01)
    with pytest.raises(DomainError):
        C.psi(0.3, 60, 0.01)


def test_measure_of_cylinders():
    m = C.cylinder_masses(8, 30, 0.01)
    assert np.max(np.abs(m - 2.0**-8)) <= 4 * 2.0**-30


def test_interval_mass():
    assert C.measure_interval(0.5, 0.25, 24, 0.0) == pytest.approx(0.5, abs=2**-23)
    assert C.measure_interval(0.1, 0.5, 24, 0.01) == pytest.approx(1.0, abs=2**-22)
    q = C.measure_query(0.3, 0.01, 24, 0.01)
    assert 0.0 < q.mass < 0.03
    for r in (0.0, -1.0, 0.6):
        with pytest.raises(DomainError):
            C.measure_interval(0.3, r, 24, 0.01)


def test_holder_fit_matches_window_census():
    x = np.arange(4096) / 4096
    r = np.logspace(-5, -1, 9)
    fit = C.holder_mass_fit(x, r, 26, 0.01)
    assert 0.9 < fit.delta_mu <= 1.0
    census = C.window_mass_census(fit.r, 20, 0.01)
    np.testing.assert_allclose(fit.sup_mass, census, atol=3 * 2.0**-12, rtol=0.05)
    unperturbed = C.holder_mass_fit(x, r, 26, 0.0)
    assert unperturbed.delta_mu == pytest.approx(1.0, abs=0.01)
    with pytest.raises(InsufficientRangeError):
        C.holder_mass_fit(x, [1e-9, 1e-8], 20, 0.01)


def test_export(tmp_path):
    ev = C.ConjugacyEvaluator(0.01, 20)
    path = ev.export_csv(tmp_path / "psi.csv", [0.0, 0.5], {"k": 1})
    lines = path.read_text().splitlines()
    assert lines[0].startswith("#") and lines[1] == "x,psi,error_bound"
    assert len(lines) == 4
