import math

import pytest

import qfield


def test_gaussian_point_coefficients():
    p = qfield.derive_params(0.5, 2.0)
    assert p.q == 1.0
    assert p.A == pytest.approx(0.25 / 1.25**2, abs=1e-12)
    assert p.B == pytest.approx(0.5 / 1.25**2, abs=1e-12)
    assert math.isinf(p.support_halfwidth)


def test_rho_zero_rejected():
    with pytest.raises(ValueError, match="rho != 0"):
        qfield.derive_params(0.0, 1.0)


def test_semicircle():
    assert qfield.density(0.0, 0.0) == pytest.approx(1 / math.pi, abs=1e-12)
    assert qfield.moments(0.0, 8)[::2] == pytest.approx([1, 1, 2, 5, 14], abs=1e-8)
    mu = qfield.Measure(0.0)
    assert mu.cdf(0.0) == pytest.approx(0.5, abs=1e-12)


def test_kernel_methods_agree():
    a = qfield.kernel(0.5, 0.6, 0.3, -0.7, "product")["value"]
    b = qfield.kernel(0.5, 0.6, 0.3, -0.7, "series")["value"]
    assert a == pytest.approx(b, rel=1e-8)
    assert qfield.kernel_product(-1.0, 0.5, 1.0, -1.0) == pytest.approx(0.5)


def test_chain_determinism_and_support():
    x = qfield.simulate_chain(0.5, 0.9375, 2000, seed=3)
    assert x == qfield.simulate_chain(0.5, 0.9375, 2000, seed=3)
    assert max(abs(v) for v in x) <= 2.0 + 1e-9


def test_counterexample_periodic_part():
    z = qfield.simulate_counterexample(0.6, 1.0, 10, seed=1)
    assert z[0::2] == [z[0]] * 5
    assert set(abs(v) for v in z) == {1.0}


def test_verify_report_shape():
    rep = qfield.verify(0.5, 2.0, length=100_000, seed=5)
    assert rep["schema_version"] == 1
    assert rep["params"]["q"] == 1.0
    assert rep["verdict"] in ("pass", "fail")
