"""The two kernel backends must agree and be individually deterministic."""

import numpy as np
import pytest

from focrb import _backend
from focrb._backend import pure

try:
    from focrb._backend import _core
except ImportError:
    _core = None

needs_core = pytest.mark.skipif(_core is None,
                                reason="compiled backend not built")

rng = np.random.default_rng(123)


@needs_core
@pytest.mark.parametrize("nb,na,n", [(1, 1, 50), (3, 1, 200), (1, 3, 200),
                                     (11, 11, 4000), (2, 5, 999)])
def test_lfilter_backends_agree(nb, na, n):
    num = rng.standard_normal(nb)
    den = np.concatenate([[1.0], 0.4 * rng.standard_normal(na - 1) / na])
    x = rng.standard_normal(n)
    y_c = _core.lfilter_zero_state(num, den, x)
    y_p = pure.lfilter_zero_state(num, den, x)
    scale = np.max(np.abs(y_p)) + 1e-30
    assert np.max(np.abs(y_c - y_p)) < 1e-12 * scale


@needs_core
@pytest.mark.parametrize("n,d", [(100, 3), (5400, 25), (777, 1)])
def test_gram_backends_agree(n, d):
    psi = rng.standard_normal((n, d))
    g_c = _core.gram(psi)
    g_p = pure.gram(psi)
    scale = np.max(np.abs(g_p))
    assert np.max(np.abs(g_c - g_p)) < 1e-12 * scale
    assert np.array_equal(g_c, g_c.T)


def test_gram_matches_matmul():
    psi = rng.standard_normal((800, 7))
    ref = psi.T @ psi
    got = _backend.gram(psi)
    assert np.allclose(got, ref, rtol=1e-12, atol=0)


def test_lfilter_is_deterministic():
    num = np.array([0.3, -0.1])
    den = np.array([1.0, -0.8, 0.2])
    x = rng.standard_normal(512)
    a = _backend.lfilter_zero_state(num, den, x)
    b = _backend.lfilter_zero_state(num, den, x)
    assert np.array_equal(a, b)


def test_selected_backend_reported():
    assert _backend.BACKEND_NAME in ("compiled", "pure")
