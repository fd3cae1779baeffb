import mpmath
import numpy as np
import pytest
import scipy.special as sc

from satcvqkd.special import SERIES_CUTOFF, i0, i0e, i1, i1e

# spans both the power-series and the asymptotic branch
XS = [0.0, 1e-8, 0.3, 1.0, 4.0, 9.99, 10.0, 15.0, SERIES_CUTOFF - 1e-9, SERIES_CUTOFF, 25.0, 80.0, 700.0]


class TestAgainstMpmath:
    @pytest.mark.parametrize("x", XS)
    def test_i0e(self, x):
        ref = float(mpmath.besseli(0, x) * mpmath.exp(-x))
        assert i0e(x) == pytest.approx(ref, rel=1e-13, abs=1e-300)

    @pytest.mark.parametrize("x", XS)
    def test_i1e(self, x):
        ref = float(mpmath.besseli(1, x) * mpmath.exp(-x))
        assert i1e(x) == pytest.approx(ref, rel=1e-13, abs=1e-300)

    @pytest.mark.parametrize("x", [0.0, 0.5, 3.0, 12.0, 40.0])
    def test_unscaled(self, x):
        assert i0(x) == pytest.approx(float(mpmath.besseli(0, x)), rel=1e-13)
        assert i1(x) == pytest.approx(float(mpmath.besseli(1, x)), rel=1e-13)


def test_matches_scipy_on_dense_grid():
    xs = np.linspace(0.0, 60.0, 601)
    ours0 = np.array([i0e(x) for x in xs])
    ours1 = np.array([i1e(x) for x in xs])
    np.testing.assert_allclose(ours0, sc.i0e(xs), rtol=1e-12)
    np.testing.assert_allclose(ours1[1:], sc.i1e(xs[1:]), rtol=1e-12)
    assert ours1[0] == 0.0


def test_branch_continuity():
    lo, hi = SERIES_CUTOFF * (1 - 1e-12), SERIES_CUTOFF * (1 + 1e-12)
    assert i0e(lo) == pytest.approx(i0e(hi), rel=1e-12)
    assert i1e(lo) == pytest.approx(i1e(hi), rel=1e-12)


def test_ordering_and_limit():
    # I1 < I0 for x > 0 and both scaled values approach 1/sqrt(2 pi x)
    for x in (0.1, 5.0, 50.0):
        assert i1e(x) < i0e(x)
    x = 1e6
    assert i0e(x) == pytest.approx(1.0 / np.sqrt(2 * np.pi * x), rel=1e-6)


@pytest.mark.parametrize("x", [0.7, 12.0, 33.0])
def test_parity(x):
    assert i0e(-x) == i0e(x)
    assert i1e(-x) == -i1e(x)
