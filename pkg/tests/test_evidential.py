import math

import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from evifuse.errors import InvalidInputError
from evifuse.evidential import evidential_grad, evidential_loss, nll_loss, reg_loss
from evifuse.gradcheck import check_evidential, numeric_grad, rel_error
from evifuse.nig import NIGParams

from strategies import nig_params

P0 = NIGParams(0, 1, 2, 1)


def nll_oracle(delta, v, alpha, beta, y):
    mpmath.mp.dps = 40
    omega = 2 * mpmath.mpf(beta) * (1 + v)
    val = (mpmath.log(mpmath.pi / v) / 2 + mpmath.loggamma(alpha) - mpmath.loggamma(alpha + 0.5)
           - alpha * mpmath.log(omega) + (alpha + 0.5) * mpmath.log((y - delta) ** 2 * v + omega))
    return float(val)


def test_nll_golden():
    assert nll_loss(P0, 0) == pytest.approx(0.9808, abs=1e-3)
    assert nll_loss(P0, 0) == pytest.approx(nll_oracle(0, 1, 2, 1, 0), rel=1e-13)


def test_nll_shift_with_target():
    diff = nll_loss(P0, 2) - nll_loss(P0, 0)
    assert diff == pytest.approx(2.5 * (math.log(8) - math.log(4)), rel=1e-13)
    assert diff == pytest.approx(1.7329, abs=1e-4)


@given(nig_params(), st.floats(-10, 10))
def test_nll_matches_oracle(p, y):
    assert nll_loss(p, y) == pytest.approx(nll_oracle(*p.astuple(), y), rel=1e-10, abs=1e-12)


@given(nig_params(), st.floats(0, 5), st.floats(0.01, 5))
def test_nll_monotone_in_residual(p, r, dr):
    assert nll_loss(p, p.delta + r + dr) > nll_loss(p, p.delta + r)


@given(nig_params(delta=(-1, 1)), st.floats(-1, 1), st.floats(-100, 100))
def test_nll_translation_invariant(p, y, c):
    shifted = NIGParams(p.delta + c, p.v, p.alpha, p.beta)
    assert nll_loss(shifted, y + c) == pytest.approx(nll_loss(p, y), rel=1e-9, abs=1e-9)


def test_reg_goldens():
    assert reg_loss(P0, 1) == 4
    assert reg_loss(P0, 0) == 0
    assert reg_loss(NIGParams(0, 2, 2, 1), 1) > reg_loss(P0, 1)


@given(nig_params(), st.floats(-10, 10))
def test_reg_nonnegative_zero_iff_on_target(p, y):
    r = reg_loss(p, y)
    assert r >= 0
    assert (r == 0) == (y == p.delta)


def test_evidential_composition():
    out = evidential_loss(P0, 0, 0.05)
    assert out.total == pytest.approx(0.9808, abs=1e-3) and out.reg == 0
    out = evidential_loss(P0, 1, 0.05)
    assert out.total == pytest.approx(nll_loss(P0, 1) + 0.2, abs=1e-12)
    assert evidential_loss(P0, 1, 0.0).total == nll_loss(P0, 1)


@given(nig_params(), st.floats(-10, 10), st.floats(0, 2))
def test_total_is_nll_plus_weighted_reg(p, y, tau):
    out = evidential_loss(p, y, tau)
    assert abs(out.total - (out.nll + tau * out.reg)) <= 1e-12 * max(1.0, abs(out.total))
    assert out.tau == tau


def test_negative_tau_rejected():
    with pytest.raises(InvalidInputError):
        evidential_loss(P0, 0, -0.1)
    with pytest.raises(InvalidInputError):
        evidential_grad(P0, 0, -0.1)


def test_grad_golden_point():
    x = np.array(P0.astuple(), dtype=float)
    f = lambda: evidential_loss(NIGParams(*x), 0.5, 0.05).total  # noqa: E731
    numeric = numeric_grad(f, x, 1e-5)
    analytic = evidential_grad(P0, 0.5, 0.05).as_array()
    assert rel_error(analytic, numeric) < 1e-5


def test_grad_at_kink_and_reg_part():
    g = evidential_grad(P0, 0.0, 0.0)
    assert g.d_delta == 0
    g0 = evidential_grad(P0, 1.5, 0.0)
    g1 = evidential_grad(P0, 1.5, 0.3)
    assert g1.d_v - g0.d_v == pytest.approx(2 * 1.5 * 0.3, rel=1e-12)
    assert g1.d_alpha - g0.d_alpha == pytest.approx(1.5 * 0.3, rel=1e-12)


def test_grad_random_points():
    assert check_evidential(n=100, seed=7) < 1e-5


def test_grad_matches_mpmath_derivative():
    mpmath.mp.dps = 40
    p, y, tau = NIGParams(0.3, 2.0, 3.5, 0.8), 1.7, 0.05
    args = list(p.astuple())
    for k, name in enumerate(["d_delta", "d_v", "d_alpha", "d_beta"]):
        def f(t, k=k):
            a = [mpmath.mpf(x) for x in args]
            a[k] = t
            d, v, al, be = a
            omega = 2 * be * (1 + v)
            nll = (mpmath.log(mpmath.pi / v) / 2 + mpmath.loggamma(al) - mpmath.loggamma(al + 0.5)
                   - al * mpmath.log(omega) + (al + 0.5) * mpmath.log((y - d) ** 2 * v + omega))
            return nll + tau * abs(y - d) * (2 * v + al)
        exact = float(mpmath.diff(f, args[k]))
        assert getattr(evidential_grad(p, y, tau), name) == pytest.approx(exact, rel=1e-10)
