import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qas.moduli import custom_modulus, eval_modulus, holder_modulus, log_modulus

GRID = np.unique(np.concatenate([np.geomspace(1e-4, 1.0, 20), np.linspace(1.0, 6.0, 10)]))


def test_holder_zero_at_zero():
    m = holder_modulus(L=1, alpha=1, beta=0)
    assert eval_modulus(m, 0.0) == 0.0


def test_holder_direct_formula():
    m = holder_modulus(L=2, alpha=0.5, beta=0)
    assert eval_modulus(m, 4.0) == pytest.approx(4.0, abs=1e-12)


def test_log_modulus_branch_value():
    m = log_modulus(beta=1)
    t = math.exp(-2.0)
    assert eval_modulus(m, t) == pytest.approx(0.5, abs=1e-12)


def test_negative_argument_rejected():
    with pytest.raises(ValueError):
        eval_modulus(holder_modulus(), -0.1)


def test_custom_out_of_range_rejected():
    m = custom_modulus([(0, 0), (1, 1), (2, 1.5)])
    with pytest.raises(ValueError):
        eval_modulus(m, 3.0)
    assert eval_modulus(m, 0.5) == pytest.approx(0.5)


def test_custom_table_validation():
    with pytest.raises(ValueError):
        custom_modulus([(0, 0), (1, 1), (2, 0.5)])  # not increasing
    with pytest.raises(ValueError):
        custom_modulus([(0.5, 0.1), (1, 1)])  # missing origin


@pytest.mark.parametrize(
    "m",
    [
        holder_modulus(L=1.5, alpha=0.6, beta=0.2),
        holder_modulus(L=1.0, alpha=1.0, beta=0.0),
        log_modulus(beta=0.7),
        log_modulus(beta=2.0),
    ],
    ids=["holder-log", "lipschitz", "log-0.7", "log-2"],
)
def test_modulus_axioms_on_grid(m):
    vals = np.array([eval_modulus(m, t) for t in GRID])
    assert np.all(np.diff(vals) > 0), "strictly increasing"
    # subadditivity omega(s+t) <= omega(s) + omega(t)
    for s in GRID[::3]:
        for t in GRID[::3]:
            assert eval_modulus(m, s + t) <= eval_modulus(m, s) + eval_modulus(m, t) + 1e-12
    # companion bound omega(s t) <= h(s) omega(t)
    for s in GRID[::3]:
        for t in GRID[::3]:
            assert eval_modulus(m, s * t) <= m.h_bound(s) * eval_modulus(m, t) + 1e-10


@given(
    st.floats(min_value=0.2, max_value=1.0),
    st.floats(min_value=0.0, max_value=0.5),
    st.floats(min_value=1e-3, max_value=5.0),
    st.floats(min_value=1e-3, max_value=5.0),
)
@settings(max_examples=200, deadline=None)
def test_holder_subadditive_property(alpha, beta_frac, s, t):
    beta = beta_frac * (1 - alpha)
    m = holder_modulus(L=1.0, alpha=alpha, beta=beta)
    assert eval_modulus(m, s + t) <= eval_modulus(m, s) + eval_modulus(m, t) + 1e-10


def test_h_dagger_holder():
    # h(s) = s^alpha for s <= 1, so h_dagger(1/4) = 4^(-1/alpha)
    m = holder_modulus(L=1.0, alpha=0.5)
    assert m.h_dagger(0.25) == pytest.approx(0.25**2, rel=1e-6)


def test_h_dagger_sentinel_infinity():
    # custom modulus whose companion never reaches the target on the grid
    m = custom_modulus([(0, 0), (1, 1), (2, 1.01)])
    assert m.h_dagger(50.0) == math.inf


def test_custom_h_estimate_flagged():
    m = custom_modulus([(0, 0), (1, 1), (2, 1.5)])
    assert m.h_is_estimate
    assert not holder_modulus().h_is_estimate
