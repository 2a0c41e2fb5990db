import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dc_split.errors import DegenerateError, DomainError
from dc_split.field import sample
from dc_split.oned import PLFunction1D, dc_split_1d, derivative_variation, segment_oracle

from conftest import rng


def test_square_on_eleven_knots():
    x = np.linspace(-1, 1, 11)
    # slopes of x^2 step by 0.4 across nine interior knots
    assert derivative_variation(PLFunction1D(x, x * x)) == pytest.approx(3.6)


def test_split_of_neg_abs():
    x = np.linspace(-1, 1, 5)
    g, h = dc_split_1d(PLFunction1D(x, -np.abs(x)))
    np.testing.assert_allclose(h.values, [0, 0, 0, 1, 2])
    np.testing.assert_allclose(g.values, [-1, -0.5, 0, 0.5, 1])
    assert derivative_variation(g) == 0
    assert derivative_variation(h) == pytest.approx(2.0)


def test_convex_input_has_zero_h():
    x = np.linspace(0, 3, 7)
    g, h = dc_split_1d(PLFunction1D(x, np.exp(x)))
    assert np.all(h.values == 0)
    np.testing.assert_array_equal(g.values, np.exp(x))


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 1_000_000))
def test_split_properties(seed):
    r = rng(3, seed)
    n = int(r.integers(2, 40))
    x = np.sort(r.uniform(-5, 5, n))
    if np.any(np.diff(x) <= 1e-6):
        x = np.linspace(-5, 5, n)
    fn = PLFunction1D(x, r.normal(size=n))
    g, h = dc_split_1d(fn)
    assert np.max(np.abs(g.values - h.values - fn.values)) <= 1e-12 * (1 + np.abs(fn.values).max())
    for part in (g, h):
        # slopes are recomputed from node values, so allow rounding relative to their size
        assert np.all(np.diff(part.slopes) >= -1e-9 * (1 + np.abs(part.slopes).max()))
    total = derivative_variation(g) + derivative_variation(h)
    assert total == pytest.approx(derivative_variation(fn), abs=1e-12 * (1 + total), rel=0)
    assert h.values[0] == 0 and g.values[0] == fn.values[0]


def test_validation():
    with pytest.raises(DomainError):
        PLFunction1D([0, 0, 1], [1, 2, 3])
    with pytest.raises(DomainError):
        PLFunction1D([0, 1], [1, 2, 3])
    with pytest.raises(DegenerateError):
        PLFunction1D([0], [1])
    fn = PLFunction1D([0, 1, 3], [0, 2, 0])
    assert fn(2.0) == pytest.approx(1.0)
    np.testing.assert_allclose(fn.slopes, [2, -1])


def test_segment_oracle(mesh17):
    f = sample(mesh17, lambda x, y: np.abs(x) + 0.5 * np.abs(y))
    assert segment_oracle(f, (-0.9, 0.3), (0.9, 0.3)) == pytest.approx(2.0)
    assert segment_oracle(f, (-0.9, -0.9), (0.9, 0.9)) == pytest.approx(3.0 / np.sqrt(2))
