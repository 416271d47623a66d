import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fracdim import CantorSpec, CompactSetModel, DiscreteMeasure, ParameterError, build_cantor, build_interval, build_product, natural_measure


def test_interval_counts():
    m = build_interval(1, 8)
    assert len(m) == 8
    assert m.side == pytest.approx(1 / 8)
    assert m.reference_dimension == 1
    sq = build_interval(2, 5)
    assert len(sq) == 25
    assert sq.reference_dimension == 2


def test_cantor_first_iterate():
    m = build_cantor(CantorSpec(3, (0, 2), 1))
    corners = sorted(c[0][0] for c in m.cells)
    assert corners == pytest.approx([0.0, 2 / 3])
    assert m.side == pytest.approx(1 / 3)


def test_cantor_dimensions():
    assert CantorSpec(3, (0, 2), 4).similarity_dimension == pytest.approx(math.log(2) / math.log(3))
    assert CantorSpec(3, (0, 2), 4).similarity_dimension == pytest.approx(0.63093, abs=1e-5)
    assert CantorSpec(4, (0, 3), 2).similarity_dimension == pytest.approx(0.5)


@pytest.mark.parametrize(
    "base,digits,level",
    [(3, (), 2), (1, (0,), 2), (3, (0, 3), 2), (3, (1,), 2), (3, (0, 2), -1)],
)
def test_cantor_errors(base, digits, level):
    with pytest.raises(ParameterError):
        CantorSpec(base, digits, level)


@given(level=st.integers(1, 6))
@settings(max_examples=6, deadline=None)
def test_cantor_nested(level):
    spec = lambda l: CantorSpec(3, (0, 2), l)  # noqa: E731
    fine = build_cantor(spec(level))
    coarse = build_cantor(spec(level - 1))
    # every fine cell lies in a coarse cell
    parents = set((fine.indices[:, 0] // 3).tolist())
    assert parents == set(coarse.indices[:, 0].tolist())
    assert len(fine) == 2**level


def test_product():
    sq = build_product(build_interval(1, 4), build_interval(1, 4))
    assert len(sq) == 16 and sq.d == 2 and sq.reference_dimension == 2
    c = build_cantor(CantorSpec(3, (0, 2), 3))
    p = build_product(c, build_interval(1, 27))
    assert len(p) == 8 * 27
    assert p.reference_dimension == pytest.approx(1.63093, abs=1e-5)
    with pytest.raises(ParameterError):
        build_product(c, build_interval(1, 8))


def test_model_json_round_trip():
    m = build_cantor(CantorSpec(3, (0, 2), 3))
    back = CompactSetModel.from_json(m.to_json())
    assert np.array_equal(back.indices, m.indices)
    assert back.reference_dimension == m.reference_dimension
    assert back.resolution == m.resolution


def test_natural_measure():
    mu = natural_measure(build_interval(1, 8))
    assert len(mu) == 8
    assert np.all(mu.weights == 1 / 8)
    mu = natural_measure(build_cantor(CantorSpec(3, (0, 2), 4)))
    assert len(mu) == 16
    assert np.allclose(mu.weights, 1 / 16)
    empty = CompactSetModel(1, 4, np.zeros((0, 1), dtype=int))
    with pytest.raises(ParameterError):
        natural_measure(empty)


@given(d=st.integers(1, 3), r=st.integers(1, 12))
@settings(max_examples=30, deadline=None)
def test_measure_mass_one(d, r):
    mu = natural_measure(build_interval(d, r))
    assert abs(mu.weights.sum() - 1.0) <= 1e-12
    assert len(mu) == r**d


def test_measure_validation():
    with pytest.raises(ParameterError):
        DiscreteMeasure(np.zeros((2, 1)), [0.5, 0.6])
    with pytest.raises(ParameterError):
        DiscreteMeasure(np.zeros((2, 1)), [1.5, -0.5])
    with pytest.raises(ParameterError):
        DiscreteMeasure(np.zeros((3, 1)), [0.5, 0.5])
    mu = DiscreteMeasure([[0.0], [1.0]], [0.25, 0.75])
    back = DiscreteMeasure.from_dict(mu.to_dict())
    assert np.array_equal(back.points, mu.points) and np.array_equal(back.weights, mu.weights)
