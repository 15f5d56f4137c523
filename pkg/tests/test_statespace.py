from fractions import Fraction

import numpy as np
import pytest

from wim.errors import InvalidShapeError, InvalidSizeError, MetricError, ShapeError
from wim.statespace import (
    ProductShape,
    as_distribution,
    custom_metric,
    discrete_metric,
    format_rational,
    l0_metric,
    l1_metric,
    metric_from_dict,
    metric_from_pairs,
    parse_rational,
    shortest_path_matrix,
    symmetric_states,
)


def test_parse_and_format_rationals():
    assert parse_rational("3/7") == Fraction(3, 7)
    assert parse_rational(0.9) == Fraction(9, 10)
    assert parse_rational(" 0.25 ") == Fraction(1, 4)
    assert format_rational(Fraction(6, 3)) == "2"
    assert parse_rational(format_rational(Fraction(-5, 12))) == Fraction(-5, 12)
    with pytest.raises(TypeError):
        parse_rational(True)


def test_symmetric_states_colex():
    assert symmetric_states(2, 2) == [(2, 0), (1, 1), (0, 2)]
    assert len(symmetric_states(2, 6)) == 7
    assert len(symmetric_states(3, 2)) == 6


def test_product_shape_order_first_factor_slowest():
    shape = ProductShape(((2, 2), (2, 1)))
    assert shape.sizes == (3, 2)
    assert shape.n == 6
    assert [shape.label(i) for i in range(6)] == ["00", "01", "10", "11", "20", "21"]
    with pytest.raises(InvalidShapeError):
        ProductShape(((1, 1),))


def test_discrete_metric():
    m = discrete_metric(4)
    assert m.array.tolist() == [[0 if i == j else 1 for j in range(4)] for i in range(4)]
    with pytest.raises(InvalidSizeError):
        discrete_metric(1)


def test_l1_path_and_product():
    assert l1_metric([3]).array.tolist() == [[0, 1, 2], [1, 0, 1], [2, 1, 0]]
    m = l1_metric([3, 2])
    # states (0,0) and (2,1)
    assert m.d[0][5] == 3


def test_l0_equals_l1_on_binary():
    for k in (1, 2, 3):
        assert l0_metric([2] * k).d == l1_metric([2] * k).d


def test_graph_metric_reproduced_by_shortest_paths():
    for m in (l0_metric([3, 3]), l1_metric([3, 2]), discrete_metric(5)):
        sp = shortest_path_matrix(m.n, m.graph_edges)
        assert m.scale == 1 and (sp == m.integer_array).all()


def test_custom_metric_accepts_perturbed():
    m = metric_from_pairs(3, ["1", "9/10", "1"])
    assert m.d[0][2] == Fraction(9, 10)
    assert m.kind == "custom" and m.graph_edges is None


def test_custom_metric_reports_triangle_violation():
    with pytest.raises(MetricError) as info:
        metric_from_pairs(3, [1, 3, 1])
    assert info.value.triple == (0, 2, 1)


def test_custom_metric_rejects_bad_matrices():
    with pytest.raises(MetricError):
        custom_metric([[0, 1], [2, 0]])
    with pytest.raises(MetricError):
        custom_metric([[0, 0], [0, 0]])
    with pytest.raises(MetricError):
        custom_metric([[1, 1], [1, 0]])


def test_permuted_metric_accepted():
    rows = [[0, 1, 2], [1, 0, 1], [2, 1, 0]]
    perm = [2, 0, 1]
    custom_metric([[rows[i][j] for j in perm] for i in perm])


def test_metric_dict_round_trip():
    for m in (discrete_metric(5), l0_metric([2, 3]), l1_metric([3, 3]),
              metric_from_pairs(3, ["1", "9/10", "1"])):
        again = metric_from_dict(m.to_dict())
        assert again.d == m.d


def test_as_distribution_modes():
    exact = as_distribution(["1/2", "1/3", "1/6"])
    assert exact == (Fraction(1, 2), Fraction(1, 3), Fraction(1, 6))
    arr = as_distribution([0.5, 0.25, 0.25])
    assert isinstance(arr, np.ndarray)
    with pytest.raises(ShapeError):
        as_distribution(["1/2", "1/3"])
    with pytest.raises(ShapeError):
        as_distribution([0.5, 0.5], n=3)
    with pytest.raises(ShapeError):
        as_distribution([1.5, -0.5])
