import math

import pytest

from wim.model import ModelSpec
from wim.polar import binom, polar_degrees, polar_degrees_kbit, polar_degrees_matrix


def classical_degree(model):
    """Degree of a Segre–Veronese embedding from the multinomial formula."""
    mdim = model.param_dim
    out = math.factorial(mdim)
    for m, d in model.factors:
        out = out * d ** (m - 1) // math.factorial(m - 1)
    return out


def test_binomial_convention():
    assert binom(5, 2) == 10
    assert binom(3, 5) == 0 and binom(3, -1) == 0


def test_kbit_examples():
    assert polar_degrees_kbit(2).shifted == [2, 2, 2]
    assert polar_degrees_kbit(5).shifted == [120, 480, 840, 800, 440, 128]
    assert polar_degrees_kbit(7).dual_degree == 6816


def test_matrix_examples():
    assert polar_degrees_matrix(2, 3).shifted == [3, 4, 3]
    assert polar_degrees_matrix(3, 5).shifted == [15, 40, 48, 30, 10]
    assert polar_degrees_matrix(4, 6).shifted == [56, 210, 360, 360, 228, 90, 20]


def test_general_examples():
    assert polar_degrees(ModelSpec.of(2, 2, 2)).shifted == [6, 12, 12, 4]
    assert polar_degrees(ModelSpec.of(3, 3)).shifted == [6, 12, 12, 6, 3]
    pd = polar_degrees(ModelSpec.parse("2_6"))
    assert (pd.degree, pd.dual_degree) == (6, 10)
    assert list(polar_degrees(ModelSpec.parse("2_2,2")).delta) == [0, 0, 4, 6, 4]


@pytest.mark.parametrize("k", range(2, 8))
def test_kbit_specialisation_agrees(k):
    assert polar_degrees_kbit(k).delta == polar_degrees(ModelSpec.of(*[2] * k)).delta


@pytest.mark.parametrize("m1,m2", [(2, 3), (2, 6), (3, 3), (3, 6), (4, 4), (4, 6), (5, 5)])
def test_matrix_specialisation_agrees(m1, m2):
    assert polar_degrees_matrix(m1, m2).delta == polar_degrees(ModelSpec.of(m1, m2)).delta


@pytest.mark.parametrize("name", ["2,2", "2,2,2", "2_6", "2_2,2", "3,3", "4,4", "3_2", "3,2_2", "2,2,2,2,2,2"])
def test_first_entry_is_degree_and_all_nonnegative(name):
    model = ModelSpec.parse(name)
    pd = polar_degrees(model)
    assert all(x >= 0 for x in pd.delta)
    assert pd.degree == classical_degree(model)
    r1, r2 = pd.nonzero_range
    assert all(x == 0 for x in pd.delta[: r1 - 1]) and all(x == 0 for x in pd.delta[r2:])


def test_table_entries_match_degree():
    assert polar_degrees_kbit(6).degree == math.factorial(6)
    assert polar_degrees_matrix(4, 4).degree == math.comb(6, 3)


def test_bound_for_type_calibration():
    pd = polar_degrees(ModelSpec.of(3, 3))
    assert pd.bound_for_type(3) == 6
    assert pd.bound_for_type(4) == 12
    assert pd.bound_for_type(None) == 0
