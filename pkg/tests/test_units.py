import math
from decimal import Decimal, localcontext

import numpy as np
import pytest
from hypothesis import given, strategies as st

from quadgeo.errors import ParityViolation
from quadgeo.forms import QuadForm, enumerate_reduced, is_discriminant
from quadgeo.units import (
    PellSolution,
    automorph,
    cycle_automorph,
    fundamental_pell,
    pell_brute_force,
    pell_continued_fraction,
    regulator,
)

discs = st.integers(5, 10**6).filter(is_discriminant)


@pytest.mark.parametrize("d, t, u", [(5, 3, 1), (29, 27, 5), (40, 38, 6), (13, 11, 3), (8, 6, 2)])
def test_fundamental_pell_examples(d, t, u):
    assert fundamental_pell(d) == PellSolution(t, u)
    assert pell_brute_force(d) == PellSolution(t, u)
    assert pell_continued_fraction(d) == PellSolution(t, u)


@pytest.mark.parametrize("d, reg, period", [(5, 0.9624, 1.9248), (40, 3.6369, 7.2737), (13, 2.3895, 4.7791)])
def test_regulator_examples(d, reg, period):
    r = regulator(d)
    assert r.regulator == pytest.approx(reg, abs=1e-4)
    assert r.period == pytest.approx(period, abs=1e-4)
    assert r.period == 2 * r.regulator


def test_regulator_matches_closed_forms():
    assert regulator(5).regulator == pytest.approx(math.log((3 + math.sqrt(5)) / 2), rel=1e-14)
    assert regulator(40).regulator == pytest.approx(math.log(19 + 6 * math.sqrt(10)), rel=1e-14)
    assert regulator(13).regulator == pytest.approx(math.log((11 + 3 * math.sqrt(13)) / 2), rel=1e-14)


def test_norm_minus_one_flag():
    # 5 = N((1 + sqrt 5)/2) * -1; 12 has no unit of norm -1; 13, 29 do
    assert regulator(5).has_norm_minus_one_unit
    assert regulator(13).has_norm_minus_one_unit
    assert regulator(29).has_norm_minus_one_unit
    assert not regulator(12).has_norm_minus_one_unit
    assert not regulator(21).has_norm_minus_one_unit


def _minus_one_brute(d, bound):
    return any(math.isqrt(d * y * y - 4) ** 2 == d * y * y - 4 for y in range(1, bound + 1))


@pytest.mark.parametrize("d", [d for d in range(5, 240) if is_discriminant(d)])
def test_norm_minus_one_flag_matches_search(d):
    r = regulator(d)
    assert r.has_norm_minus_one_unit == _minus_one_brute(d, r.pell.u)


def test_automorph_examples():
    assert automorph(QuadForm(1, 1, -1), PellSolution(3, 1)) == ((1, 1), (1, 2))
    m = automorph(QuadForm(1, 2, -1), PellSolution(6, 2))
    assert m == ((1, 2), (2, 5))
    assert QuadForm(1, 2, -1).transform(m) == (1, 2, -1)
    with pytest.raises(ParityViolation):
        automorph(QuadForm(1, 1, -1), PellSolution(4, 1))


@given(discs)
def test_pell_equation_and_minimality(d):
    p = fundamental_pell(d)
    assert p.t * p.t - d * p.u * p.u == 4 and p.u > 0
    assert p == pell_continued_fraction(d)
    if p.u <= 2000:
        assert pell_brute_force(d, max_u=2000) == p
    else:
        assert pell_brute_force(d, max_u=2000) is None


@given(discs)
def test_regulator_reproduces_unit(d):
    r = regulator(d)
    with localcontext() as ctx:
        ctx.prec = 60
        eps = (Decimal(r.pell.t) + Decimal(r.pell.u) * Decimal(d).sqrt()) / 2
        exact = float(eps.ln())
    # exp(regulator) = eps to 1e-12 relative <=> regulator = log eps to 1e-12 absolute
    assert r.regulator == pytest.approx(exact, abs=1e-12 * max(1.0, exact))
    assert r.regulator > 0


@given(discs, st.data())
def test_automorph_stabilizes_and_has_unit_eigenvalue(d, data):
    forms = enumerate_reduced(d)
    f = forms[data.draw(st.integers(0, len(forms) - 1))]
    r = regulator(d)
    m = automorph(f, r.pell)
    assert m[0][0] * m[1][1] - m[0][1] * m[1][0] == 1
    assert f.transform(m) == f
    if r.regulator < 300:
        ev = np.linalg.eigvals(np.array(m, dtype=float)).real.max()
        assert math.exp(2 * r.regulator) == pytest.approx(ev * ev, rel=1e-9)


@given(discs)
def test_cycle_product_is_power_of_automorph(d):
    p = fundamental_pell(d)
    f = enumerate_reduced(d)[0]
    m = cycle_automorph(f)
    assert abs(m[0][0] + m[1][1]) == p.t
    assert f.transform(m) == f


@pytest.mark.parametrize("n", [3, 5, 7, 31, 63, 99, 199, 1001])
def test_n_squared_plus_four_family(n):
    d = n * n + 4
    assert fundamental_pell(d) == PellSolution(n * n + 2, n)


def test_n_squared_plus_four_regulator_ratio_tends_to_one():
    ratios = [regulator(n * n + 4).regulator / math.log(n * n + 4) for n in (3, 31, 301, 3001, 30001)]
    gaps = [abs(1 - x) for x in ratios]
    assert gaps == sorted(gaps, reverse=True)
    assert gaps[-1] < 1e-8
