import random
from math import isqrt

import numpy as np
import pytest
from hypothesis import given, strategies as st

from quadgeo.errors import InvalidDiscriminant, MixedDiscriminants, NotReduced
from quadgeo.forms import (
    QuadForm,
    class_group,
    compose,
    enumerate_reduced,
    generated_order,
    inverse,
    is_discriminant,
    is_reduced,
    make_discriminant,
    principal_form,
    reduce,
    reduced_cycle,
    rho,
)

SMALL_DISCS = [d for d in range(5, 10_000) if is_discriminant(d)]


def discriminants(lo=5, hi=10**5):
    return st.integers(lo, hi).filter(is_discriminant)


def sl2z():
    """Random SL2(Z) matrices as words in T^k and S."""

    def build(ks):
        m = ((1, 0), (0, 1))
        for k in ks:
            m = _mul(m, ((1, k), (0, 1)))
            m = _mul(m, ((0, -1), (1, 0)))
        return m

    return st.lists(st.integers(-4, 4), min_size=1, max_size=5).map(build)


def _mul(m, n):
    return (
        (m[0][0] * n[0][0] + m[0][1] * n[1][0], m[0][0] * n[0][1] + m[0][1] * n[1][1]),
        (m[1][0] * n[0][0] + m[1][1] * n[1][0], m[1][0] * n[0][1] + m[1][1] * n[1][1]),
    )


@pytest.mark.parametrize("n, expected", [(5, True), (9, False), (7, False), (8, True), (0, False), (-3, False)])
def test_is_discriminant(n, expected):
    assert is_discriminant(n) is expected


def test_make_discriminant_conductor():
    assert make_discriminant(5).is_fundamental and make_discriminant(5).conductor == 1
    d = make_discriminant(45)  # 9 * 5
    assert d.conductor == 3 and not d.is_fundamental
    assert make_discriminant(8).is_fundamental
    assert make_discriminant(32).conductor == 2
    with pytest.raises(InvalidDiscriminant):
        make_discriminant(7)
    with pytest.raises(InvalidDiscriminant):
        make_discriminant(2.5)


@given(discriminants())
def test_conductor_squared_divides(d):
    disc = make_discriminant(d)
    f = disc.conductor
    assert d % (f * f) == 0
    assert make_discriminant(d // (f * f)).is_fundamental


@pytest.mark.parametrize("d, form", [(5, (1, 1, -1)), (8, (1, 0, -2)), (13, (1, 1, -3))])
def test_principal_form(d, form):
    assert principal_form(d) == form


def test_is_reduced_examples():
    assert is_reduced(QuadForm(1, 1, -1))
    assert is_reduced(QuadForm(1, 6, -1))
    assert not is_reduced(QuadForm(1, 0, -2))


def test_rho_examples():
    assert rho(QuadForm(1, 1, -1)) == (-1, 1, 1)
    assert rho(QuadForm(-1, 1, 1)) == (1, 1, -1)
    assert rho(QuadForm(3, 2, -3)) == (-3, 4, 2)
    with pytest.raises(NotReduced):
        rho(QuadForm(1, 0, -2))


def _rho_oracle(f):
    # exhaustive scan of the window for r = -b mod 2|c|
    a, b, c = f
    d = f.disc
    s = isqrt(d)
    m = 2 * abs(c)
    if abs(c) <= s:
        window = range(s - m + 1, s + 1)
    else:
        window = range(-abs(c) + 1, abs(c) + 1)
    (r,) = [r for r in window if (r + b) % m == 0]
    return QuadForm(c, r, (r * r - d) // (4 * c))


@pytest.mark.parametrize("d", [5, 8, 12, 13, 40, 229, 1001, 4760])
def test_rho_matches_window_scan(d):
    for f in enumerate_reduced(d):
        assert rho(f) == _rho_oracle(f)


def test_reduce_examples():
    assert reduce(QuadForm(1, 0, -2)) == (1, 2, -1)
    for f in enumerate_reduced(40):
        assert reduce(f) == f
    c40 = class_group(40, table=False)
    rng = random.Random(1)
    for _ in range(20):
        g = QuadForm(*enumerate_reduced(40)[rng.randrange(8)])
        m = ((1, rng.randint(-9, 9)), (0, 1))
        m = _mul(m, ((0, -1), (1, 0)))
        h = g.transform(m)
        assert h.disc == 40
        assert c40.class_of(h) in (0, 1)


def test_reduced_cycle_examples():
    c = reduced_cycle(QuadForm(1, 1, -1))
    assert c.forms == ((1, 1, -1), (-1, 1, 1)) and c.length == 2
    assert reduced_cycle(QuadForm(1, 6, -1)).length == 2
    assert reduced_cycle(QuadForm(3, 2, -3)).length == 6


def test_enumerate_reduced_examples():
    assert len(enumerate_reduced(5)) == 2
    forms40 = enumerate_reduced(40)
    assert len(forms40) == 8 and {f.b for f in forms40} == {2, 4, 6}
    assert enumerate_reduced(8) == [(-1, 2, 1), (1, 2, -1)]


def _brute_reduced(d):
    s = isqrt(d)
    out = set()
    for b in range(1, s + 1):
        if (b * b - d) % 4:
            continue
        for a in range(-d, d + 1):
            if a == 0 or (b * b - d) % (4 * a):
                continue
            f = QuadForm(a, b, (b * b - d) // (4 * a))
            if f.is_primitive() and is_reduced(f):
                out.add(f)
    return sorted(out)


@pytest.mark.parametrize("d", [5, 8, 12, 21, 40, 45, 77, 148, 229, 316])
def test_enumerate_reduced_matches_brute_force(d):
    assert enumerate_reduced(d) == _brute_reduced(d)


def test_compose_examples():
    d = 40
    p = principal_form(d)
    for f in enumerate_reduced(d):
        assert reduced_cycle(compose(p, f)).key() == reduced_cycle(f).key()
        assert reduced_cycle(compose(f, inverse(f))).key() == reduced_cycle(p).key()
    sq = compose(QuadForm(3, 2, -3), QuadForm(3, 2, -3))
    assert reduce(sq) in reduced_cycle(p)
    with pytest.raises(MixedDiscriminants):
        compose(QuadForm(1, 1, -1), QuadForm(1, 0, -2))


def test_class_group_examples():
    assert class_group(5).order == 1
    g40 = class_group(40)
    assert g40.order == 2
    assert g40.composition_table.tolist() == [[0, 1], [1, 0]]
    assert class_group(229).order == generated_order(229) == 3


def test_cycles_partition_every_small_discriminant():
    for d in SMALL_DISCS:
        forms = enumerate_reduced(d)
        cg = class_group(d, table=False)
        members = [f for c in cg.cycles for f in c.forms]
        assert sorted(members) == forms  # partition, no repeats
        images = {rho(f) for f in forms}
        assert images == set(forms)  # rho is a bijection
        assert all(c.length % 2 == 0 for c in cg.cycles)


def test_group_axioms_on_random_discriminants():
    rng = random.Random(7)
    ds = rng.sample([d for d in range(5, 10**5) if is_discriminant(d)], 200)
    for d in ds:
        cg = class_group(d, table=True, check=False)
        t = cg.composition_table
        h = cg.order
        idx = np.arange(h)
        assert np.array_equal(t[0], idx)
        assert np.array_equal(t, t.T)
        assert np.all((t == 0).sum(axis=1) == 1)
        for i in range(h):
            assert np.array_equal(t[t[i]], t[i][t])


@given(discriminants(5, 5000), st.data())
def test_compose_is_class_well_defined(d, data):
    cg = class_group(d, table=True)
    i = data.draw(st.integers(0, cg.order - 1))
    j = data.draw(st.integers(0, cg.order - 1))
    f1 = cg.cycles[i].forms[0].transform(data.draw(sl2z()))
    f2 = cg.cycles[j].forms[0].transform(data.draw(sl2z()))
    assert cg.class_of(f1) == i and cg.class_of(f2) == j
    assert cg.class_of(compose(f1, f2)) == cg.composition_table[i, j]


@given(discriminants(5, 10**6))
def test_reduced_forms_satisfy_invariants(d):
    cyc = reduced_cycle(principal_form(d))
    for f in cyc.forms:
        assert f.disc == d and f.is_primitive() and f.a != 0 and f.c != 0 and is_reduced(f)
    g = cyc.forms[0]
    for _ in range(cyc.length):
        g = rho(g)
    assert g == cyc.forms[0]
