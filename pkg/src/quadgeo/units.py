"""Pell-4 units, regulators and automorphs."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from math import isqrt

import numpy as np

from .errors import ParityViolation
from .forms import QuadForm, _rho_step, make_discriminant, principal_form, reduce, rho_matrix

__all__ = [
    "PellSolution",
    "RegulatorData",
    "fundamental_pell",
    "pell_brute_force",
    "pell_continued_fraction",
    "regulator",
    "automorph",
    "cycle_automorph",
]


@dataclass(frozen=True)
class PellSolution:
    t: int
    u: int


@dataclass(frozen=True)
class RegulatorData:
    d: int
    pell: PellSolution
    regulator: float
    period: float
    has_norm_minus_one_unit: bool


def _matmul(m, n):
    (a, b), (c, d) = m
    (e, f), (g, h) = n
    return ((a * e + b * g, a * f + b * h), (c * e + d * g, c * f + d * h))


def cycle_automorph(f: QuadForm):
    """Product of the rho transition matrices around the cycle of ``f``.

    ``f`` must be reduced.  The product stabilizes ``f``.
    """
    d = f.disc
    s = isqrt(d)
    m = ((1, 0), (0, 1))
    g = f
    while True:
        h = _rho_step(g, d, s)
        m = _matmul(m, rho_matrix(g, h))
        g = h
        if g == f:
            return m


def fundamental_pell(d) -> PellSolution:
    """Minimal positive solution of t^2 - d u^2 = 4, via the principal cycle."""
    d = make_discriminant(d).d
    p = reduce(principal_form(d))
    m = cycle_automorph(p)
    t = abs(m[0][0] + m[1][1])
    u = abs(m[1][0]) // abs(p.a)
    assert t * t - d * u * u == 4
    return PellSolution(t, u)


def pell_brute_force(d, max_u: int = 10**6) -> PellSolution | None:
    """Scan u = 1..max_u for d u^2 + 4 a perfect square.

    Returns None when the minimal solution lies beyond ``max_u``.
    """
    d = make_discriminant(d).d
    chunk = 1 << 16
    for start in range(1, max_u + 1, chunk):
        u = np.arange(start, min(start + chunk, max_u + 1), dtype=np.int64)
        t2 = d * u * u + 4
        if d * int(u[-1]) ** 2 + 4 < 2**52:
            t = np.rint(np.sqrt(t2.astype(np.float64))).astype(np.int64)
            hit = np.flatnonzero(t * t == t2)
            if hit.size:
                return PellSolution(int(t[hit[0]]), int(u[hit[0]]))
            continue
        for uu in u.tolist():
            n = d * uu * uu + 4
            r = isqrt(n)
            if r * r == n:
                return PellSolution(r, uu)
    return None


def pell_continued_fraction(d) -> PellSolution:
    """Fundamental norm +1 unit from the continued fraction of (b0 + sqrt d)/2.

    Multiplies the complete quotients over one period, working in
    Q(sqrt d) with exact rationals; squares the result for odd periods.
    """
    d = make_discriminant(d).d
    s = isqrt(d)
    p, q = d % 2, 2

    def step(p, q):
        a = (p + s) // q
        p1 = a * q - p
        return p1, (d - p1 * p1) // q

    p, q = step(p, q)
    start = (p, q)
    x, y = Fraction(1), Fraction(0)  # running product x + y sqrt d
    n = 0
    while True:
        # multiply by (p + sqrt d)/q
        x, y = (x * p + y * d) / q, (x + y * p) / q
        n += 1
        p, q = step(p, q)
        if (p, q) == start:
            break
    if n % 2:
        x, y = x * x + d * y * y, 2 * x * y
    t, u = 2 * x, 2 * y
    if t < 0:
        t, u = -t, -u
    assert t.denominator == 1 and u.denominator == 1
    return PellSolution(int(t), abs(int(u)))


def _log_unit(t: int, u: int, d: int) -> float:
    # log((t + u sqrt d) / 2) without forming huge floats
    return math.log(t) + math.log1p((u / t) * math.sqrt(d)) - math.log(2)


def _is_square(n: int) -> bool:
    return n >= 0 and isqrt(n) ** 2 == n


def regulator(d) -> RegulatorData:
    disc = make_discriminant(d)
    p = fundamental_pell(disc)
    reg = _log_unit(p.t, p.u, disc.d)
    # a norm -1 unit e1 = (x + y sqrt d)/2 squares to the norm +1 one,
    # forcing x^2 = t - 2 and d y^2 = t + 2
    minus = _is_square(p.t - 2) and (p.t + 2) % disc.d == 0 and _is_square((p.t + 2) // disc.d)
    return RegulatorData(d=disc.d, pell=p, regulator=reg, period=2.0 * reg, has_norm_minus_one_unit=minus)


def automorph(f: QuadForm, p: PellSolution):
    """Integer matrix of trace t stabilizing ``f``; eigenvalue (t+u sqrt d)/2 on (w, 1)."""
    a, b, c = f
    t, u = p.t, p.u
    if (t - b * u) % 2:
        raise ParityViolation(f"t - b u odd for f={tuple(f)}, {p}")
    return (((t - b * u) // 2, -c * u), (a * u, (t + b * u) // 2))
