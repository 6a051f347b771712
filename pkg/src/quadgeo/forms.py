"""Indefinite binary quadratic forms of positive non-square discriminant.

Everything here is exact integer arithmetic.  Comparisons against sqrt(d)
go through ``math.isqrt``: since d is never a square, ``x < sqrt(d)`` is
the same as ``x <= isqrt(d)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import gcd, isqrt
from typing import NamedTuple

import numpy as np

from .errors import InvalidDiscriminant, MixedDiscriminants, NotReduced

__all__ = [
    "Discriminant",
    "QuadForm",
    "ReductionCycle",
    "ClassGroup",
    "is_discriminant",
    "make_discriminant",
    "principal_form",
    "is_reduced",
    "rho",
    "reduce",
    "reduced_cycle",
    "enumerate_reduced",
    "compose",
    "class_group",
    "generated_order",
]


def is_discriminant(n: int) -> bool:
    """True for positive non-square integers congruent to 0 or 1 mod 4."""
    if n <= 0 or n % 4 not in (0, 1):
        return False
    r = isqrt(n)
    return r * r != n


def _squarefree(m: int) -> bool:
    m = abs(m)
    p = 2
    while p * p <= m:
        if m % (p * p) == 0:
            return False
        if m % p == 0:
            m //= p
        p += 1 if p == 2 else 2
    return True


def _is_fundamental(d: int) -> bool:
    if d % 4 == 1:
        return _squarefree(d)
    if d % 4 == 0:
        m = d // 4
        return m % 4 in (2, 3) and _squarefree(m)
    return False


@dataclass(frozen=True)
class Discriminant:
    d: int
    is_fundamental: bool
    conductor: int

    def __int__(self) -> int:
        return self.d

    @property
    def isqrt(self) -> int:
        return isqrt(self.d)


def make_discriminant(d) -> Discriminant:
    """Validate ``d`` and record its conductor.

    Accepts an int or an existing :class:`Discriminant`.
    """
    if isinstance(d, Discriminant):
        return d
    if isinstance(d, bool) or int(d) != d:
        raise InvalidDiscriminant(f"{d!r} is not an integer")
    d = int(d)
    if not is_discriminant(d):
        raise InvalidDiscriminant(f"{d} is not a positive non-square discriminant")
    f = isqrt(d)
    while f > 1:
        if d % (f * f) == 0 and _is_fundamental(d // (f * f)):
            break
        f -= 1
    return Discriminant(d=d, is_fundamental=(f == 1 and _is_fundamental(d)), conductor=f)


class QuadForm(NamedTuple):
    """The form a*x^2 + b*x*y + c*y^2."""

    a: int
    b: int
    c: int

    @property
    def disc(self) -> int:
        return self.b * self.b - 4 * self.a * self.c

    def is_primitive(self) -> bool:
        return gcd(gcd(self.a, self.b), self.c) == 1

    def __call__(self, x, y):
        return self.a * x * x + self.b * x * y + self.c * y * y

    def transform(self, m) -> "QuadForm":
        """The form (x, y) -> f(m @ (x, y)) for an integer 2x2 matrix ``m``."""
        (p, q), (r, s) = m
        a, b, c = self
        return QuadForm(
            a * p * p + b * p * r + c * r * r,
            2 * a * p * q + b * (p * s + q * r) + 2 * c * r * s,
            a * q * q + b * q * s + c * s * s,
        )


def principal_form(d) -> QuadForm:
    d = make_discriminant(d).d
    b0 = d % 2
    return QuadForm(1, b0, (b0 * b0 - d) // 4)


def is_reduced(f: QuadForm) -> bool:
    """|sqrt(d) - 2|a|| < b < sqrt(d), decided with integers only."""
    a, b, _ = f
    s = isqrt(f.disc)
    if not 0 < b <= s:
        return False
    two_a = 2 * abs(a)
    return two_a + b > s and two_a - b <= s


def _rho_residue(b: int, c: int, d: int, s: int) -> int:
    # r = -b mod 2|c| in the normalization window
    m = 2 * abs(c)
    if abs(c) <= s:
        lo = s - m + 1  # sqrt(d) - 2|c| < r <= isqrt(d)
    else:
        lo = -abs(c) + 1  # -|c| < r <= |c|
    return lo + (-b - lo) % m


def _rho_step(f: QuadForm, d: int, s: int) -> QuadForm:
    _, b, c = f
    r = _rho_residue(b, c, d, s)
    return QuadForm(c, r, (r * r - d) // (4 * c))


def rho(f: QuadForm) -> QuadForm:
    """The neighbour of a reduced form in its cycle."""
    if not is_reduced(f):
        raise NotReduced(f"{tuple(f)} is not reduced")
    d = f.disc
    return _rho_step(f, d, isqrt(d))


def rho_matrix(f: QuadForm, g: QuadForm):
    """The SL2(Z) matrix m with g = f o m for g = rho(f)."""
    s = (g.b + f.b) // (2 * f.c)
    return ((0, -1), (1, s))


def reduce(f: QuadForm) -> QuadForm:
    d = f.disc
    if not is_discriminant(d):
        raise InvalidDiscriminant(f"form {tuple(f)} has discriminant {d}")
    s = isqrt(d)
    while not is_reduced(f):
        f = _rho_step(f, d, s)
    return f


@dataclass(frozen=True)
class ReductionCycle:
    forms: tuple
    length: int = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "length", len(self.forms))

    @property
    def d(self) -> int:
        return self.forms[0].disc

    def key(self) -> QuadForm:
        return min(self.forms)

    def __contains__(self, f) -> bool:
        return tuple(f) in set(self.forms)


def reduced_cycle(f: QuadForm) -> ReductionCycle:
    g = reduce(QuadForm(*f))
    d = g.disc
    s = isqrt(d)
    forms = [g]
    h = _rho_step(g, d, s)
    while h != g:
        forms.append(h)
        h = _rho_step(h, d, s)
    return ReductionCycle(tuple(forms))


def enumerate_reduced(d) -> list:
    """All primitive reduced forms of discriminant ``d``, sorted."""
    d = make_discriminant(d).d
    s = isqrt(d)
    out = []
    for b in range(2 - d % 2, s + 1, 2):
        n = (d - b * b) // 4  # a*c = -n
        lo = max(1, (s + 1 - b + 1) // 2)  # 2|a| >= s + 1 - b
        hi = (s + b) // 2  # 2|a| <= s + b
        for a in range(lo, hi + 1):
            if n % a:
                continue
            c = n // a
            if gcd(gcd(a, b), c) != 1:
                continue
            out.append(QuadForm(a, b, -c))
            out.append(QuadForm(-a, b, c))
    out.sort()
    return out


def _xgcd(a: int, b: int):
    """(g, x, y) with a*x + b*y = g = gcd(a, b) >= 0."""
    x0, y0, x1, y1 = 1, 0, 0, 1
    while b:
        q, a, b = a // b, b, a % b
        x0, x1 = x1, x0 - q * x1
        y0, y1 = y1, y0 - q * y1
    if a < 0:
        return -a, -x0, -y0
    return a, x0, y0


def compose(f1: QuadForm, f2: QuadForm) -> QuadForm:
    """Dirichlet composition; the result is normalized but not reduced."""
    d = f1.disc
    if f2.disc != d:
        raise MixedDiscriminants(f"{d} != {f2.disc}")
    a1, b1, _ = f1
    a2, b2, _ = f2
    m = (b1 + b2) // 2
    g1, x1, y1 = _xgcd(a1, a2)
    e, x2, w = _xgcd(g1, m)
    u, v = x1 * x2, y1 * x2
    a3 = a1 * a2 // (e * e)
    b3 = (u * a1 * b2 + v * a2 * b1 + w * (b1 * b2 + d) // 2) // e
    b3 %= 2 * abs(a3)
    c3 = (b3 * b3 - d) // (4 * a3)
    return QuadForm(a3, b3, c3)


def inverse(f: QuadForm) -> QuadForm:
    return QuadForm(f.a, -f.b, f.c)


@dataclass
class ClassGroup:
    d: Discriminant
    cycles: list
    order: int
    composition_table: np.ndarray | None
    identity: int = 0
    index: dict = field(default_factory=dict, repr=False)

    def class_of(self, f: QuadForm) -> int:
        """Index of the cycle containing ``reduce(f)``."""
        return self.index[reduce(QuadForm(*f))]

    def mul(self, i: int, j: int) -> int:
        if self.composition_table is not None:
            return int(self.composition_table[i, j])
        return self.class_of(compose(self.cycles[i].forms[0], self.cycles[j].forms[0]))


def _cycle_partition(d: int):
    forms = enumerate_reduced(d)
    s = isqrt(d)
    seen = {}
    cycles = []
    for f in forms:
        if f in seen:
            continue
        members = [f]
        g = _rho_step(f, d, s)
        while g != f:
            members.append(g)
            g = _rho_step(g, d, s)
        k = len(cycles)
        for g in members:
            seen[g] = k
        cycles.append(ReductionCycle(tuple(members)))
    return forms, cycles, seen


def _check_group(table: np.ndarray, identity: int) -> None:
    h = table.shape[0]
    idx = np.arange(h)
    if not (np.array_equal(table[identity], idx) and np.array_equal(table[:, identity], idx)):
        raise ArithmeticError("identity law fails")
    if not np.array_equal(table, table.T):
        raise ArithmeticError("composition is not commutative")
    if not np.all((table == identity).sum(axis=1) == 1):
        raise ArithmeticError("inverse law fails")
    for row in table:
        if len(set(row.tolist())) != h:
            raise ArithmeticError("table is not a Latin square")
    # (i*j)*k == i*(j*k), chunked over i
    for i in range(h):
        left = table[table[i]][:, :]  # (i*j)*k indexed [j, k]
        right = table[i][table]  # i*(j*k) indexed [j, k]
        if not np.array_equal(left, right):
            raise ArithmeticError("composition is not associative")


def class_group(d, table: bool = True, check: bool = True) -> ClassGroup:
    """Partition reduced forms into rho-cycles and tabulate composition.

    Cycle 0 is always the principal cycle, starting at the reduced
    principal form.
    """
    disc = make_discriminant(d)
    _, cycles, seen = _cycle_partition(disc.d)
    p = reduce(principal_form(disc))
    k0 = seen[p]
    order = [k0] + [k for k in range(len(cycles)) if k != k0]
    cycles = [cycles[k] for k in order]
    # the principal cycle starts at the reduced principal form
    pf = cycles[0].forms
    i = pf.index(p)
    cycles[0] = ReductionCycle(pf[i:] + pf[:i])
    renum = {old: new for new, old in enumerate(order)}
    index = {f: renum[k] for f, k in seen.items()}
    h = len(cycles)
    grp = ClassGroup(d=disc, cycles=cycles, order=h, composition_table=None, index=index)
    if table:
        reps = [c.forms[0] for c in cycles]
        t = np.empty((h, h), dtype=np.int64)
        for i in range(h):
            for j in range(i, h):
                t[i, j] = t[j, i] = index[reduce(compose(reps[i], reps[j]))]
        if check:
            _check_group(t, 0)
        grp.composition_table = t
    return grp


def generated_order(d) -> int:
    """Order of the group generated by composing cycle representatives.

    Works from forms alone: closure of the principal class under
    composition with every reduced form, classes identified by the
    minimal member of their cycle.  Independent of the cycle partition
    used by :func:`class_group`.
    """
    disc = make_discriminant(d)
    gens = enumerate_reduced(disc)

    def key(f):
        return reduced_cycle(f).key()

    start = reduce(principal_form(disc))
    seen = {key(start): start}
    frontier = [start]
    gen_keys = {}
    for g in gens:
        gen_keys.setdefault(key(g), g)
    gens = list(gen_keys.values())
    while frontier:
        nxt = []
        for f in frontier:
            for g in gens:
                k = key(compose(f, g))
                if k not in seen:
                    seen[k] = k
                    nxt.append(k)
        frontier = nxt
    return len(seen)
