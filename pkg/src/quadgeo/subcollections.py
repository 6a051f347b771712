"""The collections G_d of closed geodesics and their subcollections."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import EmptySubcollection, MixedDiscriminants, RadiusTooLarge
from .forms import Discriminant, class_group, make_discriminant
from .surface import (
    TRUST_RADIUS,
    ClosedGeodesic,
    OrbitTube,
    integrate_along,
    lift_geodesic,
    orbit_distances,
)
from .units import RegulatorData, regulator

__all__ = [
    "GeodesicCollection",
    "SubcollectionSpec",
    "build_full",
    "subcollection",
    "measure",
    "ratios",
    "tube_hits",
    "dwell_fraction",
]


@dataclass
class GeodesicCollection:
    d: Discriminant
    members: list
    indices: list
    reg: RegulatorData
    kind: str = "full"
    spec: "SubcollectionSpec | None" = None
    total_length: float = field(init=False)

    def __post_init__(self):
        self.total_length = len(self.members) * self.reg.period

    def __len__(self):
        return len(self.members)

    def to_dict(self) -> dict:
        out = {
            "d": self.d.d,
            "kind": self.kind,
            "class_indices": list(self.indices),
            "n_members": len(self.members),
            "total_length": self.total_length,
            "period": self.reg.period,
        }
        if self.spec is not None:
            out.update(self.spec.to_dict())
        return out


@dataclass(frozen=True)
class SubcollectionSpec:
    """One of ``random_fraction`` (q), ``tube`` (P, r) or ``explicit`` (indices)."""

    rule: str
    q: float | None = None
    P: ClosedGeodesic | None = None
    r: float | None = None
    indices: tuple = ()
    seed: int = 0
    label: str | None = None

    def __post_init__(self):
        if self.rule == "random_fraction":
            if self.q is None or not 0 < self.q <= 1:
                raise ValueError(f"fraction q={self.q} outside (0, 1]")
        elif self.rule == "tube":
            if self.P is None or self.r is None:
                raise ValueError("tube rule needs an orbit and a radius")
            if not 0 < self.r <= TRUST_RADIUS:
                raise RadiusTooLarge(f"tube radius {self.r} outside (0, {TRUST_RADIUS}]")
        elif self.rule != "explicit":
            raise ValueError(f"unknown rule {self.rule!r}")

    @classmethod
    def random_fraction(cls, q: float, seed: int = 0):
        return cls("random_fraction", q=q, seed=seed)

    @classmethod
    def tube(cls, P: ClosedGeodesic, r: float, label: str | None = None):
        return cls("tube", P=P, r=r, label=label)

    @classmethod
    def explicit(cls, indices):
        return cls("explicit", indices=tuple(int(i) for i in indices))

    def to_dict(self) -> dict:
        if self.rule == "random_fraction":
            return {"rule": self.rule, "q": self.q, "seed": self.seed}
        if self.rule == "tube":
            return {"rule": self.rule, "P": self.label or f"d{self.P.d}", "r": self.r}
        return {"rule": self.rule, "indices": list(self.indices)}


def build_full(d, cache=None) -> GeodesicCollection:
    """G_d: one closed geodesic per rho-cycle, all of period 2 Reg(O_d)."""
    disc = make_discriminant(d)
    if cache is not None:
        cg, reg = cache.class_data(disc.d)
    else:
        cg, reg = class_group(disc, table=False), regulator(disc)
    members = [lift_geodesic(c, reg) for c in cg.cycles]
    return GeodesicCollection(d=disc, members=members, indices=list(range(len(members))), reg=reg)


def _take(full: GeodesicCollection, idx, kind, spec) -> GeodesicCollection:
    idx = sorted(idx)
    return GeodesicCollection(
        d=full.d, members=[full.members[i] for i in idx], indices=idx, reg=full.reg, kind=kind, spec=spec
    )


def _golden_min(fun, lo: np.ndarray, hi: np.ndarray, iters: int = 40) -> np.ndarray:
    """Vectorized golden-section minimum value of ``fun`` on [lo, hi]."""
    g = (math.sqrt(5) - 1) / 2
    a, b = lo.copy(), hi.copy()
    for _ in range(iters):
        c = b - g * (b - a)
        d = a + g * (b - a)
        left = fun(c) < fun(d)
        b = np.where(left, d, b)
        a = np.where(left, a, c)
    return fun(0.5 * (a + b))


def tube_hits(
    phi: ClosedGeodesic, tube: OrbitTube, r: float, step: float | None = None, max_refine: int = 8
) -> float:
    """Closest approach of ``phi`` to the tube's orbit, or inf if it stays r away.

    Scans at step r/4 with a 2r window (every approach below r is seen),
    then refines the lowest few local minima by golden section along phi.
    """
    step = r / 4 if step is None else step
    n = int(math.ceil(phi.period / step))
    h = phi.period / n
    times = np.arange(n) * h
    window = 2 * r
    dist = orbit_distances(phi.frames_at(times), tube, window)
    near = np.flatnonzero(np.isfinite(dist))
    if near.size == 0:
        return math.inf
    # local minima among scanned samples (cyclic)
    prev = dist[(near - 1) % n]
    nxt = dist[(near + 1) % n]
    mins = near[(dist[near] <= prev) & (dist[near] <= nxt)]
    if mins.size == 0:
        mins = near[[np.argmin(dist[near])]]
    mins = mins[np.argsort(dist[mins], kind="stable")[:max_refine]]
    lo = times[mins] - h
    hi = times[mins] + h

    def fun(t):
        v = orbit_distances(phi.frames_at(t), tube, window)
        return np.where(np.isfinite(v), v, window)

    best = float(_golden_min(fun, lo, hi).min())
    best = min(best, float(dist[near].min()))
    return best if best < r else math.inf


def subcollection(full: GeodesicCollection, spec: SubcollectionSpec) -> GeodesicCollection:
    if full.kind != "full":
        raise ValueError("subcollections are taken from a full collection")
    h = len(full)
    if spec.rule == "random_fraction":
        rng = np.random.default_rng([spec.seed, full.d.d])
        order = rng.permutation(h)
        need = spec.q * full.total_length
        k = 1
        while k < h and k * full.reg.period < need * (1 - 1e-12):
            k += 1
        return _take(full, order[:k].tolist(), "random_fraction", spec)
    if spec.rule == "explicit":
        bad = [i for i in spec.indices if not 0 <= i < h]
        if bad:
            raise IndexError(f"class indices {bad} out of range for h={h}")
        return _take(full, sorted(set(spec.indices)), "explicit", spec)
    tube = OrbitTube(spec.P, radius=spec.r)
    idx = [i for i, phi in enumerate(full.members) if math.isfinite(tube_hits(phi, tube, spec.r))]
    if not idx:
        raise EmptySubcollection(f"no geodesic of discriminant {full.d.d} meets the {spec.r}-tube")
    return _take(full, idx, "tube", spec)


def measure(I: GeodesicCollection, f, step: float = 1e-2) -> float:
    """mu_I(f): equal-weight mean of the normalized line integrals."""
    if len(I) == 0:
        raise EmptySubcollection("measure of an empty subcollection")
    periods = {phi.period for phi in I.members}
    assert len(periods) == 1, "members of one G_d share their period"
    vals = [integrate_along(phi, f, step) for phi in I.members]
    return math.fsum(vals) / len(vals)


def ratios(I: GeodesicCollection, full: GeodesicCollection):
    """(phi, psi) with phi = l(G_d)/l(I) and psi = phi/log d."""
    if I.d.d != full.d.d:
        raise MixedDiscriminants(f"{I.d.d} != {full.d.d}")
    if len(I) == 0:
        raise EmptySubcollection("ratio with an empty subcollection")
    phi = full.total_length / I.total_length
    return phi, phi / math.log(full.d.d)


def dwell_fraction(phi: ClosedGeodesic, tube: OrbitTube, r0: float, step: float = 1e-2) -> float:
    """Fraction of midpoint samples of ``phi`` lying within r0 of the tube's orbit."""
    n = int(math.ceil(phi.period / step))
    times = (np.arange(n) + 0.5) * (phi.period / n)
    inside = np.isfinite(orbit_distances(phi.frames_at(times), tube, r0))
    return float(inside.mean())
