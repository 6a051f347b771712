"""Test functions on X.

A :class:`TestFunction` evaluates on arrays of canonical frames.  Catalog
entries carry their exact Haar integral when one is known in closed form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable

import numpy as np
from scipy.integrate import quad

from .errors import RadiusTooLarge
from .surface import (
    HAAR_VOLUME,
    TRUST_RADIUS,
    ClosedGeodesic,
    OrbitTube,
    SurfacePoint,
    fold_frames,
    frame_coords,
    frame_from,
    haar_frames,
    tube_coordinates,
)

__all__ = [
    "TestFunction",
    "constant",
    "cusp_indicator",
    "tube_bump",
    "tube_indicator",
    "smoothness_estimate",
    "tube_mass_mc",
    "bump_profile",
    "BUMP_MASS",
]


@dataclass(eq=False)
class TestFunction:
    """An observable on X.

    ``fn`` maps an (n, 2, 2) array of canonical frames to n values.
    ``probe`` optionally draws points where the function varies, for
    derivative estimates; it defaults to Haar samples.
    """

    __test__ = False  # not a pytest class

    id: str
    fn: Callable[[np.ndarray], np.ndarray]
    exact_integral: float | None = None
    support_radius: float | None = None
    feature_scale: float | None = None
    params: dict = field(default_factory=dict)
    probe: Callable | None = field(default=None, repr=False)

    def evaluate(self, frames: np.ndarray) -> np.ndarray:
        frames = np.asarray(frames, dtype=float)
        return np.asarray(self.fn(frames.reshape(-1, 2, 2)), dtype=float)

    def __call__(self, p: SurfacePoint) -> float:
        return float(self.evaluate(p.frame[None])[0])

    @cached_property
    def smoothness_scale(self) -> float:
        return smoothness_estimate(self)


def constant(c: float = 1.0) -> TestFunction:
    return TestFunction(
        id="const" if c == 1.0 else f"const:{c:g}",
        fn=lambda g: np.full(g.shape[0], c),
        exact_integral=float(c),
        params={"c": c},
    )


def _ramp_integral(Y: float, s: float) -> float:
    # (3/pi) [ int_Y^{Y+s} (y-Y)/s y^-2 dy + 1/(Y+s) ]
    if s == 0:
        return 3 / (math.pi * Y)
    ramp = (math.log1p(s / Y) + Y / (Y + s) - 1.0) / s
    return 3 / math.pi * (ramp + 1 / (Y + s))


def cusp_indicator(Y: float, smoothing: float = 0.0) -> TestFunction:
    """Indicator of y > Y, or a linear ramp from 0 at Y to 1 at Y + smoothing."""
    if Y < 1:
        raise ValueError("cusp threshold must be at least 1")
    if smoothing < 0:
        raise ValueError("smoothing must be non-negative")

    if smoothing == 0:

        def fn(g):
            return (frame_coords(g)[1] > Y).astype(float)

        ident = f"cusp:{Y:g}"
    else:

        def fn(g):
            return np.clip((frame_coords(g)[1] - Y) / smoothing, 0.0, 1.0)

        ident = f"cusp:{Y:g}:{smoothing:g}"

    def probe(rng, n):
        # points straddling the level set y = Y (and the ramp)
        width = max(smoothing, 0.05)
        x = rng.random(n) - 0.5
        y = Y - width + 3 * width * rng.random(n)
        y = np.maximum(y, np.sqrt(np.maximum(1.0 - x * x, 0.0)) + 1e-3)
        return frame_from(x, y, 2 * np.pi * rng.random(n))

    return TestFunction(
        id=ident,
        fn=fn,
        exact_integral=_ramp_integral(Y, smoothing),
        feature_scale=smoothing or None,
        params={"Y": Y, "smoothing": smoothing},
        probe=probe,
    )


def bump_profile(x, width: float):
    """exp(1 - w^2/(w^2 - x^2)) on (-w, w), zero outside; equals 1 at 0."""
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    inside = np.abs(x) < width
    xi = x[inside]
    out[inside] = np.exp(1.0 - width * width / (width * width - xi * xi))
    return out


# int_{-1}^{1} exp(1 - 1/(1 - u^2)) du
BUMP_MASS = quad(lambda u: math.exp(1.0 - 1.0 / (1.0 - u * u)), -1.0, 1.0, epsabs=1e-14, epsrel=1e-13)[0]


def _tube_points(orbit: ClosedGeodesic, width: float, rng, n: int):
    """Haar-uniform points of the box |s1|, |s2| < width around the orbit."""
    s0 = rng.random(n) * orbit.period
    s1 = (2 * rng.random(n) - 1) * width
    s2 = (2 * rng.random(n) - 1) * width
    g = orbit.frames_at(s0)
    e = np.empty((n, 2, 2))
    e[:, 0, 0] = 1 + s1 * s2
    e[:, 0, 1] = s1
    e[:, 1, 0] = s2
    e[:, 1, 1] = 1.0
    return fold_frames(np.einsum("nij,njk->nik", g, e))


def tube_bump(P: ClosedGeodesic, r: float, label: str | None = None) -> TestFunction:
    """Smooth bump equal to 1 on P and supported in the r-tube around P.

    In tube coordinates (s1, s2) transverse to P the value is
    bump(s1) * bump(s2) with bump width r/2, which keeps the support
    inside the Frobenius r-ball of the orbit.
    """
    if not 0 < r <= min(1.0, TRUST_RADIUS):
        raise RadiusTooLarge(f"bump radius {r} outside (0, {min(1.0, TRUST_RADIUS)}]")
    width = r / 2
    tube = OrbitTube(P, radius=r)
    cutoff = r + tube.step

    def fn(g):
        out = np.zeros(g.shape[0])
        probe, s1, s2 = tube_coordinates(g, tube, cutoff)
        if probe.size:
            vals = bump_profile(s1, width) * bump_profile(s2, width)
            np.maximum.at(out, probe, vals)
        return out

    # Haar measure is ds0 ds1 ds2 in these coordinates
    exact = P.period * (BUMP_MASS * width) ** 2 / HAAR_VOLUME
    name = label or f"d{P.d}"
    return TestFunction(
        id=f"bump:{name}:{r:g}",
        fn=fn,
        exact_integral=exact,
        support_radius=r,
        feature_scale=width,
        params={"P": name, "r": r, "tube": tube, "width": width},
        probe=lambda rng, n: _tube_points(P, width, rng, n),
    )


def tube_indicator(tube: OrbitTube, r0: float | None = None) -> TestFunction:
    """Indicator of the sampled r0-neighbourhood of the tube's orbit."""
    r0 = tube.radius if r0 is None else r0

    def fn(g):
        return np.isfinite(tube.distances(g, r0)).astype(float)

    return TestFunction(id=f"tube:d{tube.orbit.d}:{r0:g}", fn=fn, support_radius=r0, params={"r0": r0})


def tube_mass_mc(f: TestFunction, n: int, rng) -> tuple:
    """Monte-Carlo Haar mass of a tube bump, sampling only its coordinate box."""
    P = f.params["tube"].orbit
    width = f.params["width"]
    vals = f.evaluate(_tube_points(P, width, rng, n))
    scale = P.period * (2 * width) ** 2 / HAAR_VOLUME
    return float(vals.mean() * scale), float(vals.std(ddof=1) / math.sqrt(n) * scale)


_DIRECTIONS = (
    np.array([[0.5, 0.0], [0.0, -0.5]]),  # geodesic
    np.array([[0.0, 1.0], [0.0, 0.0]]),  # unstable horocycle
    np.array([[0.0, 0.0], [1.0, 0.0]]),  # stable horocycle
)


def _expm(x: np.ndarray, h: float) -> np.ndarray:
    if x[1, 0] == 0 and x[0, 1] == 0:
        return np.diag(np.exp(h * np.diag(x)))
    return np.eye(2) + h * x  # nilpotent


def smoothness_estimate(f: TestFunction, n_points: int = 4000, h: float | None = None, seed: int = 0) -> float:
    """Finite-difference proxy for a C^2 norm of ``f``.

    Sum over the geodesic and both horocyclic directions of the largest
    symmetric first and second differences over a point cloud.
    """
    rng = np.random.default_rng(seed)
    if h is None:
        h = 1e-3 if f.feature_scale is None else min(1e-3, f.feature_scale / 20)
    pts = f.probe(rng, n_points) if f.probe is not None else haar_frames(rng, n_points)
    pts = fold_frames(pts)
    f0 = f.evaluate(pts)
    total = 0.0
    for x in _DIRECTIONS:
        fp = f.evaluate(fold_frames(pts @ _expm(x, h)))
        fm = f.evaluate(fold_frames(pts @ _expm(x, -h)))
        d1 = np.abs(fp - fm).max() / (2 * h)
        d2 = np.abs(fp - 2 * f0 + fm).max() / (h * h)
        total += d1 + d2
    return float(total)
