"""The unit tangent bundle X = SL2(Z)\\SL2(R) and its geodesic flow.

A point of X is stored as a unimodular frame ``g``; its base point is
``g.i`` and the flow is right multiplication by
``a_t = diag(e^{t/2}, e^{-t/2})``.  Folding multiplies on the left by
SL2(Z) until ``g.i`` lies in the standard fundamental domain.

Bulk routines work on arrays of shape ``(n, 2, 2)``; the scalar API
(:class:`SurfacePoint`, :func:`fold`, :func:`flow`, ...) wraps them.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from itertools import product

import numpy as np
from scipy.spatial import cKDTree

from .errors import NumericalDegeneracy, StepTooCoarse
from .forms import QuadForm, ReductionCycle, rho_matrix
from .units import RegulatorData, automorph

__all__ = [
    "TRUST_RADIUS",
    "HAAR_VOLUME",
    "OutOfTrustRegion",
    "SurfacePoint",
    "ClosedGeodesic",
    "OrbitTube",
    "fold",
    "fold_frames",
    "flow",
    "flow_frames",
    "frame_from",
    "frame_coords",
    "lift_geodesic",
    "integrate_along",
    "distance",
    "distance_to_orbit",
    "haar_sample",
    "haar_frames",
    "haar_integral",
    "tube_coordinates",
    "transverse_distance",
    "orbit_distances",
    "shadowing_interval",
]

TRUST_RADIUS = 0.3
# Haar volume of X in the frame coordinates a_{s0} u+(s1) u-(s2),
# i.e. dx dy dphi / y^2 with phi = (theta - pi/2)/2 ranging over [0, pi)
HAAR_VOLUME = math.pi**2 / 3

_SQ3_2 = math.sqrt(3) / 2
_ARC_TOL = 1e-13
_MAX_FOLD_ITER = 10_000

S = np.array([[0.0, -1.0], [1.0, 0.0]])
T = np.array([[1.0, 1.0], [0.0, 1.0]])
TI = np.array([[1.0, -1.0], [0.0, 1.0]])


class OutOfTrustRegion(UserWarning):
    """Distance above the trust radius; the value is only an upper bound."""


def _neighbor_words(max_len: int = 3) -> np.ndarray:
    gens = (S, T, TI)
    mats = [np.eye(2)]
    for n in range(1, max_len + 1):
        for word in product(gens, repeat=n):
            m = np.eye(2)
            for g in word:
                m = m @ g
            mats.append(m)
    keep = {}
    for m in mats:
        for sgn in (1.0, -1.0):
            mm = sgn * m
            keep.setdefault(tuple(np.rint(mm).astype(int).ravel()), mm)
    return np.array(list(keep.values()))


NEIGHBORS = _neighbor_words(3)


# ---------------------------------------------------------------- frames


def frame_coords(g: np.ndarray):
    """(x, y, theta) of frames; theta is the direction of the flow at g.i."""
    a, b, c, d = g[..., 0, 0], g[..., 0, 1], g[..., 1, 0], g[..., 1, 1]
    den = c * c + d * d
    x = (a * c + b * d) / den
    y = 1.0 / den
    theta = (0.5 * np.pi - 2.0 * np.arctan2(c, d)) % (2 * np.pi)
    return x, y, theta


def frame_from(x, y, theta) -> np.ndarray:
    """Frames with base point x + iy pointing in direction theta."""
    x, y, theta = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (x, y, theta)))
    sy = np.sqrt(y)
    phi = 0.5 * (theta - 0.5 * np.pi)
    cp, sp = np.cos(phi), np.sin(phi)
    # [[sy, x/sy], [0, 1/sy]] @ [[cos, sin], [-sin, cos]]
    g = np.empty(x.shape + (2, 2))
    g[..., 0, 0] = sy * cp - x / sy * sp
    g[..., 0, 1] = sy * sp + x / sy * cp
    g[..., 1, 0] = -sp / sy
    g[..., 1, 1] = cp / sy
    return g


def flow_frames(g: np.ndarray, t) -> np.ndarray:
    """Right multiplication by a_t (no folding); ``t`` broadcasts over frames."""
    t = np.asarray(t, dtype=float)
    e = np.exp(0.5 * t)[..., None]
    out = np.empty(np.broadcast_shapes(g.shape, t.shape + (2, 2)))
    out[..., :, 0] = g[..., :, 0] * e
    out[..., :, 1] = g[..., :, 1] / e
    return out


def _canonical_sign(g: np.ndarray) -> np.ndarray:
    c, d = g[..., 1, 0], g[..., 1, 1]
    flip = (d < 0) | ((d == 0) & (c < 0))
    g[flip] *= -1.0
    return g


def fold_frames(g: np.ndarray) -> np.ndarray:
    """Canonical fundamental-domain representatives of an array of frames.

    Representative has x in [-1/2, 1/2) and |z| >= 1; on the unit arc
    the point with x >= 0 is chosen.  The sign is fixed so that the
    bottom row (c, d) has d > 0 (or d == 0, c > 0).
    """
    g = np.array(g, dtype=float, copy=True)
    single = g.ndim == 2
    if single:
        g = g[None]
    flat = g.reshape(-1, 2, 2)
    active = np.arange(flat.shape[0])
    for _ in range(_MAX_FOLD_ITER):
        if active.size == 0:
            break
        sub = flat[active]
        a, b, c, d = sub[:, 0, 0], sub[:, 0, 1], sub[:, 1, 0], sub[:, 1, 1]
        den = c * c + d * d
        if not np.all(np.isfinite(den)) or np.any(den > 1e300):
            raise NumericalDegeneracy("frame underflow while folding (point too far into the cusp or the real axis)")
        x = (a * c + b * d) / den
        n = np.floor(x + 0.5)
        a = a - n * c
        b = b - n * d
        x = x - n
        y = 1.0 / den
        r2 = x * x + y * y
        inv = r2 < 1.0 - _ARC_TOL
        sub[:, 0, 0] = np.where(inv, -c, a)
        sub[:, 0, 1] = np.where(inv, -d, b)
        sub[:, 1, 0] = np.where(inv, a, c)
        sub[:, 1, 1] = np.where(inv, b, d)
        flat[active] = sub
        active = active[inv]
    else:
        raise NumericalDegeneracy("fold did not terminate")
    # arc tie-break: prefer x >= 0 on |z| = 1
    x, y, _ = frame_coords(flat)
    on_arc = (np.abs(x * x + y * y - 1.0) <= _ARC_TOL) & (x < 0)
    if np.any(on_arc):
        flat[on_arc] = np.einsum("ij,njk->nik", S, flat[on_arc])
    x, _, _ = frame_coords(flat)
    edge = x >= 0.5
    if np.any(edge):
        flat[edge] = np.einsum("ij,njk->nik", TI, flat[edge])
    _canonical_sign(flat)
    out = flat.reshape(g.shape)
    return out[0] if single else out


def _fold_one(g):
    """Pure-python fold of one frame given as a 4-tuple (a, b, c, d)."""
    a, b, c, d = g
    for _ in range(_MAX_FOLD_ITER):
        den = c * c + d * d
        if not math.isfinite(den) or den > 1e300:
            raise NumericalDegeneracy("frame underflow while folding")
        x = (a * c + b * d) / den
        n = math.floor(x + 0.5)
        a, b = a - n * c, b - n * d
        x -= n
        y = 1.0 / den
        if x * x + y * y < 1.0 - _ARC_TOL:
            a, b, c, d = -c, -d, a, b
        else:
            return a, b, c, d
    raise NumericalDegeneracy("fold did not terminate")


@dataclass(frozen=True)
class SurfacePoint:
    frame: np.ndarray

    @property
    def z(self) -> complex:
        x, y, _ = frame_coords(self.frame)
        return complex(x, y)

    @property
    def theta(self) -> float:
        return float(frame_coords(self.frame)[2])

    def __eq__(self, other) -> bool:
        return isinstance(other, SurfacePoint) and np.allclose(self.frame, other.frame, rtol=0, atol=1e-9)

    def __hash__(self):
        return hash(tuple(np.round(self.frame, 9).ravel()))


def fold(g) -> SurfacePoint:
    g = np.asarray(g, dtype=float)
    if abs(np.linalg.det(g) - 1.0) > 1e-9:
        raise ValueError(f"frame has determinant {np.linalg.det(g)}")
    return SurfacePoint(fold_frames(g))


def flow(p: SurfacePoint, t: float) -> SurfacePoint:
    return SurfacePoint(fold_frames(flow_frames(p.frame, t)))


# -------------------------------------------------------------- distances


def frame_distances(p: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Pairwise-aligned distance proxy min_gamma |p^-1 gamma q - I|_F.

    ``p`` and ``q`` broadcast against each other with shape (..., 2, 2).
    """
    p, q = np.broadcast_arrays(p, q)
    pinv = np.empty_like(p)
    pinv[..., 0, 0] = p[..., 1, 1]
    pinv[..., 0, 1] = -p[..., 0, 1]
    pinv[..., 1, 0] = -p[..., 1, 0]
    pinv[..., 1, 1] = p[..., 0, 0]
    gq = np.einsum("wij,...jk->...wik", NEIGHBORS, q)
    m = np.einsum("...ij,...wjk->...wik", pinv, gq)
    m[..., 0, 0] -= 1.0
    m[..., 1, 1] -= 1.0
    return np.sqrt((m * m).sum(axis=(-1, -2))).min(axis=-1)


def distance(p: SurfacePoint, q: SurfacePoint) -> float:
    """Frobenius frame-metric proxy for d_X; warns above the trust radius."""
    v = float(frame_distances(p.frame, q.frame))
    if v > TRUST_RADIUS:
        warnings.warn(f"distance {v:.3g} exceeds trust radius {TRUST_RADIUS}", OutOfTrustRegion, stacklevel=2)
    return v


# -------------------------------------------------------- closed geodesics


def _mat_to_float(m) -> np.ndarray:
    return np.array([[float(m[0][0]), float(m[0][1])], [float(m[1][0]), float(m[1][1])]])


@dataclass
class ClosedGeodesic:
    """Closed orbit of the flow attached to one rho-cycle.

    ``anchors`` are apex frames of the geodesics of every form in the
    cycle, all equivalent mod SL2(Z) to points of this one orbit, at
    orbit times ``anchor_times`` (sorted, the first is the base frame at
    time 0).  Orbit points are produced by flowing the nearest anchor,
    which keeps the flow time per evaluation short and the error bounded.
    """

    cycle: ReductionCycle
    w: float
    w_conj: float
    base_frame: np.ndarray
    period: float
    automorph: tuple
    anchors: np.ndarray = field(default=None, repr=False)
    anchor_times: np.ndarray = field(default=None, repr=False)

    @property
    def form(self) -> QuadForm:
        return self.cycle.forms[0]

    @property
    def d(self) -> int:
        return self.form.disc

    def frames_at(self, times) -> np.ndarray:
        """Folded frames of the orbit at the given times (taken mod period)."""
        times = np.mod(np.asarray(times, dtype=float), self.period)
        at = self.anchor_times
        k = np.searchsorted(at, times, side="right") - 1
        nxt = k + 1
        right_t = np.where(nxt < at.size, at[np.minimum(nxt, at.size - 1)], self.period)
        use_right = (right_t - times) < (times - at[k])
        idx = np.where(use_right, nxt % at.size, k)
        dt = np.where(use_right, times - right_t, times - at[k])
        return fold_frames(flow_frames(self.anchors[idx], dt))

    def closure_error(self) -> float:
        """Distance from the base point to the last anchor flowed up to one full period."""
        dt = self.period - self.anchor_times[-1]
        end = fold_frames(flow_frames(self.anchors[-1], dt))
        return float(frame_distances(end, fold_frames(self.base_frame)))


def _apex_frame(f: QuadForm, target: float):
    """Apex frame of the geodesic of ``f`` flowing to the root nearest ``target``."""
    a, b, _ = f
    sd = math.sqrt(f.disc)
    r1, r2 = (-b + sd) / (2 * a), (-b - sd) / (2 * a)
    w, wc = (r1, r2) if abs(r1 - target) <= abs(r2 - target) else (r2, r1)
    if w > wc:
        g = np.array([[w, wc], [1.0, 1.0]]) / math.sqrt(w - wc)
    else:
        g = np.array([[w, -wc], [1.0, -1.0]]) / math.sqrt(wc - w)
    return g, w


def _cycle_anchors(forms, w0: float):
    # f_{i+1} = f_i o M_i, so M_i^{-1} carries the geodesic of f_i onto that of f_{i+1}
    g, w = _apex_frame(forms[0], w0)
    frames, offsets = [g], [0.0]
    t = 0.0
    n = len(forms)
    for i in range(n):
        f, h = forms[i], forms[(i + 1) % n]
        (p, q), (r, s) = rho_matrix(f, h)
        minv = np.array([[s, -q], [-r, p]], dtype=float)
        wn = (minv[0, 0] * w + minv[0, 1]) / (minv[1, 0] * w + minv[1, 1])
        g2, w2 = _apex_frame(h, wn)
        dmat = _inv(g2) @ (minv @ g)  # = +-a_tau
        t -= 2.0 * math.log(abs(dmat[0, 0]))
        if i < n - 1:
            frames.append(g2)
            offsets.append(t)
        g, w = g2, w2
    return np.array(frames), np.array(offsets), t


def lift_geodesic(cycle: ReductionCycle, reg: RegulatorData) -> ClosedGeodesic:
    """Closed orbit of a_t attached to the class of ``cycle``.

    The base frame has columns proportional to (w, 1) and (w_conj, 1)
    with w > w_conj, so the orbit flows towards w and starts at the apex
    of the semicircle joining the roots.
    """
    f = cycle.forms[0]
    a, b, _ = f
    d = f.disc
    if d != reg.d:
        raise ValueError(f"cycle has discriminant {d}, regulator data {reg.d}")
    sd = math.sqrt(d)
    r1, r2 = (-b + sd) / (2 * a), (-b - sd) / (2 * a)
    w, wc = max(r1, r2), min(r1, r2)
    base = np.array([[w, wc], [1.0, 1.0]]) / math.sqrt(w - wc)
    m = automorph(f, reg.pell)
    if a < 0:
        # eigenvalue (t + u sqrt d)/2 sits on the smaller root; invert
        (p, q), (r, s) = m
        m = ((s, -q), (-r, p))
    frames, offsets, total = _cycle_anchors(cycle.forms, w)
    if abs(abs(total) - reg.period) > 1e-8 * max(1.0, reg.period):
        raise NumericalDegeneracy(f"cycle offsets sum to {total}, period is {reg.period}")
    times = np.mod(offsets, reg.period)
    times[0] = 0.0
    order = np.argsort(times, kind="stable")
    return ClosedGeodesic(
        cycle=cycle,
        w=w,
        w_conj=wc,
        base_frame=base,
        period=reg.period,
        automorph=m,
        anchors=frames[order],
        anchor_times=times[order],
    )


def _midpoint_times(period: float, step: float) -> np.ndarray:
    n = int(math.ceil(period / step))
    h = period / n
    return (np.arange(n) + 0.5) * h


def integrate_along(phi: ClosedGeodesic, f, step: float = 1e-2, chunk: int = 1 << 18) -> float:
    """Normalized line integral (1/l) int_0^l f(x a_t) dt by the midpoint rule."""
    if not 0 < step <= phi.period / 10:
        raise StepTooCoarse(f"step {step} must lie in (0, period/10 = {phi.period / 10:.4g}]")
    times = _midpoint_times(phi.period, step)
    total = 0.0
    for s in range(0, times.size, chunk):
        vals = f.evaluate(phi.frames_at(times[s : s + chunk]))
        total += math.fsum(vals.tolist())
    return total / times.size


# ------------------------------------------------------------ orbit tubes


@dataclass
class OrbitTube:
    """A closed orbit P sampled at arc step ``step`` with tube radius ``radius``."""

    orbit: ClosedGeodesic
    radius: float
    step: float = None
    samples: np.ndarray = field(default=None, repr=False)
    times: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        if self.step is None:
            self.step = self.radius / 10
        if self.step > self.radius / 10 + 1e-15:
            raise ValueError("tube sample step must be at most radius/10")
        n = int(math.ceil(self.orbit.period / self.step))
        self.step = self.orbit.period / n
        self.times = np.arange(n) * self.step
        self.samples = self.orbit.frames_at(self.times)
        gq = np.einsum("wij,njk->nwik", NEIGHBORS, self.samples)
        self._gq = gq.reshape(-1, 2, 2)
        self._tree = cKDTree(self._gq.reshape(-1, 4))
        self._ymax = float(frame_coords(self.samples)[1].max())

    def candidates(self, frames: np.ndarray, cutoff: float):
        """(probe index, gamma*sample index) pairs possibly within ``cutoff``."""
        frames = np.asarray(frames, dtype=float).reshape(-1, 2, 2)
        _, y, _ = frame_coords(frames)
        ok = np.flatnonzero(y <= (self._ymax + 1.0) * math.exp(2 * cutoff) + 1.0)
        if ok.size == 0:
            return np.empty(0, np.int64), np.empty(0, np.int64)
        pts = frames[ok]
        radius = np.sqrt((pts * pts).sum(axis=(1, 2))) * cutoff * 1.0000001
        hits = self._tree.query_ball_point(pts.reshape(-1, 4), r=radius, return_sorted=False)
        lens = np.fromiter((len(h) for h in hits), dtype=np.int64, count=len(hits))
        if lens.sum() == 0:
            return np.empty(0, np.int64), np.empty(0, np.int64)
        probe = np.repeat(ok, lens)
        cand = np.concatenate([np.asarray(h, dtype=np.int64) for h in hits if len(h)])
        return probe, cand

    def distances(self, frames: np.ndarray, cutoff: float) -> np.ndarray:
        """Min sampled distance to P, exact where below ``cutoff``, else inf."""
        frames = np.asarray(frames, dtype=float).reshape(-1, 2, 2)
        out = np.full(frames.shape[0], np.inf)
        probe, cand = self.candidates(frames, cutoff)
        if probe.size:
            m = np.einsum("nij,njk->nik", _inv(frames[probe]), self._gq[cand])
            m[:, 0, 0] -= 1.0
            m[:, 1, 1] -= 1.0
            dist = np.sqrt((m * m).sum(axis=(1, 2)))
            np.minimum.at(out, probe, dist)
        out[out >= cutoff] = np.inf
        return out


def _inv(g: np.ndarray) -> np.ndarray:
    out = np.empty_like(g)
    out[..., 0, 0] = g[..., 1, 1]
    out[..., 0, 1] = -g[..., 0, 1]
    out[..., 1, 0] = -g[..., 1, 0]
    out[..., 1, 1] = g[..., 0, 0]
    return out


def distance_to_orbit(p: SurfacePoint, tube: OrbitTube) -> float:
    """Sampled distance to the orbit minus the half-step slack, floored at 0."""
    d = frame_distances(p.frame[None], tube.samples).min()
    return max(0.0, float(d) - tube.step / 2)


def tube_coordinates(frames: np.ndarray, tube: OrbitTube, cutoff: float):
    """Transverse coordinates (s1, s2) of frames near P for every candidate lift.

    Writes ``E = q^-1 gamma^-1 p = a_{s0} u+(s1) u-(s2)``; (s1, s2) do not
    depend on which sample q of P is used.  Returns (probe index, s1, s2)
    arrays, one entry per candidate pair.
    """
    frames = np.asarray(frames, dtype=float).reshape(-1, 2, 2)
    probe, cand = tube.candidates(frames, cutoff)
    if probe.size == 0:
        return probe, np.empty(0), np.empty(0)
    e = np.einsum("nij,njk->nik", _inv(tube._gq[cand]), frames[probe])
    h = e[:, 1, 1]
    sgn = np.where(h < 0, -1.0, 1.0)
    h = h * sgn
    f = e[:, 0, 1] * sgn
    g = e[:, 1, 0] * sgn
    with np.errstate(divide="ignore", invalid="ignore"):
        s1 = f * h
        s2 = np.where(h > 0, g / h, np.inf)
    return probe, s1, s2


def transverse_distance(s1, s2, iters: int = 8) -> np.ndarray:
    """min over tau of |u-(-s2) u+(-s1) a_tau - I|_F: the distance to the whole orbit.

    Newton on x = e^{tau/2} starting from x = 1.
    """
    s1 = np.asarray(s1, dtype=float)
    s2 = np.asarray(s2, dtype=float)
    A, B, C = s1 * s1, s2 * s2, 1.0 + s1 * s2
    x = np.ones_like(s1)
    for _ in range(iters):
        x2 = x * x
        x3 = x2 * x
        x4 = x2 * x2
        d1 = 2 * (x - 1) - 2 * A / x3 + 2 * B * x - 2 * C * (C / x - 1) / x2
        d2 = 2 + 6 * A / x4 + 2 * B + 6 * C * C / x4 - 4 * C / x3
        x = np.clip(x - d1 / d2, 0.25, 4.0)
    val = (x - 1) ** 2 + A / (x * x) + B * x * x + (C / x - 1) ** 2
    return np.sqrt(val)


def orbit_distances(frames: np.ndarray, tube: OrbitTube, cutoff: float) -> np.ndarray:
    """Distance from each frame to the continuous orbit of ``tube``; inf when >= cutoff."""
    frames = np.asarray(frames, dtype=float).reshape(-1, 2, 2)
    out = np.full(frames.shape[0], np.inf)
    probe, s1, s2 = tube_coordinates(frames, tube, cutoff + tube.step)
    if probe.size:
        ok = np.isfinite(s2) & (np.abs(s1) < 2 * cutoff + 1) & (np.abs(s2) < 2 * cutoff + 1)
        np.minimum.at(out, probe[ok], transverse_distance(s1[ok], s2[ok]))
    out[out >= cutoff] = np.inf
    return out


# ------------------------------------------------------------------- Haar


def haar_frames(rng: np.random.Generator, n: int) -> np.ndarray:
    """n frames distributed according to the normalized Haar measure on X."""
    out_x = np.empty(0)
    out_y = np.empty(0)
    while out_x.size < n:
        m = int((n - out_x.size) * 1.12) + 16
        x = rng.random(m) - 0.5
        y = _SQ3_2 / (1.0 - rng.random(m))  # 1 - U lies in (0, 1]
        keep = x * x + y * y >= 1.0
        out_x = np.concatenate([out_x, x[keep]])
        out_y = np.concatenate([out_y, y[keep]])
    x, y = out_x[:n], out_y[:n]
    theta = rng.random(n) * 2 * np.pi
    return frame_from(x, y, theta)


def haar_sample(rng: np.random.Generator) -> SurfacePoint:
    return SurfacePoint(fold_frames(haar_frames(rng, 1)[0]))


HAAR_ACCEPTANCE = math.pi * math.sqrt(3) / 6  # area(F) / area of the proposal strip


def haar_integral(f, n_samples: int = 10**6, rng: np.random.Generator | None = None, exact: bool = True):
    """(value, standard error) of the Haar integral of ``f``.

    Uses the catalogued exact value when present and ``exact`` is set;
    otherwise Monte Carlo over ``n_samples`` Haar points.
    """
    if exact and f.exact_integral is not None:
        return float(f.exact_integral), 0.0
    if rng is None:
        rng = np.random.default_rng(0)
    total = np.empty(0)
    chunk = 1 << 18
    vals = []
    for s in range(0, n_samples, chunk):
        vals.append(f.evaluate(haar_frames(rng, min(chunk, n_samples - s))))
    total = np.concatenate(vals)
    return float(total.mean()), float(total.std(ddof=1) / math.sqrt(total.size))


# -------------------------------------------------------------- shadowing


def shadowing_interval(tube: OrbitTube, r: float, t0: float = 0.0, dt: float = 1e-2, t_max: float = 50.0):
    """Length of the time window around 0 during which an r-perturbed start stays sqrt(r)-close.

    The start is ``g_P(t0) u+(s) u-(s)`` with s chosen so the frame
    distance to P is exactly r; ``tube`` must have radius sqrt(r).
    """
    s = math.sqrt(math.sqrt(1 + r * r) - 1)  # 2 s^2 + s^4 = r^2
    g = tube.orbit.frames_at(np.array([t0]))[0]
    e = np.array([[1 + s * s, s], [s, 1.0]])  # u+(s) u-(s)
    start = g @ e
    limit = math.sqrt(r)
    ts = np.arange(dt, t_max, dt)

    def run(sign):
        frames = fold_frames(flow_frames(start[None], sign * ts))
        dist = orbit_distances(frames, tube, limit)
        out = np.flatnonzero(~np.isfinite(dist))
        if out.size == 0:
            return t_max
        return float(ts[out[0]])

    return run(1.0) + run(-1.0)
