"""Numerical experiments on the distribution of closed geodesics.

Every experiment is a pure function of its arguments: randomness comes from
generators derived from an integer seed and a label, and sums over many
terms use ``math.fsum`` so results do not depend on evaluation order.
"""

from __future__ import annotations

import csv
import io
import json
import math
import zlib
from dataclasses import asdict, dataclass

import numpy as np
from scipy import stats

from .errors import DegenerateFit
from .forms import is_discriminant, make_discriminant
from .observables import TestFunction
from .surface import (
    HAAR_VOLUME,
    ClosedGeodesic,
    OrbitTube,
    flow_frames,
    fold_frames,
    haar_frames,
    haar_integral,
    orbit_distances,
    shadowing_interval,
    transverse_distance,
)
from .subcollections import (
    GeodesicCollection,
    SubcollectionSpec,
    build_full,
    dwell_fraction,
    measure,
    ratios,
    subcollection,
    tube_hits,
)

__all__ = [
    "COLUMNS",
    "DiscrepancyReport",
    "DecayFit",
    "MixingEstimate",
    "derived_rng",
    "log_spaced_fundamentals",
    "fit_decay",
    "discrepancy",
    "duke_sweep",
    "theorem12_experiment",
    "chain_check",
    "mixing_correlation",
    "ergodic_variance",
    "adversarial_experiment",
    "shadowing_experiment",
    "reports_to_csv",
    "to_json",
]

COLUMNS = (
    "d",
    "f_id",
    "kind",
    "q_or_r",
    "n_members",
    "total_length",
    "phi",
    "psi",
    "mu_I",
    "mu_X",
    "discrepancy",
    "step",
    "seed",
)


def derived_rng(seed: int, *labels) -> np.random.Generator:
    """Generator for the stream labelled ``labels`` under a master seed."""
    words = [int(seed) & 0xFFFFFFFF]
    for lab in labels:
        if isinstance(lab, (int, np.integer)) and not isinstance(lab, bool):
            words.extend([int(lab) & 0xFFFFFFFF, int(lab) >> 32 & 0xFFFFFFFF])
        else:
            words.append(zlib.crc32(str(lab).encode()))
    return np.random.default_rng(words)


def _fundamental(d: int) -> bool:
    return is_discriminant(d) and make_discriminant(d).is_fundamental


def log_spaced_fundamentals(lo: float, hi: float, n: int) -> list:
    """n distinct fundamental discriminants, the first at or above each log-spaced target."""
    out = []
    for k in range(n):
        target = math.ceil(lo * (hi / lo) ** (k / (n - 1))) if n > 1 else math.ceil(lo)
        d = max(target, out[-1] + 1 if out else target)
        while not _fundamental(d):
            d += 1
        out.append(d)
    return out


# ------------------------------------------------------------------ reports


@dataclass(frozen=True)
class DiscrepancyReport:
    d: int
    f_id: str
    kind: str
    q_or_r: float | None
    n_members: int
    total_length: float
    phi: float
    psi: float
    mu_I: float
    mu_X: float
    discrepancy: float
    step: float
    seed: int | None = None
    T_window: float | None = None
    quad_error: float | None = None

    def row(self) -> list:
        return [getattr(self, c) for c in COLUMNS]

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class DecayFit:
    """OLS line through pairs (x, log y); x is whatever abscissa the caller chose."""

    x: tuple
    y: tuple
    slope: float
    intercept: float
    r_squared: float
    dropped: tuple = ()
    note: str = ""

    @property
    def gamma_hat(self) -> float:
        return -self.slope

    def to_dict(self) -> dict:
        out = asdict(self)
        out["gamma_hat"] = self.gamma_hat
        return out


@dataclass(frozen=True)
class MixingEstimate:
    f_id: str
    kind: str  # "corr" at flow time t, or "variance" at window T
    t: float
    value: float
    std_error: float
    n_samples: int

    def to_dict(self) -> dict:
        return asdict(self)


def fit_decay(x, y, dropped=(), note: str = "") -> DecayFit:
    """Least-squares line through (x, log y); x is used as given."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size < 3:
        raise DegenerateFit(f"only {x.size} usable points")
    if np.any(y <= 0) or not np.all(np.isfinite(y)):
        raise DegenerateFit("non-positive values cannot be fitted on a log scale")
    ly = np.log(y)
    if np.ptp(x) == 0:
        raise DegenerateFit("all abscissae coincide")
    res = stats.linregress(x, ly)
    r2 = 1.0 if np.ptp(ly) == 0 else float(res.rvalue**2)
    return DecayFit(
        x=tuple(x.tolist()),
        y=tuple(ly.tolist()),
        slope=float(res.slope),
        intercept=float(res.intercept),
        r_squared=min(max(r2, 0.0), 1.0),
        dropped=tuple(dropped),
        note=note,
    )


def _mu_x(f: TestFunction, seed: int | None, n_samples: int = 10**6) -> float:
    rng = derived_rng(0 if seed is None else seed, "haar", f.id)
    return haar_integral(f, n_samples=n_samples, rng=rng)[0]


def discrepancy(
    I: GeodesicCollection,
    f: TestFunction,
    step: float = 1e-2,
    full: GeodesicCollection | None = None,
    seed: int | None = None,
    quad_error: bool = False,
    mu_X: float | None = None,
) -> DiscrepancyReport:
    """|mu_I(f) - mu_X(f)| with the bookkeeping of the subcollection.

    ``full`` is the ambient G_d (defaults to ``I`` for full collections).
    With ``quad_error`` the midpoint rule is rerun at twice the step and the
    difference recorded as the quadrature error estimate.
    """
    if full is None:
        if I.kind != "full":
            raise ValueError("a subcollection needs its full collection for phi")
        full = I
    phi, psi = ratios(I, full)
    mu_i = measure(I, f, step)
    mx = _mu_x(f, seed) if mu_X is None else mu_X
    err = None
    if quad_error:
        err = abs(mu_i - measure(I, f, 2 * step)) if 2 * step <= I.reg.period / 10 else None
    spec = I.spec
    q_or_r = None
    if spec is not None:
        q_or_r = spec.q if spec.rule == "random_fraction" else spec.r
    return DiscrepancyReport(
        d=I.d.d,
        f_id=f.id,
        kind=I.kind,
        q_or_r=q_or_r,
        n_members=len(I),
        total_length=I.total_length,
        phi=phi,
        psi=psi,
        mu_I=mu_i,
        mu_X=mx,
        discrepancy=abs(mu_i - mx),
        step=step,
        seed=seed,
        quad_error=err,
    )


# ------------------------------------------------------------- decay sweeps


@dataclass(frozen=True)
class SweepResult:
    reports: tuple
    fit: DecayFit | None
    error: str | None = None

    def to_dict(self) -> dict:
        return {
            "reports": [r.to_dict() for r in self.reports],
            "fit": None if self.fit is None else self.fit.to_dict(),
            "error": self.error,
        }


def duke_sweep(d_list, f: TestFunction, step: float = 1e-2, cache=None, censor: bool = True) -> SweepResult:
    """Discrepancy of the full collections G_d and a power-law fit in d.

    The fit is OLS of log discrepancy on log d; gamma_hat is minus the
    slope.  With ``censor`` points whose discrepancy is below ten times
    the estimated quadrature error are left out of the fit.
    """
    d_list = sorted(int(d) for d in d_list)
    if len(d_list) < 8:
        raise ValueError("a decay sweep needs at least 8 discriminants")
    mx = _mu_x(f, None)
    reports = []
    for d in d_list:
        full = build_full(d, cache=cache)
        reports.append(discrepancy(full, f, step, quad_error=censor, mu_X=mx))
    keep, dropped = [], []
    for r in reports:
        if r.discrepancy == 0 or (censor and r.quad_error is not None and r.discrepancy < 10 * r.quad_error):
            dropped.append(r.d)
        else:
            keep.append(r)
    if all(r.discrepancy == 0 for r in reports):
        raise DegenerateFit(f"{f.id}: every discrepancy is zero")
    note = "censored: discrepancy < 10 x |mu(step) - mu(2 step)|" if censor else ""
    fit = fit_decay(
        [math.log(r.d) for r in keep], [r.discrepancy for r in keep], dropped=dropped, note=note
    )
    return SweepResult(tuple(reports), fit)


# ------------------------------------------------------- subcollection bound

SCHEDULES = {
    "full": lambda d: 1.0,
    "sqrtlog": lambda d: 2.0 / math.sqrt(math.log(d)),
    "invlog": lambda d: 1.0 / math.log(d),
}


@dataclass(frozen=True)
class Theorem12Result:
    reports: tuple
    C: float | None
    verdict: str  # PASS, FAIL or NotApplicable
    psi_nominal: tuple
    seed: int

    def to_dict(self) -> dict:
        return {
            "reports": [r.to_dict() for r in self.reports],
            "C": self.C,
            "verdict": self.verdict,
            "psi_nominal": list(self.psi_nominal),
            "seed": self.seed,
        }


def theorem12_experiment(d_list, q_schedule, f: TestFunction, seed: int = 0, step: float = 1e-2, cache=None):
    """Random subcollections of length fraction q(d) and the bound C sqrt(psi).

    C is fitted on the first half of the (sorted) sequence as the largest
    discrepancy / sqrt(psi); the verdict says whether the second half
    respects it.  The nominal psi = 1/(q log d) must decrease along the
    sequence, otherwise the verdict is NotApplicable.
    """
    sched = SCHEDULES[q_schedule] if isinstance(q_schedule, str) else q_schedule
    d_list = sorted(int(d) for d in d_list)
    qs = [min(1.0, float(sched(d))) for d in d_list]
    psi_nom = [1.0 / (q * math.log(d)) for q, d in zip(qs, d_list)]
    mx = _mu_x(f, seed)
    reports = []
    for d, q in zip(d_list, qs):
        full = build_full(d, cache=cache)
        I = subcollection(full, SubcollectionSpec.random_fraction(q, seed=seed))
        reports.append(discrepancy(I, f, step, full=full, seed=seed, mu_X=mx))
    diffs = np.diff(psi_nom)
    decreasing = len(psi_nom) >= 4 and np.all(diffs <= 1e-12) and psi_nom[-1] < psi_nom[0] * (1 - 1e-6)
    if not decreasing:
        return Theorem12Result(tuple(reports), None, "NotApplicable", tuple(psi_nom), seed)
    half = len(reports) // 2
    C = max(r.discrepancy / math.sqrt(r.psi) for r in reports[:half])
    ok = all(r.discrepancy <= C * math.sqrt(r.psi) for r in reports[half:])
    return Theorem12Result(tuple(reports), C, "PASS" if ok else "FAIL", tuple(psi_nom), seed)


# ------------------------------------------------------- inequality chain


def _windowed_moments(phi: ClosedGeodesic, f: TestFunction, c: float, T: float, step: float):
    """(mean of g_T, mean of g_T^2, mean of g) for g = f - c along phi.

    g_T is the flow average over [s, s + T] of the midpoint samples of g,
    taken cyclically around the closed orbit.
    """
    n = max(10, int(math.ceil(phi.period / step)))
    h = phi.period / n
    times = (np.arange(n) + 0.5) * h
    v = f.evaluate(phi.frames_at(times)) - c
    m = max(1, int(round(T / h)))
    laps, rem = divmod(m, n)
    cs = np.concatenate([[0.0], np.cumsum(np.concatenate([v, v]))])
    partial = cs[np.arange(n) + rem] - cs[np.arange(n)]
    gT = (laps * math.fsum(v.tolist()) + partial) / m
    return math.fsum(gT.tolist()) / n, math.fsum((gT * gT).tolist()) / n, math.fsum(v.tolist()) / n


@dataclass(frozen=True)
class ChainCheck:
    d: int
    f_id: str
    T_window: float
    ratio: float  # l(I) / l(G)
    mean_T: float  # mu_I((f - c)_T)
    identity_residual: float  # |mu_I(f - c) - mu_I((f - c)_T)|
    lhs_i: float
    rhs_i: float
    lhs_ii: float
    rhs_ii: float
    holds_i: bool
    holds_ii: bool

    @property
    def holds(self) -> bool:
        return self.holds_i and self.holds_ii

    def to_dict(self) -> dict:
        out = asdict(self)
        out["holds"] = self.holds
        return out


def _le(lhs: float, rhs: float, tol: float = 1e-9) -> bool:
    return lhs <= rhs + tol * max(abs(lhs), abs(rhs))


def chain_check(
    I: GeodesicCollection,
    f: TestFunction,
    T_window: float | None = None,
    step: float = 1e-2,
    full: GeodesicCollection | None = None,
    eta: float = 0.1,
    c: float | None = None,
) -> ChainCheck:
    """Check the Cauchy-Schwarz and positivity steps for time-averaged f - c.

    (i)  (l mu_I(g_T))^2 <= l^2 mu_I(g_T^2)
    (ii) l mu_I(g_T^2) <= mu_G(g_T^2)
    with l = l(I)/l(G), g = f - mu_X(f) and T = eta log d by default.
    """
    if full is None:
        if I.kind != "full":
            raise ValueError("a subcollection needs its full collection")
        full = I
    d = full.d.d
    T = eta * math.log(d) if T_window is None else float(T_window)
    if T <= 0:
        raise ValueError("time window must be positive")
    c = _mu_x(f, None) if c is None else c
    per = {}
    for i, phi in zip(full.indices, full.members):
        per[i] = _windowed_moments(phi, f, c, T, step)
    members = I.indices
    ratio = I.total_length / full.total_length
    m1 = math.fsum(per[i][0] for i in members) / len(members)
    m2 = math.fsum(per[i][1] for i in members) / len(members)
    m0 = math.fsum(per[i][2] for i in members) / len(members)
    g2 = math.fsum(per[i][1] for i in full.indices) / len(full.indices)
    lhs_i, rhs_i = (ratio * m1) ** 2, ratio * ratio * m2
    lhs_ii, rhs_ii = ratio * m2, g2
    return ChainCheck(
        d=d,
        f_id=f.id,
        T_window=T,
        ratio=ratio,
        mean_T=m1,
        identity_residual=abs(m0 - m1),
        lhs_i=lhs_i,
        rhs_i=rhs_i,
        lhs_ii=lhs_ii,
        rhs_ii=rhs_ii,
        holds_i=_le(lhs_i, rhs_i),
        holds_ii=_le(lhs_ii, rhs_ii),
    )


# --------------------------------------------------------------- mixing lab


@dataclass(frozen=True)
class MixingResult:
    estimates: tuple
    fit: DecayFit | None

    def to_dict(self) -> dict:
        return {
            "estimates": [e.to_dict() for e in self.estimates],
            "fit": None if self.fit is None else self.fit.to_dict(),
        }


def _mean_se(x: np.ndarray):
    n = x.size
    mean = math.fsum(x.tolist()) / n
    sd = float(np.std(x, ddof=1)) if n > 1 else 0.0
    return mean, sd / math.sqrt(n)


def mixing_correlation(f: TestFunction, t_list, n_samples: int = 10**5, seed: int = 0) -> MixingResult:
    """Monte-Carlo correlations <g, g o a_t> for the mean-zero g = f - mu_X(f).

    All times share one Haar sample.  The envelope fit regresses
    log |corr| on t over the times t > 0 where the estimate exceeds two
    standard errors.
    """
    c = _mu_x(f, seed)
    rng = derived_rng(seed, "mixing", f.id)
    x = haar_frames(rng, n_samples)
    g0 = f.evaluate(x) - c
    out = []
    for t in t_list:
        t = float(t)
        gt = f.evaluate(fold_frames(flow_frames(x, t))) - c if t else g0
        val, se = _mean_se(g0 * gt)
        out.append(MixingEstimate(f.id, "corr", t, val, se, n_samples))
    usable = [e for e in out if e.t > 0 and abs(e.value) > 2 * e.std_error]
    try:
        fit = fit_decay([e.t for e in usable], [abs(e.value) for e in usable], note="log|corr| vs t")
    except DegenerateFit:
        fit = None
    return MixingResult(tuple(out), fit)


def ergodic_variance(
    f: TestFunction, T_list, n_samples: int = 10**5, seed: int = 0, dt: float = 0.05
) -> MixingResult:
    """Monte-Carlo mu_X(|g_T|^2) for the flow averages g_T of g = f - mu_X(f).

    Each Haar sample is flowed in steps of ``dt`` (refolded every step) and
    g is integrated by the midpoint rule; all windows T share the same
    trajectories.  The fit regresses log variance on log T.
    """
    T_list = sorted(float(T) for T in T_list)
    stops = {int(round(T / dt)): T for T in T_list}
    if any(abs(k * dt - T) > 1e-9 * max(T, 1) for k, T in stops.items()) or min(stops) < 1:
        raise ValueError(f"windows must be positive multiples of dt={dt}")
    c = _mu_x(f, seed)
    rng = derived_rng(seed, "variance", f.id)
    g = fold_frames(flow_frames(haar_frames(rng, n_samples), dt / 2))
    acc = np.zeros(n_samples)
    comp = np.zeros(n_samples)  # Kahan compensation
    found = {}
    for k in range(1, max(stops) + 1):
        y = (f.evaluate(g) - c) * dt - comp
        s = acc + y
        comp = (s - acc) - y
        acc = s
        if k in stops:
            T = stops[k]
            val, se = _mean_se((acc / T) ** 2)
            found[T] = MixingEstimate(f.id, "variance", T, val, se, n_samples)
        if k < max(stops):
            g = fold_frames(flow_frames(g, dt))
            if k % 1000 == 0:
                g = g / np.sqrt(np.linalg.det(g))[:, None, None]  # curb determinant drift
    est = tuple(found[T] for T in T_list)
    try:
        fit = fit_decay([math.log(e.t) for e in est], [e.value for e in est], note="log variance vs log T")
    except DegenerateFit:
        fit = None
    return MixingResult(est, fit)


# -------------------------------------------------- adversarial experiment


def tube_volume(orbit: ClosedGeodesic, r0: float, grid: int = 801) -> float:
    """Haar measure of {transverse distance < r0} around ``orbit`` by a grid sum.

    Treats the tube coordinates as injective, which holds for r0 well
    below the orbit's injectivity radius.
    """
    half = 1.5 * r0
    s = (np.arange(grid) + 0.5) / grid * 2 * half - half
    s1, s2 = np.meshgrid(s, s)
    inside = transverse_distance(s1.ravel(), s2.ravel()) < r0
    area = inside.sum() * (2 * half / grid) ** 2
    return float(orbit.period * area / HAAR_VOLUME)


def _mc_tube_mass(tube: OrbitTube, r0: float, n: int, rng) -> tuple:
    hits = 0
    chunk = 1 << 17
    for s in range(0, n, chunk):
        frames = haar_frames(rng, min(chunk, n - s))
        hits += int(np.isfinite(orbit_distances(frames, tube, r0)).sum())
    p = hits / n
    return p, math.sqrt(p * (1 - p) / n)


@dataclass(frozen=True)
class AdversarialPoint:
    n: int
    d: int
    status: str  # "ok" or "empty"
    h: int
    period: float
    n_members: int = 0
    members: tuple = ()
    closest: tuple = ()
    total_length: float = 0.0
    length_exponent: float | None = None
    tube_mass: float | None = None
    dwell: tuple = ()
    dwell_lower_bound: tuple = ()
    shadowing_consistent: bool | None = None
    full_mass: float = 0.0

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class AdversarialReport:
    P: str
    r: float
    probe_r0: float
    a: float
    target_exponent: float
    points: tuple
    mu_X_mc: float
    mu_X_se: float
    mu_X_quadrature: float
    inf_tube_mass: float | None
    skipped: tuple
    step: float
    n_samples: int
    seed: int

    @property
    def mass_ratio(self) -> float | None:
        if self.inf_tube_mass is None or self.mu_X_mc == 0:
            return None
        return self.inf_tube_mass / self.mu_X_mc

    def to_dict(self) -> dict:
        out = asdict(self)
        out["mass_ratio"] = self.mass_ratio
        return out


def adversarial_experiment(
    n_list,
    P: ClosedGeodesic,
    r: float = 0.05,
    a: float = 0.25,
    probe_r0: float = 0.1,
    step: float = 1e-2,
    n_samples: int = 10**6,
    seed: int = 0,
    cache=None,
    label: str = "P5",
) -> AdversarialReport:
    """Tube subcollections around P along d = n^2 + 4 and their mass near P.

    For each n the members of G_d passing within r of P form I_d.  The
    mass of the probe tube U_{r0} is the mean fraction of arc length of the
    members inside it.  A member whose closest approach is rho must spend
    at least arccosh((r0/rho)^2) time inside U_{r0}; that lower bound is
    checked member by member.  Discriminants with empty I_d are skipped.
    """
    if probe_r0 <= r:
        raise ValueError("the probe tube must be wider than the selection tube")
    tube = OrbitTube(P, radius=r)
    points, skipped = [], []
    for n in n_list:
        n = int(n)
        d = n * n + 4
        full = build_full(d, cache=cache)
        closest = [tube_hits(phi, tube, r) for phi in full.members]
        dwell_all = [dwell_fraction(phi, tube, probe_r0, step) for phi in full.members]
        full_mass = math.fsum(dwell_all) / len(dwell_all)
        idx = [i for i, c in enumerate(closest) if math.isfinite(c)]
        period = full.reg.period
        if not idx:
            skipped.append(n)
            points.append(AdversarialPoint(n, d, "empty", len(full), period, full_mass=full_mass))
            continue
        dwell = tuple(dwell_all[i] for i in idx)
        rho = tuple(closest[i] for i in idx)
        bound = tuple(min(1.0, math.acosh((probe_r0 / max(p, 1e-12)) ** 2) / period) for p in rho)
        # allow one quadrature sample of slack at each end of the pass
        ok = all(w >= b - 2 * step / period for w, b in zip(dwell, bound))
        length = len(idx) * period
        points.append(
            AdversarialPoint(
                n=n,
                d=d,
                status="ok",
                h=len(full),
                period=period,
                n_members=len(idx),
                members=tuple(idx),
                closest=rho,
                total_length=length,
                length_exponent=math.log(length) / math.log(d),
                tube_mass=math.fsum(dwell) / len(dwell),
                dwell=dwell,
                dwell_lower_bound=bound,
                shadowing_consistent=ok,
                full_mass=full_mass,
            )
        )
    probe = OrbitTube(P, radius=probe_r0)
    mc, se = _mc_tube_mass(probe, probe_r0, n_samples, derived_rng(seed, "adversarial", label, probe_r0))
    masses = [p.tube_mass for p in points if p.status == "ok"]
    return AdversarialReport(
        P=label,
        r=r,
        probe_r0=probe_r0,
        a=a,
        target_exponent=0.5 - a,
        points=tuple(points),
        mu_X_mc=mc,
        mu_X_se=se,
        mu_X_quadrature=tube_volume(P, probe_r0),
        inf_tube_mass=min(masses) if masses else None,
        skipped=tuple(skipped),
        step=step,
        n_samples=n_samples,
        seed=seed,
    )


@dataclass(frozen=True)
class ShadowingResult:
    r: tuple
    intervals: tuple  # mean dwell time in U_sqrt(r), per r
    slopes: tuple  # increments per unit of -log r between consecutive radii
    fit: DecayFit | None

    @property
    def slope_spread(self) -> float:
        s = [abs(x) for x in self.slopes]
        return max(s) / min(s) if s and min(s) > 0 else math.inf

    def to_dict(self) -> dict:
        out = asdict(self)
        out["slope_spread"] = self.slope_spread
        return out


def shadowing_experiment(P: ClosedGeodesic, r_list=(1e-2, 1e-3, 1e-4), n_starts: int = 8, dt: float = 1e-2):
    """Time an r-close start stays sqrt(r)-close to P, averaged over starts along P."""
    r_list = tuple(sorted((float(r) for r in r_list), reverse=True))
    t0s = np.arange(n_starts) * P.period / n_starts
    lengths = []
    for r in r_list:
        tube = OrbitTube(P, radius=math.sqrt(r))
        lengths.append(math.fsum(shadowing_interval(tube, r, t0=float(t0), dt=dt) for t0 in t0s) / n_starts)
    x = [-math.log(r) for r in r_list]
    slopes = tuple((lengths[i + 1] - lengths[i]) / (x[i + 1] - x[i]) for i in range(len(r_list) - 1))
    res = stats.linregress(x, lengths) if len(x) >= 2 else None
    fit = None
    if res is not None and len(x) >= 3:
        fit = DecayFit(tuple(x), tuple(lengths), float(res.slope), float(res.intercept), float(res.rvalue**2),
                       note="dwell time vs -log r (linear)")
    return ShadowingResult(r_list, tuple(lengths), slopes, fit)


# ------------------------------------------------------------------ output


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        obj = float(obj)
    if isinstance(obj, float) and not math.isfinite(obj):
        return None if math.isnan(obj) else ("inf" if obj > 0 else "-inf")
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def to_json(doc) -> str:
    """Deterministic JSON text for a report or a dict of reports."""
    if hasattr(doc, "to_dict"):
        doc = doc.to_dict()
    return json.dumps(_plain(doc), indent=2, allow_nan=False) + "\n"


def reports_to_csv(reports) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(COLUMNS)
    for r in reports:
        w.writerow(["" if v is None else (repr(v) if isinstance(v, float) else v) for v in r.row()])
    return buf.getvalue()
