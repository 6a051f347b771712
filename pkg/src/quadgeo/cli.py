"""Command-line front end: ``quadgeo <command> ...``.

Reports go to stdout or ``--out`` as JSON or CSV.  Exit status is 0 on
success, 2 for invalid input and 3 for numerical failures.
"""

from __future__ import annotations

import csv
import io
import math
import sys
from dataclasses import asdict, dataclass
from functools import wraps
from pathlib import Path

import click
import numpy as np

from . import harness
from .cache import ENV_VAR, Cache
from .errors import InvalidInput, QuadGeoError
from .observables import TestFunction, constant, cusp_indicator, smoothness_estimate, tube_bump
from .subcollections import SubcollectionSpec, build_full, subcollection
from .surface import frame_coords


@dataclass(frozen=True)
class RunConfig:
    command: str
    seed: int
    step: float
    n_samples: int
    format: str
    cache_dir: str | None = None
    output: str | None = None

    def __post_init__(self):
        if not self.step > 0:
            raise InvalidInput(f"--step must be positive, got {self.step}")
        if self.n_samples < 1000:
            raise InvalidInput(f"--samples must be at least 1000, got {self.n_samples}")

    def public(self) -> dict:
        """The parameters that determine the report (paths excluded)."""
        out = asdict(self)
        out.pop("cache_dir")
        out.pop("output")
        return out


# ----------------------------------------------------------------- parsing


def parse_orbit(text: str, cache=None):
    """``P<d>`` is the principal orbit of discriminant d, ``P<d>.<k>`` class k."""
    if not text.startswith("P"):
        raise InvalidInput(f"orbit {text!r} must look like P5 or P40.1")
    body = text[1:]
    d, _, k = body.partition(".")
    try:
        d, k = int(d), int(k or 0)
    except ValueError:
        raise InvalidInput(f"orbit {text!r} must look like P5 or P40.1") from None
    full = build_full(d, cache=cache)
    if not 0 <= k < len(full):
        raise InvalidInput(f"class {k} out of range for h({d}) = {len(full)}")
    return full.members[k]


def parse_function(text: str, cache=None) -> TestFunction:
    """``const[:c]``, ``cusp:Y[:s]`` or ``bump:<orbit>:r``."""
    parts = text.split(":")
    try:
        if parts[0] == "const" and len(parts) <= 2:
            return constant(float(parts[1]) if len(parts) == 2 else 1.0)
        if parts[0] == "cusp" and len(parts) in (2, 3):
            return cusp_indicator(float(parts[1]), float(parts[2]) if len(parts) == 3 else 0.0)
        if parts[0] == "bump" and len(parts) == 3:
            return tube_bump(parse_orbit(parts[1], cache), float(parts[2]), label=parts[1])
    except ValueError as exc:
        if isinstance(exc, QuadGeoError):
            raise
        raise InvalidInput(f"bad test function {text!r}: {exc}") from None
    raise InvalidInput(f"unknown test function {text!r} (const, cusp:Y[:s], bump:P5:r)")


def parse_d_range(text: str) -> list:
    """``lo:hi:logN`` gives N log-spaced fundamental discriminants."""
    try:
        lo, hi, n = text.split(":")
        if not n.startswith("log"):
            raise ValueError
        return harness.log_spaced_fundamentals(float(lo), float(hi), int(n[3:]))
    except ValueError:
        raise InvalidInput(f"--d-range {text!r} must look like 1e4:1e6:log32") from None


def parse_n_range(text: str) -> list:
    """``lo:hi:odd`` (inclusive) or a comma list."""
    try:
        if ":" in text:
            lo, hi, kind = text.split(":")
            lo, hi = int(lo), int(hi)
            if kind != "odd":
                raise ValueError
            return [n for n in range(lo, hi + 1) if n % 2]
        return [int(x) for x in text.split(",")]
    except ValueError:
        raise InvalidInput(f"--n {text!r} must look like 31:199:odd") from None


def parse_floats(text: str) -> list:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise InvalidInput(f"expected a comma-separated list of numbers, got {text!r}") from None


def parse_tube(text: str, cache=None):
    label, _, r = text.rpartition(":")
    try:
        r = float(r)
    except ValueError:
        raise InvalidInput(f"--tube {text!r} must look like P5:0.05") from None
    return label, parse_orbit(label, cache), r


# ------------------------------------------------------------------ output


def _emit(config: RunConfig, json_doc, csv_text: str | None = None) -> None:
    if config.format == "csv" and csv_text is not None:
        text = csv_text
    else:
        doc = {"config": config.public(), **json_doc}
        text = harness.to_json(doc)
    if config.output in (None, "-"):
        click.echo(text, nl=False)
    else:
        Path(config.output).write_text(text)


def _table_csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow(["" if v is None else (repr(v) if isinstance(v, float) else v) for v in row])
    return buf.getvalue()


def common_options(default_format: str = "json", default_samples: int = 10**5):
    def deco(fn):
        @click.option("--seed", type=int, default=0, show_default=True, help="Master seed.")
        @click.option("--step", type=float, default=1e-2, show_default=True, help="Quadrature step along orbits.")
        @click.option("--samples", type=int, default=default_samples, show_default=True, help="Monte-Carlo samples.")
        @click.option(
            "--cache-dir",
            type=click.Path(file_okay=False),
            envvar=ENV_VAR,
            default=None,
            help=f"Arithmetic cache directory [env {ENV_VAR}].",
        )
        @click.option("--out", type=click.Path(dir_okay=False), default=None, help="Output file (default stdout).")
        @click.option(
            "--format", "fmt", type=click.Choice(["json", "csv"]), default=default_format, show_default=True
        )
        @wraps(fn)
        def wrapper(seed, step, samples, cache_dir, out, fmt, **kwargs):
            config = RunConfig(
                command=fn.__name__.removeprefix("cmd_"),
                seed=seed,
                step=step,
                n_samples=samples,
                format=fmt,
                cache_dir=cache_dir,
                output=out,
            )
            cache = Cache(cache_dir) if cache_dir else Cache()
            return fn(config, cache, **kwargs)

        return wrapper

    return deco


class _Group(click.Group):
    def invoke(self, ctx):
        try:
            return super().invoke(ctx)
        except QuadGeoError as exc:
            click.echo(f"error: {type(exc).__name__}: {exc}", err=True)
            ctx.exit(exc.exit_code)


@click.group(cls=_Group)
@click.version_option(package_name="artifact")
def main():
    """Closed geodesics of real quadratic discriminants on the modular surface."""


# ---------------------------------------------------------------- commands


@main.command("classgroup")
@click.argument("d", nargs=-1, type=int, required=True)
@common_options()
def cmd_classgroup(config, cache, d):
    """Class number, regulator, period and reduction cycles of each D."""
    out, rows = [], []
    for disc in d:
        cg, reg = cache.class_data(disc, table=True)
        entry = {
            "d": disc,
            "h": cg.order,
            "regulator": reg.regulator,
            "period": reg.period,
            "pell": {"t": str(reg.pell.t), "u": str(reg.pell.u)},
            "has_norm_minus_one_unit": reg.has_norm_minus_one_unit,
            "cycles": [[list(f) for f in c.forms] for c in cg.cycles],
            "composition_table": cg.composition_table.tolist(),
        }
        out.append(entry)
        rows.append(
            [disc, cg.order, reg.regulator, reg.period, str(reg.pell.t), str(reg.pell.u),
             " ".join(str(c.length) for c in cg.cycles)]
        )
    header = ["d", "h", "regulator", "period", "t", "u", "cycle_lengths"]
    _emit(config, {"classgroups": out}, _table_csv(header, rows))


@main.command("geodesics")
@click.argument("d", type=int)
@click.option("--classes", default=None, help="Comma-separated class indices (default all).")
@common_options(default_format="csv")
def cmd_geodesics(config, cache, d, classes):
    """Sample the closed geodesics of G_D as plot-ready (x, y, theta) polylines."""
    full = build_full(d, cache=cache)
    idx = range(len(full)) if classes is None else [int(k) for k in classes.split(",")]
    rows, docs = [], []
    for k in idx:
        phi = full.members[k]
        n = int(math.ceil(phi.period / config.step))
        times = np.arange(n + 1) * (phi.period / n)
        x, y, theta = frame_coords(phi.frames_at(times))
        docs.append({"class": k, "form": list(phi.form), "t": times, "x": x, "y": y, "theta": theta})
        rows.extend([d, k, t, a, b, c] for t, a, b, c in zip(times.tolist(), x.tolist(), y.tolist(), theta.tolist()))
    _emit(config, {"d": d, "period": full.reg.period, "geodesics": docs},
          _table_csv(["d", "class", "t", "x", "y", "theta"], rows))


@main.command("equidist")
@click.option("--d", "d_list", multiple=True, type=int, help="Discriminant (repeatable).")
@click.option("--d-range", default=None, help="lo:hi:logN, N log-spaced fundamental discriminants.")
@click.option("--family", type=click.Choice(["n2plus4"]), default=None, help="d = n^2 + 4 along --n.")
@click.option("--n", "n_range", default=None, help="lo:hi:odd or a comma list, for --family.")
@click.option("--f", "f_spec", default="cusp:2", show_default=True, help="const, cusp:Y[:s], bump:P5:r.")
@click.option("--full", "rule", flag_value="full", default=True, help="Use the full collections G_d.")
@click.option("--fraction", type=float, default=None, help="Random subcollection of length fraction q.")
@click.option("--schedule", type=click.Choice(sorted(harness.SCHEDULES)), default=None,
              help="Subcollection sweep with fraction q = q(d).")
@click.option("--classes", default=None, help="Explicit subcollection: comma-separated class indices.")
@click.option("--tube", default=None, help="Tube subcollection ORBIT:r, e.g. P5:0.05.")
@click.option("--probe", type=float, default=0.1, show_default=True, help="Probe tube radius (adversarial).")
@click.option("--a", "a_exp", type=float, default=0.25, show_default=True, help="Target length exponent 1/2 - a.")
@click.option("--fit", is_flag=True, help="Fit the decay of the discrepancy in d.")
@click.option("--chain", type=float, default=None, help="Run the inequality chain with window T (0: eta log d).")
@common_options(default_format="csv", default_samples=10**6)
def cmd_equidist(config, cache, d_list, d_range, family, n_range, f_spec, rule, fraction, schedule, classes,
                 tube, probe, a_exp, fit, chain):
    """Discrepancies |mu_I(f) - mu_X(f)| for full or partial collections."""
    if family is not None:
        if tube is None or n_range is None:
            raise InvalidInput("--family needs --n and --tube")
        label, P, r = parse_tube(tube, cache)
        rep = harness.adversarial_experiment(
            parse_n_range(n_range), P, r=r, a=a_exp, probe_r0=probe, step=config.step,
            n_samples=config.n_samples, seed=config.seed, cache=cache, label=label,
        )
        rows = [
            [p.n, p.d, p.status, p.h, p.n_members, p.total_length, p.length_exponent, p.tube_mass, p.full_mass,
             rep.mu_X_mc, p.shadowing_consistent]
            for p in rep.points
        ]
        header = ["n", "d", "status", "h", "n_members", "total_length", "length_exponent", "tube_mass",
                  "full_mass", "mu_X", "shadowing_consistent"]
        _emit(config, {"adversarial": rep.to_dict()}, _table_csv(header, rows))
        return

    ds = list(d_list)
    if d_range:
        ds.extend(parse_d_range(d_range))
    if not ds:
        raise InvalidInput("give --d, --d-range or --family")
    f = parse_function(f_spec, cache)

    if schedule is not None:
        res = harness.theorem12_experiment(ds, schedule, f, seed=config.seed, step=config.step, cache=cache)
        _emit(config, {"theorem12": res.to_dict()}, harness.reports_to_csv(res.reports))
        return
    if fit:
        try:
            res = harness.duke_sweep(ds, f, step=config.step, cache=cache)
        except ValueError as exc:
            if isinstance(exc, QuadGeoError):
                raise
            raise InvalidInput(str(exc)) from None
        _emit(config, {"sweep": res.to_dict()}, harness.reports_to_csv(res.reports))
        return

    reports, chains = [], []
    for d in ds:
        full = build_full(d, cache=cache)
        if fraction is not None:
            spec = SubcollectionSpec.random_fraction(fraction, seed=config.seed)
        elif classes is not None:
            spec = SubcollectionSpec.explicit(int(k) for k in classes.split(","))
        elif tube is not None:
            label, P, r = parse_tube(tube, cache)
            spec = SubcollectionSpec.tube(P, r, label=label)
        else:
            spec = None
        I = full if spec is None else subcollection(full, spec)
        reports.append(harness.discrepancy(I, f, config.step, full=full, seed=config.seed))
        if chain is not None:
            chains.append(harness.chain_check(I, f, chain or None, config.step, full=full))
    doc = {"reports": [r.to_dict() for r in reports]}
    if chain is not None:
        doc["chain"] = [c.to_dict() for c in chains]
    _emit(config, doc, harness.reports_to_csv(reports))


@main.command("mixing")
@click.option("--f", "f_spec", default="cusp:2", show_default=True)
@click.option("--corr", "mode", flag_value="corr", default=True, help="Correlations <g, g o a_t> (default).")
@click.option("--variance", "mode", flag_value="variance", help="Variance of flow averages over windows T.")
@click.option("--t", "t_list", default="0,1,2,4,8", show_default=True, help="Flow times for --corr.")
@click.option("--T", "T_list", default="1,2,4,8,16,32,64,128", show_default=True, help="Windows for --variance.")
@click.option("--dt", type=float, default=0.05, show_default=True, help="Flow step for --variance.")
@common_options(default_format="csv")
def cmd_mixing(config, cache, f_spec, mode, t_list, T_list, dt):
    """Monte-Carlo correlation decay and ergodic-average variance."""
    f = parse_function(f_spec, cache)
    if mode == "corr":
        res = harness.mixing_correlation(f, parse_floats(t_list), config.n_samples, config.seed)
    else:
        try:
            res = harness.ergodic_variance(f, parse_floats(T_list), config.n_samples, config.seed, dt=dt)
        except ValueError as exc:
            raise InvalidInput(str(exc)) from None
    header = ["f_id", "kind", "t", "value", "std_error", "n_samples"]
    rows = [[e.f_id, e.kind, e.t, e.value, e.std_error, e.n_samples] for e in res.estimates]
    if res.fit is not None:
        rows.append([f.id, "fit_slope", None, res.fit.slope, None, None])
    _emit(config, {"mixing": res.to_dict()}, _table_csv(header, rows))


@main.group("observables")
def observables():
    """The catalog of test functions."""


CATALOG = ("const", "cusp:1", "cusp:1.5", "cusp:2", "cusp:4", "cusp:2:0.5", "bump:P5:0.3", "bump:P5:0.05")


@observables.command("list")
@common_options()
def cmd_list(config, cache):
    """Catalogued test functions with their exact Haar integrals."""
    rows = []
    for spec in CATALOG:
        f = parse_function(spec, cache)
        rows.append({"id": f.id, "exact_integral": f.exact_integral, "support_radius": f.support_radius})
    _emit(config, {"observables": rows},
          _table_csv(["id", "exact_integral", "support_radius"], [list(r.values()) for r in rows]))


@observables.command("smoothness")
@click.option("--f", "f_spec", required=True)
@common_options()
def cmd_smoothness(config, cache, f_spec):
    """Finite-difference smoothness proxy of a test function."""
    f = parse_function(f_spec, cache)
    val = smoothness_estimate(f, seed=config.seed)
    _emit(config, {"f_id": f.id, "smoothness": val}, _table_csv(["f_id", "smoothness"], [[f.id, val]]))


@main.command("shadowing")
@click.option("--P", "orbit", default="P5", show_default=True, help="Periodic orbit.")
@click.option("--r", "r_list", default="1e-2,1e-3,1e-4", show_default=True)
@click.option("--starts", type=int, default=8, show_default=True, help="Start points along the orbit.")
@common_options()
def cmd_shadowing(config, cache, orbit, r_list, starts):
    """Time an r-close start stays sqrt(r)-close to the orbit, against -log r."""
    P = parse_orbit(orbit, cache)
    res = harness.shadowing_experiment(P, parse_floats(r_list), n_starts=starts, dt=config.step)
    rows = [[r, -math.log(r), L] for r, L in zip(res.r, res.intervals)]
    _emit(config, {"orbit": orbit, "shadowing": res.to_dict()}, _table_csv(["r", "minus_log_r", "dwell_time"], rows))


if __name__ == "__main__":
    sys.exit(main())
