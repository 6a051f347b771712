"""On-disk cache of per-discriminant arithmetic.

One JSON file per discriminant, named by d in decimal.  A schema version
mismatch counts as a miss.  Writes go through a temporary file and an
atomic rename, so concurrent writers of the same d are last-writer-wins.
"""

from __future__ import annotations

import json
import os
import tempfile
from pathlib import Path

import numpy as np

from .forms import ClassGroup, QuadForm, ReductionCycle, class_group, make_discriminant
from .units import PellSolution, RegulatorData, regulator

SCHEMA_VERSION = 1
ENV_VAR = "QUADGEO_CACHE_DIR"


def default_cache_dir() -> Path:
    env = os.environ.get(ENV_VAR)
    if env:
        return Path(env)
    base = os.environ.get("XDG_CACHE_HOME") or Path.home() / ".cache"
    return Path(base) / "quadgeo"


def _encode(cg: ClassGroup, reg: RegulatorData) -> dict:
    table = cg.composition_table
    return {
        "schema": SCHEMA_VERSION,
        "d": cg.d.d,
        "cycles": [[list(f) for f in c.forms] for c in cg.cycles],
        "composition_table": None if table is None else table.tolist(),
        "pell": {"t": str(reg.pell.t), "u": str(reg.pell.u)},
        "regulator": reg.regulator,
        "period": reg.period,
        "has_norm_minus_one_unit": reg.has_norm_minus_one_unit,
    }


def _decode(doc: dict):
    disc = make_discriminant(doc["d"])
    cycles = [ReductionCycle(tuple(QuadForm(*f) for f in c)) for c in doc["cycles"]]
    index = {f: k for k, c in enumerate(cycles) for f in c.forms}
    table = doc["composition_table"]
    cg = ClassGroup(
        d=disc,
        cycles=cycles,
        order=len(cycles),
        composition_table=None if table is None else np.asarray(table, dtype=np.int64),
        index=index,
    )
    reg = RegulatorData(
        d=disc.d,
        pell=PellSolution(int(doc["pell"]["t"]), int(doc["pell"]["u"])),
        regulator=float(doc["regulator"]),
        period=float(doc["period"]),
        has_norm_minus_one_unit=bool(doc["has_norm_minus_one_unit"]),
    )
    return cg, reg


class Cache:
    """Class groups and regulators keyed by discriminant.

    ``table`` controls whether composition tables are computed on a miss;
    a cached entry without a table is upgraded when one is requested.
    """

    def __init__(self, directory=None, table: bool = False):
        self.directory = Path(directory) if directory is not None else default_cache_dir()
        self.table = table
        self.hits = 0
        self.misses = 0

    def path(self, d: int) -> Path:
        return self.directory / f"{int(d)}.json"

    def load(self, d: int):
        p = self.path(d)
        try:
            doc = json.loads(p.read_text())
        except (OSError, ValueError):
            return None
        if doc.get("schema") != SCHEMA_VERSION or doc.get("d") != int(d):
            return None
        return _decode(doc)

    def store(self, cg: ClassGroup, reg: RegulatorData) -> None:
        self.directory.mkdir(parents=True, exist_ok=True)
        text = json.dumps(_encode(cg, reg), separators=(",", ":"))
        fd, tmp = tempfile.mkstemp(dir=self.directory, prefix=f".{cg.d.d}.", suffix=".tmp")
        try:
            with os.fdopen(fd, "w") as fh:
                fh.write(text)
            os.replace(tmp, self.path(cg.d.d))
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise

    def class_data(self, d, table: bool | None = None):
        want_table = self.table if table is None else table
        disc = make_discriminant(d)
        hit = self.load(disc.d)
        if hit is not None and (hit[0].composition_table is not None or not want_table):
            self.hits += 1
            return hit
        self.misses += 1
        cg = class_group(disc, table=want_table)
        reg = hit[1] if hit is not None else regulator(disc)
        self.store(cg, reg)
        return cg, reg
