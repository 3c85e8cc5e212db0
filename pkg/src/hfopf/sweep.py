"""Health and loading sweeps with deterministic CSV output."""
from __future__ import annotations

import csv
import io
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from enum import Enum
from typing import Mapping, Sequence

import numpy as np

from .health import HealthProfile, MappingMode
from .network import BessUnit, Network
from .recovery import DispatchResult, DispatchStatus, run_opf
from .solver import SolverSettings

SCHEMA_VERSION = "v1"


class DerateMode(str, Enum):
    P_ONLY = "P_ONLY"
    P_AND_V = "P_AND_V"


def default_hci_grid(start: float = 1.0, stop: float = 0.5, step: float = 0.05) -> tuple[float, ...]:
    count = int(round((start - stop) / step)) + 1
    return tuple(float(round(start - i * step, 10)) for i in range(count))


@dataclass(frozen=True)
class SweepSpec:
    target: str
    hci_values: tuple[float, ...] = field(default_factory=default_hci_grid)
    modes: tuple[DerateMode, ...] = (DerateMode.P_ONLY, DerateMode.P_AND_V)
    load_scales: tuple[float, ...] = (1.0,)
    mapping_mode: MappingMode = MappingMode.LINEAR

    def __post_init__(self):
        hv = tuple(float(h) for h in self.hci_values)
        if not hv:
            raise ValueError("hci_values is empty")
        if any(not 0 <= h <= 1 for h in hv):
            raise ValueError("hci values must lie in [0, 1]")
        if any(b >= a for a, b in zip(hv, hv[1:])):
            raise ValueError("hci values must be strictly decreasing")
        modes = tuple(DerateMode(m) for m in self.modes)
        if not modes or len(set(modes)) != len(modes):
            raise ValueError("modes must be a non-empty set of P_ONLY/P_AND_V")
        sf = tuple(float(s) for s in self.load_scales)
        if not sf or any(s <= 0 for s in sf):
            raise ValueError("load scales must be positive")
        object.__setattr__(self, "hci_values", hv)
        object.__setattr__(self, "modes", modes)
        object.__setattr__(self, "load_scales", sf)
        object.__setattr__(self, "mapping_mode", MappingMode(self.mapping_mode))


@dataclass(frozen=True)
class SweepRow:
    hci: float
    mode: str
    sf: float
    status: str
    cost_total: float | None
    relative_cost_change: float | None
    exactness_ratio: float | None
    p_g1: float | None          # MW
    p_g2: float | None          # MW
    p_bess: float | None        # MW, total over storage units, + = discharge
    solver_iterations: int


COLUMNS = tuple(f.name for f in fields(SweepRow))


@dataclass(frozen=True)
class _Point:
    hci: float | None            # None = healthy baseline
    mode: DerateMode
    sf: float


def _solved(result: DispatchResult) -> bool:
    return result.status in (DispatchStatus.EXACT, DispatchStatus.INEXACT)


def _row(network, point, result, baseline) -> SweepRow:
    base = network.base_mva
    solved = _solved(result)
    rel = None
    if solved and baseline is not None and _solved(baseline):
        rel = (result.cost_total - baseline.cost_total) / baseline.cost_total
    p = {**result.p_gen, **result.bess_power}
    bess = [ref for ref, unit in network.sources() if isinstance(unit, BessUnit)]

    def mw(ref):
        return p[ref] * base if solved and ref in p else None
    return SweepRow(point.hci, point.mode.value, point.sf, result.status.value,
                    result.cost_total if solved else None, rel,
                    result.exactness_ratio if solved else None,
                    mw("G1"), mw("G2"),
                    sum(p[r] for r in bess) * base if solved and bess else None,
                    result.iterations)


def run_sweep(network: Network, spec: SweepSpec, *, base_profiles: Mapping[str, HealthProfile] | None = None,
              settings: SolverSettings | None = None, rank1_tol: float = 1e-5, workers: int = 1,
              tables=None) -> list[SweepRow]:
    """One row per (sf, mode, hci), in that nesting order.

    Each load scale gets one baseline solve with ``spec.target`` fully healthy;
    ``base_profiles`` fixes the health of the other equipment throughout.
    """
    network.source(spec.target)   # fail early on an unknown target
    base_profiles = dict(base_profiles or {})
    base_profiles.pop(spec.target, None)

    points = [_Point(h, m, sf) for sf in spec.load_scales for m in spec.modes for h in spec.hci_values]
    baselines = [_Point(None, DerateMode.P_ONLY, sf) for sf in spec.load_scales]

    def solve_point(pt: _Point) -> DispatchResult:
        profiles = dict(base_profiles)
        profiles[spec.target] = HealthProfile(spec.target, 1.0 if pt.hci is None else pt.hci,
                                              mapping_mode=spec.mapping_mode)
        return run_opf(network, profiles, derate_voltage=pt.mode is DerateMode.P_AND_V,
                       load_scale=pt.sf, tables=tables, settings=settings, rank1_tol=rank1_tol)

    todo = baselines + points
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(solve_point, todo))    # map keeps input order
    else:
        results = [solve_point(pt) for pt in todo]
    base_by_sf = dict(zip(spec.load_scales, results[:len(baselines)]))
    return [_row(network, pt, res, base_by_sf[pt.sf]) for pt, res in zip(points, results[len(baselines):])]


def battery_spec(network: Network, target: str | None = None, **kwargs) -> SweepSpec:
    """Sweep spec for a storage unit: HCI from the healthy 0.9 of the battery table down to 0."""
    if target is None:
        bess = [ref for ref, unit in network.sources() if isinstance(unit, BessUnit)]
        if not bess:
            raise ValueError("network has no storage unit to sweep")
        target = bess[0]
    if not isinstance(network.source(target), BessUnit):
        raise ValueError(f"{target} is not a storage unit")
    kwargs.setdefault("hci_values", default_hci_grid(0.9, 0.0, 0.05))
    kwargs.setdefault("modes", (DerateMode.P_ONLY,))
    return SweepSpec(target, **kwargs)


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def rows_to_csv(rows: Sequence[SweepRow]) -> str:
    """CSV text: a ``schema,v1`` line, the header, then one line per row."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["schema", SCHEMA_VERSION])
    w.writerow(COLUMNS)
    for row in rows:
        d = asdict(row)
        w.writerow([_fmt(d[c]) for c in COLUMNS])
    return buf.getvalue()


def rows_from_csv(text: str) -> list[SweepRow]:
    lines = text.splitlines()
    if not lines or lines[0].strip() != f"schema,{SCHEMA_VERSION}":
        raise ValueError(f"not a schema {SCHEMA_VERSION} sweep file")
    reader = csv.DictReader(lines[1:])
    if tuple(reader.fieldnames or ()) != COLUMNS:
        raise ValueError("unexpected sweep columns")
    out = []
    for rec in reader:
        def num(key, cast=float):
            return None if rec[key] == "" else cast(rec[key])
        out.append(SweepRow(num("hci"), rec["mode"], num("sf"), rec["status"], num("cost_total"),
                            num("relative_cost_change"), num("exactness_ratio"), num("p_g1"),
                            num("p_g2"), num("p_bess"), num("solver_iterations", int)))
    return out
