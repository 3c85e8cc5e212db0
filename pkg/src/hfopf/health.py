"""Health condition indices and the derated operating limits they imply."""
from __future__ import annotations

import json
import os
from dataclasses import dataclass, replace
from enum import Enum
from pathlib import Path
from typing import Mapping

import numpy as np

from .network import BessUnit, Network


class MappingMode(str, Enum):
    LINEAR = "linear"
    TABLE = "table"


@dataclass(frozen=True)
class FaultTableRow:
    fault_case: str
    severity_rul: float
    p_range: float
    v_range: float
    hci_lo: float
    hci_hi: float

    def __post_init__(self):
        if not (0 <= self.hci_lo <= self.hci_hi <= 1):
            raise ValueError(f"{self.fault_case}: need 0 <= hci_lo <= hci_hi <= 1")
        if not (0 <= self.p_range <= 1 and 0 <= self.v_range <= 1):
            raise ValueError(f"{self.fault_case}: p_range and v_range must lie in [0, 1]")
        if self.severity_rul < 0:
            raise ValueError(f"{self.fault_case}: severity must be >= 0")

    @property
    def hci_mid(self) -> float:
        return 0.5 * (self.hci_lo + self.hci_hi)


def _norm(name: str) -> str:
    return " ".join(name.lower().replace("-", " ").replace("_", " ").split())


class FaultTable:
    """Tabulated fault cases with monotone piecewise-linear HCI interpolants."""

    def __init__(self, rows, kind: str = "generator"):
        self.rows = tuple(rows)
        self.kind = kind
        if not self.rows:
            raise ValueError("fault table is empty")
        self._p_knots = self._knots("p_range")
        self._v_knots = self._knots("v_range")

    def _knots(self, attr):
        # walk from healthy to failed, keeping the impact nondecreasing as HCI falls
        by_hci = {}
        for row in self.rows:
            by_hci[row.hci_mid] = max(by_hci.get(row.hci_mid, 0.0), getattr(row, attr))
        xs = sorted(by_hci, reverse=True)
        ys, running = [], 0.0
        for x in xs:
            running = max(running, by_hci[x])
            ys.append(running)
        return np.array(xs[::-1]), np.array(ys[::-1])

    def __len__(self):
        return len(self.rows)

    def __iter__(self):
        return iter(self.rows)

    def row(self, fault_case: str) -> FaultTableRow:
        key = _norm(fault_case)
        for r in self.rows:
            if _norm(r.fault_case) == key:
                return r
        raise KeyError(f"unknown {self.kind} fault case {fault_case!r}")

    def interp_p(self, h: float) -> float:
        return float(np.interp(h, *self._p_knots))

    def interp_v(self, h: float) -> float:
        return float(np.interp(h, *self._v_knots))


_GENERATOR_ROWS = [
    FaultTableRow("Healthy", 0, 0, 0, 1, 1),
    FaultTableRow("Magnet fault", 0.5, 0.06, 0.075, 0.96, 0.99),
    FaultTableRow("Static eccentricity", 0.8, 0.08, 0.11, 0.94, 0.96),
    FaultTableRow("Dynamic eccentricity", 0.9, 0.08, 0.12, 0.93, 0.95),
    FaultTableRow("Mixed eccentricity", 0.91, 0.07, 0.135, 0.92, 0.92),
    FaultTableRow("Turn-turn short-circuit", 1, 0.1, 0.15, 0.86, 0.9),
    FaultTableRow("Phase-Ground", 3, 0.49, 0.469, 0.79, 0.79),
    FaultTableRow("Open-Phase", 4, 0.59, 0.527, 0.76, 0.76),
    FaultTableRow("Phase-Phase", 5, 0.69, 0.587, 0.65, 0.65),
    FaultTableRow("Three-phase open", 7, 0.75, 0.827, 0.51, 0.51),
    FaultTableRow("Bolted short-circuited", 10, 0.89, 0.934, 0, 0),
]

_BATTERY_ROWS = [
    FaultTableRow("Healthy", 0, 0, 0, 0.9, 0.9),
    FaultTableRow("External short circuit", 0.5, 0.26, 0.31, 0.81, 0.81),
    FaultTableRow("Internal short circuit", 0.9, 0.91, 0.92, 0.53, 0.53),
    FaultTableRow("Thermal runaway", 1, 0.96, 0.98, 0, 0),
]


def table_defaults() -> tuple[FaultTable, FaultTable]:
    """Built-in generator and battery fault tables."""
    return FaultTable(_GENERATOR_ROWS, "generator"), FaultTable(_BATTERY_ROWS, "battery")


def _rows_from_json(items, where):
    if not isinstance(items, list):
        raise ValueError(f"{where}: expected an array of fault rows")
    fields = {"fault_case", "severity_rul", "p_range", "v_range", "hci_lo", "hci_hi"}
    rows = []
    for i, item in enumerate(items):
        if not isinstance(item, dict) or set(item) != fields:
            raise ValueError(f"{where}[{i}]: fault rows need exactly the keys {sorted(fields)}")
        if not isinstance(item["fault_case"], str):
            raise ValueError(f"{where}[{i}].fault_case must be a string")
        nums = {k: item[k] for k in fields - {"fault_case"}}
        for k, v in nums.items():
            if isinstance(v, bool) or not isinstance(v, (int, float)):
                raise ValueError(f"{where}[{i}].{k} must be a number")
        rows.append(FaultTableRow(item["fault_case"], **{k: float(v) for k, v in nums.items()}))
    return rows


def load_fault_tables(path=None) -> tuple[FaultTable, FaultTable]:
    """Fault tables with optional user overrides.

    ``path`` (or ``$HFOPF_TABLE_PATH``) holds either a bare array, which
    replaces the generator table, or an object with ``generator`` and/or
    ``battery`` arrays.
    """
    gen, bat = table_defaults()
    path = path or os.environ.get("HFOPF_TABLE_PATH")
    if not path:
        return gen, bat
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    if isinstance(doc, list):
        return FaultTable(_rows_from_json(doc, str(path)), "generator"), bat
    if not isinstance(doc, dict) or not set(doc) <= {"generator", "battery"}:
        raise ValueError(f"{path}: expected an array or an object with generator/battery keys")
    if "generator" in doc:
        gen = FaultTable(_rows_from_json(doc["generator"], f"{path}:generator"), "generator")
    if "battery" in doc:
        bat = FaultTable(_rows_from_json(doc["battery"], f"{path}:battery"), "battery")
    return gen, bat


def beta(h: float) -> float:
    """Health-to-capability map; the identity (mean of the health distribution)."""
    if not 0 <= h <= 1:
        raise ValueError(f"health index {h} outside [0, 1]")
    return float(h)


def hci_from_fault(table, fault_case: str, within_range: float = 0.0) -> float:
    """Health index at a fractional position inside a fault case's HCI range.

    ``within_range=0`` gives the least severe end of the range.
    """
    if isinstance(table, str):
        gen, bat = table_defaults()
        table = {"generator": gen, "battery": bat}[table]
    if not 0 <= within_range <= 1:
        raise ValueError("within_range must lie in [0, 1]")
    row = table.row(fault_case)
    return row.hci_hi + within_range * (row.hci_lo - row.hci_hi)


@dataclass(frozen=True)
class HealthProfile:
    equipment_ref: str
    hci: float
    fault_case: str | None = None
    mapping_mode: MappingMode = MappingMode.LINEAR

    def __post_init__(self):
        if not 0 <= self.hci <= 1:
            raise ValueError(f"{self.equipment_ref}: hci {self.hci} outside [0, 1]")
        object.__setattr__(self, "mapping_mode", MappingMode(self.mapping_mode))


@dataclass(frozen=True)
class DeratedLimits:
    p_min: float
    p_max: float
    q_min: float
    q_max: float
    v_min: float
    v_max: float
    bess_p_max: float = 0.0
    e_min: float = 0.0
    e_max: float = 0.0
    kind: str = "generator"

    @property
    def empty_voltage_band(self) -> bool:
        return self.v_min > self.v_max


def rated_limits(network: Network, ref: str) -> DeratedLimits:
    unit = network.source(ref)
    bus = network.buses[unit.bus]
    if isinstance(unit, BessUnit):
        pu = unit.p_max_rated
        return DeratedLimits(-pu, pu, -pu, pu, bus.v_min_nominal, bus.v_max_nominal,
                             bess_p_max=pu, e_min=unit.e_min_rated, e_max=unit.e_max_rated,
                             kind="bess")
    return DeratedLimits(unit.p_min_rated, unit.p_max_rated, unit.q_min_rated, unit.q_max_rated,
                         bus.v_min_nominal, bus.v_max_nominal)


def derate(rated: DeratedLimits, profile: HealthProfile, table: FaultTable | None = None,
           derate_voltage: bool = False) -> DeratedLimits:
    """Scale rated limits by health.

    Power-type bounds shrink by a capability factor; with ``derate_voltage``
    the voltage band is cut from the top. Lower bounds are never relaxed.
    """
    h = beta(profile.hci)
    if profile.mapping_mode is MappingMode.LINEAR:
        factor, v_cut = h, 1.0 - h
    else:
        if table is None:
            gen, bat = table_defaults()
            table = bat if rated.kind == "bess" else gen
        factor, v_cut = 1.0 - table.interp_p(h), table.interp_v(h)

    v_max = rated.v_max
    if derate_voltage:
        v_max = rated.v_max - v_cut * (rated.v_max - rated.v_min)
    if rated.kind == "bess":
        pu = factor * rated.bess_p_max
        return replace(rated, p_min=-pu, p_max=pu, q_min=-pu, q_max=pu, bess_p_max=pu, v_max=v_max)
    p_max = factor * rated.p_max
    return replace(rated, p_min=min(rated.p_min, p_max), p_max=p_max,
                   q_min=factor * rated.q_min, q_max=factor * rated.q_max, v_max=v_max)


def soc_window(limits: DeratedLimits, unit: BessUnit) -> DeratedLimits:
    """Clip BESS power so the state of charge stays in bounds over one interval."""
    lo = max(limits.p_min, -(limits.e_max - unit.e_now) / unit.horizon)
    hi = min(limits.p_max, (unit.e_now - limits.e_min) / unit.horizon)
    return replace(limits, p_min=lo, p_max=hi)


def network_limits(network: Network, profiles: Mapping[str, HealthProfile] | None = None,
                   derate_voltage: bool = False, tables=None) -> dict[str, DeratedLimits]:
    """Derated limits for every source; sources without a profile stay rated."""
    profiles = dict(profiles or {})
    unknown = set(profiles) - {ref for ref, _ in network.sources()}
    if unknown:
        raise KeyError(f"health profiles for unknown equipment {sorted(unknown)}")
    gen_table, bat_table = tables or table_defaults()
    out = {}
    for ref, unit in network.sources():
        lim = rated_limits(network, ref)
        if ref in profiles:
            table = bat_table if lim.kind == "bess" else gen_table
            lim = derate(lim, profiles[ref], table, derate_voltage)
        if isinstance(unit, BessUnit):
            lim = soc_window(lim, unit)
        out[ref] = lim
    return out


def bus_voltage_bands(network: Network, limits: Mapping[str, DeratedLimits]):
    """Per-bus ``(v_min, v_max)`` arrays: nominal bands tightened by equipment limits."""
    vmin = np.array([b.v_min_nominal for b in network.buses])
    vmax = np.array([b.v_max_nominal for b in network.buses])
    for ref, unit in network.sources():
        lim = limits[ref]
        vmin[unit.bus] = max(vmin[unit.bus], lim.v_min)
        vmax[unit.bus] = min(vmax[unit.bus], lim.v_max)
    return vmin, vmax
