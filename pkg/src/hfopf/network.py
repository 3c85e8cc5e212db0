"""Network data model, case-file I/O and the bus admittance matrix.

Everything inside the model is per-unit on ``base_mva``. Case files carry
physical units (MW, MVAr, MVA, MWh, $/MWh) except impedances and voltage
limits, which are already per-unit. Bus ids are 1-based in files and
0-based in memory.
"""
from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


class CaseError(ValueError):
    """Base class for case-file problems."""


class CaseParseError(CaseError):
    """The file is not valid JSON or does not follow the schema."""


class CaseValidationError(CaseError):
    """The data parses but violates a model invariant."""


@dataclass(frozen=True)
class Bus:
    id: int
    v_min_nominal: float
    v_max_nominal: float
    p_load: float = 0.0
    q_load: float = 0.0


@dataclass(frozen=True)
class Branch:
    from_bus: int
    to_bus: int
    series_admittance: complex
    s_max: float


@dataclass(frozen=True)
class Generator:
    bus: int
    p_min_rated: float
    p_max_rated: float
    q_min_rated: float
    q_max_rated: float
    cost_c2: float = 0.0
    cost_c1: float = 0.0
    cost_c0: float = 0.0

    def cost(self, p):
        return self.cost_c2 * p * p + self.cost_c1 * p + self.cost_c0


@dataclass(frozen=True)
class BessUnit:
    bus: int
    p_max_rated: float
    e_rated: float
    e_now: float
    e_min_rated: float
    e_max_rated: float
    horizon: float = 1.0
    cost_c2: float = 0.0
    cost_c1: float = 0.0
    cost_c0: float = 0.0

    def cost(self, p):
        return self.cost_c2 * p * p + self.cost_c1 * p + self.cost_c0


@dataclass(frozen=True)
class Network:
    buses: tuple[Bus, ...]
    branches: tuple[Branch, ...] = ()
    generators: tuple[Generator, ...] = ()
    bess_units: tuple[BessUnit, ...] = ()
    base_mva: float = 1.0
    reference_bus: int = 0
    name: str = field(default="", compare=False)

    def __post_init__(self):
        validate(self)

    @property
    def n_bus(self) -> int:
        return len(self.buses)

    def sources(self):
        """Yield ``(ref, unit)`` for every generator (``G1``...) then BESS (``B1``...)."""
        for i, g in enumerate(self.generators):
            yield f"G{i + 1}", g
        for i, b in enumerate(self.bess_units):
            yield f"B{i + 1}", b

    def source(self, ref: str):
        for r, unit in self.sources():
            if r == ref:
                return unit
        raise KeyError(f"unknown equipment {ref!r}")

    def source_at(self, bus: int):
        """Return ``(ref, unit)`` of the source at ``bus`` or ``None``."""
        for r, unit in self.sources():
            if unit.bus == bus:
                return r, unit
        return None

    def loads(self, load_scale: float = 1.0) -> np.ndarray:
        """Complex per-unit demand per bus, scaled uniformly."""
        return load_scale * np.array([b.p_load + 1j * b.q_load for b in self.buses])


def validate(net: Network) -> None:
    n = len(net.buses)
    if n == 0:
        raise CaseValidationError("network has no buses")
    for k, bus in enumerate(net.buses):
        if bus.id != k:
            raise CaseValidationError(f"bus {k}: ids must be contiguous, got {bus.id}")
        if not (0 < bus.v_min_nominal <= bus.v_max_nominal):
            raise CaseValidationError(f"bus {k}: need 0 < v_min <= v_max")
        if not (np.isfinite(bus.p_load) and np.isfinite(bus.q_load)):
            raise CaseValidationError(f"bus {k}: non-finite load")
    if not net.base_mva > 0:
        raise CaseValidationError("base_mva must be positive")

    def check_bus(where, b):
        if not (0 <= b < n):
            raise CaseValidationError(f"{where}: unresolved bus {b}")

    check_bus("reference_bus", net.reference_bus)
    for i, br in enumerate(net.branches):
        check_bus(f"branch {i}", br.from_bus)
        check_bus(f"branch {i}", br.to_bus)
        if br.from_bus == br.to_bus:
            raise CaseValidationError(f"branch {i}: from_bus equals to_bus")
        if not br.s_max > 0:
            raise CaseValidationError(f"branch {i}: s_max must be positive")
        if br.series_admittance == 0 or not np.isfinite(br.series_admittance):
            raise CaseValidationError(f"branch {i}: series admittance must be finite and nonzero")
    if not net.generators:
        raise CaseValidationError("network needs at least one generator")
    for i, g in enumerate(net.generators):
        check_bus(f"generator {i}", g.bus)
        if g.p_min_rated > g.p_max_rated:
            raise CaseValidationError(f"generator {i}: p_min > p_max")
        if g.q_min_rated > g.q_max_rated:
            raise CaseValidationError(f"generator {i}: q_min > q_max")
        if g.cost_c2 < 0:
            raise CaseValidationError(f"generator {i}: c2 must be >= 0 (convex cost)")
    for i, b in enumerate(net.bess_units):
        check_bus(f"bess {i}", b.bus)
        if not (0 <= b.e_min_rated <= b.e_now <= b.e_max_rated <= b.e_rated):
            raise CaseValidationError(f"bess {i}: need 0 <= e_min <= e_now <= e_max <= e_rated")
        if not b.p_max_rated > 0:
            raise CaseValidationError(f"bess {i}: p_max must be positive")
        if not b.horizon > 0:
            raise CaseValidationError(f"bess {i}: horizon must be positive")
        if b.cost_c2 < 0:
            raise CaseValidationError(f"bess {i}: c2 must be >= 0 (convex cost)")
    # the lifted model indexes source output by bus, so a bus carries one source at most
    seen = {}
    for ref, unit in net.sources():
        if unit.bus in seen:
            raise CaseValidationError(
                f"{ref} and {seen[unit.bus]} share bus {unit.bus}; one source per bus is supported")
        seen[unit.bus] = ref

    adj = {k: set() for k in range(n)}
    for br in net.branches:
        adj[br.from_bus].add(br.to_bus)
        adj[br.to_bus].add(br.from_bus)
    reached = {net.reference_bus}
    queue = deque(reached)
    while queue:
        k = queue.popleft()
        for l in adj[k] - reached:
            reached.add(l)
            queue.append(l)
    if len(reached) != n:
        missing = sorted(set(range(n)) - reached)
        raise CaseValidationError(f"network not connected: buses {missing} unreachable from reference")


def build_admittance(net: Network) -> np.ndarray:
    """Dense series-only bus admittance matrix (no shunts, so rows sum to zero)."""
    Y = np.zeros((net.n_bus, net.n_bus), dtype=complex)
    for br in net.branches:
        k, l, y = br.from_bus, br.to_bus, br.series_admittance
        Y[k, k] += y
        Y[l, l] += y
        Y[k, l] -= y
        Y[l, k] -= y
    return Y


def complex_injection(net: Network, voltages, Y=None) -> np.ndarray:
    """Net complex power injection ``V * conj(Y V)`` at every bus.

    Works on a single voltage vector or a stack of them (last axis = buses).
    """
    if Y is None:
        Y = build_admittance(net)
    V = np.asarray(voltages, dtype=complex)
    return V * np.conj(V @ Y.T)


def branch_flow(branch: Branch, voltages, reverse: bool = False):
    """Complex power leaving the sending end of ``branch``."""
    V = np.asarray(voltages, dtype=complex)
    k, l = (branch.to_bus, branch.from_bus) if reverse else (branch.from_bus, branch.to_bus)
    y = branch.series_admittance
    return V[..., k] * np.conj(y * (V[..., k] - V[..., l]))


# ---------------------------------------------------------------------------
# case files

_SCHEMA = {
    "top": {"base_mva", "reference_bus", "buses", "branches", "generators", "bess", "name"},
    "buses": ["id", "v_min", "v_max", "p_load", "q_load"],
    "branches": ["from", "to", "r", "x", "s_max"],
    "generators": ["bus", "p_min", "p_max", "q_min", "q_max", "c2", "c1", "c0"],
    "bess": ["bus", "p_max", "e_rated", "e_now", "e_min", "e_max", "horizon_h", "c2", "c1", "c0"],
}
_REQUIRED_TOP = {"base_mva", "reference_bus", "buses", "generators"}


def _records(doc, key, where):
    rows = doc.get(key, [])
    if not isinstance(rows, list):
        raise CaseParseError(f"{where}: '{key}' must be an array")
    fields = _SCHEMA[key]
    out = []
    for i, row in enumerate(rows):
        if not isinstance(row, dict):
            raise CaseParseError(f"{where}: {key}[{i}] must be an object")
        unknown = set(row) - set(fields)
        if unknown:
            raise CaseParseError(f"{where}: {key}[{i}] has unknown keys {sorted(unknown)}")
        missing = set(fields) - set(row)
        if missing:
            raise CaseParseError(f"{where}: {key}[{i}] is missing keys {sorted(missing)}")
        for f in fields:
            v = row[f]
            if isinstance(v, bool) or not isinstance(v, (int, float)):
                raise CaseParseError(f"{where}: {key}[{i}].{f} must be a number, got {v!r}")
        out.append(row)
    return out


def _bus_index(raw, n, where):
    if isinstance(raw, bool) or not isinstance(raw, (int, float)) or not float(raw).is_integer():
        raise CaseParseError(f"{where}: bus reference {raw!r} is not an integer")
    idx = int(raw) - 1
    if not (0 <= idx < n):
        raise CaseValidationError(f"{where}: unresolved bus {int(raw)}")
    return idx


def network_from_dict(doc: dict, where: str = "<case>") -> Network:
    if not isinstance(doc, dict):
        raise CaseParseError(f"{where}: top level must be an object")
    unknown = set(doc) - _SCHEMA["top"]
    if unknown:
        raise CaseParseError(f"{where}: unknown top-level keys {sorted(unknown)}")
    missing = _REQUIRED_TOP - set(doc)
    if missing:
        raise CaseParseError(f"{where}: missing top-level keys {sorted(missing)}")
    base = doc["base_mva"]
    if isinstance(base, bool) or not isinstance(base, (int, float)) or not base > 0:
        raise CaseParseError(f"{where}: base_mva must be a positive number")
    base = float(base)

    bus_rows = sorted(_records(doc, "buses", where), key=lambda r: r["id"])
    n = len(bus_rows)
    ids = [r["id"] for r in bus_rows]
    if ids != list(range(1, n + 1)):
        raise CaseValidationError(f"{where}: bus ids must be 1..{n} without gaps, got {ids}")
    buses = tuple(
        Bus(k, float(r["v_min"]), float(r["v_max"]), r["p_load"] / base, r["q_load"] / base)
        for k, r in enumerate(bus_rows))

    branches = []
    for i, r in enumerate(_records(doc, "branches", where)):
        z = complex(r["r"], r["x"])
        if z == 0:
            raise CaseValidationError(f"{where}: branches[{i}] has zero impedance")
        branches.append(Branch(
            _bus_index(r["from"], n, f"{where}: branches[{i}].from"),
            _bus_index(r["to"], n, f"{where}: branches[{i}].to"),
            1 / z, r["s_max"] / base))

    gens = [Generator(
        _bus_index(r["bus"], n, f"{where}: generators[{i}].bus"),
        r["p_min"] / base, r["p_max"] / base, r["q_min"] / base, r["q_max"] / base,
        r["c2"] * base**2, r["c1"] * base, float(r["c0"]))
        for i, r in enumerate(_records(doc, "generators", where))]

    bess = [BessUnit(
        _bus_index(r["bus"], n, f"{where}: bess[{i}].bus"),
        r["p_max"] / base, r["e_rated"] / base, r["e_now"] / base,
        r["e_min"] / base, r["e_max"] / base, float(r["horizon_h"]),
        r["c2"] * base**2, r["c1"] * base, float(r["c0"]))
        for i, r in enumerate(_records(doc, "bess", where))]

    ref = _bus_index(doc["reference_bus"], n, f"{where}: reference_bus")
    try:
        return Network(tuple(buses), tuple(branches), tuple(gens), tuple(bess),
                       base, ref, name=str(doc.get("name", "")))
    except CaseValidationError as exc:
        raise CaseValidationError(f"{where}: {exc}") from None


def network_to_dict(net: Network) -> dict:
    base = net.base_mva
    doc = {}
    if net.name:
        doc["name"] = net.name
    doc["base_mva"] = base
    doc["reference_bus"] = net.reference_bus + 1
    doc["buses"] = [
        {"id": b.id + 1, "v_min": b.v_min_nominal, "v_max": b.v_max_nominal,
         "p_load": b.p_load * base, "q_load": b.q_load * base} for b in net.buses]
    doc["branches"] = []
    for br in net.branches:
        z = 1 / br.series_admittance
        doc["branches"].append({"from": br.from_bus + 1, "to": br.to_bus + 1,
                                "r": z.real, "x": z.imag, "s_max": br.s_max * base})
    doc["generators"] = [
        {"bus": g.bus + 1, "p_min": g.p_min_rated * base, "p_max": g.p_max_rated * base,
         "q_min": g.q_min_rated * base, "q_max": g.q_max_rated * base,
         "c2": g.cost_c2 / base**2, "c1": g.cost_c1 / base, "c0": g.cost_c0}
        for g in net.generators]
    doc["bess"] = [
        {"bus": b.bus + 1, "p_max": b.p_max_rated * base, "e_rated": b.e_rated * base,
         "e_now": b.e_now * base, "e_min": b.e_min_rated * base, "e_max": b.e_max_rated * base,
         "horizon_h": b.horizon, "c2": b.cost_c2 / base**2, "c1": b.cost_c1 / base,
         "c0": b.cost_c0}
        for b in net.bess_units]
    return doc


BUNDLED_CASES = {"mg3.json": Path(__file__).parent / "data" / "mg3.json"}


def resolve_case_path(path) -> Path:
    """Return ``path``, falling back to a bundled case of the same name."""
    p = Path(path)
    if not p.exists() and p.name in BUNDLED_CASES and str(path) == p.name:
        return BUNDLED_CASES[p.name]
    return p


def load_case(path) -> Network:
    p = resolve_case_path(path)
    text = p.read_text(encoding="utf-8")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CaseParseError(f"{p}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    return network_from_dict(doc, where=str(p))


def save_case(net: Network, path) -> None:
    Path(path).write_text(json.dumps(network_to_dict(net), indent=2) + "\n", encoding="utf-8")


def mg3() -> Network:
    """The bundled 3-bus microgrid."""
    return load_case(BUNDLED_CASES["mg3.json"])
