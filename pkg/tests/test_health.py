import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hfopf.health import (DeratedLimits, HealthProfile, MappingMode, beta, derate, hci_from_fault,
                          load_fault_tables, network_limits, rated_limits, table_defaults)

# fault_case, severity, P range, V range, HCI low, HCI high
GENERATOR_ROWS = [
    ("Healthy", 0, 0, 0, 1, 1),
    ("Magnet fault", 0.5, 0.06, 0.075, 0.96, 0.99),
    ("Static eccentricity", 0.8, 0.08, 0.11, 0.94, 0.96),
    ("Dynamic eccentricity", 0.9, 0.08, 0.12, 0.93, 0.95),
    ("Mixed eccentricity", 0.91, 0.07, 0.135, 0.92, 0.92),
    ("Turn-turn short-circuit", 1, 0.1, 0.15, 0.86, 0.9),
    ("Phase-Ground", 3, 0.49, 0.469, 0.79, 0.79),
    ("Open-Phase", 4, 0.59, 0.527, 0.76, 0.76),
    ("Phase-Phase", 5, 0.69, 0.587, 0.65, 0.65),
    ("Three-phase open", 7, 0.75, 0.827, 0.51, 0.51),
    ("Bolted short-circuited", 10, 0.89, 0.934, 0, 0),
]
BATTERY_ROWS = [
    ("Healthy", 0, 0, 0, 0.9, 0.9),
    ("External short circuit", 0.5, 0.26, 0.31, 0.81, 0.81),
    ("Internal short circuit", 0.9, 0.91, 0.92, 0.53, 0.53),
    ("Thermal runaway", 1, 0.96, 0.98, 0, 0),
]

GEN = DeratedLimits(0.0, 1.0, -0.5, 0.5, 0.95, 1.05)
BESS = DeratedLimits(-0.4, 0.4, -0.4, 0.4, 0.95, 1.05, bess_p_max=0.4, e_min=0.1, e_max=0.7, kind="bess")


def as_tuples(table):
    return [(r.fault_case, r.severity_rul, r.p_range, r.v_range, r.hci_lo, r.hci_hi) for r in table]


def test_tables_verbatim():
    gen, bat = table_defaults()
    assert as_tuples(gen) == GENERATOR_ROWS
    assert as_tuples(bat) == BATTERY_ROWS


def test_spot_values():
    gen, bat = table_defaults()
    pp = gen.row("Phase-Phase")
    assert (pp.severity_rul, pp.p_range, pp.v_range, pp.hci_lo) == (5, 0.69, 0.587, 0.65)
    ttsc = gen.row("turn turn short circuit")
    assert (ttsc.hci_hi, ttsc.hci_lo, ttsc.p_range) == (0.9, 0.86, 0.1)
    assert bat.row("Thermal runaway").p_range == 0.96


@pytest.mark.parametrize("h", [0.0, 0.86, 1.0])
def test_beta_identity(h):
    assert beta(h) == h


@pytest.mark.parametrize("h", [-0.1, 1.01])
def test_beta_domain(h):
    with pytest.raises(ValueError):
        beta(h)


def test_hci_from_fault():
    assert hci_from_fault("generator", "Healthy", 0.7) == 1.0
    assert hci_from_fault("generator", "Turn-turn short-circuit", 0) == 0.9
    assert hci_from_fault("generator", "Turn-turn short-circuit", 1) == pytest.approx(0.86)
    assert hci_from_fault("battery", "Thermal runaway", 0.3) == 0.0
    assert hci_from_fault("battery", "Healthy", 0.5) == 0.9
    with pytest.raises(KeyError):
        hci_from_fault("battery", "Bearing fault")


@given(st.sampled_from([r[0] for r in GENERATOR_ROWS]), st.floats(0, 1))
def test_hci_from_fault_inside_row(case, frac):
    row = table_defaults()[0].row(case)
    assert row.hci_lo - 1e-15 <= hci_from_fault("generator", case, frac) <= row.hci_hi + 1e-15


def test_linear_healthy_is_identity():
    lim = derate(GEN, HealthProfile("G2", 1.0), derate_voltage=True)
    assert lim == GEN


def test_linear_failed_generator():
    lim = derate(GEN, HealthProfile("G2", 0.0))
    assert lim.p_max == 0.0 and lim.p_min == 0.0


def test_linear_voltage_cut():
    lim = derate(GEN, HealthProfile("G2", 0.6), derate_voltage=True)
    assert lim.v_max == pytest.approx(1.05 - 0.4 * 0.10)
    assert lim.v_min == GEN.v_min
    assert lim.q_max == pytest.approx(0.3) and lim.q_min == pytest.approx(-0.3)


def test_table_ttsc_midpoint():
    lim = derate(GEN, HealthProfile("G2", 0.88, mapping_mode="table"))
    assert lim.p_max == pytest.approx(0.90)


def test_table_blend_between_rows():
    # halfway between Phase-Ground (0.79) and Open-Phase (0.76)
    gen, _ = table_defaults()
    assert gen.interp_p(0.775) == pytest.approx(0.5 * (0.49 + 0.59))
    assert gen.interp_v(0.775) == pytest.approx(0.5 * (0.469 + 0.527))


def test_table_knots_exact():
    gen, bat = table_defaults()
    for table, rows in ((gen, GENERATOR_ROWS), (bat, BATTERY_ROWS)):
        for name, _, p, v, lo, hi in rows:
            mid = 0.5 * (lo + hi)
            assert table.interp_v(mid) == pytest.approx(v, abs=1e-15)
            if name != "Mixed eccentricity":
                assert table.interp_p(mid) == pytest.approx(p, abs=1e-15)
    # the one non-monotone P entry is lifted to the running envelope
    assert gen.interp_p(0.92) == 0.08


def test_battery_table_mode():
    lim = derate(BESS, HealthProfile("B1", 0.81, mapping_mode="table"))
    assert lim.bess_p_max == pytest.approx((1 - 0.26) * 0.4)
    assert lim.p_min == -lim.p_max
    lim = derate(BESS, HealthProfile("B1", 0.0, mapping_mode="table"))
    assert lim.bess_p_max == pytest.approx((1 - 0.96) * 0.4)
    assert (lim.e_min, lim.e_max) == (BESS.e_min, BESS.e_max)


@given(st.floats(0, 1), st.floats(0, 1), st.sampled_from(list(MappingMode)), st.booleans())
@settings(max_examples=200)
def test_monotone_in_health(h1, h2, mode, dv):
    h1, h2 = max(h1, h2), min(h1, h2)
    for rated in (GEN, BESS):
        a = derate(rated, HealthProfile("X", h1, mapping_mode=mode), derate_voltage=dv)
        b = derate(rated, HealthProfile("X", h2, mapping_mode=mode), derate_voltage=dv)
        assert a.p_max >= b.p_max
        assert a.v_min <= b.v_min and a.v_max >= b.v_max
        assert b.p_min <= b.p_max


def test_empty_band_representable():
    narrow = DeratedLimits(0, 1, -1, 1, 1.0, 1.0)
    lim = derate(narrow, HealthProfile("G", 0.5), derate_voltage=True)
    assert not lim.empty_voltage_band
    flipped = DeratedLimits(0, 1, -1, 1, 1.0, 0.99)
    assert flipped.empty_voltage_band


def test_network_limits(net3):
    lim = network_limits(net3, {"G2": HealthProfile("G2", 0.5)})
    assert lim["G2"].p_max == pytest.approx(0.5 * rated_limits(net3, "G2").p_max)
    assert lim["G1"] == rated_limits(net3, "G1")
    # the storage window is clipped by the energy left above e_min
    b1 = net3.source("B1")
    assert lim["B1"].p_max == pytest.approx(min(b1.p_max_rated, (b1.e_now - b1.e_min_rated) / b1.horizon))
    with pytest.raises(KeyError):
        network_limits(net3, {"G9": HealthProfile("G9", 0.5)})


def test_custom_table(tmp_path, monkeypatch):
    rows = [{"fault_case": "Healthy", "severity_rul": 0, "p_range": 0, "v_range": 0, "hci_lo": 1, "hci_hi": 1},
            {"fault_case": "Dead", "severity_rul": 1, "p_range": 1, "v_range": 1, "hci_lo": 0, "hci_hi": 0}]
    path = tmp_path / "t.json"
    path.write_text(json.dumps({"battery": rows}))
    monkeypatch.setenv("HFOPF_TABLE_PATH", str(path))
    gen, bat = load_fault_tables()
    assert len(gen) == 11 and len(bat) == 2
    assert bat.interp_p(0.25) == pytest.approx(0.75)
    path.write_text(json.dumps([{**rows[0], "extra": 1}]))
    with pytest.raises(ValueError):
        load_fault_tables()
