import json
from pathlib import Path

import pytest

from seasonal_voltage.ingest import load_ieee118
from seasonal_voltage.network import Branch, Bus, CostCurve, Generator, NetworkCase

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture(scope="session")
def case118():
    return load_ieee118()


@pytest.fixture(scope="session")
def reference118():
    return json.loads((FIXTURES / "case118_reference.json").read_text())


def two_bus(load_mw=50.0, load_mvar=0.0, r=0.0, x=0.1, base=100.0):
    """Slack at bus 1 (1.0 p.u.), one line, PQ load at bus 2."""
    return NetworkCase(
        buses=[Bus(1, "slack", 0.0, 0.0), Bus(2, "PQ", load_mw, load_mvar)],
        branches=[Branch(1, 2, r, x)],
        generators=[Generator(1, 0.0, vg=1.0)],
        base_mva=base,
        name="two_bus",
    )


def write_csv(path, header, rows):
    lines = [",".join(header)] + [",".join(str(v) for v in r) for r in rows]
    Path(path).write_text("\n".join(lines) + "\n")
    return path


@pytest.fixture
def two_gen_case():
    """Two generators on a zero-resistance link, for dispatch tests."""
    return NetworkCase(
        buses=[Bus(1, "slack", 100.0, 0.0), Bus(2, "PV", 200.0, 0.0)],
        branches=[Branch(1, 2, 0.0, 0.05)],
        generators=[Generator(1, 0.0, pmax=400.0), Generator(2, 0.0, pmax=400.0)],
        costs=[CostCurve((1.0, 0.0, 0.0)), CostCurve((1.0, 0.0, 0.0))],
        name="two_gen",
    )


@pytest.fixture(scope="session")
def season_inputs(case118):
    """Seasonal wind profiles, annual profile, load profiles and dispatch
    schedules built from the bundled sample data."""
    from types import SimpleNamespace

    from seasonal_voltage.dispatch import build_dispatch_schedule
    from seasonal_voltage.load import annual_load_profile, build_load_profiles, default_shapes
    from seasonal_voltage.synthetic import (SAMPLE_SEEDS, synthetic_demand_table, synthetic_wind_power,
                                            synthetic_wind_speed)
    from seasonal_voltage.wind import build_annual_profile, build_seasonal_profiles

    profiles = build_seasonal_profiles(synthetic_wind_power(range(2007, 2012), seed=SAMPLE_SEEDS["wind_train"]))
    annual = build_annual_profile(synthetic_wind_speed(range(2007, 2008), seed=SAMPLE_SEEDS["speed"]))
    loads = build_load_profiles(synthetic_demand_table(seed=SAMPLE_SEEDS["demand"]), default_shapes())
    schedules = {s: build_dispatch_schedule(case118, p) for s, p in loads.items()}
    schedules["annual"] = build_dispatch_schedule(case118, annual_load_profile(loads), season="annual")
    return SimpleNamespace(profiles=profiles, annual=annual, loads=loads, schedules=schedules)
