import pytest
import yaml
from hypothesis import given, settings
from hypothesis import strategies as st

from uavcover.config import (
    ConfigError,
    RunConfig,
    apply_overrides,
    load_config_text,
    parse_override,
    scenario_from_dict,
    scenario_hash,
    scenario_to_dict,
)
from uavcover.presets import PRESETS
from uavcover.simulator import Hotspot, Scenario


def test_minimal_config_is_preset_and_seed():
    cfg = load_config_text("preset: fig3-urban-static\nseed: 4\n")
    sc = cfg.resolve()
    assert sc.seed == 4 and sc.T == 60 and sc.K == 1 and sc.n_uavs == 9
    assert len(sc.hotspots) == 3


@pytest.mark.parametrize("name", sorted(PRESETS))
def test_every_preset_resolves_with_table_defaults(name):
    sc = RunConfig(preset=name).resolve()
    assert sc.n_uavs == 9 and sc.area_length == 5000.0 and sc.grid_cells == 50
    assert sc.noise_dbm == -70.0 and sc.default_altitude == 200.0 and sc.h_max == 1500.0
    assert (sc.gp.mu, sc.gp.a0, sc.gp.a1) == (100.0, 10.0, 500.0**2)


def test_missing_uav_count_names_field():
    with pytest.raises(ConfigError) as err:
        load_config_text("seed: 1\nscenario:\n  T: 5\n")
    assert "n_uavs" in str(err.value)


def test_unknown_keys_rejected():
    with pytest.raises(ConfigError, match="colour"):
        load_config_text("preset: fig3-urban-static\ncolour: red\n")
    with pytest.raises(ConfigError, match="scenario.speed"):
        load_config_text("preset: fig3-urban-static\nscenario:\n  speed: 3\n")
    with pytest.raises(ConfigError, match=r"hotspots\[0\]"):
        load_config_text("preset: fig3-urban-static\nscenario:\n  hotspots:\n    - {center: [1, 2], semi_axes: [3, 4], size: 2}\n")
    with pytest.raises(ConfigError, match="scenario.gp"):
        load_config_text("preset: fig3-urban-static\nscenario:\n  gp: {sigma: 1}\n")


def test_type_errors_name_field():
    with pytest.raises(ConfigError, match="scenario.T"):
        load_config_text("preset: fig3-urban-static\nscenario:\n  T: many\n")
    with pytest.raises(ConfigError, match="scenario.fixed_altitude"):
        load_config_text("preset: fig3-urban-static\nscenario:\n  fixed_altitude: 3\n")
    with pytest.raises(ConfigError, match="scenario.n_uavs"):
        load_config_text("scenario:\n  n_uavs: 2.5\n")


def test_range_errors_reported():
    with pytest.raises(ConfigError, match="sensor_ratio"):
        load_config_text("preset: fig3-urban-static\nscenario:\n  sensor_ratio: 2\n")
    with pytest.raises(ConfigError, match="environment"):
        load_config_text("preset: fig3-urban-static\nscenario:\n  environment: lunar\n")
    with pytest.raises(ConfigError, match="preset"):
        load_config_text("preset: fig99\n")


def test_yaml_syntax_error_reports_line():
    with pytest.raises(ConfigError, match=r"line \d+, column \d+"):
        load_config_text("preset: fig3-urban-static\nscenario: [unclosed\n")


def test_overrides():
    assert parse_override("theta_db=10") == (["scenario", "theta_db"], 10)
    assert parse_override("scenario.gp.a0=5") == (["scenario", "gp", "a0"], 5)
    assert parse_override("seed=3") == (["seed"], 3)
    data = apply_overrides({"preset": "fig3-urban-static"}, ["T=7", "gp.a1=1e5", "environment=suburban"])
    sc = RunConfig.from_dict(data).resolve()
    assert sc.T == 7 and sc.gp.a1 == 1e5 and sc.environment == "suburban"
    with pytest.raises(ConfigError):
        parse_override("novalue")


def test_sweep_block_validated():
    with pytest.raises(ConfigError, match="sweep.parameter"):
        load_config_text("preset: fig3-urban-static\nsweep: {parameter: nu, values: [1]}\n")
    with pytest.raises(ConfigError, match="sweep.values"):
        load_config_text("preset: fig3-urban-static\nsweep: {parameter: theta_dB, values: []}\n")


def test_scenario_dict_roundtrip():
    sc = Scenario(
        hotspots=(Hotspot((1.0, 2.0), (3.0, 4.0), 5.0, (6.0, 7.0)),),
        channel={"sigma": 0.0, "m_los": 4},
        initial="explicit",
        initial_positions=tuple((float(i), 1.0, 100.0) for i in range(9)),
        field_seed=11,
    )
    assert scenario_from_dict(scenario_to_dict(sc)) == sc
    assert scenario_hash(sc) == scenario_hash(scenario_from_dict(scenario_to_dict(sc)))
    assert scenario_hash(sc) != scenario_hash(sc.replace(T=3))


scalar_overrides = st.fixed_dictionaries(
    {},
    optional={
        "T": st.integers(0, 200),
        "K": st.integers(1, 5),
        "theta_db": st.floats(-10, 20),
        "environment": st.sampled_from(["suburban", "urban", "dense-urban"]),
        "sensor_ratio": st.floats(0, 1),
        "fixed_altitude": st.booleans(),
        "first_step_m": st.floats(1, 500),
        "field_seed": st.one_of(st.none(), st.integers(0, 10**6)),
    },
)


@settings(max_examples=50, deadline=None)
@given(st.sampled_from(sorted(PRESETS)), st.integers(0, 10**6), scalar_overrides, st.lists(st.integers(0, 99), max_size=4))
def test_config_roundtrip_idempotent(preset, seed, scenario, seeds):
    data = {"preset": preset, "seed": seed, "scenario": scenario}
    if seeds:
        data["seeds"] = seeds
    first = RunConfig.from_dict(data)
    text = first.to_yaml()
    second = load_config_text(text)
    assert second.to_dict() == first.to_dict()
    assert second.to_yaml() == text
    assert second.resolve() == first.resolve()


def test_reproducible_config_roundtrip():
    from uavcover.runner import reproducible_config

    sc = RunConfig(preset="fig10-dynamic-hotspots", seed=5).resolve()
    text = reproducible_config(sc).to_yaml()
    assert load_config_text(text).resolve() == sc
    assert yaml.safe_load(text)["seed"] == 5
