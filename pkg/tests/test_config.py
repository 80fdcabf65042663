"""Scenario configuration: round trips, strict keys, dotted overrides."""
import json

import pytest

from mecmarket.config import (SCHEMA_VERSION, ConfigError, ScenarioConfig,
                              WorkloadSpec, default_config)


def test_round_trip_preserves_everything():
    cfg = ScenarioConfig(num_users=17, pricing="scao", offloading="co",
                         caching="gndrl", seed=99, scenario_id="rt",
                         program_sizes=(10.0, 20.0, 30.0, 40.0))
    back = ScenarioConfig.from_dict(cfg.to_dict())
    assert back == cfg
    assert back.to_dict() == cfg.to_dict()
    assert cfg.to_dict()["schema_version"] == SCHEMA_VERSION


def test_json_round_trip(tmp_path):
    cfg = default_config()
    p = tmp_path / "cfg.json"
    cfg.save_json(str(p))
    assert ScenarioConfig.from_json(str(p)) == cfg
    data = json.loads(p.read_text())
    assert data["pricing"]["algorithm"] == "cpto"
    assert data["users"]["count"] == cfg.num_users


def test_unknown_keys_rejected_at_every_level():
    base = default_config().to_dict()
    for path in (("turbo",), ("system", "turbo"), ("users", "turbo"),
                 ("workload", "turbo"), ("pricing", "turbo"),
                 ("offloading", "turbo"), ("caching", "turbo"),
                 ("gndrl", "turbo")):
        data = json.loads(json.dumps(base))
        node = data
        for key in path[:-1]:
            node = node[key]
        node[path[-1]] = 1
        with pytest.raises(ConfigError):
            ScenarioConfig.from_dict(data)


def test_enum_and_range_validation():
    with pytest.raises(ConfigError):
        ScenarioConfig(pricing="greedy")
    with pytest.raises(ConfigError):
        ScenarioConfig(offloading="all")
    with pytest.raises(ConfigError):
        ScenarioConfig(caching="lru")
    with pytest.raises(ConfigError):
        ScenarioConfig(seed=-1)
    with pytest.raises(ConfigError):
        ScenarioConfig(num_users=-1)
    with pytest.raises(ConfigError):
        ScenarioConfig(program_sizes=(50.0,) * 3)  # default has 4 programs
    with pytest.raises(ConfigError):
        ScenarioConfig(program_sizes=(50.0, 50.0, -1.0, 50.0))
    with pytest.raises(ConfigError):
        WorkloadSpec(source="trace")  # needs a path
    with pytest.raises(ConfigError):
        WorkloadSpec(drift="wander")
    with pytest.raises(ConfigError):
        WorkloadSpec(zipf_s=-0.5)


def test_overrides():
    cfg = default_config()
    out = cfg.with_overrides(["users.count=80", "pricing.algorithm=dpo",
                              "workload.zipf_s=1.4", "seed=3"])
    assert out.num_users == 80
    assert out.pricing == "dpo"
    assert out.workload.zipf_s == 1.4
    assert out.seed == 3
    # untouched sections survive
    assert out.system == cfg.system
    # strings without quotes parse as bare strings
    out = cfg.with_overrides(["caching.strategy=gndrl"])
    assert out.caching == "gndrl"
    out = cfg.with_overrides(['scenario_id="quoted"'])
    assert out.scenario_id == "quoted"
    with pytest.raises(ConfigError):
        cfg.with_overrides(["users.size=80"])
    with pytest.raises(ConfigError):
        cfg.with_overrides(["nope=1"])
    with pytest.raises(ConfigError):
        cfg.with_overrides(["users.count"])


def test_from_json_errors(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{not json")
    with pytest.raises(ConfigError):
        ScenarioConfig.from_json(str(p))
    p.write_text("[1, 2]")
    with pytest.raises(ConfigError):
        ScenarioConfig.from_json(str(p))
    with pytest.raises(ConfigError):
        ScenarioConfig.from_dict({"schema_version": 999})


def test_user_range_validation():
    from mecmarket.workload import UserSampler
    with pytest.raises(ConfigError):
        ScenarioConfig(users=UserSampler(cpu_freq_hz=(4e6, 0.5e6)))
    with pytest.raises(ConfigError):
        ScenarioConfig(users=UserSampler(distance_m=(0.0, 100.0)))
