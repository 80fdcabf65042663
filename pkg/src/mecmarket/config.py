"""Scenario configuration: a versioned JSON schema with strict validation.

A scenario fully determines one simulation: system parameters, user
population ranges, workload source, algorithm selections, agent
hyperparameters, and the master seed. Unknown keys are rejected so typos
fail loudly instead of silently running the defaults.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, fields
from typing import Any, Mapping, Sequence

from .caching import GndrlConfig
from .model import SystemParams
from .workload import UserSampler

SCHEMA_VERSION = 1

PRICING_ALGORITHMS = ("cpto", "scao", "dpo", "lp", "ltsp")
OFFLOADING_MODELS = ("to", "co", "lc", "ro")
CACHING_STRATEGIES = ("gndrl", "posc", "stsc")
WORKLOAD_SOURCES = ("synthetic", "trace")
DRIFT_KINDS = ("none", "rotate", "shuffle")


class ConfigError(ValueError):
    """Scenario configuration rejected before any computation."""


@dataclass(frozen=True)
class WorkloadSpec:
    """Where requests come from: a synthetic Zipf stream or a trace file."""

    source: str = "synthetic"
    zipf_s: float = 1.0
    drift: str = "none"
    trace_path: str | None = None
    frame_len_s: float = 100.0
    slot_len_s: float = 20.0

    def __post_init__(self) -> None:
        if self.source not in WORKLOAD_SOURCES:
            raise ConfigError(f"workload.source must be one of {WORKLOAD_SOURCES}")
        if self.drift not in DRIFT_KINDS:
            raise ConfigError(f"workload.drift must be one of {DRIFT_KINDS}")
        if self.zipf_s < 0:
            raise ConfigError("workload.zipf_s must be nonnegative")
        if self.source == "trace" and not self.trace_path:
            raise ConfigError("workload.trace_path required when source is 'trace'")
        if self.frame_len_s <= 0 or self.slot_len_s <= 0:
            raise ConfigError("workload frame/slot lengths must be positive")


@dataclass(frozen=True)
class ScenarioConfig:
    """One fully specified, seed-reproducible experiment."""

    system: SystemParams = SystemParams()
    users: UserSampler = UserSampler()
    workload: WorkloadSpec = WorkloadSpec()
    gndrl: GndrlConfig = GndrlConfig()
    num_users: int = 50
    pricing: str = "cpto"
    offloading: str = "to"
    caching: str = "posc"
    program_sizes: tuple[float, ...] = (50.0, 50.0, 50.0, 50.0)
    seed: int = 0
    scenario_id: str = "default"

    def __post_init__(self) -> None:
        if self.num_users < 0:
            raise ConfigError("users.count must be nonnegative")
        if self.pricing not in PRICING_ALGORITHMS:
            raise ConfigError(f"pricing.algorithm must be one of {PRICING_ALGORITHMS}")
        if self.offloading not in OFFLOADING_MODELS:
            raise ConfigError(f"offloading.model must be one of {OFFLOADING_MODELS}")
        if self.caching not in CACHING_STRATEGIES:
            raise ConfigError(f"caching.strategy must be one of {CACHING_STRATEGIES}")
        sizes = tuple(float(z) for z in self.program_sizes)
        object.__setattr__(self, "program_sizes", sizes)
        if len(sizes) != self.system.num_programs:
            raise ConfigError("caching.program_sizes must list one size per program")
        if any(z <= 0 for z in sizes):
            raise ConfigError("caching.program_sizes must be positive")
        if self.seed < 0:
            raise ConfigError("seed must be nonnegative")
        if not self.scenario_id:
            raise ConfigError("scenario_id must be nonempty")
        for name in ("power_w", "distance_m", "cpu_freq_hz", "data_kb",
                     "cycles_per_bit"):
            lo, hi = getattr(self.users, name)
            if not 0 < lo < hi:
                raise ConfigError(f"users.{name} must satisfy 0 < min < max")

    # -- serialization ----------------------------------------------------

    def to_dict(self) -> dict[str, Any]:
        """Canonical nested-dict form (the JSON schema)."""
        return {
            "schema_version": SCHEMA_VERSION,
            "scenario_id": self.scenario_id,
            "seed": self.seed,
            "system": {f.name: getattr(self.system, f.name)
                       for f in fields(self.system)},
            "users": {
                "count": self.num_users,
                **{f.name: list(getattr(self.users, f.name))
                   for f in fields(self.users)},
            },
            "workload": {f.name: getattr(self.workload, f.name)
                         for f in fields(self.workload)},
            "pricing": {"algorithm": self.pricing},
            "offloading": {"model": self.offloading},
            "caching": {"strategy": self.caching,
                        "program_sizes": list(self.program_sizes)},
            "gndrl": {f.name: getattr(self.gndrl, f.name)
                      for f in fields(self.gndrl)},
        }

    @classmethod
    def from_dict(cls, raw: Mapping[str, Any]) -> "ScenarioConfig":
        data = dict(raw)
        version = data.pop("schema_version", SCHEMA_VERSION)
        if version != SCHEMA_VERSION:
            raise ConfigError(f"unsupported schema_version: {version}")
        try:
            scenario_id = str(data.pop("scenario_id", "default"))
            seed = int(data.pop("seed", 0))
            system = SystemParams(**_section(data, "system", SystemParams))
            users_raw = dict(data.pop("users", {}))
            num_users = int(users_raw.pop("count", 50))
            _reject_unknown("users", users_raw, UserSampler)
            users = UserSampler(**{k: tuple(v) for k, v in users_raw.items()})
            workload = WorkloadSpec(**_section(data, "workload", WorkloadSpec))
            pricing = _enum_section(data, "pricing", "algorithm", "cpto")
            offloading = _enum_section(data, "offloading", "model", "to")
            caching_raw = dict(data.pop("caching", {}))
            strategy = str(caching_raw.pop("strategy", "posc"))
            sizes = caching_raw.pop(
                "program_sizes", [50.0] * system.num_programs)
            if caching_raw:
                raise ConfigError(
                    f"unknown keys in caching: {sorted(caching_raw)}")
            gndrl = GndrlConfig(**_section(data, "gndrl", GndrlConfig))
        except ConfigError:
            raise
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc
        if data:
            raise ConfigError(f"unknown top-level keys: {sorted(data)}")
        return cls(system=system, users=users, workload=workload, gndrl=gndrl,
                   num_users=num_users, pricing=pricing, offloading=offloading,
                   caching=strategy, program_sizes=tuple(sizes), seed=seed,
                   scenario_id=scenario_id)

    @classmethod
    def from_json(cls, path: str) -> "ScenarioConfig":
        with open(path) as fh:
            try:
                raw = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"invalid JSON in {path}: {exc}") from exc
        if not isinstance(raw, dict):
            raise ConfigError("config root must be a JSON object")
        return cls.from_dict(raw)

    def save_json(self, path: str) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")

    def with_overrides(self, assignments: Sequence[str]) -> "ScenarioConfig":
        """Apply ``section.key=value`` overrides (values parsed as JSON)."""
        tree = self.to_dict()
        for item in assignments:
            if "=" not in item:
                raise ConfigError(f"override must look like key=value: {item!r}")
            path, text = item.split("=", 1)
            keys = path.strip().split(".")
            node: Any = tree
            for key in keys[:-1]:
                if not isinstance(node, dict) or key not in node:
                    raise ConfigError(f"unknown config key: {path!r}")
                node = node[key]
            leaf = keys[-1]
            if not isinstance(node, dict) or leaf not in node:
                raise ConfigError(f"unknown config key: {path!r}")
            try:
                node[leaf] = json.loads(text)
            except json.JSONDecodeError:
                node[leaf] = text  # bare strings: drift=rotate
        return ScenarioConfig.from_dict(tree)


def _section(data: dict, name: str, cls: type) -> dict[str, Any]:
    raw = dict(data.pop(name, {}))
    _reject_unknown(name, raw, cls)
    return raw


def _reject_unknown(name: str, raw: Mapping[str, Any], cls: type) -> None:
    known = {f.name for f in fields(cls)}
    unknown = sorted(set(raw) - known)
    if unknown:
        raise ConfigError(f"unknown keys in {name}: {unknown}")


def _enum_section(data: dict, name: str, key: str, default: str) -> str:
    raw = dict(data.pop(name, {}))
    value = str(raw.pop(key, default))
    if raw:
        raise ConfigError(f"unknown keys in {name}: {sorted(raw)}")
    return value


def default_config() -> ScenarioConfig:
    """The stock scenario: Table-1 parameters, 50 users, CPTO, POSC caching."""
    return ScenarioConfig()
