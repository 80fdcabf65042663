"""Experiment orchestration: scenarios, sweeps, metrics files.

``run_scenario`` turns one validated config into a metrics table: it builds
the workload, picks caching masks with the selected strategy, and plays the
per-slot pricing/offloading games frame by frame. ``sweep`` repeats a
scenario along one axis. Emitters write metrics as CSV or JSON; wall-clock
pricing times go to a separate timing file so metrics files are byte-stable
across runs of the same (config, seed).

RNG discipline: the master seed fans out into independently keyed
sub-streams (workload, channel, agent, baseline, pricer), so adding a
consumer never perturbs the draws of existing ones.
"""
from __future__ import annotations

import csv
import json
import os
from dataclasses import dataclass
from typing import Any, Sequence

import numpy as np

from .caching import CachingEnv, GndrlResult, posc, run_gndrl, stsc
from .config import ConfigError, ScenarioConfig
from .model import CachingDecision, OffloadProfile, PriceVector, bs_frame_utility
from .stage1 import (PricingTimer, SlotMarket, evaluate_slot, respond,
                     stackelberg_equilibrium)
from .stage2 import FrequencyDistribution, PopularityVector, baseline_profile
from .workload import (FrameWorkload, estimate_popularity, ingest_trace,
                       parse_trace_file, synth_workload)

SUBSTREAMS = {"workload": 0, "channel": 1, "agent": 2, "baseline": 3, "pricer": 4}

SWEEP_AXES = ("M", "F", "Z", "pricer", "caching")

_AXIS_KEYS = {
    "M": "users.count",
    "F": "system.edge_freq_hz",
    "Z": "system.cache_capacity",
    "pricer": "pricing.algorithm",
    "caching": "caching.strategy",
}

METRIC_COLUMNS = (
    "scenario_id", "frame", "slot", "pricing", "offloading", "caching",
    "bs_payment", "bs_frame_utility", "mean_user_cost", "mean_payment",
    "mean_delay", "offloader_count",
)


def substream(seed: int, name: str) -> np.random.Generator:
    """Named child generator of the master seed (registry-keyed, stable)."""
    if name not in SUBSTREAMS:
        raise KeyError(f"unknown substream: {name!r}")
    seq = np.random.SeedSequence(entropy=seed, spawn_key=(SUBSTREAMS[name],))
    return np.random.default_rng(seq)


@dataclass(frozen=True)
class MetricsRow:
    """One (frame, slot) of one run."""

    scenario_id: str
    frame: int
    slot: int
    pricing: str
    offloading: str
    caching: str
    bs_payment: float
    bs_frame_utility: float
    mean_user_cost: float
    mean_payment: float
    mean_delay: float
    offloader_count: int
    wall_clock_pricing_s: float

    def __post_init__(self) -> None:
        for name in ("bs_payment", "bs_frame_utility", "mean_user_cost",
                     "mean_payment", "mean_delay", "wall_clock_pricing_s"):
            if not np.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")


@dataclass
class ScenarioResult:
    config: ScenarioConfig
    rows: list[MetricsRow]
    frame_utilities: np.ndarray
    masks: list[CachingDecision]
    summary: dict[str, Any]
    learning_curve: np.ndarray | None = None   # columns: episode, return, greedy
    gndrl: GndrlResult | None = None
    workload_stats: dict[str, int] | None = None

    @property
    def total_profit(self) -> float:
        return float(self.frame_utilities.sum())


def build_workload(config: ScenarioConfig,
                   rng_workload: np.random.Generator,
                   rng_channel: np.random.Generator,
                   ) -> tuple[list[FrameWorkload], dict[str, int] | None]:
    """Frames from the configured source (synthetic Zipf stream or trace)."""
    p = config.system
    if config.workload.source == "synthetic":
        frames = synth_workload(
            num_programs=p.num_programs, zipf_s=config.workload.zipf_s,
            drift=config.workload.drift, users_per_slot=config.num_users,
            num_frames=p.num_frames, num_slots=p.num_slots,
            sampler=config.users, rng_params=rng_workload,
            rng_channel=rng_channel)
        return frames, None
    records, diagnostics = parse_trace_file(config.workload.trace_path)
    program_map = map_jobs_to_programs(records, p.num_programs)
    frames, stats = ingest_trace(
        records, config.workload.frame_len_s, config.workload.slot_len_s,
        program_map, p.num_programs, config.users, rng_workload, rng_channel)
    stats = dict(stats)
    stats["parse_errors"] = len(diagnostics)
    return frames, stats


def map_jobs_to_programs(records: Sequence, num_programs: int) -> dict[int, int]:
    """Top-N job ids by request count (ties to the smaller id) become programs."""
    counts: dict[int, int] = {}
    for rec in records:
        counts[rec.job_id] = counts.get(rec.job_id, 0) + 1
    ranked = sorted(counts, key=lambda job: (-counts[job], job))
    return {job: n for n, job in enumerate(ranked[:num_programs])}


def popularity_estimates(frames: Sequence[FrameWorkload],
                         num_programs: int) -> list[PopularityVector]:
    """Common-knowledge estimate per frame: previous-two-frames average."""
    out = []
    for i in range(len(frames)):
        prev1 = frames[i - 1].counts if i >= 1 else None
        prev2 = frames[i - 2].counts if i >= 2 else None
        out.append(estimate_popularity(prev1, prev2, num_programs))
    return out


def _caching_plan(
    config: ScenarioConfig,
    frames: list[FrameWorkload],
    estimates: list[PopularityVector],
    freq_dist: FrequencyDistribution,
    rng_agent: np.random.Generator,
) -> tuple[list[CachingDecision], GndrlResult | None, CachingEnv | None]:
    sizes = np.asarray(config.program_sizes)
    capacity = config.system.cache_capacity
    if config.caching == "posc":
        return [posc(y, sizes, capacity) for y in estimates], None, None
    if config.caching == "stsc":
        return stsc(posc(estimates[0], sizes, capacity), len(frames)), None, None
    env = CachingEnv(frames, estimates, sizes, freq_dist, config.system,
                     pricer=config.pricing, penalty_rho=config.gndrl.penalty_rho,
                     seed=config.seed)
    result = run_gndrl(env, config.gndrl, rng_agent)
    masks = [CachingDecision.from_code(a, sizes) for a in result.greedy_actions]
    return masks, result, env


def run_scenario(config: ScenarioConfig) -> ScenarioResult:
    """Play the configured scenario end to end; pure function of (config, seed)."""
    p = config.system
    rng_workload = substream(config.seed, "workload")
    rng_channel = substream(config.seed, "channel")
    rng_agent = substream(config.seed, "agent")
    rng_baseline = substream(config.seed, "baseline")
    rng_pricer = substream(config.seed, "pricer")

    frames, workload_stats = build_workload(config, rng_workload, rng_channel)
    estimates = popularity_estimates(frames, p.num_programs)
    freq_dist = FrequencyDistribution(*config.users.cpu_freq_hz)
    masks, gndrl_result, env = _caching_plan(
        config, frames, estimates, freq_dist, rng_agent)

    rows: list[MetricsRow] = []
    frame_utilities = np.zeros(len(frames))
    timer = PricingTimer()
    static_prices: PriceVector | None = None  # ltsp: first slot prices reused
    converged_slots = 0
    total_slots = 0

    for j, frame in enumerate(frames):
        caching_now = masks[j]
        caching_prev = masks[j - 1] if j >= 1 else CachingDecision(
            np.zeros(p.num_programs, dtype=np.int8), np.asarray(config.program_sizes))
        slot_payments: list[float] = []
        per_program = np.zeros(p.num_programs)
        frame_rows: list[dict[str, Any]] = []

        for t, slot in enumerate(frame.slots):
            market = SlotMarket(slot.users, slot.tasks, slot.programs,
                                caching_now, estimates[j], freq_dist, p)
            before = timer.seconds
            if config.pricing == "ltsp":
                if static_prices is None:
                    eq = stackelberg_equilibrium(market, "cpto",
                                                 rng=rng_pricer, timer=timer)
                    static_prices = eq.prices
                    converged_slots += eq.converged
                else:
                    converged_slots += 1
                prices = static_prices
                profile, _ = respond(market, prices)
            else:
                eq = stackelberg_equilibrium(market, config.pricing,
                                             rng=rng_pricer, timer=timer)
                prices, profile = eq.prices, eq.profile
                converged_slots += eq.converged
            pricing_seconds = timer.seconds - before
            total_slots += 1

            if config.offloading != "to":
                alphas = baseline_profile(config.offloading, list(slot.users),
                                          slot.programs, caching_now,
                                          rng=rng_baseline)
                profile = OffloadProfile(alphas)

            outcome = evaluate_slot(market, prices, profile)
            slot_payments.append(outcome.bs_payment)
            per_program += outcome.per_program_payments
            m = slot.num_users
            frame_rows.append({
                "scenario_id": config.scenario_id,
                "frame": j + 1,
                "slot": t + 1,
                "pricing": config.pricing,
                "offloading": config.offloading,
                "caching": config.caching,
                "bs_payment": outcome.bs_payment,
                "mean_user_cost": float(outcome.costs_per_user.mean()) if m else 0.0,
                "mean_payment": float(outcome.payments_per_user.mean()) if m else 0.0,
                "mean_delay": float(outcome.delays_per_user.mean()) if m else 0.0,
                "offloader_count": outcome.offloader_count,
                "wall_clock_pricing_s": pricing_seconds,
            })

        utility = bs_frame_utility(slot_payments, caching_now, caching_prev,
                                   per_program, p.caching_cost_rate)
        frame_utilities[j] = utility
        for rec in frame_rows:
            rows.append(MetricsRow(bs_frame_utility=utility, **rec))

    curve = None
    if gndrl_result is not None:
        episodes = np.arange(1, gndrl_result.episode_returns.size + 1)
        curve = np.column_stack([episodes, gndrl_result.episode_returns,
                                 gndrl_result.greedy_returns])

    summary: dict[str, Any] = {
        "scenario_id": config.scenario_id,
        "seed": config.seed,
        "pricing": config.pricing,
        "offloading": config.offloading,
        "caching": config.caching,
        "num_users": config.num_users,
        "num_frames": len(frames),
        "num_slots_per_frame": p.num_slots,
        "total_bs_payment": float(sum(r.bs_payment for r in rows)),
        "total_profit": float(frame_utilities.sum()),
        "mean_user_cost": (float(np.mean([r.mean_user_cost for r in rows]))
                           if rows else 0.0),
        "mean_delay": (float(np.mean([r.mean_delay for r in rows]))
                       if rows else 0.0),
        "converged_slots": int(converged_slots),
        "total_slots": int(total_slots),
        "cached_masks": [[int(b) for b in mask.mask] for mask in masks],
    }
    if workload_stats is not None:
        summary["workload"] = workload_stats
    if gndrl_result is not None:
        summary["gndrl"] = {
            "episodes": int(config.gndrl.episodes),
            "final_greedy_return": float(gndrl_result.greedy_returns[-1]),
            "reward_cache_hits": int(gndrl_result.reward_cache.hits),
            "reward_cache_misses": int(gndrl_result.reward_cache.misses),
            "equilibrium_calls": int(env.equilibrium_calls),
            "greedy_infeasible_final": int(gndrl_result.greedy_infeasible[-1]),
        }

    return ScenarioResult(config=config, rows=rows,
                          frame_utilities=frame_utilities, masks=masks,
                          summary=summary, learning_curve=curve,
                          gndrl=gndrl_result, workload_stats=workload_stats)


def sweep(config: ScenarioConfig, axis: str,
          values: Sequence[Any]) -> list[ScenarioResult]:
    """Run the scenario once per axis value (same master seed throughout)."""
    if axis not in SWEEP_AXES:
        raise ConfigError(f"axis must be one of {SWEEP_AXES}")
    if not values:
        raise ConfigError("sweep needs at least one value")
    results = []
    for value in values:
        point = config.with_overrides([f"{_AXIS_KEYS[axis]}={value}"])
        point = ScenarioConfig.from_dict({
            **point.to_dict(), "scenario_id": f"{config.scenario_id}[{axis}={value}]",
        })
        results.append(run_scenario(point))
    return results


# -- emission ---------------------------------------------------------------


def _cell(value: Any) -> str:
    """Deterministic text form: shortest round-trip repr for floats."""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _row_record(row: MetricsRow, tags: dict[str, Any] | None) -> dict[str, Any]:
    rec = {name: getattr(row, name) for name in METRIC_COLUMNS}
    if tags:
        rec.update(tags)
    return rec


def write_metrics(rows: Sequence[MetricsRow], path: str, fmt: str = "csv",
                  tags: dict[str, Any] | None = None) -> None:
    """Metrics table as CSV or JSON. Wall-clock fields are deliberately absent."""
    records = [_row_record(r, tags) for r in rows]
    columns = list(METRIC_COLUMNS) + (sorted(tags) if tags else [])
    if fmt == "csv":
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(columns)
            for rec in records:
                writer.writerow([_cell(rec[c]) for c in columns])
    elif fmt == "json":
        with open(path, "w") as fh:
            json.dump(records, fh, indent=2, sort_keys=True)
            fh.write("\n")
    else:
        raise ConfigError(f"unknown metrics format: {fmt!r}")


def write_timing(rows: Sequence[MetricsRow], path: str) -> None:
    """Per-slot pricing wall-clock (seconds); kept out of the metrics files."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["scenario_id", "frame", "slot", "pricing",
                         "wall_clock_pricing_s"])
        for r in rows:
            writer.writerow([r.scenario_id, r.frame, r.slot, r.pricing,
                             repr(r.wall_clock_pricing_s)])


def write_summary(summary: dict[str, Any], path: str) -> None:
    with open(path, "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_learning_curve(curve: np.ndarray, path: str) -> None:
    """(episode, return, greedy_return) rows."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["episode", "return", "greedy_return"])
        for episode, ret, greedy in curve:
            writer.writerow([int(episode), repr(float(ret)), repr(float(greedy))])


def emit(result: ScenarioResult, out_dir: str, fmt: str = "csv") -> list[str]:
    """Write one scenario's files into ``out_dir``; returns the paths."""
    os.makedirs(out_dir, exist_ok=True)
    ext = "csv" if fmt == "csv" else "json"
    paths = []
    metrics_path = os.path.join(out_dir, f"metrics.{ext}")
    write_metrics(result.rows, metrics_path, fmt)
    paths.append(metrics_path)
    summary_path = os.path.join(out_dir, "summary.json")
    write_summary(result.summary, summary_path)
    paths.append(summary_path)
    timing_path = os.path.join(out_dir, "timing.csv")
    write_timing(result.rows, timing_path)
    paths.append(timing_path)
    if result.learning_curve is not None:
        curve_path = os.path.join(out_dir, "learning_curve.csv")
        write_learning_curve(result.learning_curve, curve_path)
        paths.append(curve_path)
    return paths


def emit_sweep(results: Sequence[ScenarioResult], axis: str,
               values: Sequence[Any], out_dir: str, fmt: str = "csv") -> list[str]:
    """Write the combined sweep table plus one summary block per point."""
    os.makedirs(out_dir, exist_ok=True)
    ext = "csv" if fmt == "csv" else "json"
    records: list[dict[str, Any]] = []
    for value, result in zip(values, results):
        tags = {"axis": axis, "axis_value": value}
        records.extend(_row_record(r, tags) for r in result.rows)
    columns = list(METRIC_COLUMNS) + ["axis", "axis_value"]
    paths = []
    metrics_path = os.path.join(out_dir, f"sweep_metrics.{ext}")
    if fmt == "csv":
        with open(metrics_path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(columns)
            for rec in records:
                writer.writerow([_cell(rec[c]) for c in columns])
    elif fmt == "json":
        with open(metrics_path, "w") as fh:
            json.dump(records, fh, indent=2, sort_keys=True)
            fh.write("\n")
    else:
        raise ConfigError(f"unknown metrics format: {fmt!r}")
    paths.append(metrics_path)
    summary_path = os.path.join(out_dir, "sweep_summary.json")
    write_summary({"axis": axis,
                   "points": [{"value": v, **r.summary}
                              for v, r in zip(values, results)]},
                  summary_path)
    paths.append(summary_path)
    timing_path = os.path.join(out_dir, "sweep_timing.csv")
    all_rows = [row for r in results for row in r.rows]
    write_timing(all_rows, timing_path)
    paths.append(timing_path)
    return paths
