"""Workloads: popularity estimation, trace ingestion, synthetic generation.

A workload is a sequence of frames; each frame holds ``T`` slots of requests,
where a request is one (user, task, program) triple, plus the per-program
request counts of the frame. Request counts drive popularity estimation:
the market's common-knowledge estimate for frame ``j`` averages the counts
of the previous two frames (uniform for the first two frames).

Trace files are delimiter-separated text, one record per line, columns
``timestamp,job_id,task_id,cpu,param_size`` (header optional): timestamp in
seconds, job_id selecting the program, cpu in cycles and param_size in bits
(either may be empty, in which case task parameters are sampled from the
configured ranges). Time bins are half-open: a record at exactly the frame
boundary opens the next frame.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .model import BITS_PER_KB, Task, UserProfile
from .stage2 import PopularityVector


@dataclass(frozen=True)
class TraceRecord:
    """One parsed trace line."""

    timestamp_s: float
    job_id: int
    task_id: int
    cpu_cycles: float | None = None
    param_size_bits: float | None = None

    def __post_init__(self) -> None:
        if self.timestamp_s < 0:
            raise ValueError("timestamp must be nonnegative")
        if self.cpu_cycles is not None and self.cpu_cycles <= 0:
            raise ValueError("cpu_cycles must be positive when present")
        if self.param_size_bits is not None and self.param_size_bits <= 0:
            raise ValueError("param_size must be positive when present")


@dataclass(frozen=True)
class SlotLoad:
    """Requests of one slot: parallel tuples of users, tasks and programs."""

    users: tuple[UserProfile, ...]
    tasks: tuple[Task, ...]
    programs: np.ndarray

    def __post_init__(self) -> None:
        programs = np.asarray(self.programs, dtype=np.int64)
        object.__setattr__(self, "programs", programs)
        if len(self.users) != len(self.tasks) or len(self.users) != programs.size:
            raise ValueError("users, tasks and programs must have equal length")

    @property
    def num_users(self) -> int:
        return len(self.users)


@dataclass(frozen=True)
class FrameWorkload:
    """One frame: its slots and the per-program request counts."""

    slots: tuple[SlotLoad, ...]
    counts: np.ndarray

    def __post_init__(self) -> None:
        counts = np.asarray(self.counts, dtype=np.int64)
        object.__setattr__(self, "counts", counts)
        object.__setattr__(self, "slots", tuple(self.slots))
        total = np.zeros_like(counts)
        for slot in self.slots:
            if slot.programs.size:
                np.add.at(total, slot.programs, 1)
        if not np.array_equal(total, counts):
            raise ValueError("counts must equal the per-program request totals")

    @property
    def num_slots(self) -> int:
        return len(self.slots)


def estimate_popularity(
    prev1: np.ndarray | None, prev2: np.ndarray | None, num_programs: int
) -> PopularityVector:
    """Two-frame average popularity estimate; uniform on cold start."""
    if prev1 is None or prev2 is None:
        return PopularityVector.uniform(num_programs)
    total = np.asarray(prev1, dtype=np.float64) + np.asarray(prev2, dtype=np.float64)
    if (total < 0).any():
        raise ValueError("counts must be nonnegative")
    s = float(total.sum())
    if s == 0.0:
        return PopularityVector.uniform(num_programs)
    return PopularityVector(total / s)


def true_popularity(counts: np.ndarray) -> PopularityVector:
    """Realized request shares of one frame; uniform if the frame is empty."""
    counts = np.asarray(counts, dtype=np.float64)
    s = float(counts.sum())
    if s == 0.0:
        return PopularityVector.uniform(counts.size)
    return PopularityVector(counts / s)


@dataclass(frozen=True)
class UserSampler:
    """Draws user and task parameters from configured uniform ranges.

    Radio/compute parameters come from ``rng_params``; the per-slot fading
    draw comes from ``rng_channel`` so channel randomness is its own stream.
    """

    power_w: tuple[float, float] = (0.08, 0.2)
    distance_m: tuple[float, float] = (100.0, 1000.0)
    cpu_freq_hz: tuple[float, float] = (0.5e6, 4e6)
    data_kb: tuple[float, float] = (200.0, 1000.0)
    cycles_per_bit: tuple[float, float] = (800.0, 2000.0)

    def sample_user(
        self, rng_params: np.random.Generator, rng_channel: np.random.Generator
    ) -> UserProfile:
        return UserProfile(
            transmit_power_w=rng_params.uniform(*self.power_w),
            distance_m=rng_params.uniform(*self.distance_m),
            fading=rng_channel.exponential(1.0),
            cpu_freq_hz=rng_params.uniform(*self.cpu_freq_hz),
        )

    def sample_task(
        self,
        rng_params: np.random.Generator,
        cpu_cycles: float | None = None,
        param_size_bits: float | None = None,
    ) -> Task:
        bits = param_size_bits
        if bits is None:
            bits = rng_params.uniform(*self.data_kb) * BITS_PER_KB
        if cpu_cycles is None:
            beta = rng_params.uniform(*self.cycles_per_bit)
        else:
            beta = cpu_cycles / bits
        return Task(data_bits=bits, cycles_per_bit=beta)


def parse_trace_file(path: str) -> tuple[list[TraceRecord], list[str]]:
    """Parse a trace file; returns (records, per-line diagnostics for skips)."""
    records: list[TraceRecord] = []
    diagnostics: list[str] = []
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            row = [cell.strip() for cell in row]
            if not row or not any(row):
                continue
            if lineno == 1 and not _is_number(row[0]):
                continue  # header
            if len(row) != 5:
                diagnostics.append(f"line {lineno}: expected 5 columns, got {len(row)}")
                continue
            try:
                records.append(TraceRecord(
                    timestamp_s=float(row[0]),
                    job_id=int(row[1]),
                    task_id=int(row[2]),
                    cpu_cycles=float(row[3]) if row[3] else None,
                    param_size_bits=float(row[4]) if row[4] else None,
                ))
            except (TypeError, ValueError) as exc:
                diagnostics.append(f"line {lineno}: {exc}")
    return records, diagnostics


def _is_number(text: str) -> bool:
    try:
        float(text)
    except ValueError:
        return False
    return True


def ingest_trace(
    records: Iterable[TraceRecord],
    frame_len_s: float,
    slot_len_s: float,
    program_map: dict[int, int],
    num_programs: int,
    sampler: UserSampler,
    rng_params: np.random.Generator,
    rng_channel: np.random.Generator,
) -> tuple[list[FrameWorkload], dict[str, int]]:
    """Bin trace records into frames and slots, one user per record.

    ``program_map`` sends job ids to program indices; unmapped records are
    dropped (counted in the returned stats). Raises if nothing remains.
    """
    if frame_len_s <= 0 or slot_len_s <= 0:
        raise ValueError("frame and slot lengths must be positive")
    slots_per_frame = round(frame_len_s / slot_len_s)
    if abs(slots_per_frame * slot_len_s - frame_len_s) > 1e-9 * frame_len_s:
        raise ValueError("slot_len must divide frame_len")

    all_records = sorted(records, key=lambda r: r.timestamp_s)
    kept = [r for r in all_records if r.job_id in program_map]
    dropped = len(all_records) - len(kept)
    if not kept:
        raise ValueError("no trace records matched the program selection")
    binned: dict[tuple[int, int], list[TraceRecord]] = {}
    for rec in kept:
        frame = int(rec.timestamp_s // frame_len_s)
        slot = int((rec.timestamp_s - frame * frame_len_s) // slot_len_s)
        slot = min(slot, slots_per_frame - 1)
        binned.setdefault((frame, slot), []).append(rec)

    num_frames = max(f for f, _ in binned) + 1
    frames: list[FrameWorkload] = []
    for j in range(num_frames):
        slot_loads = []
        counts = np.zeros(num_programs, dtype=np.int64)
        for t in range(slots_per_frame):
            users, tasks, progs = [], [], []
            for rec in binned.get((j, t), ()):
                users.append(sampler.sample_user(rng_params, rng_channel))
                tasks.append(sampler.sample_task(
                    rng_params, cpu_cycles=rec.cpu_cycles,
                    param_size_bits=rec.param_size_bits,
                ))
                progs.append(program_map[rec.job_id])
            slot_loads.append(SlotLoad(tuple(users), tuple(tasks),
                                       np.array(progs, dtype=np.int64)))
            if progs:
                np.add.at(counts, np.array(progs), 1)
        frames.append(FrameWorkload(tuple(slot_loads), counts))
    stats = {"input": len(all_records), "kept": len(kept), "dropped": dropped}
    return frames, stats


def zipf_probabilities(num_programs: int, s: float) -> np.ndarray:
    """Zipf rank probabilities: p_k proportional to (k+1)**(-s)."""
    ranks = np.arange(1, num_programs + 1, dtype=np.float64)
    w = ranks ** (-s)
    return w / w.sum()


def drift_permutation(
    kind: str, frame_index: int, num_programs: int, rng: np.random.Generator
) -> np.ndarray:
    """Rank-to-program mapping for one frame.

    ``none`` keeps rank k on program k; ``rotate`` shifts the mapping by one
    program per frame; ``shuffle`` draws a fresh permutation per frame.
    """
    if kind == "none":
        return np.arange(num_programs)
    if kind == "rotate":
        return (np.arange(num_programs) + frame_index) % num_programs
    if kind == "shuffle":
        return rng.permutation(num_programs)
    raise ValueError(f"unknown drift kind: {kind!r}")


def synth_workload(
    num_programs: int,
    zipf_s: float,
    drift: str,
    users_per_slot: int,
    num_frames: int,
    num_slots: int,
    sampler: UserSampler,
    rng_params: np.random.Generator,
    rng_channel: np.random.Generator,
) -> list[FrameWorkload]:
    """Synthetic workload: Zipf program popularity with optional drift."""
    if users_per_slot < 0:
        raise ValueError("users_per_slot must be nonnegative")
    probs = zipf_probabilities(num_programs, zipf_s)
    frames: list[FrameWorkload] = []
    for j in range(num_frames):
        perm = drift_permutation(drift, j, num_programs, rng_params)
        counts = np.zeros(num_programs, dtype=np.int64)
        slot_loads = []
        for _ in range(num_slots):
            ranks = rng_params.choice(num_programs, size=users_per_slot, p=probs)
            progs = perm[ranks]
            users = tuple(sampler.sample_user(rng_params, rng_channel)
                          for _ in range(users_per_slot))
            tasks = tuple(sampler.sample_task(rng_params)
                          for _ in range(users_per_slot))
            slot_loads.append(SlotLoad(users, tasks, progs.astype(np.int64)))
            if progs.size:
                np.add.at(counts, progs, 1)
        frames.append(FrameWorkload(tuple(slot_loads), counts))
    return frames
