"""Workload generation: popularity estimates, trace parsing, Zipf synthesis."""
import numpy as np
import pytest

from mecmarket.workload import (FrameWorkload, SlotLoad, TraceRecord,
                                UserSampler, drift_permutation,
                                estimate_popularity, ingest_trace,
                                parse_trace_file, synth_workload,
                                true_popularity, zipf_probabilities)


def test_estimate_popularity_cold_start_and_average():
    assert np.array_equal(estimate_popularity(None, None, 4).values,
                          np.full(4, 0.25))
    assert np.array_equal(estimate_popularity(np.array([1, 2, 3, 4]), None,
                                              4).values, np.full(4, 0.25))
    est = estimate_popularity(np.array([3, 1, 0, 0]),
                              np.array([1, 3, 0, 0]), 4)
    np.testing.assert_allclose(est.values, [0.5, 0.5, 0.0, 0.0])
    assert est.values.sum() == pytest.approx(1.0, abs=1e-12)
    # both frames empty: fall back to uniform rather than divide by zero
    assert np.array_equal(estimate_popularity(np.zeros(4), np.zeros(4),
                                              4).values, np.full(4, 0.25))
    with pytest.raises(ValueError):
        estimate_popularity(np.array([-1, 2, 0, 0]), np.zeros(4), 4)


def test_estimate_popularity_sums_to_one():
    rng = np.random.default_rng(31)
    for _ in range(100):
        n = int(rng.integers(2, 12))
        a = rng.integers(0, 50, size=n)
        b = rng.integers(0, 50, size=n)
        est = estimate_popularity(a, b, n)
        assert est.values.sum() == pytest.approx(1.0, abs=1e-12)
        assert (est.values >= 0).all()


def test_true_popularity():
    np.testing.assert_allclose(true_popularity(np.array([1, 1, 2])).values,
                               [0.25, 0.25, 0.5])
    assert np.array_equal(true_popularity(np.zeros(3)).values, np.full(3, 1 / 3))


def test_parse_trace_file(tmp_path):
    p = tmp_path / "trace.csv"
    p.write_text(
        "timestamp,job_id,task_id,cpu,param_size\n"
        "0.0,7,1,1e9,8e6\n"
        "25.0,7,2,,\n"
        "50.0,9,1,2e9,4e6\n"
        "bad,row\n"
        "120.0,9,2,-5,1\n"
        "\n"
        "340.0,11,1,1e9,8e6\n"
    )
    records, diags = parse_trace_file(str(p))
    assert len(records) == 4
    assert len(diags) == 2  # short row + negative cpu
    assert records[1].cpu_cycles is None and records[1].param_size_bits is None
    assert records[0].job_id == 7 and records[0].task_id == 1

    # headerless variant parses the same body
    q = tmp_path / "bare.csv"
    q.write_text("0.0,7,1,1e9,8e6\n25.0,7,2,,\n")
    recs2, diags2 = parse_trace_file(str(q))
    assert len(recs2) == 2 and not diags2


def test_ingest_trace_binning_and_conservation(tmp_path):
    rng_p, rng_c = np.random.default_rng(1), np.random.default_rng(2)
    sampler = UserSampler()
    records = [
        TraceRecord(0.0, 7, 1),                 # frame 0, slot 0
        TraceRecord(19.999, 7, 2),              # frame 0, slot 0
        TraceRecord(20.0, 9, 1),                # frame 0, slot 1 (half-open)
        TraceRecord(99.999, 9, 2),              # frame 0, slot 4
        TraceRecord(100.0, 7, 3),               # frame 1, slot 0
        TraceRecord(55.0, 999, 1),              # unmapped: dropped
    ]
    program_map = {7: 0, 9: 2}
    frames, stats = ingest_trace(records, 100.0, 20.0, program_map, 4,
                                 sampler, rng_p, rng_c)
    assert stats == {"input": 6, "kept": 5, "dropped": 1}
    assert stats["kept"] + stats["dropped"] == stats["input"]
    assert len(frames) == 2
    assert frames[0].num_slots == 5
    assert frames[0].slots[0].num_users == 2
    assert frames[0].slots[1].num_users == 1
    assert frames[0].slots[4].num_users == 1
    np.testing.assert_array_equal(frames[0].counts, [2, 0, 2, 0])
    np.testing.assert_array_equal(frames[1].counts, [1, 0, 0, 0])
    total_users = sum(s.num_users for f in frames for s in f.slots)
    assert total_users == stats["kept"]

    with pytest.raises(ValueError):
        ingest_trace(records, 100.0, 30.0, program_map, 4, sampler,
                     rng_p, rng_c)  # 30 does not divide 100
    with pytest.raises(ValueError):
        ingest_trace(records, 100.0, 20.0, {123: 0}, 4, sampler, rng_p, rng_c)


def test_ingest_trace_respects_supplied_task_fields():
    rng_p, rng_c = np.random.default_rng(3), np.random.default_rng(4)
    sampler = UserSampler()
    records = [TraceRecord(0.0, 7, 1, cpu_cycles=5e9, param_size_bits=8e6)]
    frames, _ = ingest_trace(records, 100.0, 20.0, {7: 0}, 4, sampler,
                             rng_p, rng_c)
    task = frames[0].slots[0].tasks[0]
    assert task.data_bits == 8e6
    assert task.cycles == pytest.approx(5e9)


def test_zipf_probabilities():
    p = zipf_probabilities(4, 0.0)
    np.testing.assert_allclose(p, np.full(4, 0.25))
    p = zipf_probabilities(5, 1.2)
    assert p.sum() == pytest.approx(1.0, rel=1e-12)
    assert (np.diff(p) < 0).all()
    # log-log slope of the rank-frequency curve tracks -s
    rng = np.random.default_rng(32)
    draws = rng.choice(5, size=10_000, p=zipf_probabilities(5, 1.2))
    freq = np.bincount(draws, minlength=5) / 10_000
    slope = np.polyfit(np.log(np.arange(1, 6)), np.log(freq), 1)[0]
    assert slope == pytest.approx(-1.2, abs=0.1)


def test_drift_permutation():
    rng = np.random.default_rng(33)
    np.testing.assert_array_equal(drift_permutation("none", 3, 4, rng),
                                  np.arange(4))
    np.testing.assert_array_equal(drift_permutation("rotate", 1, 4, rng),
                                  [1, 2, 3, 0])
    np.testing.assert_array_equal(drift_permutation("rotate", 4, 4, rng),
                                  np.arange(4))
    shuf = drift_permutation("shuffle", 0, 6, np.random.default_rng(5))
    assert sorted(shuf) == list(range(6))
    with pytest.raises(ValueError):
        drift_permutation("jitter", 0, 4, rng)


def test_synth_workload_shape_and_determinism():
    sampler = UserSampler()
    frames = synth_workload(4, 1.0, "none", 6, 3, 2, sampler,
                            np.random.default_rng(7), np.random.default_rng(8))
    assert len(frames) == 3
    for f in frames:
        assert f.num_slots == 2
        assert all(s.num_users == 6 for s in f.slots)
        assert f.counts.sum() == 12
    again = synth_workload(4, 1.0, "none", 6, 3, 2, sampler,
                           np.random.default_rng(7), np.random.default_rng(8))
    for f, g in zip(frames, again):
        np.testing.assert_array_equal(f.counts, g.counts)
        for s, t in zip(f.slots, g.slots):
            np.testing.assert_array_equal(s.programs, t.programs)
            assert s.users == t.users and s.tasks == t.tasks


def test_synth_workload_zipf_skews_counts():
    sampler = UserSampler()
    frames = synth_workload(4, 2.0, "none", 50, 8, 5, sampler,
                            np.random.default_rng(9), np.random.default_rng(10))
    total = sum(f.counts for f in frames)
    assert total[0] > total[-1]  # heavy head under strong skew
    assert total.sum() == 8 * 5 * 50


def test_frame_workload_counts_must_match_slots():
    sampler = UserSampler()
    rng_p, rng_c = np.random.default_rng(11), np.random.default_rng(12)
    users = tuple(sampler.sample_user(rng_p, rng_c) for _ in range(2))
    tasks = tuple(sampler.sample_task(rng_p) for _ in range(2))
    slot = SlotLoad(users, tasks, np.array([0, 1]))
    FrameWorkload((slot,), np.array([1, 1, 0, 0]))
    with pytest.raises(ValueError):
        FrameWorkload((slot,), np.array([2, 0, 0, 0]))


def test_user_sampler_ranges():
    sampler = UserSampler()
    rng_p, rng_c = np.random.default_rng(13), np.random.default_rng(14)
    for _ in range(200):
        u = sampler.sample_user(rng_p, rng_c)
        assert 0.08 <= u.transmit_power_w <= 0.2
        assert 100 <= u.distance_m <= 1000
        assert 0.5e6 <= u.cpu_freq_hz <= 4e6
        assert u.fading > 0
        t = sampler.sample_task(rng_p)
        assert 200 * 8 * 1024 <= t.data_bits <= 1000 * 8 * 1024
        assert 800 <= t.cycles_per_bit <= 2000
