"""Emulated-link behavior: delay statistics, determinism, ordering, conservation."""

import numpy as np
import pytest

from teleus.netsim import MIN_DELAY_MS, EmulatedLink, NetworkPreset, preset


def drain(link, horizon_us=10**12):
    return link.poll_with_times(horizon_us)


def test_certain_loss_delivers_nothing():
    link = EmulatedLink(NetworkPreset(drop_prob=1.0, jitter_sd_ms=1.0, mean_one_way_delay_ms=5.0))
    for i in range(100):
        link.send(f"m{i}", now_us=i * 1000, channel=0)
    assert drain(link) == []
    assert link.stats.dropped[0] == 100


def test_zero_jitter_is_exact_delay():
    link = EmulatedLink(NetworkPreset(mean_one_way_delay_ms=2.9))
    for i in range(50):
        link.send(i, now_us=i * 10_000, channel=0)
    for t, msg in drain(link):
        assert t - msg * 10_000 == 2900


def test_poll_threshold_crossing():
    link = EmulatedLink(NetworkPreset(mean_one_way_delay_ms=2.9))
    link.send("x", now_us=0, channel=0)
    assert link.poll(2800) == []
    assert link.poll(3000) == ["x"]
    assert link.poll(10_000) == []


def test_poll_before_send_empty():
    link = EmulatedLink(NetworkPreset())
    assert link.poll(10**9) == []


def test_ideal_preset_zero_delay():
    link = EmulatedLink(preset("ideal"))
    link.send("x", now_us=123, channel=0)
    assert link.poll(123) == ["x"]


def test_seeded_schedule_reproducible():
    def trace(seed):
        link = EmulatedLink(NetworkPreset(3.0, 1.5, 0.1, seed=seed))
        for i in range(500):
            link.send(i, now_us=i * 1000, channel=i % 3)
        return drain(link)

    assert trace(42) == trace(42)
    assert trace(42) != trace(43)


def test_conservation_per_channel():
    link = EmulatedLink(NetworkPreset(3.0, 2.0, 0.3, seed=7))
    sent = {0: 0, 1: 0}
    for i in range(2000):
        ch = i % 2
        link.send(i, now_us=i * 100, channel=ch)
        sent[ch] += 1
    drain(link)
    for ch in (0, 1):
        assert link.stats.sent[ch] == sent[ch]
        assert link.stats.delivered.get(ch, 0) + link.stats.dropped.get(ch, 0) == sent[ch]


def test_fifo_when_reorder_disallowed():
    link = EmulatedLink(NetworkPreset(2.0, 5.0, seed=3, allow_reorder=False))
    for i in range(3000):
        link.send(i, now_us=i * 200, channel=0)
    got = [m for _, m in drain(link)]
    assert got == sorted(got)


def test_reorder_possible_when_allowed():
    link = EmulatedLink(NetworkPreset(2.0, 5.0, seed=3, allow_reorder=True))
    for i in range(3000):
        link.send(i, now_us=i * 200, channel=0)
    got = [m for _, m in drain(link)]
    assert got != sorted(got)


def test_sampled_delay_clamped_at_floor():
    link = EmulatedLink(NetworkPreset(0.0, 0.5, seed=1))  # most samples would be negative
    for i in range(200):
        link.send(i, now_us=0, channel=0)
    delays = [t for t, _ in drain(link)]
    assert min(delays) >= MIN_DELAY_MS * 1000


def test_wifi_statistical_fidelity():
    cfg = preset("wifi", seed=99)
    link = EmulatedLink(cfg)
    n = 10_000
    for i in range(n):
        link.send(i, now_us=i * 10_000, channel=None)  # 100 Hz send schedule
    delays_ms = np.array([t - m * 10_000 for t, m in drain(link)]) / 1000.0
    assert abs(delays_ms.mean() - cfg.mean_one_way_delay_ms) <= 0.05 * cfg.mean_one_way_delay_ms
    assert abs(delays_ms.std(ddof=1) - cfg.jitter_sd_ms) <= 0.10 * cfg.jitter_sd_ms


def test_preset_values():
    assert preset("wifi").mean_one_way_delay_ms == 2.9
    assert preset("wifi").jitter_sd_ms == 1.65
    assert preset("5g").mean_one_way_delay_ms == 20.0
    assert preset("5g").jitter_sd_ms == 5.0
    with pytest.raises(KeyError):
        preset("lte")


def test_invalid_preset_fields():
    with pytest.raises(ValueError):
        NetworkPreset(mean_one_way_delay_ms=-1.0)
    with pytest.raises(ValueError):
        NetworkPreset(drop_prob=1.5)
