"""Deterministic seedable one-way link emulator: delay, jitter, loss, reorder.

Delays are Gaussian per message (clamped at MIN_DELAY_MS when jitter > 0);
with jitter 0 the configured mean is applied exactly, so the "ideal" preset
really is zero-delay. Presets are one-way figures: measured round-trip
latencies of 5.8 +/- 3.3 ms (WiFi) and 40 +/- 10 ms (5G) are split
symmetrically per direction.

A link is single-owner: the session engine drives send/poll from its tick
loop. Drops are silent by design and show up only in the per-channel stats.
"""

import heapq
from dataclasses import dataclass, field, replace

import numpy as np

#: floor for sampled (jittered) delays, milliseconds
MIN_DELAY_MS = 0.05


@dataclass(frozen=True)
class NetworkPreset:
    mean_one_way_delay_ms: float = 0.0
    jitter_sd_ms: float = 0.0
    drop_prob: float = 0.0
    allow_reorder: bool = False
    seed: int = 0

    def __post_init__(self):
        if self.mean_one_way_delay_ms < 0 or self.jitter_sd_ms < 0:
            raise ValueError("delay and jitter must be non-negative")
        if not 0.0 <= self.drop_prob <= 1.0:
            raise ValueError("drop_prob must be in [0, 1]")


PRESETS = {
    "ideal": NetworkPreset(0.0, 0.0),
    "wifi": NetworkPreset(2.9, 1.65),
    "5g": NetworkPreset(20.0, 5.0),
}


def preset(name: str, seed: int = 0) -> NetworkPreset:
    try:
        return replace(PRESETS[name], seed=seed)
    except KeyError:
        raise KeyError(f"unknown network preset {name!r}; choose from {sorted(PRESETS)}") from None


@dataclass
class LinkStats:
    sent: dict = field(default_factory=dict)
    delivered: dict = field(default_factory=dict)
    dropped: dict = field(default_factory=dict)

    def _bump(self, table: dict, channel):
        table[channel] = table.get(channel, 0) + 1


class EmulatedLink:
    """One direction of the emulated network; min-heap of in-flight messages."""

    def __init__(self, config: NetworkPreset):
        self.config = config
        self._rng = np.random.Generator(np.random.PCG64(config.seed))
        self._heap: list = []
        self._counter = 0  # heap tie-break preserves send order at equal times
        self._last_delivery_us: dict = {}
        self.stats = LinkStats()

    def send(self, msg, now_us: int, channel=None) -> None:
        """Enqueue msg for delayed delivery; silently dropped with drop_prob."""
        ch = channel if channel is not None else getattr(msg, "channel", None)
        self.stats._bump(self.stats.sent, ch)
        if self.config.drop_prob > 0.0 and self._rng.random() < self.config.drop_prob:
            self.stats._bump(self.stats.dropped, ch)
            return
        if self.config.jitter_sd_ms > 0.0:
            delay_ms = max(MIN_DELAY_MS, self._rng.normal(self.config.mean_one_way_delay_ms, self.config.jitter_sd_ms))
        else:
            delay_ms = self.config.mean_one_way_delay_ms
        delivery_us = now_us + int(round(delay_ms * 1000.0))
        if not self.config.allow_reorder:
            delivery_us = max(delivery_us, self._last_delivery_us.get(ch, 0))
            self._last_delivery_us[ch] = delivery_us
        heapq.heappush(self._heap, (delivery_us, self._counter, ch, msg))
        self._counter += 1

    def poll(self, now_us: int) -> list:
        """Remove and return all messages due by now, in delivery-time order."""
        out = []
        while self._heap and self._heap[0][0] <= now_us:
            _, _, ch, msg = heapq.heappop(self._heap)
            self.stats._bump(self.stats.delivered, ch)
            out.append(msg)
        return out

    def poll_with_times(self, now_us: int) -> list:
        """Like poll, but yields (delivery_time_us, message) pairs."""
        out = []
        while self._heap and self._heap[0][0] <= now_us:
            t, _, ch, msg = heapq.heappop(self._heap)
            self.stats._bump(self.stats.delivered, ch)
            out.append((t, msg))
        return out

    @property
    def in_flight(self) -> int:
        return len(self._heap)
