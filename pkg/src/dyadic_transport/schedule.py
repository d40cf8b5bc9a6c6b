"""Dyadic time partitions of [0, 1] and location of a time in them.

Two partitions are used. The single-scale one has checkpoints
tau_i = 1 - 2^(-beta (i - 1)) accumulating at 1, each gap split at its midpoint
into a contracting half E_i and a spreading half O_i. The asynchronous one cuts
[0, 1] into 2^(eta d) equal slots, each split into three phases T1, T2, T3.

Ties on a boundary always go to the later phase.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache


class Phase(str, Enum):
    E = "E"
    O = "O"
    T1 = "T1"
    T2 = "T2"
    T3 = "T3"
    TERMINAL = "terminal"


@dataclass(frozen=True)
class SchedulePoint:
    """A time located in a partition.

    ``interval`` is i for the single-scale partition and k for the slotted one.
    The local time is ``s = (anchor - t) * scale`` when ``reversed`` and
    ``s = (t - anchor) * scale`` otherwise.
    """

    interval: int
    phase: Phase
    s: float
    scale: float
    reversed: bool
    anchor: float

    @property
    def terminal(self) -> bool:
        return self.phase is Phase.TERMINAL

    def time_of(self, s: float) -> float:
        if self.terminal:
            return 1.0
        return self.anchor - s / self.scale if self.reversed else self.anchor + s / self.scale

    def local_time(self, t: float) -> float:
        return (self.anchor - t) * self.scale if self.reversed else (t - self.anchor) * self.scale


_TERMINAL = SchedulePoint(0, Phase.TERMINAL, 0.0, 0.0, False, 1.0)


def _check_time(t: float) -> float:
    t = float(t)
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"time {t} outside [0, 1]")
    return t


def _check_beta(beta: float) -> None:
    if not 0.0 < beta < 1.0:
        raise ValueError(f"beta must lie in (0, 1), got {beta}")


@lru_cache(maxsize=4096)
def l1_checkpoints(beta: float, i: int) -> tuple[float, float, float]:
    """(tau_i, tau_i^mid, tau_{i+1})."""
    _check_beta(beta)
    if i < 1:
        raise ValueError(f"interval index must be >= 1, got {i}")
    lo = 1.0 - 2.0 ** (-beta * (i - 1))
    hi = 1.0 - 2.0 ** (-beta * i)
    return lo, (lo + hi) / 2, hi


def l1_locate(beta: float, t: float) -> SchedulePoint:
    t = _check_time(t)
    _check_beta(beta)
    if t == 1.0:
        return _TERMINAL
    i = max(1, 1 + int(math.floor(-math.log2(1.0 - t) / beta)))
    while i > 1 and t < l1_checkpoints(beta, i)[0]:
        i -= 1
    while t >= l1_checkpoints(beta, i)[2]:
        i += 1
    lo, mid, hi = l1_checkpoints(beta, i)
    if t < mid:
        scale = 1.0 / (mid - lo)
        return SchedulePoint(i, Phase.E, min(1.0, (mid - t) * scale), scale, True, mid)
    scale = 1.0 / (hi - mid)
    return SchedulePoint(i, Phase.O, min(1.0, (t - mid) * scale), scale, False, mid)


@dataclass(frozen=True)
class LrPartition:
    beta: float
    eta: int
    d: int

    def __post_init__(self) -> None:
        _check_beta(self.beta)
        if self.eta < 1 or self.d < 1:
            raise ValueError("eta and d must be positive")

    @property
    def slots(self) -> int:
        return 2 ** (self.eta * self.d)

    def checkpoints(self, k: int) -> tuple[float, float, float, float]:
        return lr_checkpoints(self.beta, self.eta, self.d, k)

    def locate(self, t: float) -> SchedulePoint:
        return lr_locate(self.beta, self.eta, self.d, t)


@lru_cache(maxsize=65536)
def lr_checkpoints(beta: float, eta: int, d: int, k: int) -> tuple[float, float, float, float]:
    """(tau^k_1, tau^k_mid, tau^k_2, tau^k_inf) of slot k."""
    _check_beta(beta)
    n = 2 ** (eta * d)
    if not 1 <= k <= n:
        raise ValueError(f"slot {k} outside 1..{n}")
    t1 = (k - 1) / n
    t2 = (k - 2.0**-beta) / n
    return t1, (t1 + t2) / 2, t2, k / n


def lr_locate(beta: float, eta: int, d: int, t: float) -> SchedulePoint:
    t = _check_time(t)
    if t == 1.0:
        return _TERMINAL
    n = 2 ** (eta * d)
    k = min(n, int(math.floor(t * n)) + 1)
    t1, mid, t2, tinf = lr_checkpoints(beta, eta, d, k)
    if t < mid:
        scale = 1.0 / (mid - t1)
        return SchedulePoint(k, Phase.T1, min(1.0, (mid - t) * scale), scale, True, mid)
    if t < t2:
        scale = 1.0 / (t2 - mid)
        return SchedulePoint(k, Phase.T2, min(1.0, (t - mid) * scale), scale, False, mid)
    scale = 1.0 / (tinf - t2)
    return SchedulePoint(k, Phase.T3, min(1.0, (t - t2) * scale), scale, False, t2)
