from __future__ import annotations

import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from dyadic_transport.schedule import LrPartition, Phase, l1_checkpoints, l1_locate, lr_checkpoints, lr_locate

betas = st.floats(0.05, 0.95)
times = st.floats(0.0, 1.0, exclude_max=True)


def test_l1_checkpoints_first_gap():
    lo, mid, hi = l1_checkpoints(0.8, 1)
    assert lo == 0.0
    assert hi == 1 - 2**-0.8
    assert mid == hi / 2


def test_l1_locate_halves():
    lo, mid, hi = l1_checkpoints(0.8, 1)
    e = l1_locate(0.8, 0.0)
    assert (e.interval, e.phase, e.s, e.reversed) == (1, Phase.E, 1.0, True)
    o = l1_locate(0.8, mid)  # ties go to the later phase
    assert (o.phase, o.s) == (Phase.O, 0.0)
    assert l1_locate(0.8, hi).interval == 2
    assert l1_locate(0.8, 1.0).terminal


@given(betas, times)
def test_l1_locate_inverts(beta, t):
    sp = l1_locate(beta, t)
    lo, mid, hi = l1_checkpoints(beta, sp.interval)
    assert lo <= t < hi
    assert 0.0 <= sp.s <= 1.0
    assert sp.time_of(sp.s) == pytest.approx(t, abs=1e-12)
    assert sp.local_time(t) == pytest.approx(sp.s, abs=1e-9)


def test_lr_checkpoints():
    t1, mid, t2, tinf = lr_checkpoints(0.8, 2, 2, 3)
    assert (t1, tinf) == (2 / 16, 3 / 16)
    assert t2 == (3 - 2**-0.8) / 16
    assert mid == (t1 + t2) / 2


@given(betas, st.integers(1, 3), times)
def test_lr_locate_inverts(beta, eta, t):
    part = LrPartition(beta, eta, 2)
    sp = part.locate(t)
    assert sp.interval == math.floor(t * part.slots) + 1
    t1, mid, t2, tinf = part.checkpoints(sp.interval)
    expected = Phase.T1 if t < mid else Phase.T2 if t < t2 else Phase.T3
    assert sp.phase is expected
    assert sp.time_of(sp.s) == pytest.approx(t, abs=1e-12)


def test_lr_terminal_and_errors():
    assert lr_locate(0.8, 2, 2, 1.0).terminal
    with pytest.raises(ValueError):
        lr_locate(0.8, 2, 2, 1.5)
    with pytest.raises(ValueError):
        l1_locate(1.2, 0.3)
    with pytest.raises(ValueError):
        lr_checkpoints(0.8, 1, 2, 5)
