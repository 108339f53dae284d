from __future__ import annotations

import numpy as np
import pytest

from elci import CensoredSample


def random_sample(rng, n, censor_scale=1.5, distinct=True):
    """Exponential lifetimes with exponential censoring, at least one event."""
    while True:
        y = rng.exponential(1.0, n)
        c = rng.exponential(censor_scale, n)
        t = np.minimum(y, c)
        e = (y <= c).astype(int)
        if not distinct:
            t = np.round(t, 1)
        if e.any():
            return CensoredSample(t, e)


def km_reference(time, event):
    """Loop-based product limit for F_n and G_n at each distinct time (test oracle).

    Censorings tied with events see the risk set after the events leave.
    """
    order = sorted(zip(time, event), key=lambda p: (p[0], -p[1]))
    n = len(order)
    times = sorted(set(t for t, _ in order))
    fs, gs = [], []
    sf = sg = 1.0
    for s in times:
        at_risk = sum(1 for t, _ in order if t >= s)
        d1 = sum(1 for t, e in order if t == s and e == 1)
        d0 = sum(1 for t, e in order if t == s and e == 0)
        sf *= 1.0 - d1 / at_risk
        if d0:
            sg *= 1.0 - d0 / (at_risk - d1)
        fs.append(1.0 - sf)
        gs.append(1.0 - sg)
    return np.array(times), np.array(fs), np.array(gs), n


@pytest.fixture
def hand():
    # three points used by several hand-computed oracles
    return CensoredSample([3.0, 1.0, 2.0], [1, 1, 0])


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
